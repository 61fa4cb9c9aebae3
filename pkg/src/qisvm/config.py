from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class RankPolicy:
    """Keep the top ``k`` eigenvalues, or those >= ``theta * max``."""

    k: int | None = None
    theta: float | None = None

    def __post_init__(self):
        if (self.k is None) == (self.theta is None):
            raise ValueError("rank policy needs exactly one of k or theta")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        if self.theta is not None and not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")


@dataclass
class RunConfig:
    eps: float = 5.0
    eta: float = 0.1
    b_ctrl: int = 1
    gamma: float = math.inf
    mode: str = "practical"
    # condition-number bound; also sets the default eigenvalue cutoff 1/kappa^2
    kappa: float = 10.0
    rank_k: int | None = None
    kernel: str = "linear"
    degree: int = 1
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if int(self.b_ctrl) != self.b_ctrl or self.b_ctrl < 1:
            raise ValueError("b must be a positive integer")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive (inf for no regularization)")
        if self.mode not in ("practical", "theoretical"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.kappa >= 1:
            raise ValueError("kappa must be at least 1")
        if self.rank_k is not None and self.rank_k < 1:
            raise ValueError("rank must be at least 1")
        if self.mode == "theoretical" and self.rank_k is None:
            raise ValueError("theoretical mode needs an explicit rank")
        if self.kernel not in ("linear", "poly"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be a positive integer")
        return self

    @property
    def rank_policy(self):
        if self.rank_k is not None:
            return RankPolicy(k=int(self.rank_k))
        return RankPolicy(theta=1.0 / self.kappa**2)

    def to_dict(self):
        d = asdict(self)
        d["gamma"] = _enc_float(self.gamma)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["gamma"] = _dec_float(d["gamma"])
        return cls(**d)


def _enc_float(v):
    return "inf" if math.isinf(v) else v


def _dec_float(v):
    return math.inf if v == "inf" else float(v)
