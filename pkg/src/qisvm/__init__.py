"""Sampling-based (dequantized) least-squares SVM."""

__version__ = "0.1.0"

from .config import RankPolicy, RunConfig
from .core import (SvmModel, build_model, classify, classify_many, estimate_lambdas,
                   load_model, query_alpha, save_model, spectral_decompose)
from .matrix_store import (LabeledDataset, SampledMatrix, SampleTree, build_matrix,
                           build_tree, load_dataset, sample_index, save_dataset)
from .sketch import ElementOracle, TraceParams, estimate_trace, rejection_sample
from .subsample import (ColumnSketch, ErrorBudget, RowSketch, practical_params,
                        sample_columns, sample_rows, theoretical_params)

__all__ = [
    "ColumnSketch", "ElementOracle", "ErrorBudget", "LabeledDataset", "RankPolicy",
    "RowSketch", "RunConfig", "SampleTree", "SampledMatrix", "SvmModel", "TraceParams",
    "build_matrix", "build_model", "build_tree", "classify", "classify_many",
    "estimate_lambdas", "estimate_trace", "load_dataset", "load_model", "practical_params",
    "query_alpha", "rejection_sample", "sample_columns", "sample_index", "sample_rows",
    "save_dataset", "save_model", "spectral_decompose", "theoretical_params",
]
