"""Cramér-von Mises split-scan tests for a single change point."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    MeanChangeResult,
    Sample,
    ScanResult,
    mean_change_scan,
    scan,
    two_sample_cvm,
    validate_sample,
)
from .inference import TestReport, permutation_pvalue, run_test, wbar_asymptotic_pvalue  # noqa: E402

__all__ = [
    "MeanChangeResult",
    "Sample",
    "ScanResult",
    "TestReport",
    "mean_change_scan",
    "permutation_pvalue",
    "run_test",
    "scan",
    "two_sample_cvm",
    "validate_sample",
    "wbar_asymptotic_pvalue",
]
