"""Metallic structures on warped products, checked numerically against a curvature oracle."""

from .errors import MetwarpError
from .metallic import GOLDEN, SILVER, MetallicParams
from .report import Report
from .specfile import load_spec, loads
from .suites import SUITES, run_suite, run_suites

__all__ = ["GOLDEN", "SILVER", "MetallicParams", "MetwarpError", "Report", "SUITES",
           "load_spec", "loads", "run_suite", "run_suites"]
__version__ = "0.1.0"
