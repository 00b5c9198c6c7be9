"""Empirical return- and hitting-time statistics of n-blocks in stationary processes."""

from .core import (
    GCurve,
    InsufficientDataError,
    Intensity,
    IntensityReport,
    StepDistribution,
    g_from_ecdf,
    g_p_bound,
    intensity_report,
    lemma0_periodic_envelope,
    lemma0_smooth_bound,
)
from .generators import (
    Bernoulli,
    Example1,
    Example2,
    Example3,
    Markov,
    Periodic,
    Sturmian,
    SymbolSequence,
    generate,
)
from .scan import BlockStats, BlockTable, entropy_plugin, hitting_ecdf, return_ecdf, scan_blocks

__version__ = "0.1.0"
