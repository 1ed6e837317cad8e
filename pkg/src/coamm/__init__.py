"""Streaming approximate matrix multiplication with co-occurring directions."""
from .baselines import FDAMM, SFDAMM
from .cod import CoOccurringDirections, co_shrink
from .data_io import (
    PairStream,
    SynthConfig,
    gen_synthetic_pair,
    read_matrix_market,
    synthetic_matrices,
    write_matrix_market,
    zip_pair,
)
from .fd import FrequentDirections
from .oracle import BoundReport, amm_error, bound_report, exact_product
from .scod import QSchedule, SparseCoOccurringDirections
from .sparse import SparseRow, SparseRowBuffer
from .spm import SpmConfig, balance_split, subspace_power_method

__version__ = "0.1.0"
