"""Hierarchical TAD boundary detection in Hi-C contact matrices."""

from .compare import fisher_combine, match_and_classify
from .evaluate import fowlkes_mallows, score_boundaries
from .glr import estimate_sigma0, glr_nb, scan_window, z_m
from .hierarchy import TadTree, build_hierarchy, order_distribution
from .matrix import ContactMatrix, load_matrix, window_sums, write_matrix
from .null import NullProvider, NullTable, simulate_null
from .pipeline import detect
from .segment import ChangePoint, binary_segment, prune

__version__ = "0.1.0"
