"""Structural node embeddings.

Pipeline: ring degree sequences -> hierarchical DTW distances -> weighted
multilayer graph -> biased multilayer random walks -> Skip-Gram embeddings.
"""

import numba

# tbb in this image is too old for numba; prefer openmp and skip the warning
numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

__version__ = "0.1.0"
