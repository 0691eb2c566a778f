"""Variational autoencoders for generating 24-hour activity schedules."""

import os

# SCHEDVAE_THREADS caps BLAS threads; it must be read before numpy loads.
_threads = os.environ.get("SCHEDVAE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
