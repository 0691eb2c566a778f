"""Hot kernels: compiled when the extension is built, numpy otherwise.

Set ``SCHEDVAE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _pykernels as py

if os.environ.get("SCHEDVAE_PURE_PYTHON", "") not in ("", "0"):
    impl = py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as impl
        BACKEND = "cython"
    except ImportError:
        impl = py
        BACKEND = "python"

encode_bins = impl.encode_bins
run_lengths = impl.run_lengths
largest_remainder_batch = impl.largest_remainder_batch
lstm_cell_forward = impl.lstm_cell_forward
lstm_cell_backward = impl.lstm_cell_backward

__all__ = [
    "BACKEND",
    "encode_bins",
    "run_lengths",
    "largest_remainder_batch",
    "lstm_cell_forward",
    "lstm_cell_backward",
]
