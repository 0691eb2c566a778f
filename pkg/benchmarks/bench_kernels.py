"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the environment switch is not needed.
"""

import argparse
import timeit

import numpy as np

from schedvae._kernels import _pykernels as py

try:
    from schedvae._kernels import _ckernels as cy
except ImportError:
    cy = None


def _schedules(rng, n):
    lengths = rng.integers(1, 12, n)
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    acts = rng.integers(0, 8, offsets[-1]).astype(np.int64)
    fracs = rng.random(offsets[-1])
    durs = np.zeros(offsets[-1], np.int64)
    for k in range(n):
        lo, hi = offsets[k], offsets[k + 1]
        w = fracs[lo:hi] / fracs[lo:hi].sum()
        durs[lo:hi] = py.largest_remainder_batch(w, np.array([0, hi - lo]), 1440)
    return acts, durs, offsets, fracs


def cases(rng):
    acts, durs, offsets, fracs = _schedules(rng, 4096)
    tokens = py.encode_bins(acts, durs, offsets, 10)
    out = {
        "encode_bins n=4096": lambda k: k.encode_bins(acts, durs, offsets, 10),
        "run_lengths n=4096": lambda k: k.run_lengths(tokens),
        "largest_remainder n=4096": lambda k: k.largest_remainder_batch(fracs, offsets, 1440),
    }
    for batch, hidden in ((64, 128), (1024, 128)):
        pre = rng.standard_normal((batch, 4 * hidden)).astype(np.float32)
        c = rng.standard_normal((batch, hidden)).astype(np.float32)
        _, c_new, gates, tc = py.lstm_cell_forward(pre, c)
        dh = rng.standard_normal((batch, hidden)).astype(np.float32)
        out[f"lstm fwd B={batch} H={hidden}"] = lambda k, pre=pre, c=c: k.lstm_cell_forward(pre, c)
        out[f"lstm bwd B={batch} H={hidden}"] = (
            lambda k, dh=dh, g=gates, c=c, tc=tc: k.lstm_cell_backward(dh, dh, g, c, tc)
        )
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; run: python3 setup.py build_ext --inplace")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'cython ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        times = {}
        for label, mod in (("cy", cy), ("py", py)):
            number = 20
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            times[label] = best / number * 1e3
        print(f"{name:<28}{times['cy']:>12.3f}{times['py']:>12.3f}{times['py'] / times['cy']:>9.1f}x")


if __name__ == "__main__":
    main()
