"""Pure numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and results; tests assert the two agree.
"""

import numpy as np


def encode_bins(acts, durs, offsets, step):
    """Per-bin majority activity for a batch of schedules.

    ``acts``/``durs`` hold all entries back to back, ``offsets`` (n + 1) marks
    schedule boundaries. Each bin takes the entry with the most minutes in it;
    ties go to the entry that starts first.
    """
    acts = np.asarray(acts, dtype=np.int64)
    durs = np.asarray(durs, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    n = len(offsets) - 1
    n_bins = 1440 // step
    if n == 0:
        return np.zeros((0, n_bins), dtype=np.int64)
    # start minute of each entry within its own schedule
    csum = np.cumsum(durs)
    sched_of = np.repeat(np.arange(n), np.diff(offsets))
    base = np.concatenate(([0], csum))[offsets[:-1]]
    ends = csum - base[sched_of]
    starts = ends - durs
    keep = durs > 0
    idx = np.flatnonzero(keep)
    b0 = starts[idx] // step
    b1 = (ends[idx] - 1) // step
    span = b1 - b0 + 1
    entry = np.repeat(idx, span)
    first = np.repeat(b0, span)
    local = np.arange(span.sum()) - np.repeat(np.cumsum(span) - span, span)
    bins = first + local
    overlap = np.minimum(ends[entry], (bins + 1) * step) - np.maximum(starts[entry], bins * step)
    flat_bin = sched_of[entry] * n_bins + bins
    order = np.lexsort((entry, -overlap, flat_bin))
    flat_sorted = flat_bin[order]
    head = np.ones(len(order), dtype=bool)
    head[1:] = flat_sorted[1:] != flat_sorted[:-1]
    out = np.zeros(n * n_bins, dtype=np.int64)
    out[flat_sorted[head]] = acts[entry[order[head]]]
    return out.reshape(n, n_bins)


def run_lengths(tokens):
    """Collapse each row of equal-token runs into (acts, lengths, offsets)."""
    tokens = np.asarray(tokens, dtype=np.int64)
    n, length = tokens.shape
    if n == 0:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(1, np.int64))
    change = np.ones((n, length), dtype=bool)
    change[:, 1:] = tokens[:, 1:] != tokens[:, :-1]
    rows, cols = np.nonzero(change)
    acts = tokens[rows, cols]
    counts = change.sum(axis=1)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    nxt = np.empty_like(cols)
    nxt[:-1] = cols[1:]
    last = offsets[1:] - 1
    nxt[last] = length
    return acts, nxt - cols, offsets


def largest_remainder_batch(fracs, offsets, total):
    """Integer apportionment of ``total`` per segment; ties to the earliest entry."""
    fracs = np.asarray(fracs, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    out = np.zeros(len(fracs), dtype=np.int64)
    for k in range(len(offsets) - 1):
        lo, hi = offsets[k], offsets[k + 1]
        w = fracs[lo:hi]
        s = w.sum()
        if hi == lo or s <= 0:
            continue
        exact = w / s * total
        base = np.floor(exact).astype(np.int64)
        short = total - int(base.sum())
        if short > 0:
            order = np.argsort(-(exact - base), kind="stable")
            base[order[:short]] += 1
        out[lo:hi] = base
    return out


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_cell_forward(pre, c_prev):
    """Gate nonlinearities and state update from pre-activations (B, 4H).

    Returns ``h, c, gates, tanh_c`` where ``gates`` holds the activated
    input/forget/cell/output gates in that order.
    """
    hidden = c_prev.shape[1]
    gates = np.empty_like(pre)
    gates[:, : 2 * hidden] = _sigmoid(pre[:, : 2 * hidden])
    gates[:, 2 * hidden : 3 * hidden] = np.tanh(pre[:, 2 * hidden : 3 * hidden])
    gates[:, 3 * hidden :] = _sigmoid(pre[:, 3 * hidden :])
    i = gates[:, :hidden]
    f = gates[:, hidden : 2 * hidden]
    g = gates[:, 2 * hidden : 3 * hidden]
    o = gates[:, 3 * hidden :]
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, gates, tanh_c


def lstm_cell_backward(dh, dc, gates, c_prev, tanh_c):
    """Gradients w.r.t. the pre-activations and the previous cell state."""
    hidden = c_prev.shape[1]
    i = gates[:, :hidden]
    f = gates[:, hidden : 2 * hidden]
    g = gates[:, 2 * hidden : 3 * hidden]
    o = gates[:, 3 * hidden :]
    dct = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dpre = np.empty_like(gates)
    dpre[:, :hidden] = dct * g * i * (1.0 - i)
    dpre[:, hidden : 2 * hidden] = dct * c_prev * f * (1.0 - f)
    dpre[:, 2 * hidden : 3 * hidden] = dct * i * (1.0 - g * g)
    dpre[:, 3 * hidden :] = dh * tanh_c * o * (1.0 - o)
    return dpre, dct * f
