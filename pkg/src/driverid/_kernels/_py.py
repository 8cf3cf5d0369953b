"""Pure-numpy kernels: the import-time fallback when the compiled core is absent.

Both backends implement the same contract with the same floating-point
operation order; chosen split positions always agree and the returned
statistics agree to the last ulp (numpy's log2 and libm's may round one
ulp apart):

``split_sweep(x, y, w, n_classes, min_branch_weight) -> (pos, gain, split_info)``
    ``x`` must be sorted ascending (known values only), ``y`` int32 class
    codes, ``w`` float64 weights.  Scans every boundary between distinct
    consecutive values and returns the one maximizing gain/split_info
    subject to both branch weights >= ``min_branch_weight`` and
    gain > ``GAIN_EPS``.  ``pos`` is the left-branch row count, or -1 when
    no admissible boundary exists.  Ties resolve to the smaller position.

``group_tally(codes, y, w, n_groups, n_classes) -> float64 matrix``
    Weighted per-group class counts for a categorical column (known rows
    only, codes in [0, n_groups)).
"""

from __future__ import annotations

import numpy as np

GAIN_EPS = 1e-12


def split_sweep(x, y, w, n_classes, min_branch_weight):
    n = x.shape[0]
    cw = np.cumsum(w)
    total_w = cw[-1]

    # per-class prefix weights; accumulation order mirrors the compiled loop
    cc = np.empty((n_classes, n), dtype=np.float64)
    for c in range(n_classes):
        cc[c] = np.cumsum(np.where(y == c, w, 0.0))

    h_total = 0.0
    for c in range(n_classes):
        p = cc[c, n - 1] / total_w
        if p > 0.0:
            h_total -= p * np.log2(p)

    bounds = np.nonzero(x[:-1] != x[1:])[0]
    if bounds.size == 0:
        return -1, 0.0, 0.0

    wl = cw[bounds]
    wr = total_w - wl
    hl = np.zeros(bounds.size)
    hr = np.zeros(bounds.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for c in range(n_classes):
            pl = cc[c][bounds] / wl
            tl = pl * np.log2(pl)
            tl[~(pl > 0.0)] = 0.0
            hl -= tl
            pr = (cc[c, n - 1] - cc[c][bounds]) / wr
            tr = pr * np.log2(pr)
            tr[~(pr > 0.0)] = 0.0
            hr -= tr

    fl = wl / total_w
    fr = wr / total_w
    gain = h_total - (fl * hl + fr * hr)
    split_info = -(fl * np.log2(fl)) - (fr * np.log2(fr))

    valid = (wl >= min_branch_weight) & (wr >= min_branch_weight) & (gain > GAIN_EPS)
    if not valid.any():
        return -1, 0.0, 0.0
    ratio = np.where(valid, gain / split_info, -np.inf)
    k = int(np.argmax(ratio))
    return int(bounds[k]) + 1, float(gain[k]), float(split_info[k])


def group_tally(codes, y, w, n_groups, n_classes):
    m = np.zeros((n_groups, n_classes), dtype=np.float64)
    np.add.at(m, (codes, y), w)
    return m
