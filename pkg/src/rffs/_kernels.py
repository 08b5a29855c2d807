"""Compiled kernels for subsampling and the 2D k-d tree.

Kept separate from :mod:`rffs.spatial_index` so the Python-facing module
stays readable. All kernels release the GIL.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ZERO = np.uint64(0)


@njit(cache=True, nogil=True)
def splitmix64_next(state):
    """Advance a SplitMix64 state; returns (new_state, output)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def partial_fisher_yates(n, m, seed):
    """First ``m`` entries of a seeded Fisher-Yates shuffle of ``range(n)``.

    Bounded draws use rejection sampling so every index is equally likely.
    """
    perm = np.arange(n, dtype=np.int64)
    state = np.uint64(seed)
    for i in range(m):
        r = np.uint64(n - i)
        threshold = (_ZERO - r) % r
        while True:
            state, x = splitmix64_next(state)
            if x >= threshold:
                break
        j = i + np.int64(x % r)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm[:m].copy()


@njit(cache=True, nogil=True)
def _select(order, keys, lo, hi, nth):
    """Reorder ``order[lo:hi]`` so position ``nth`` holds its sorted element."""
    while hi - lo > 1:
        mid = (lo + hi) // 2
        a = keys[order[lo]]
        b = keys[order[mid]]
        c = keys[order[hi - 1]]
        if a < b:
            pivot = b if b < c else (c if a < c else a)
        else:
            pivot = a if a < c else (c if b < c else b)
        i = lo
        j = hi - 1
        while i <= j:
            while keys[order[i]] < pivot:
                i += 1
            while keys[order[j]] > pivot:
                j -= 1
            if i <= j:
                tmp = order[i]
                order[i] = order[j]
                order[j] = tmp
                i += 1
                j -= 1
        if nth <= j:
            hi = j + 1
        elif nth >= i:
            lo = i
        else:
            return


@njit(cache=True, nogil=True)
def build_tree(xs, ys, leafsize):
    """Median-split k-d tree over (xs, ys).

    Returns the point permutation and per-node arrays. Leaves own the
    contiguous slice ``order[lo:hi]``; inner nodes have ``left >= 0``.
    """
    n = xs.shape[0]
    order = np.arange(n, dtype=np.int64)
    cap = 4 * (n // leafsize + 1) + 1
    lo_a = np.empty(cap, np.int64)
    hi_a = np.empty(cap, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    box = np.empty((cap, 4), np.float64)

    stack = np.empty(128, np.int64)
    lo_a[0] = 0
    hi_a[0] = n
    count = 1
    sp = 0
    stack[0] = 0
    while sp >= 0:
        node = stack[sp]
        sp -= 1
        lo = lo_a[node]
        hi = hi_a[node]
        minx = np.inf
        miny = np.inf
        maxx = -np.inf
        maxy = -np.inf
        for t in range(lo, hi):
            p = order[t]
            if xs[p] < minx:
                minx = xs[p]
            if xs[p] > maxx:
                maxx = xs[p]
            if ys[p] < miny:
                miny = ys[p]
            if ys[p] > maxy:
                maxy = ys[p]
        box[node, 0] = minx
        box[node, 1] = miny
        box[node, 2] = maxx
        box[node, 3] = maxy
        if hi - lo <= leafsize or (maxx == minx and maxy == miny):
            continue
        mid = (lo + hi) // 2
        if maxx - minx >= maxy - miny:
            _select(order, xs, lo, hi, mid)
        else:
            _select(order, ys, lo, hi, mid)
        l = count
        r = count + 1
        count += 2
        lo_a[l] = lo
        hi_a[l] = mid
        lo_a[r] = mid
        hi_a[r] = hi
        left[node] = l
        right[node] = r
        stack[sp + 1] = l
        stack[sp + 2] = r
        sp += 2
    return order, lo_a[:count].copy(), hi_a[:count].copy(), left[:count].copy(), right[:count].copy(), box[:count].copy()


@njit(cache=True, nogil=True)
def _box_d2(box, node, qx, qy):
    dx = 0.0
    dy = 0.0
    if qx < box[node, 0]:
        dx = box[node, 0] - qx
    elif qx > box[node, 2]:
        dx = qx - box[node, 2]
    if qy < box[node, 1]:
        dy = box[node, 1] - qy
    elif qy > box[node, 3]:
        dy = qy - box[node, 3]
    return dx * dx + dy * dy


@njit(cache=True, nogil=True)
def knn_one(sx, sy, sidx, lo_a, hi_a, left, right, box, qx, qy, k, out_i, out_d):
    """k nearest of one query, ordered by (squared distance, original index).

    ``sx, sy, sidx`` are the tree's points in leaf order. Fills ``out_i`` and
    ``out_d``; returns (found, distance_evaluations).
    """
    found = 0
    evals = 0
    stack = np.empty(256, np.int64)
    bounds = np.empty(256, np.float64)
    sp = 0
    stack[0] = 0
    bounds[0] = _box_d2(box, 0, qx, qy)
    while sp >= 0:
        node = stack[sp]
        bound = bounds[sp]
        sp -= 1
        # equal bound may still hide a tie with a smaller index
        if found == k and bound > out_d[k - 1]:
            continue
        if left[node] < 0:
            for t in range(lo_a[node], hi_a[node]):
                dx = sx[t] - qx
                dy = sy[t] - qy
                d = dx * dx + dy * dy
                idx = sidx[t]
                evals += 1
                if found == k:
                    wd = out_d[k - 1]
                    if d > wd or (d == wd and idx > out_i[k - 1]):
                        continue
                    pos = k - 1
                else:
                    pos = found
                    found += 1
                while pos > 0 and (out_d[pos - 1] > d or (out_d[pos - 1] == d and out_i[pos - 1] > idx)):
                    out_d[pos] = out_d[pos - 1]
                    out_i[pos] = out_i[pos - 1]
                    pos -= 1
                out_d[pos] = d
                out_i[pos] = idx
            continue
        l = left[node]
        r = right[node]
        bl = _box_d2(box, l, qx, qy)
        br = _box_d2(box, r, qx, qy)
        # push the farther child first so the nearer one is explored first
        if bl <= br:
            stack[sp + 1] = r
            bounds[sp + 1] = br
            stack[sp + 2] = l
            bounds[sp + 2] = bl
        else:
            stack[sp + 1] = l
            bounds[sp + 1] = bl
            stack[sp + 2] = r
            bounds[sp + 2] = br
        sp += 2
    return found, evals


@njit(cache=True, nogil=True)
def knn_batch(sx, sy, sidx, lo_a, hi_a, left, right, box, qs, k):
    nq = qs.shape[0]
    kk = min(k, sx.shape[0])
    out_i = np.empty((nq, kk), np.int64)
    out_d = np.empty((nq, kk), np.float64)
    evals = np.empty(nq, np.int64)
    for q in range(nq):
        _, e = knn_one(sx, sy, sidx, lo_a, hi_a, left, right, box,
                       qs[q, 0], qs[q, 1], kk, out_i[q], out_d[q])
        evals[q] = e
    return out_i, out_d, evals
