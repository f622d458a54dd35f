"""Numba event loop for the metapopulation jump process.

The kernel keeps per-size weight arrays for the four jump families and
their scalar totals, refreshed incrementally at the handful of indices a
jump touches.  Null moves (a migrant landing in a patch of size i-1, or
back in its own patch) never change the count vector, so they are left
out of the event rates entirely; the law of the state path is unchanged.

The kernel is resumable: it returns a status instead of raising, and the
wrapper reallocates (wider state, larger record buffer) and calls back
in.  Numba's per-thread RNG stream persists across calls, so a resumed
trajectory continues the same random sequence; ``seed >= 0`` reseeds,
``seed < 0`` resumes.
"""

from __future__ import annotations

import numba
import numpy as np

STATUS_DONE = 0
STATUS_ABSORBED = 1
STATUS_GROW_STATE = 2
STATUS_GROW_RECORD = 3
STATUS_BUDGET = 4

FAM_DOWN = 0
FAM_UP = 1
FAM_CAT = 2
FAM_MIG = 3


@numba.njit(cache=True, inline="always")
def _refresh(j, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S):
    """Recompute the family weights touched by a count change at index j."""
    if j >= 1:
        if j == 1:
            nd = X[1] * (di[1] + gloss + kappa)
        else:
            nd = j * X[j] * (di[j] + gloss)
        S[0] += nd - wdown[j]
        wdown[j] = nd
        nu = j * X[j] * bi[j]
        S[1] += nu - wup[j]
        wup[j] = nu
        if j >= 2:
            nc = kappa * X[j]
            S[2] += nc - wcat[j]
            wcat[j] = nc
        nm = gmig * j * X[j] * (N - 1 - X[j - 1]) / N
        S[3] += nm - wmig[j]
        wmig[j] = nm
    jj = j + 1
    if jj < wmig.size:
        nm2 = gmig * jj * X[jj] * (N - 1 - X[j]) / N
        S[3] += nm2 - wmig[jj]
        wmig[jj] = nm2


@numba.njit(cache=True, inline="always")
def _walk(weights, lo, top, target):
    """Index with cumulative weight exceeding target; clamps on float slack."""
    acc = 0.0
    last = -1
    for j in range(lo, top + 1):
        wj = weights[j]
        if wj > 0.0:
            last = j
            acc += wj
            if acc > target:
                return j
    return last


@numba.njit(cache=True)
def ssa_kernel(X, bi, di, gloss, gmig, kappa, N, t, T, seed, burn,
               events_done, max_events, mode, grid, grid_pos, grid_out,
               rec_t, rec_fam, rec_a, rec_b, rec_pos):
    """Run the jump chain until the horizon, a buffer limit, or absorption.

    Returns (status, t, events_done, grid_pos, rec_pos).
    """
    W = X.size
    if seed >= 0:
        np.random.seed(np.uint32(seed))
        for _ in range(burn):
            np.random.random()

    top = 0
    for j in range(W - 1, -1, -1):
        if X[j] > 0:
            top = j
            break

    wdown = np.zeros(W)
    wup = np.zeros(W)
    wcat = np.zeros(W)
    wmig = np.zeros(W)
    S = np.zeros(4)
    for j in range(0, min(top + 2, W)):
        _refresh(j, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
        # _refresh(j) also rewrites wmig[j+1]; harmless to repeat

    G = grid.size
    # initial flush: grid points at or before the current time see the
    # current (right-continuous) state
    while grid_pos < G and grid[grid_pos] <= t:
        grid_out[grid_pos, :] = X
        grid_pos += 1

    n_loc = 0
    while True:
        if top + 3 >= W:
            return STATUS_GROW_STATE, t, events_done, grid_pos, rec_pos
        if mode == 0 and rec_pos >= rec_t.size:
            return STATUS_GROW_RECORD, t, events_done, grid_pos, rec_pos
        if events_done >= max_events:
            return STATUS_BUDGET, t, events_done, grid_pos, rec_pos
        n_loc += 1
        if (n_loc & 0xFFFF) == 0:
            # kill accumulated float drift in the totals
            for f in range(4):
                S[f] = 0.0
            for j in range(0, top + 2):
                S[0] += wdown[j]
                S[1] += wup[j]
                S[2] += wcat[j]
                S[3] += wmig[j]

        R = S[0] + S[1] + S[2] + S[3]
        if R <= 1e-300:
            while grid_pos < G:
                grid_out[grid_pos, :] = X
                grid_pos += 1
            return STATUS_ABSORBED, t, events_done, grid_pos, rec_pos

        dt = np.random.exponential() / R
        if t + dt >= T:
            t = T
            while grid_pos < G:
                grid_out[grid_pos, :] = X
                grid_pos += 1
            return STATUS_DONE, t, events_done, grid_pos, rec_pos
        t = t + dt
        while grid_pos < G and grid[grid_pos] < t:
            grid_out[grid_pos, :] = X
            grid_pos += 1

        u = np.random.random() * R
        fam = FAM_MIG
        if u < S[0]:
            fam = FAM_DOWN
        elif u < S[0] + S[1]:
            fam = FAM_UP
        elif u < S[0] + S[1] + S[2]:
            fam = FAM_CAT
        else:
            # guard against drift: fall back to any positive family
            if S[3] <= 0.0:
                if S[0] > 0.0:
                    fam = FAM_DOWN
                elif S[1] > 0.0:
                    fam = FAM_UP
                else:
                    fam = FAM_CAT

        a = -1
        bdest = -1
        if fam == FAM_DOWN:
            i = _walk(wdown, 1, top, np.random.random() * S[0])
            if i < 0:
                continue
            X[i] -= 1
            X[i - 1] += 1
            a = i
        elif fam == FAM_UP:
            i = _walk(wup, 1, top, np.random.random() * S[1])
            if i < 0:
                continue
            X[i] -= 1
            X[i + 1] += 1
            if i + 1 > top:
                top = i + 1
            a = i
        elif fam == FAM_CAT:
            i = _walk(wcat, 2, top, np.random.random() * S[2])
            if i < 0:
                continue
            X[i] -= 1
            X[0] += 1
            a = i
        else:
            i = _walk(wmig, 1, top, np.random.random() * S[3])
            if i < 0:
                continue
            # destination patch uniform among the N - 1 - X[i-1] patches
            # whose size is not i - 1 (those would make the move a null)
            navail = N - 1 - X[i - 1]
            tgt = np.random.random() * navail
            acc = 0.0
            k = -1
            for kk in range(0, top + 1):
                if kk == i - 1:
                    continue
                wk = X[kk] - (1 if kk == i else 0)
                if wk > 0:
                    k = kk
                    acc += wk
                    if acc > tgt:
                        break
            if k < 0:
                continue
            X[i] -= 1
            X[i - 1] += 1
            X[k] -= 1
            X[k + 1] += 1
            if k + 1 > top:
                top = k + 1
            a = i
            bdest = k

        while top > 0 and X[top] == 0:
            top -= 1

        _refresh(a, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
        if fam == FAM_DOWN or fam == FAM_MIG:
            _refresh(a - 1, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
        elif fam == FAM_UP:
            _refresh(a + 1, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
        else:
            _refresh(0, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
        if fam == FAM_MIG:
            _refresh(bdest, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)
            _refresh(bdest + 1, X, bi, di, gloss, gmig, kappa, N, wdown, wup, wcat, wmig, S)

        if mode == 0:
            rec_t[rec_pos] = t
            rec_fam[rec_pos] = fam
            rec_a[rec_pos] = a
            rec_b[rec_pos] = bdest
            rec_pos += 1
        events_done += 1
