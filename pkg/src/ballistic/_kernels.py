"""Compiled event-driven resolution kernels.

Both kernels maintain the alive particles in a doubly linked neighbor
structure plus a binary heap of candidate collision events for adjacent
approaching pairs, keyed lexicographically by (time, position).  Popped
events are discarded if stale (a participant dead, or the pair no longer
adjacent); committing an event splices the neighbor links and inserts the
candidate for the newly adjacent pair.  Cost is O(n log n).

The lattice kernel works on doubled integer positions (site*2) so that
collision times and positions are exact int64 half-integers: a pair of
opposite movers meets at a half-integer time with no floating-point tie
ambiguity.  Simultaneous co-located pair candidates sharing a stationary
particle are merged into triple events; in the continuous kernel such exact
ties are measure-zero input pathologies and are counted.

Fate codes: 0 annihilated, 1 survives left, 2 survives still, 3 survives right.
"""

import numpy as np
from numba import njit

FATE_ANNIHILATED = 0
FATE_LEFT = 1
FATE_STILL = 2
FATE_RIGHT = 3


def make_buffers(n: int, lattice: bool) -> dict:
    """Reusable scratch arrays for configurations of size <= n."""
    tdt = np.int64 if lattice else np.float64
    cap = 2 * n + 8
    return {
        "fate": np.empty(n + 1, np.int8),
        "eid": np.empty(n + 1, np.int32),
        "ev_t": np.empty(n + 1, tdt),
        "ev_x": np.empty(n + 1, tdt),
        "ev_a": np.empty(n + 1, np.int32),
        "ev_b": np.empty(n + 1, np.int32),
        "ev_c": np.empty(n + 1, np.int32),
        "lft": np.empty(n + 1, np.int32),
        "rgt": np.empty(n + 1, np.int32),
        "alive": np.empty(n + 1, np.bool_),
        "ht": np.empty(cap, tdt),
        "hx": np.empty(cap, tdt),
        "ha": np.empty(cap, np.int32),
        "hb": np.empty(cap, np.int32),
    }


@njit(cache=True, nogil=True)
def _resolve_continuous(pos, spd, fate, eid, ev_t, ev_x, ev_a, ev_b, ev_c,
                        lft, rgt, alive, ht, hx, ha, hb):
    n = pos.shape[0]
    for i in range(n):
        alive[i] = True
        fate[i] = spd[i] + 2
        eid[i] = -1
        lft[i] = i - 1
        rgt[i] = i + 1
    hsize = 0
    nev = 0
    ties = 0

    # initial candidates: adjacent approaching pairs
    for i in range(n - 1):
        j = i + 1
        if spd[i] > spd[j]:
            d = pos[j] - pos[i]
            if spd[i] == 1 and spd[j] == 0:
                t = d
                x = pos[j]
            elif spd[i] == 0:
                t = d
                x = pos[i]
            else:
                t = d * 0.5
                x = pos[i] + d * 0.5
            # heap push
            ht[hsize] = t
            hx[hsize] = x
            ha[hsize] = i
            hb[hsize] = j
            m = hsize
            hsize += 1
            while m > 0:
                par = (m - 1) >> 1
                if ht[par] < ht[m] or (ht[par] == ht[m] and hx[par] <= hx[m]):
                    break
                ht[par], ht[m] = ht[m], ht[par]
                hx[par], hx[m] = hx[m], hx[par]
                ha[par], ha[m] = ha[m], ha[par]
                hb[par], hb[m] = hb[m], hb[par]
                m = par

    while hsize > 0:
        t = ht[0]
        x = hx[0]
        a = ha[0]
        b = hb[0]
        # heap pop
        hsize -= 1
        ht[0] = ht[hsize]
        hx[0] = hx[hsize]
        ha[0] = ha[hsize]
        hb[0] = hb[hsize]
        m = 0
        while True:
            l = 2 * m + 1
            if l >= hsize:
                break
            if l + 1 < hsize and (ht[l + 1] < ht[l]
                                  or (ht[l + 1] == ht[l] and hx[l + 1] < hx[l])):
                l += 1
            if ht[m] < ht[l] or (ht[m] == ht[l] and hx[m] <= hx[l]):
                break
            ht[m], ht[l] = ht[l], ht[m]
            hx[m], hx[l] = hx[l], hx[m]
            ha[m], ha[l] = ha[l], ha[m]
            hb[m], hb[l] = hb[l], hb[m]
            m = l

        if not (alive[a] and alive[b] and rgt[a] == b):
            continue

        # triple merge: a co-located simultaneous candidate sharing the
        # stationary participant (only possible around an R,S or S,L pair)
        p0 = a
        p2 = b
        third = False
        if spd[a] == 1 and spd[b] == 0:
            r = rgt[b]
            if r < n and spd[r] == -1:
                d = pos[r] - pos[b]
                if d == t and pos[b] == x:
                    third = True
                    p2 = r
        elif spd[a] == 0 and spd[b] == -1:
            l = lft[a]
            if l >= 0 and spd[l] == 1:
                d = pos[a] - pos[l]
                if d == t and pos[a] == x:
                    third = True
                    p0 = l

        ev_t[nev] = t
        ev_x[nev] = x
        if third:
            ties += 1
            mid = a if p0 != a else b
            ev_a[nev] = p0
            ev_b[nev] = mid
            ev_c[nev] = p2
            alive[p0] = False
            alive[mid] = False
            alive[p2] = False
            fate[p0] = FATE_ANNIHILATED
            fate[mid] = FATE_ANNIHILATED
            fate[p2] = FATE_ANNIHILATED
            eid[p0] = nev
            eid[mid] = nev
            eid[p2] = nev
        else:
            ev_a[nev] = a
            ev_b[nev] = b
            ev_c[nev] = -1
            alive[a] = False
            alive[b] = False
            fate[a] = FATE_ANNIHILATED
            fate[b] = FATE_ANNIHILATED
            eid[a] = nev
            eid[b] = nev
        nev += 1

        L = lft[p0]
        R = rgt[p2]
        if L >= 0:
            rgt[L] = R
        if R < n:
            lft[R] = L
        if L >= 0 and R < n and spd[L] > spd[R]:
            d = pos[R] - pos[L]
            if spd[L] == 1 and spd[R] == 0:
                t2 = d
                x2 = pos[R]
            elif spd[L] == 0:
                t2 = d
                x2 = pos[L]
            else:
                t2 = d * 0.5
                x2 = pos[L] + d * 0.5
            ht[hsize] = t2
            hx[hsize] = x2
            ha[hsize] = L
            hb[hsize] = R
            m = hsize
            hsize += 1
            while m > 0:
                par = (m - 1) >> 1
                if ht[par] < ht[m] or (ht[par] == ht[m] and hx[par] <= hx[m]):
                    break
                ht[par], ht[m] = ht[m], ht[par]
                hx[par], hx[m] = hx[m], hx[par]
                ha[par], ha[m] = ha[m], ha[par]
                hb[par], hb[m] = hb[m], hb[par]
                m = par

    return nev, ties


@njit(cache=True, nogil=True)
def _resolve_lattice(pos2, spd, fate, eid, ev_t, ev_x, ev_a, ev_b, ev_c,
                     lft, rgt, alive, ht, hx, ha, hb):
    # pos2 holds doubled site indices; all keys are exact int64:
    # (R,S): 2t = P_j - P_i, 2x = P_j
    # (S,L): 2t = P_j - P_i, 2x = P_i
    # (R,L): 2t = (P_j - P_i) // 2, 2x = (P_i + P_j) // 2
    n = pos2.shape[0]
    for i in range(n):
        alive[i] = True
        fate[i] = spd[i] + 2
        eid[i] = -1
        lft[i] = i - 1
        rgt[i] = i + 1
    hsize = 0
    nev = 0

    for i in range(n - 1):
        j = i + 1
        if spd[i] > spd[j]:
            d = pos2[j] - pos2[i]
            if spd[i] == 1 and spd[j] == 0:
                t = d
                x = pos2[j]
            elif spd[i] == 0:
                t = d
                x = pos2[i]
            else:
                t = d >> 1
                x = (pos2[i] + pos2[j]) >> 1
            ht[hsize] = t
            hx[hsize] = x
            ha[hsize] = i
            hb[hsize] = j
            m = hsize
            hsize += 1
            while m > 0:
                par = (m - 1) >> 1
                if ht[par] < ht[m] or (ht[par] == ht[m] and hx[par] <= hx[m]):
                    break
                ht[par], ht[m] = ht[m], ht[par]
                hx[par], hx[m] = hx[m], hx[par]
                ha[par], ha[m] = ha[m], ha[par]
                hb[par], hb[m] = hb[m], hb[par]
                m = par

    while hsize > 0:
        t = ht[0]
        x = hx[0]
        a = ha[0]
        b = hb[0]
        hsize -= 1
        ht[0] = ht[hsize]
        hx[0] = hx[hsize]
        ha[0] = ha[hsize]
        hb[0] = hb[hsize]
        m = 0
        while True:
            l = 2 * m + 1
            if l >= hsize:
                break
            if l + 1 < hsize and (ht[l + 1] < ht[l]
                                  or (ht[l + 1] == ht[l] and hx[l + 1] < hx[l])):
                l += 1
            if ht[m] < ht[l] or (ht[m] == ht[l] and hx[m] <= hx[l]):
                break
            ht[m], ht[l] = ht[l], ht[m]
            hx[m], hx[l] = hx[l], hx[m]
            ha[m], ha[l] = ha[l], ha[m]
            hb[m], hb[l] = hb[l], hb[m]
            m = l

        if not (alive[a] and alive[b] and rgt[a] == b):
            continue

        p0 = a
        p2 = b
        third = False
        if spd[a] == 1 and spd[b] == 0:
            r = rgt[b]
            if r < n and spd[r] == -1:
                if pos2[r] - pos2[b] == t and pos2[b] == x:
                    third = True
                    p2 = r
        elif spd[a] == 0 and spd[b] == -1:
            l = lft[a]
            if l >= 0 and spd[l] == 1:
                if pos2[a] - pos2[l] == t and pos2[a] == x:
                    third = True
                    p0 = l

        ev_t[nev] = t
        ev_x[nev] = x
        if third:
            mid = a if p0 != a else b
            ev_a[nev] = p0
            ev_b[nev] = mid
            ev_c[nev] = p2
            alive[p0] = False
            alive[mid] = False
            alive[p2] = False
            fate[p0] = FATE_ANNIHILATED
            fate[mid] = FATE_ANNIHILATED
            fate[p2] = FATE_ANNIHILATED
            eid[p0] = nev
            eid[mid] = nev
            eid[p2] = nev
        else:
            ev_a[nev] = a
            ev_b[nev] = b
            ev_c[nev] = -1
            alive[a] = False
            alive[b] = False
            fate[a] = FATE_ANNIHILATED
            fate[b] = FATE_ANNIHILATED
            eid[a] = nev
            eid[b] = nev
        nev += 1

        L = lft[p0]
        R = rgt[p2]
        if L >= 0:
            rgt[L] = R
        if R < n:
            lft[R] = L
        if L >= 0 and R < n and spd[L] > spd[R]:
            d = pos2[R] - pos2[L]
            if spd[L] == 1 and spd[R] == 0:
                t2 = d
                x2 = pos2[R]
            elif spd[L] == 0:
                t2 = d
                x2 = pos2[L]
            else:
                t2 = d >> 1
                x2 = (pos2[L] + pos2[R]) >> 1
            ht[hsize] = t2
            hx[hsize] = x2
            ha[hsize] = L
            hb[hsize] = R
            m = hsize
            hsize += 1
            while m > 0:
                par = (m - 1) >> 1
                if ht[par] < ht[m] or (ht[par] == ht[m] and hx[par] <= hx[m]):
                    break
                ht[par], ht[m] = ht[m], ht[par]
                hx[par], hx[m] = hx[m], hx[par]
                ha[par], ha[m] = ha[m], ha[par]
                hb[par], hb[m] = hb[m], hb[par]
                m = par

    return nev, 0


def resolve_arrays(positions: np.ndarray, speeds: np.ndarray, lattice: bool,
                   bufs: dict | None = None):
    """Run the appropriate kernel; returns (bufs, n_events, tie_count).

    Lattice positions are doubled internally; ev_t/ev_x then hold doubled
    times/positions.  Callers reusing `bufs` must size them via make_buffers
    with n >= len(positions).
    """
    n = positions.shape[0]
    if bufs is None or bufs["fate"].shape[0] < n + 1:
        bufs = make_buffers(max(n, 16), lattice)
    if lattice:
        pos2 = np.asarray(positions, dtype=np.int64) * 2
        nev, ties = _resolve_lattice(
            pos2, speeds, bufs["fate"], bufs["eid"], bufs["ev_t"], bufs["ev_x"],
            bufs["ev_a"], bufs["ev_b"], bufs["ev_c"], bufs["lft"], bufs["rgt"],
            bufs["alive"], bufs["ht"], bufs["hx"], bufs["ha"], bufs["hb"])
    else:
        pos = np.asarray(positions, dtype=np.float64)
        nev, ties = _resolve_continuous(
            pos, speeds, bufs["fate"], bufs["eid"], bufs["ev_t"], bufs["ev_x"],
            bufs["ev_a"], bufs["ev_b"], bufs["ev_c"], bufs["lft"], bufs["rgt"],
            bufs["alive"], bufs["ht"], bufs["hx"], bufs["ha"], bufs["hb"])
    return bufs, nev, ties


def warmup():
    """Trigger JIT compilation on tiny inputs (cached across processes)."""
    resolve_arrays(np.asarray([1.0, 2.0, 4.0]), np.asarray([1, 0, -1], np.int8), False)
    resolve_arrays(np.asarray([1, 2, 3]), np.asarray([1, 0, -1], np.int8), True)
