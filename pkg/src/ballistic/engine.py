"""Deterministic resolution of the annihilation dynamics.

resolve() is the canonical O(n log n) event-driven engine (compiled kernel);
resolve_oracle() recomputes the global minimum over all adjacent approaching
pairs from scratch after every commit (O(n^2), numpy) and exists purely as an
independent cross-check.  A one-pass stack is deliberately not used: a left
mover entering from far away can preempt a pending collision deep inside the
window, which naive stacking gets wrong.

Both engines commit events in lexicographic (time, position) order, merging
a simultaneous co-located neighbor candidate into a triple event.  On the
lattice all comparisons are exact integer arithmetic on doubled times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import FATE_ANNIHILATED, FATE_LEFT, FATE_RIGHT, FATE_STILL
from .model import Configuration, Mode, Side

_FATE_NAMES = {
    FATE_ANNIHILATED: "annihilated",
    FATE_LEFT: "survives_left",
    FATE_STILL: "survives_still",
    FATE_RIGHT: "survives_right",
}


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    position: float
    participants: tuple[int, ...]  # 1-based indices, ascending; len 2 or 3


@dataclass
class Resolution:
    """Complete annihilation outcome of one configuration."""

    config: Configuration
    fates: np.ndarray                 # int8 fate code per particle
    event_of: np.ndarray              # event id per annihilated particle, else -1
    ev_times: np.ndarray              # float64, one entry per event
    ev_positions: np.ndarray
    ev_participants: list[tuple[int, ...]]
    origin_hit: tuple[int, float] | None
    degenerate_tie_count: int
    _events: list[CollisionEvent] | None = field(default=None, repr=False)

    @property
    def events(self) -> list[CollisionEvent]:
        if self._events is None:
            self._events = [
                CollisionEvent(float(t), float(x), p)
                for t, x, p in zip(self.ev_times, self.ev_positions,
                                   self.ev_participants)
            ]
        return self._events

    @property
    def n_events(self) -> int:
        return len(self.ev_participants)

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "fates": [_FATE_NAMES[int(f)] for f in self.fates],
            "events": [
                {"time": float(t), "position": float(x), "participants": list(p)}
                for t, x, p in zip(self.ev_times, self.ev_positions,
                                   self.ev_participants)
            ],
            "origin_hit": (None if self.origin_hit is None
                           else {"index": self.origin_hit[0],
                                 "time": self.origin_hit[1]}),
            "degenerate_tie_count": self.degenerate_tie_count,
        }
        return json.dumps(doc, sort_keys=True)


def _finish(config: Configuration, fate: np.ndarray, eid: np.ndarray,
            ev_t: np.ndarray, ev_x: np.ndarray, ev_a, ev_b, ev_c,
            nev: int, ties: int) -> Resolution:
    lattice = config.mode is Mode.LATTICE
    scale = 0.5 if lattice else 1.0  # lattice kernels report doubled keys
    times = np.asarray(ev_t[:nev], dtype=np.float64) * scale
    positions = np.asarray(ev_x[:nev], dtype=np.float64) * scale
    participants = []
    for e in range(nev):
        if ev_c[e] >= 0:
            participants.append((int(ev_a[e]) + 1, int(ev_b[e]) + 1,
                                 int(ev_c[e]) + 1))
        else:
            participants.append((int(ev_a[e]) + 1, int(ev_b[e]) + 1))

    origin_hit = None
    if config.side is Side.HALF_LINE:
        left_idx = np.flatnonzero(fate == FATE_LEFT)
        if left_idx.size:
            i = int(left_idx[0])
            origin_hit = (i + 1, float(config.positions[i]))

    return Resolution(config, fate.copy(), eid.copy(), times, positions,
                      participants, origin_hit, ties)


def resolve(config: Configuration) -> Resolution:
    """Exact outcome of the dynamics via the event-driven kernel."""
    n = config.size
    if n > 1 and not np.all(np.diff(config.positions) > 0):
        raise ValueError("invalid configuration: positions must strictly increase")
    if n == 0:
        empty_f = np.empty(0, np.float64)
        return Resolution(config, np.empty(0, np.int8), np.empty(0, np.int32),
                          empty_f, empty_f, [], None, 0)
    lattice = config.mode is Mode.LATTICE
    bufs, nev, ties = _kernels.resolve_arrays(config.positions, config.speeds,
                                              lattice)
    return _finish(config, bufs["fate"][:n], bufs["eid"][:n], bufs["ev_t"],
                   bufs["ev_x"], bufs["ev_a"], bufs["ev_b"], bufs["ev_c"],
                   nev, ties)


def resolve_oracle(config: Configuration) -> Resolution:
    """Reference engine: global rescan of candidate pairs after each commit."""
    n = config.size
    if n > 10 ** 4:
        raise ValueError("oracle is quadratic; size capped at 10^4")
    if n > 1 and not np.all(np.diff(config.positions) > 0):
        raise ValueError("invalid configuration: positions must strictly increase")
    lattice = config.mode is Mode.LATTICE
    if n == 0:
        empty_f = np.empty(0, np.float64)
        return Resolution(config, np.empty(0, np.int8), np.empty(0, np.int32),
                          empty_f, empty_f, [], None, 0)

    if lattice:
        P = np.asarray(config.positions, dtype=np.int64) * 2
    else:
        P = np.asarray(config.positions, dtype=np.float64)
    spd = config.speeds
    alive = np.ones(n, dtype=bool)
    fate = (spd.astype(np.int16) + 2).astype(np.int8)
    eid = np.full(n, -1, dtype=np.int32)
    tdt = np.int64 if lattice else np.float64
    ev_t = np.empty(n + 1, tdt)
    ev_x = np.empty(n + 1, tdt)
    ev_a = np.empty(n + 1, np.int32)
    ev_b = np.empty(n + 1, np.int32)
    ev_c = np.empty(n + 1, np.int32)
    nev = 0
    ties = 0

    def pair_keys(a, b):
        sa = spd[a]
        sb = spd[b]
        d = P[b] - P[a]
        rs = (sa == 1) & (sb == 0)
        sl = sa == 0
        if lattice:
            t = np.where((sa == 1) & (sb == -1), d >> 1, d)
            x = np.where(rs, P[b], np.where(sl, P[a], (P[a] + P[b]) >> 1))
        else:
            t = np.where((sa == 1) & (sb == -1), d * 0.5, d)
            x = np.where(rs, P[b], np.where(sl, P[a], P[a] + d * 0.5))
        return t, x

    while True:
        idx = np.flatnonzero(alive)
        if idx.size < 2:
            break
        a_all = idx[:-1]
        b_all = idx[1:]
        appr = spd[a_all] > spd[b_all]
        if not appr.any():
            break
        a = a_all[appr]
        b = b_all[appr]
        t, x = pair_keys(a, b)
        tmin = t.min()
        on_min = t == tmin
        sub = np.flatnonzero(on_min)
        j = sub[np.argmin(x[sub])]
        ca, cb = int(a[j]), int(b[j])
        tc, xc = t[j], x[j]

        p0, p2 = ca, cb
        third = False
        if spd[ca] == 1 and spd[cb] == 0:
            rmatch = np.flatnonzero(a == cb)
            if rmatch.size and t[rmatch[0]] == tc and x[rmatch[0]] == xc:
                third = True
                p2 = int(b[rmatch[0]])
        elif spd[ca] == 0 and spd[cb] == -1:
            lmatch = np.flatnonzero(b == ca)
            if lmatch.size and t[lmatch[0]] == tc and x[lmatch[0]] == xc:
                third = True
                p0 = int(a[lmatch[0]])

        ev_t[nev] = tc
        ev_x[nev] = xc
        if third:
            if not lattice:
                ties += 1
            mid = ca if p0 != ca else cb
            group = (p0, mid, p2)
            ev_a[nev], ev_b[nev], ev_c[nev] = group
        else:
            group = (ca, cb)
            ev_a[nev], ev_b[nev], ev_c[nev] = ca, cb, -1
        for g in group:
            alive[g] = False
            fate[g] = FATE_ANNIHILATED
            eid[g] = nev
        nev += 1

    return _finish(config, fate, eid, ev_t, ev_x, ev_a, ev_b, ev_c, nev, ties)


def restrict(config: Configuration, i: int, j: int) -> Configuration:
    """Sub-configuration of particles i..j (1-based, inclusive), reindexed."""
    if not (1 <= i <= j <= config.size):
        raise ValueError(f"restrict range ({i}, {j}) out of bounds for "
                         f"size {config.size}")
    return Configuration(config.mode, config.side,
                         config.positions[i - 1:j].copy(),
                         config.speeds[i - 1:j].copy())


def finality(res: Resolution, right_edge: float) -> np.ndarray:
    """Per-particle light-cone finality against a window edge.

    A fate is Final (True) when no influence entering at the window's right
    edge can alter it: annihilations at (t, y) with y + t < right_edge, and
    surviving left movers that started strictly left of the edge (an invader
    at equal speed never catches them).  Still/right survivors are always
    Provisional.
    """
    n = res.fates.shape[0]
    final = np.zeros(n, dtype=bool)
    ann = res.fates == FATE_ANNIHILATED
    if ann.any():
        reach = res.ev_positions + res.ev_times  # rightward light ray per event
        final[ann] = reach[res.event_of[ann]] < right_edge
    sl = res.fates == FATE_LEFT
    final[sl] = res.config.positions[sl] < right_edge
    return final


def count_survivors(res: Resolution) -> tuple[int, int, int]:
    """(n_left, n_still, n_right) surviving counts."""
    f = res.fates
    return (int(np.count_nonzero(f == FATE_LEFT)),
            int(np.count_nonzero(f == FATE_STILL)),
            int(np.count_nonzero(f == FATE_RIGHT)))
