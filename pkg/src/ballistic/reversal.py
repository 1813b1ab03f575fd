"""Interval reversal: the measure-preserving bijection behind r = p q^2 / 2.

For a half-line window whose first particle is annihilated at a partner
located at y1, rev() reflects every particle inside [x1, y1] through the
midpoint and negates its speed, leaving the outside untouched.  On the event
"origin hit and the first particle (a right mover) annihilates a still one",
rev lands in "origin hit and the first particle (still) is hit from the
right, with the killer closer than the next arrival", and is its own
inverse there.  Because the two conditional distances are i.i.d. with an
atomless law in continuous mode, the strict comparison has probability 1/2,
which is what verify_halving measures; on the lattice the distances carry
atoms and the frequency drops strictly below 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FATE_ANNIHILATED, FATE_LEFT, FATE_STILL
from .engine import Resolution, resolve
from .estimators import SUB_REVERSAL, parallel_sum, sample_arrays, theory_q
from .model import Configuration, Mode, ModelParams, derive_stream


@dataclass(frozen=True)
class EventFlags:
    """Window events of one realization.

    Flags hold the values in the restricted process.  A flag is None when
    its infinite-volume value is not settled by the window: a surviving
    still/right first particle may yet be annihilated from beyond the edge,
    and a light-cone-provisional annihilation may be preempted.  `censored`
    marks only that last, genuinely fragile case (first particle annihilated
    at (t, y) with y + t at or beyond the edge); the ordinary monotone
    truncation of surviving fates is visible through the Nones but does not
    censor a trial, mirroring how the window hit event carries no censoring.
    """

    first_right_hits_still: bool | None
    first_still_hit_from_right: bool | None
    origin_hit: bool
    y0: float | None
    y1: float | None
    gap_comparison: bool | None
    censored: bool


def _flags_from_buffers(pos, spd, fate, eid, ev_t, ev_x, ev_a, ev_b, ev_c,
                        lattice: bool) -> EventFlags:
    k = pos.shape[0]
    left_idx = np.flatnonzero(fate[:k] == FATE_LEFT)
    hit = left_idx.size > 0
    y0 = float(pos[left_idx[0]]) if hit else None

    s0 = int(spd[0])
    f0 = int(fate[0])
    if f0 == FATE_ANNIHILATED:
        e = int(eid[0])
        scale = 0.5 if lattice else 1.0
        t_e = float(ev_t[e]) * scale
        x_e = float(ev_x[e]) * scale
        edge = float(pos[k - 1])
        provisional = x_e + t_e >= edge
        is_pair = int(ev_c[e]) < 0
        partner = int(ev_b[e]) if int(ev_a[e]) == 0 else int(ev_a[e])
        y1 = float(pos[partner])
        if provisional:
            # the first particle's speed still settles the flag that names
            # the other speed; the flag naming its own role stays open since
            # its partner or event may be preempted from beyond the edge.
            if s0 == 0:
                fsr = True if (is_pair and int(spd[partner]) == -1) else None
                frs = False
            else:
                frs = None
                fsr = False
            return EventFlags(frs, fsr, hit, y0, y1, None, True)
        frs = s0 == 1 and is_pair and int(spd[partner]) == 0
        fsr = s0 == 0 and is_pair and int(spd[partner]) == -1
        gap_cmp = None
        if hit:
            gap_cmp = bool(y1 - pos[0] < y0 - y1)
        return EventFlags(frs, fsr, hit, y0, y1, gap_cmp, False)

    # first particle survives: a left mover settles both flags to False; a
    # still or right survivor may yet be annihilated beyond the window, so
    # the flag naming it stays open (but the trial is not censored).
    if f0 == FATE_LEFT:
        return EventFlags(False, False, hit, y0, None, None, False)
    if f0 == FATE_STILL:
        return EventFlags(False, None, hit, y0, None, None, False)
    return EventFlags(None, False, hit, y0, None, None, False)


def event_flags(config: Configuration, res: Resolution | None = None) -> EventFlags:
    """Flags of one configuration (resolves it if no resolution is given)."""
    if res is None:
        res = resolve(config)
    k = config.size
    lattice = config.mode is Mode.LATTICE
    ev_a = np.asarray([p[0] - 1 for p in res.ev_participants], dtype=np.int64)
    ev_b = np.asarray([p[1] - 1 for p in res.ev_participants], dtype=np.int64)
    ev_c = np.asarray([p[2] - 1 if len(p) == 3 else -1
                       for p in res.ev_participants], dtype=np.int64)
    scale = 2.0 if lattice else 1.0
    return _flags_from_buffers(config.positions, config.speeds, res.fates,
                               res.event_of, res.ev_times * scale,
                               res.ev_positions * scale, ev_a, ev_b, ev_c,
                               lattice)


def rev(config: Configuration, flags: EventFlags | None = None) -> Configuration:
    """Reflect the interval [x1, y1] through its midpoint, negating speeds.

    The endpoints are swapped by assignment (exactly); interior positions
    reflect through x1 + y1.  Raises when the first particle survives (y1
    undefined).
    """
    if flags is None:
        flags = event_flags(config)
    if flags.y1 is None:
        raise ValueError("rev undefined: first particle is not annihilated")
    pos = config.positions.copy()
    spd = config.speeds.copy()
    x1 = pos[0]
    y1 = flags.y1 if config.mode is Mode.CONTINUOUS else int(flags.y1)
    inside = np.flatnonzero((config.positions >= x1) & (config.positions <= y1))
    refl = (x1 + y1) - config.positions[inside]
    refl = refl[::-1]
    refl[0] = x1
    refl[-1] = y1
    pos[inside] = refl
    spd[inside] = -config.speeds[inside][::-1]
    return Configuration(config.mode, config.side, pos, spd,
                         forced_origin=config.forced_origin)


@dataclass(frozen=True)
class HalvingReport:
    p: float
    k: int
    n_trials: int
    master_seed: int
    n_conditioning: int          # origin hit and first particle hit from right
    n_killer_closer: int         # among those: y1-x1 < y0-y1 strictly
    n_distance_ties: int
    halving_freq: float
    halving_z: float             # against 1/2
    event_prob: float            # P(origin hit and first still hit from right)
    event_prob_target: float     # p * theory_q(p)^2
    event_prob_z: float
    n_censored: int
    killer_distances: np.ndarray
    onward_distances: np.ndarray

    def to_json(self) -> str:
        import json
        d = {f: getattr(self, f) for f in (
            "p", "k", "n_trials", "master_seed", "n_conditioning",
            "n_killer_closer", "n_distance_ties", "halving_freq", "halving_z",
            "event_prob", "event_prob_target", "event_prob_z", "n_censored")}
        return json.dumps(d, sort_keys=True)


def verify_halving(params: ModelParams, k: int, trials: int, master_seed: int,
                   workers: int = 1) -> HalvingReport:
    """Conditional halving and the p*q^2 identity, by direct simulation.

    Conditional on the origin being hit with the first (still) particle
    killed from the right, measures the frequency of the killer being closer
    than the next arrival, plus the unconditional probability of the
    conditioning event against p * theory_q(p)^2.  Distance samples are
    collected per trial for distribution-equality tests.
    """
    lattice = params.mode is Mode.LATTICE
    d1_all = np.full(trials, np.nan)
    d2_all = np.full(trials, np.nan)

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(k, lattice)
        out = np.zeros(4, dtype=np.int64)  # conditioning, closer, ties, censored
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_REVERSAL)
            pos, spd = sample_arrays(params.p, k, lattice, st)
            _kernels.resolve_arrays(pos, spd, lattice, bufs)
            fl = _flags_from_buffers(pos, spd, bufs["fate"], bufs["eid"],
                                     bufs["ev_t"], bufs["ev_x"], bufs["ev_a"],
                                     bufs["ev_b"], bufs["ev_c"], lattice)
            if fl.censored:
                out[3] += 1
                continue
            if fl.origin_hit and fl.first_still_hit_from_right:
                out[0] += 1
                d1 = fl.y1 - float(pos[0])
                d2 = fl.y0 - fl.y1
                d1_all[t] = d1
                d2_all[t] = d2
                if d1 < d2:
                    out[1] += 1
                elif d1 == d2:
                    out[2] += 1
        return out

    acc = parallel_sum(trials, workers, chunk)
    n_cond, n_less, n_ties, n_cens = map(int, acc)
    freq = n_less / n_cond if n_cond else math.nan
    se = math.sqrt(0.25 / n_cond) if n_cond else math.nan
    z = (freq - 0.5) / se if n_cond else math.nan
    ep = n_cond / trials
    qt = theory_q(params.p)
    target = params.p * qt * qt
    ep_se = math.sqrt(max(ep * (1 - ep), 1e-300) / trials)
    ep_z = (ep - target) / ep_se
    return HalvingReport(params.p, k, trials, master_seed, n_cond, n_less,
                         n_ties, freq, z, ep, target, ep_z, n_cens,
                         d1_all[~np.isnan(d1_all)], d2_all[~np.isnan(d2_all)])


@dataclass(frozen=True)
class BijectionReport:
    n_trials: int
    n_censored: int
    n_forward_premise: int   # origin hit and first right mover kills a still
    n_forward_ok: int        # rev lands in the target event
    n_roundtrip_ok: int      # rev(rev(w)) recovers w
    n_backward_premise: int  # target event with killer closer
    n_backward_ok: int       # rev maps back into the source event
    max_roundtrip_error: float
    freq_gap: float          # |P(source) - P(target&closer)|
    freq_gap_sigma: float

    @property
    def pathwise_ok(self) -> bool:
        return (self.n_forward_ok == self.n_forward_premise
                and self.n_backward_ok == self.n_backward_premise
                and self.n_roundtrip_ok == self.n_forward_premise)


def check_reversal_bijection(params: ModelParams, k: int, trials: int,
                             master_seed: int) -> BijectionReport:
    """Pathwise test that rev exchanges the two events and is an involution."""
    n_cens = 0
    n_fwd = n_fwd_ok = n_rt_ok = 0
    n_bwd = n_bwd_ok = 0
    max_err = 0.0
    for t in range(trials):
        st = derive_stream(master_seed, t).substream(SUB_REVERSAL, 1)
        pos, spd = sample_arrays(params.p, k, params.mode is Mode.LATTICE, st)
        cfg = Configuration(params.mode, params.side, pos, spd)
        fl = event_flags(cfg)
        if fl.censored:
            n_cens += 1
            continue
        if fl.origin_hit and fl.first_right_hits_still:
            n_fwd += 1
            image = rev(cfg, fl)
            ifl = event_flags(image)
            if (ifl.origin_hit and ifl.first_still_hit_from_right
                    and ifl.gap_comparison and ifl.y1 == fl.y1):
                n_fwd_ok += 1
                back = rev(image, ifl)
                err = float(np.max(np.abs(back.positions - cfg.positions)))
                max_err = max(max_err, err)
                if err <= 1e-9 and np.array_equal(back.speeds, cfg.speeds):
                    n_rt_ok += 1
        elif (fl.origin_hit and fl.first_still_hit_from_right
                and fl.gap_comparison):
            n_bwd += 1
            image = rev(cfg, fl)
            ifl = event_flags(image)
            if ifl.origin_hit and ifl.first_right_hits_still and ifl.y1 == fl.y1:
                n_bwd_ok += 1
    pa = n_fwd / trials
    pb = n_bwd / trials
    var = (pa + pb - (pa - pb) ** 2) / trials
    return BijectionReport(trials, n_cens, n_fwd, n_fwd_ok, n_rt_ok, n_bwd,
                           n_bwd_ok, max_err, abs(pa - pb), math.sqrt(var))
