"""The discrete (one-particle-per-site) model and its triple-collision laws.

On the integer lattice two opposite movers flanking a still particle at
equal distance arrive together, and all three annihilate.  Ties break the
continuous halving argument: with D the site of the first particle to reach
0 on a half-line window and D' an independent copy,

    rhat = P(D > D' | both finite) * p * qhat^2  <  p * qhat^2 / 2,

and the probability that a conditioned stationary particle on the full line
sits in a triple collision equals the unconditional equal-pair frequency
P(D = D' < inf).  Consequently the lattice survival probability
psi(p) = (1 - qhat)^2 strictly exceeds its continuous counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FATE_ANNIHILATED, FATE_LEFT, FATE_STILL
from .estimators import (SUB_LATTICE_FULL, SUB_LATTICE_PAIRS, SUB_LATTICE_Q,
                         SUB_LATTICE_R, Estimate, IdentityCheck,
                         IdentityReport, parallel_sum, sample_arrays)
from .model import Mode, ModelParams, Side, derive_stream

_DMAX = 256  # histogram cap; deeper hits pool into the overflow bin


@dataclass(frozen=True)
class LatticeStats:
    p: float
    k: int
    n_trials: int
    master_seed: int
    qhat: Estimate
    rhat: Estimate
    psihat: Estimate              # (1 - qhat)^2, delta-method stderr
    psihat_direct: Estimate       # full-line conditioned survival frequency
    triple_rate: Estimate         # conditioned particle lost to a triple
    D_histogram: dict[int, int]   # pooled over both windows of each pair
    D_hist_first: dict[int, int]
    D_hist_second: dict[int, int]
    n_pairs: int
    n_pairs_uncensored: int       # both windows hit the origin
    PDeq: float                   # conditional on uncensored pairs
    PDgt: float
    PDlt: float
    PDeq_overall: float           # equal finite pairs over all pairs
    pair_censored_fraction: float

    def to_csv(self) -> str:
        hdr = ("p,k,trials,qhat,rhat,psihat,PDeq,PDgt,triple_rate,censored\n")
        row = (f"{self.p:.17g},{self.k},{self.n_trials},"
               f"{self.qhat.value:.17g},{self.rhat.value:.17g},"
               f"{self.psihat.value:.17g},{self.PDeq:.17g},{self.PDgt:.17g},"
               f"{self.triple_rate.value:.17g},"
               f"{self.pair_censored_fraction:.17g}\n")
        return hdr + row


def _first_reach_site(fate: np.ndarray, pos: np.ndarray, k: int) -> int:
    """Site of the first particle to reach 0, or 0 when none does."""
    left = np.flatnonzero(fate[:k] == FATE_LEFT)
    return int(pos[left[0]]) if left.size else 0


def lattice_run(p: float, k: int, trials: int, master_seed: int,
                workers: int = 1) -> LatticeStats:
    """Half-line window estimates plus the D-pair and full-line statistics.

    Four independent substream groups: hit windows for qhat, windows for
    rhat, window pairs for the D comparisons, and conditioned full-line
    windows for the direct survival and triple-involvement rates.
    """
    if k < 2:
        raise ValueError("lattice_run requires k >= 2")
    params = ModelParams(p, Mode.LATTICE, Side.HALF_LINE)

    def q_chunk(lo, hi):
        bufs = _kernels.make_buffers(k, True)
        hits = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_LATTICE_Q)
            pos, spd = sample_arrays(p, k, True, st)
            _kernels.resolve_arrays(pos, spd, True, bufs)
            if (bufs["fate"][:k] == FATE_LEFT).any():
                hits += 1
        return np.asarray([hits], np.int64)

    def r_chunk(lo, hi):
        bufs = _kernels.make_buffers(k, True)
        good = 0
        censored = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_LATTICE_R)
            pos, spd = sample_arrays(p, k, True, st)
            _kernels.resolve_arrays(pos, spd, True, bufs)
            fate = bufs["fate"]
            if spd[0] != 1:
                continue
            if fate[0] != FATE_ANNIHILATED:
                censored += 1
                continue
            e = bufs["eid"][0]
            if bufs["ev_x"][e] + bufs["ev_t"][e] >= 2 * k:
                censored += 1
                continue
            pair = bufs["ev_c"][e] < 0
            partner = bufs["ev_b"][e]
            if pair and spd[partner] == 0 and (fate[:k] == FATE_LEFT).any():
                good += 1
        return np.asarray([good, censored], np.int64)

    def pair_chunk(lo, hi):
        bufs = _kernels.make_buffers(k, True)
        out = np.zeros(5 + 2 * _DMAX, np.int64)  # both,eq,gt,lt,eq_any + hists
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_LATTICE_PAIRS)
            ds = []
            for w in range(2):
                pos, spd = sample_arrays(p, k, True, st.substream(w))
                _kernels.resolve_arrays(pos, spd, True, bufs)
                d = _first_reach_site(bufs["fate"], pos, k)
                ds.append(d)
                if d > 0:
                    out[5 + w * _DMAX + min(d, _DMAX) - 1] += 1
            d1, d2 = ds
            if d1 > 0 and d2 > 0:
                out[0] += 1
                if d1 == d2:
                    out[1] += 1
                    out[4] += 1
                elif d1 > d2:
                    out[2] += 1
                else:
                    out[3] += 1
        return out

    def full_chunk(lo, hi):
        bufs = _kernels.make_buffers(2 * k + 1, True)
        survived = 0
        tripled = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_LATTICE_FULL)
            rpos, rspd = sample_arrays(p, k, True, st.substream(0))
            lpos, lspd = sample_arrays(p, k, True, st.substream(1))
            pos = np.concatenate([-lpos[::-1], np.zeros(1, np.int64), rpos])
            spd = np.concatenate([(-lspd[::-1]).astype(np.int8),
                                  np.zeros(1, np.int8), rspd])
            _kernels.resolve_arrays(pos, spd, True, bufs)
            if bufs["fate"][k] == FATE_STILL:
                survived += 1
            elif bufs["fate"][k] == FATE_ANNIHILATED:
                if bufs["ev_c"][bufs["eid"][k]] >= 0:
                    tripled += 1
        return np.asarray([survived, tripled], np.int64)

    hits = int(parallel_sum(trials, workers, q_chunk)[0])
    qv = hits / trials
    q_se = math.sqrt(max(qv * (1 - qv), 0.0) / trials)
    qhat = Estimate(qv, q_se, trials, 0, master_seed,
                    {"estimator": "qk", "p": p, "k": k, "mode": "lattice"})

    good, censored = map(int, parallel_sum(trials, workers, r_chunk))
    rv = good / trials
    rhat = Estimate(rv, math.sqrt(max(rv * (1 - rv), 0.0) / trials), trials,
                    censored, master_seed,
                    {"estimator": "r", "p": p, "k": k, "mode": "lattice"})

    acc = parallel_sum(trials, workers, pair_chunk)
    n_both, n_eq, n_gt, n_lt, n_eq_any = map(int, acc[:5])
    hist1 = {d + 1: int(c) for d, c in enumerate(acc[5:5 + _DMAX]) if c}
    hist2 = {d + 1: int(c) for d, c in enumerate(acc[5 + _DMAX:]) if c}
    pooled: dict[int, int] = {}
    for h in (hist1, hist2):
        for d, c in h.items():
            pooled[d] = pooled.get(d, 0) + c

    surv, trip = map(int, parallel_sum(trials, workers, full_chunk))
    pd_v = surv / trials
    psihat_direct = Estimate(pd_v, math.sqrt(max(pd_v * (1 - pd_v), 0.0) / trials),
                             trials, 0, master_seed,
                             {"estimator": "psi_direct", "p": p, "k": k})
    tr_v = trip / trials
    triple_rate = Estimate(tr_v, math.sqrt(max(tr_v * (1 - tr_v), 0.0) / trials),
                           trials, 0, master_seed,
                           {"estimator": "triple_rate", "p": p, "k": k})

    psi_v = (1.0 - qv) ** 2
    psihat = Estimate(psi_v, 2.0 * (1.0 - qv) * q_se, trials, 0, master_seed,
                      {"estimator": "psi_formula", "p": p, "k": k})

    return LatticeStats(
        p, k, trials, master_seed, qhat, rhat, psihat, psihat_direct,
        triple_rate, pooled, hist1, hist2, trials, n_both,
        n_eq / n_both if n_both else math.nan,
        n_gt / n_both if n_both else math.nan,
        n_lt / n_both if n_both else math.nan,
        n_eq_any / trials,
        1.0 - n_both / trials)


def verify_lattice_identity(stats: LatticeStats) -> IdentityReport:
    """z-tests of the corrected discrete identities against the run's own
    estimates: rhat vs P(D>D') p qhat^2, and the conditioned triple rate vs
    the unconditional equal-pair frequency."""
    p = stats.p
    q, sq = stats.qhat.value, stats.qhat.stderr
    r, sr = stats.rhat.value, stats.rhat.stderr
    checks = []

    if stats.n_pairs_uncensored == 0:
        # no window ever hits the origin (p at or near 1): every term is 0
        pdgt, pdgt_se = 0.0, 0.0
    else:
        pdgt = stats.PDgt
        pdgt_se = math.sqrt(max(pdgt * (1 - pdgt), 0.0)
                            / stats.n_pairs_uncensored)
    lhs = r
    rhs = pdgt * p * q * q
    se = math.sqrt(sr ** 2 + (p * q * q * pdgt_se) ** 2
                   + (2 * p * q * pdgt * sq) ** 2)
    z = (lhs - rhs) / se if se > 0 else 0.0
    checks.append(IdentityCheck("discrete_reversal", lhs, rhs, se, z,
                                abs(z) <= 3))

    eq_se = math.sqrt(max(stats.PDeq_overall * (1 - stats.PDeq_overall), 0.0)
                      / stats.n_pairs)
    lhs = stats.triple_rate.value
    rhs = stats.PDeq_overall
    se = math.hypot(stats.triple_rate.stderr, eq_se)
    z = (lhs - rhs) / se if se > 0 else 0.0
    checks.append(IdentityCheck("triple_involvement", lhs, rhs, se, z,
                                abs(z) <= 3))

    return IdentityReport(p, stats.k, stats.n_trials, stats.master_seed,
                          tuple(checks), stats.pair_censored_fraction)
