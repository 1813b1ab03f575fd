"""Monte Carlo estimators for the hit probability, the window identities,
the origin-particle survival probability, and the surviving-left-mover law.

Closed forms (for p > 1/4 the hit probability is 1/sqrt(p) - 1 and the
origin-particle survival probability is (2 - 1/sqrt(p))^2; both degenerate
at the 1/4 threshold) are exposed as theory_q / theory_theta and used as
oracles by the acceptance suite.

Trials are embarrassingly parallel: trial i draws from the Philox stream
keyed (master_seed, i) with an estimator-specific substream code, and all
aggregation is over exact integer counters, so results are bit-identical
for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats

from . import _kernels
from ._kernels import FATE_LEFT, FATE_RIGHT, FATE_STILL
from .model import Mode, ModelParams, Side, derive_stream, speeds_from_uniforms

# substream codes keep estimators statistically independent at equal seeds
SUB_QK = 1
SUB_R = 2
SUB_THETA = 3
SUB_LEFTMOVER = 4
SUB_QK_SCHEDULE = 5
SUB_ENK = 6
SUB_EXPLORER = 7
SUB_REVERSAL = 8
SUB_LATTICE_Q = 9
SUB_LATTICE_R = 10
SUB_LATTICE_PAIRS = 11
SUB_LATTICE_FULL = 12


def theory_q(p: float) -> float:
    """Probability that the origin is ever reached on the half-line."""
    if not (0.0 < p <= 1.0):
        raise ValueError("theory_q requires p in (0, 1]")
    return 1.0 if p <= 0.25 else 1.0 / math.sqrt(p) - 1.0


def theory_theta(p: float) -> float:
    """Survival probability of a conditioned stationary particle at 0."""
    if not (0.0 < p <= 1.0):
        raise ValueError("theory_theta requires p in (0, 1]")
    return 0.0 if p <= 0.25 else (2.0 - 1.0 / math.sqrt(p)) ** 2


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_trials: int
    n_censored: int
    master_seed: int
    params: dict = field(default_factory=dict)

    @property
    def censored_interval(self) -> tuple[float, float]:
        """[value, value + censored fraction]: bounds when censoring is one-sided."""
        return (self.value, self.value + self.n_censored / self.n_trials)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float
    stderr: float
    z: float
    passed: bool


@dataclass(frozen=True)
class IdentityReport:
    p: float
    k: int
    n_trials: int
    master_seed: int
    checks: tuple[IdentityCheck, ...]
    censored_fraction: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps({
            "p": self.p, "k": self.k, "trials": self.n_trials,
            "master_seed": self.master_seed,
            "censored_fraction": self.censored_fraction,
            "checks": [c.__dict__ for c in self.checks],
        }, sort_keys=True)


# ---------------------------------------------------------------------------
# Trial infrastructure
# ---------------------------------------------------------------------------

def sample_arrays(p: float, k: int, lattice: bool, stream):
    """Positions and speeds arrays, bit-identical to sample_halfline."""
    if lattice:
        u = stream.uniforms(k)
        return np.arange(1, k + 1, dtype=np.int64), speeds_from_uniforms(u, p)
    u = stream.uniforms(2 * k)
    gaps = -np.log1p(-u[0::2])
    return np.cumsum(gaps), speeds_from_uniforms(u[1::2], p)


def parallel_sum(trials: int, workers: int, chunk_fn) -> np.ndarray:
    """Sum chunk_fn(lo, hi) int64 vectors over a contiguous partition.

    Integer addition commutes, so the result is independent of the worker
    count and of scheduling.
    """
    if workers <= 1:
        return chunk_fn(0, trials)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(lambda ab: chunk_fn(*ab), jobs))
    total = parts[0].copy()
    for part in parts[1:]:
        total += part
    return total


def _bernoulli_stderr(v: float, n: int) -> float:
    return math.sqrt(max(v * (1.0 - v), 0.0) / n)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def estimate_qk(params: ModelParams, k: int, trials: int, master_seed: int,
                workers: int = 1) -> Estimate:
    """Fraction of k-windows whose resolution reaches the origin.

    The window event is a left-moving survivor of the restricted dynamics,
    which is fully window-measurable, so no trial is censored; the estimate
    approaches the true hit probability from below as k grows.
    """
    if k < 1 or trials < 1:
        raise ValueError("k and trials must be >= 1")
    lattice = params.mode is Mode.LATTICE

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(k, lattice)
        hits = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_QK)
            pos, spd = sample_arrays(params.p, k, lattice, st)
            _kernels.resolve_arrays(pos, spd, lattice, bufs)
            if (bufs["fate"][:k] == FATE_LEFT).any():
                hits += 1
        return np.asarray([hits], dtype=np.int64)

    hits = int(parallel_sum(trials, workers, chunk)[0])
    v = hits / trials
    return Estimate(v, _bernoulli_stderr(v, trials), trials, 0, master_seed,
                    {"estimator": "qk", "p": params.p, "k": k,
                     "mode": params.mode.value})


@dataclass(frozen=True)
class QkCurve:
    ks: tuple[int, ...]
    values: tuple[float, ...]
    stderrs: tuple[float, ...]
    n_trials: int
    monotone_violations: int
    master_seed: int


def estimate_qk_schedule(params: ModelParams, ks, trials: int, master_seed: int,
                         workers: int = 1) -> QkCurve:
    """Hit frequency over nested prefixes of the same sampled windows.

    Per trial the k-schedule is evaluated on prefixes of a single sample, so
    the hit indicator must be pathwise non-decreasing in k; violations are
    counted (and asserted zero by the suite).
    """
    ks = tuple(sorted(int(k) for k in ks))
    kmax = ks[-1]
    lattice = params.mode is Mode.LATTICE

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(kmax, lattice)
        out = np.zeros(len(ks) + 1, dtype=np.int64)
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_QK_SCHEDULE)
            pos, spd = sample_arrays(params.p, kmax, lattice, st)
            prev = False
            for ki, k in enumerate(ks):
                _kernels.resolve_arrays(pos[:k], spd[:k], lattice, bufs)
                hit = bool((bufs["fate"][:k] == FATE_LEFT).any())
                if hit:
                    out[ki] += 1
                if prev and not hit:
                    out[-1] += 1
                prev = hit
        return out

    acc = parallel_sum(trials, workers, chunk)
    values = tuple(int(h) / trials for h in acc[:-1])
    return QkCurve(ks, values,
                   tuple(_bernoulli_stderr(v, trials) for v in values),
                   trials, int(acc[-1]), master_seed)


def estimate_r(params: ModelParams, k: int, trials: int, master_seed: int,
               workers: int = 1) -> Estimate:
    """P(first particle moves right, annihilates a still one, and 0 is hit).

    A trial counts only when the first particle's annihilation event is
    light-cone final inside the window; trials where that event is still
    provisional (the first particle survives the window, or dies so late
    that an invader could have preempted it) are censored, giving the
    one-sided interval [value, value + censored fraction].
    """
    if k < 2:
        raise ValueError("estimate_r requires k >= 2")
    lattice = params.mode is Mode.LATTICE

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(k, lattice)
        good = 0
        censored = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_R)
            pos, spd = sample_arrays(params.p, k, lattice, st)
            _kernels.resolve_arrays(pos, spd, lattice, bufs)
            fate = bufs["fate"]
            if spd[0] != 1:
                continue
            if fate[0] == FATE_RIGHT:
                censored += 1
                continue
            e = bufs["eid"][0]
            edge = 2 * k if lattice else pos[k - 1]
            if bufs["ev_x"][e] + bufs["ev_t"][e] >= edge:
                censored += 1
                continue
            pair = bufs["ev_c"][e] < 0
            partner = bufs["ev_b"][e] if bufs["ev_a"][e] == 0 else bufs["ev_a"][e]
            if pair and spd[partner] == 0 and (fate[:k] == FATE_LEFT).any():
                good += 1
        return np.asarray([good, censored], dtype=np.int64)

    good, censored = map(int, parallel_sum(trials, workers, chunk))
    v = good / trials
    return Estimate(v, _bernoulli_stderr(v, trials), trials, censored,
                    master_seed, {"estimator": "r", "p": params.p, "k": k,
                                  "mode": params.mode.value})


@dataclass(frozen=True)
class ThetaBracket:
    lower: Estimate
    upper: Estimate


def estimate_theta(params: ModelParams, k: int, trials: int, master_seed: int,
                   workers: int = 1, min_defenders: int = 32) -> ThetaBracket:
    """Origin-particle survival frequency on conditioned full-line windows.

    upper: the origin particle survives the 2k+1-particle window resolution.
    lower: additionally, each flanking half-line window certifies no further
    threat: it has no surviving left mover (none can be created later: a
    window left mover's killer always approaches from its left, so neither
    its death nor a survivor's march to 0 can be preempted from beyond the
    edge) and retains at least min_defenders surviving still/right particles,
    each of which must absorb one future invader before any can reach 0.
    Trials in the gap are censored.
    """
    if params.side is not Side.FULL_LINE:
        raise ValueError("estimate_theta requires full-line params")
    if k < 1:
        raise ValueError("k must be >= 1")
    lattice = params.mode is Mode.LATTICE

    def chunk(lo: int, hi: int) -> np.ndarray:
        full_bufs = _kernels.make_buffers(2 * k + 1, lattice)
        side_bufs = _kernels.make_buffers(k, lattice)
        n_upper = 0
        n_lower = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_THETA)
            rpos, rspd = sample_arrays(params.p, k, lattice, st.substream(0))
            lpos, lspd = sample_arrays(params.p, k, lattice, st.substream(1))
            zero = np.zeros(1, dtype=rpos.dtype)
            pos = np.concatenate([-lpos[::-1], zero, rpos])
            spd = np.concatenate([(-lspd[::-1]).astype(np.int8),
                                  np.zeros(1, np.int8), rspd])
            _kernels.resolve_arrays(pos, spd, lattice, full_bufs)
            if full_bufs["fate"][k] != FATE_STILL:
                continue
            n_upper += 1
            ok = True
            for spos, sspd in ((rpos, rspd), (lpos, lspd)):
                _kernels.resolve_arrays(spos, sspd, lattice, side_bufs)
                f = side_bufs["fate"][:k]
                if (f == FATE_LEFT).any():
                    ok = False
                    break
                defenders = np.count_nonzero(f == FATE_STILL) \
                    + np.count_nonzero(f == FATE_RIGHT)
                if defenders < min_defenders:
                    ok = False
                    break
            if ok:
                n_lower += 1
        return np.asarray([n_upper, n_lower], dtype=np.int64)

    n_upper, n_lower = map(int, parallel_sum(trials, workers, chunk))
    censored = n_upper - n_lower
    meta = {"estimator": "theta", "p": params.p, "k": k,
            "mode": params.mode.value, "min_defenders": min_defenders}
    upper = Estimate(n_upper / trials, _bernoulli_stderr(n_upper / trials, trials),
                     trials, censored, master_seed, meta)
    lower = Estimate(n_lower / trials, _bernoulli_stderr(n_lower / trials, trials),
                     trials, censored, master_seed, meta)
    return ThetaBracket(lower, upper)


@dataclass(frozen=True)
class LeftmoverDistribution:
    histogram: tuple[int, ...]       # counts of 0..10 and >= 11
    n_trials: int
    sample_mean: float
    mean_theory: float
    mean_stderr: float
    mean_z: float
    chi2_stat: float | None
    chi2_df: int | None
    chi2_pvalue: float | None
    rejected_1pct: bool | None
    master_seed: int


def leftmover_count_distribution(params: ModelParams, k: int, trials: int,
                                 master_seed: int, workers: int = 1
                                 ) -> LeftmoverDistribution:
    """Histogram of surviving-left counts vs the geometric law.

    The count of left movers that survive the half-line process is geometric
    with parameter 1 - q (the region right of a surviving left mover is a
    fresh copy of the process), so the sample is tested against
    Geometric(1 - theory_q(p)) on bins {0..10, >=11} and the sample mean
    against q/(1-q).  The goodness-of-fit part is skipped at p <= 1/4 where
    the theoretical mean diverges.
    """
    lattice = params.mode is Mode.LATTICE
    nbins = 12

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(k, lattice)
        out = np.zeros(nbins + 2, dtype=np.int64)  # hist, sum, sumsq
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_LEFTMOVER)
            pos, spd = sample_arrays(params.p, k, lattice, st)
            _kernels.resolve_arrays(pos, spd, lattice, bufs)
            c = int(np.count_nonzero(bufs["fate"][:k] == FATE_LEFT))
            out[min(c, nbins - 1)] += 1
            out[nbins] += c
            out[nbins + 1] += c * c
        return out

    acc = parallel_sum(trials, workers, chunk)
    hist = tuple(int(h) for h in acc[:nbins])
    total = int(acc[nbins])
    total_sq = int(acc[nbins + 1])
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    mean_se = math.sqrt(var / trials)

    q = theory_q(params.p)
    if q >= 1.0:
        return LeftmoverDistribution(hist, trials, mean, math.inf, mean_se,
                                     math.nan, None, None, None, None,
                                     master_seed)
    mean_theory = q / (1.0 - q)
    mean_z = (mean - mean_theory) / mean_se if mean_se > 0 else 0.0
    probs = [(1.0 - q) * q ** j for j in range(nbins - 1)]
    probs.append(q ** (nbins - 1))
    expected = np.asarray(probs) * trials
    observed = np.asarray(hist, dtype=float)
    mask = expected > 0
    chi2 = float(((observed[mask] - expected[mask]) ** 2 / expected[mask]).sum())
    df = int(mask.sum()) - 1
    pvalue = float(_sstats.chi2.sf(chi2, df))
    return LeftmoverDistribution(hist, trials, mean, mean_theory, mean_se,
                                 mean_z, chi2, df, pvalue, pvalue < 0.01,
                                 master_seed)


def check_identities(p: float, k: int, trials: int, master_seed: int,
                     workers: int = 1) -> IdentityReport:
    """Plug Monte Carlo estimates into the window identity system.

    hit_recursion:     q = (1-p)/2 (1+q) + r (1-q) + p q^3
    reversal_halving:  r = p q^2 / 2
    dichotomy_residual:(1-q)(1 - p(1+q)^2) = 0
    q and r come from independent substreams, so the z-scores use
    first-order independent error propagation; pass means |z| <= 3.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("identity checks require p in (0, 1)")
    params = ModelParams(p, Mode.CONTINUOUS, Side.HALF_LINE)
    qe = estimate_qk(params, k, trials, master_seed, workers)
    re = estimate_r(params, k, trials, master_seed, workers)
    q, sq = qe.value, qe.stderr
    r, sr = re.value, re.stderr
    pbar = (1.0 - p) / 2.0

    checks = []

    lhs = q
    rhs = pbar * (1.0 + q) + r * (1.0 - q) + p * q ** 3
    dq = 1.0 - pbar + r - 3.0 * p * q ** 2
    dr = -(1.0 - q)
    se = math.hypot(dq * sq, dr * sr)
    z = (lhs - rhs) / se if se > 0 else 0.0
    checks.append(IdentityCheck("hit_recursion", lhs, rhs, se, z, abs(z) <= 3))

    lhs = r
    rhs = 0.5 * p * q * q
    se = math.hypot(sr, p * q * sq)
    z = (lhs - rhs) / se if se > 0 else 0.0
    checks.append(IdentityCheck("reversal_halving", lhs, rhs, se, z, abs(z) <= 3))

    resid = (1.0 - q) * (1.0 - p * (1.0 + q) ** 2)
    dres = -(1.0 - p * (1.0 + q) ** 2) - 2.0 * p * (1.0 - q) * (1.0 + q)
    se = abs(dres) * sq
    z = resid / se if se > 0 else 0.0
    checks.append(IdentityCheck("dichotomy_residual", resid, 0.0, se, z,
                                abs(z) <= 3))

    return IdentityReport(p, k, trials, master_seed, tuple(checks),
                          re.n_censored / trials)
