"""Fast invariant battery behind `ballistic selftest` (exit code 2 on failure).

Covers engine/oracle equivalence, conservation and ordering, monotone hit
windows, light-cone finality soundness, exact polynomial anchors, identity
z-checks at moderate size, and determinism across repeats and worker counts.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import _kernels
from ._kernels import FATE_ANNIHILATED
from .engine import finality, resolve, resolve_oracle, restrict
from .estimators import check_identities, estimate_qk
from .exactpoly import RationalPoly, expected_Nk_poly, pc_upper_bound_scan
from .model import Configuration, Mode, ModelParams, Side, derive_stream, \
    sample_halfline


def _random_config(rng, n, lattice) -> Configuration:
    if lattice:
        pos = np.cumsum(rng.integers(1, 4, n)).astype(np.int64)
        return Configuration(Mode.LATTICE, Side.HALF_LINE, pos,
                             rng.integers(-1, 2, n).astype(np.int8))
    pos = np.cumsum(rng.exponential(1.0, n))
    return Configuration(Mode.CONTINUOUS, Side.HALF_LINE, pos,
                         rng.integers(-1, 2, n).astype(np.int8))


def _same_resolution(r1, r2) -> bool:
    return (np.array_equal(r1.fates, r2.fates)
            and np.array_equal(r1.event_of, r2.event_of)
            and np.array_equal(r1.ev_times, r2.ev_times)
            and np.array_equal(r1.ev_positions, r2.ev_positions)
            and r1.ev_participants == r2.ev_participants)


def check_engine_equivalence(seed: int, n_small=2000, n_big=60) -> bool:
    rng = np.random.default_rng(seed)
    for i in range(n_small):
        cfg = _random_config(rng, int(rng.integers(1, 13)), i % 2 == 0)
        if not _same_resolution(resolve(cfg), resolve_oracle(cfg)):
            return False
    for i in range(n_big):
        cfg = _random_config(rng, 300, i % 2 == 0)
        if not _same_resolution(resolve(cfg), resolve_oracle(cfg)):
            return False
    return True


def check_conservation(seed: int, trials=400) -> bool:
    rng = np.random.default_rng(seed)
    for i in range(trials):
        lattice = i % 2 == 0
        cfg = _random_config(rng, int(rng.integers(1, 200)), lattice)
        res = resolve(cfg)
        n_ann = int(np.count_nonzero(res.fates == FATE_ANNIHILATED))
        pairs = sum(1 for p in res.ev_participants if len(p) == 2)
        triples = sum(1 for p in res.ev_participants if len(p) == 3)
        if n_ann != 2 * pairs + 3 * triples:
            return False
        if not lattice and (triples or n_ann % 2):
            return False
        # survivors keep the left < still < right spatial ordering
        f = res.fates
        li = np.flatnonzero(f == 1)
        si = np.flatnonzero(f == 2)
        ri = np.flatnonzero(f == 3)
        if li.size and si.size and li.max() > si.min():
            return False
        if si.size and ri.size and si.max() > ri.min():
            return False
        if li.size and ri.size and li.max() > ri.min():
            return False
    return True


def check_monotone_hit(seed: int, trials=300, k=400) -> bool:
    params = ModelParams(0.35)
    for t in range(trials):
        cfg = sample_halfline(params, k, derive_stream(seed, t))
        prev = False
        for kk in range(1, k + 1, 7):
            hit = resolve(restrict(cfg, 1, kk)).origin_hit is not None
            if prev and not hit:
                return False
            prev = hit
    return True


def check_lightcone(seed: int, trials=300, k=60) -> bool:
    params = ModelParams(0.45)
    for t in range(trials):
        cfg = sample_halfline(params, 3 * k, derive_stream(seed, t))
        window = restrict(cfg, 1, k)
        res = resolve(window)
        fin = finality(res, float(cfg.positions[k - 1]))
        full = resolve(cfg)
        for i in np.flatnonzero(fin):
            if res.fates[i] != full.fates[i]:
                return False
            if res.fates[i] == FATE_ANNIHILATED:
                e1 = res.event_of[i]
                e2 = full.event_of[i]
                if (res.ev_times[e1] != full.ev_times[e2]
                        or res.ev_positions[e1] != full.ev_positions[e2]):
                    return False
    return True


def check_exact_anchors() -> bool:
    if expected_Nk_poly(1) != RationalPoly((Fraction(-1, 2), Fraction(3, 2))):
        return False
    if expected_Nk_poly(2)(Fraction(1, 3)) != 0:
        return False
    if expected_Nk_poly(3)(Fraction(1, 3)) != Fraction(1, 54):
        return False
    rows = pc_upper_bound_scan(3)
    if rows[0][1] != Fraction(1, 3) or rows[1][1] != Fraction(1, 3):
        return False
    lo, hi = rows[2][1], rows[2][2]
    return lo <= Fraction(32804, 100000) and hi >= Fraction(32802, 100000) \
        and hi - lo <= Fraction(1, 10 ** 5)


def check_identity_battery(seed: int) -> bool:
    rep = check_identities(0.49, 2000, 2000, seed)
    return rep.all_passed and rep.censored_fraction < 0.01


def check_determinism(seed: int) -> bool:
    params = ModelParams(0.49)
    a = estimate_qk(params, 500, 800, seed, workers=1)
    b = estimate_qk(params, 500, 800, seed, workers=1)
    c = estimate_qk(params, 500, 800, seed, workers=4)
    return a.value == b.value == c.value


def check_degenerate_ties(seed: int, trials=2000, k=300) -> bool:
    params = ModelParams(0.5)
    bufs = _kernels.make_buffers(k, False)
    from .estimators import sample_arrays
    for t in range(trials):
        st = derive_stream(seed, t).substream(99)
        pos, spd = sample_arrays(params.p, k, False, st)
        _, _, ties = _kernels.resolve_arrays(pos, spd, False, bufs)
        if ties:
            return False
    return True


def run(master_seed: int = 20260808, verbose: bool = True) -> bool:
    _kernels.warmup()
    checks = [
        ("engine_equivalence", lambda: check_engine_equivalence(master_seed)),
        ("conservation_and_order", lambda: check_conservation(master_seed + 1)),
        ("monotone_hit_window", lambda: check_monotone_hit(master_seed + 2)),
        ("lightcone_finality", lambda: check_lightcone(master_seed + 3)),
        ("exact_anchors", check_exact_anchors),
        ("identity_battery", lambda: check_identity_battery(master_seed + 4)),
        ("determinism", lambda: check_determinism(master_seed + 5)),
        ("degenerate_ties", lambda: check_degenerate_ties(master_seed + 6)),
    ]
    ok = True
    for name, fn in checks:
        passed = bool(fn())
        ok = ok and passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'} {name}")
    return ok
