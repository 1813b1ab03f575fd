import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballistic._kernels import FATE_ANNIHILATED, FATE_LEFT, FATE_RIGHT, FATE_STILL
from ballistic.engine import (count_survivors, finality, resolve,
                              resolve_oracle, restrict)
from ballistic.model import Configuration, Mode, ModelParams, Side, \
    derive_stream, sample_halfline
from conftest import config_from, random_config


def same_resolution(r1, r2, time_tol=0.0):
    if not np.array_equal(r1.fates, r2.fates):
        return False
    if not np.array_equal(r1.event_of, r2.event_of):
        return False
    if r1.ev_participants != r2.ev_participants:
        return False
    if time_tol:
        return (np.allclose(r1.ev_times, r2.ev_times, rtol=0, atol=time_tol)
                and np.allclose(r1.ev_positions, r2.ev_positions, rtol=0,
                                atol=time_tol))
    return (np.array_equal(r1.ev_times, r2.ev_times)
            and np.array_equal(r1.ev_positions, r2.ev_positions))


# --- stated behaviour -------------------------------------------------------

def test_single_left_mover():
    res = resolve(config_from([1.0], [-1]))
    assert res.origin_hit == (1, 1.0)
    assert res.fates[0] == FATE_LEFT


def test_preemption_case():
    # the left mover reaches the still particle long before the right mover
    res = resolve(config_from([0.0, 10.0, 11.0], [1, 0, -1]))
    assert len(res.events) == 1
    ev = res.events[0]
    assert (ev.time, ev.position, ev.participants) == (1.0, 10.0, (2, 3))
    assert res.fates.tolist() == [FATE_RIGHT, 0, 0]
    assert res.origin_hit is None


def test_lattice_symmetric_triple():
    res = resolve(config_from([1, 2, 3], [1, 0, -1], mode=Mode.LATTICE))
    assert len(res.events) == 1
    ev = res.events[0]
    assert (ev.time, ev.position, ev.participants) == (1.0, 2.0, (1, 2, 3))
    assert (res.fates == FATE_ANNIHILATED).all()
    assert res.origin_hit is None


def test_right_beats_left():
    res = resolve(config_from([1.0, 3.0, 7.0], [1, 0, -1]))
    ev = res.events[0]
    assert (ev.time, ev.position, ev.participants) == (2.0, 3.0, (1, 2))
    assert res.origin_hit == (3, 7.0)


def test_empty_config():
    cfg = Configuration(Mode.CONTINUOUS, Side.HALF_LINE,
                        np.empty(0), np.empty(0, np.int8))
    res = resolve(cfg)
    assert res.fates.size == 0 and res.events == []
    assert same_resolution(res, resolve_oracle(cfg))


def test_invalid_positions_rejected():
    cfg = config_from([1.0, 2.0], [0, 0])
    cfg.positions = np.asarray([2.0, 1.0])
    with pytest.raises(ValueError):
        resolve(cfg)
    with pytest.raises(ValueError):
        resolve_oracle(cfg)


def test_count_survivors_cases():
    assert count_survivors(resolve(config_from([1, 2, 3, 4, 5], [0] * 5,
                                               mode=Mode.LATTICE))) == (0, 5, 0)
    assert count_survivors(resolve(config_from([1.0, 2.0], [1, -1]))) == (0, 0, 0)
    assert count_survivors(resolve(config_from([1.0, 2.0], [-1, -1]))) == (2, 0, 0)


def test_restrict():
    cfg = sample_halfline(ModelParams(0.5), 20, derive_stream(1, 0))
    assert restrict(cfg, 1, 20).size == 20
    assert np.array_equal(restrict(cfg, 1, 20).positions, cfg.positions)
    single = restrict(cfg, 2, 2)
    assert single.size == 1 and single.positions[0] == cfg.positions[1]
    with pytest.raises(ValueError):
        restrict(cfg, 0, 5)
    with pytest.raises(ValueError):
        restrict(cfg, 3, 21)


def test_finality_rules():
    cfg = sample_halfline(ModelParams(0.5), 10, derive_stream(1, 1))
    res = resolve(cfg)
    # spec'd examples reduce to the inequality on (t, y) and the edge
    fake = resolve(config_from([87.0, 90.0], [1, 0]))
    f100 = finality(fake, 100.0)            # event at (3, 90): 93 < 100
    assert f100[0] and f100[1]
    fake2 = resolve(config_from([75.0, 90.0], [1, 0]))
    f100b = finality(fake2, 100.0)          # event at (15, 90): 105 >= 100
    assert not f100b[0] and not f100b[1]
    still = resolve(config_from([5.0], [0]))
    assert not finality(still, 100.0)[0]    # still survivor always provisional
    lres = resolve(config_from([5.0], [-1]))
    assert finality(lres, 100.0)[0]
    assert not finality(lres, 5.0)[0]       # at the edge: provisional


# --- equivalence and invariants ---------------------------------------------

def test_engine_oracle_equivalence_seeded():
    rng = np.random.default_rng(2024)
    for i in range(3000):
        cfg = random_config(rng, int(rng.integers(1, 13)), lattice=i % 2 == 0)
        assert same_resolution(resolve(cfg), resolve_oracle(cfg))


def test_engine_oracle_equivalence_medium():
    rng = np.random.default_rng(55)
    for i in range(40):
        cfg = random_config(rng, 500, lattice=i % 2 == 0)
        r1, r2 = resolve(cfg), resolve_oracle(cfg)
        assert np.array_equal(r1.fates, r2.fates)
        assert r1.ev_participants == r2.ev_participants
        assert np.allclose(r1.ev_times, r2.ev_times, rtol=0, atol=1e-9)


@given(st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=10),
       st.integers(min_value=0, max_value=10 ** 6))
def test_engine_oracle_equivalence_hypothesis(speeds, seed):
    rng = np.random.default_rng(seed)
    pos = np.cumsum(rng.exponential(1.0, len(speeds)))
    cfg = config_from(pos, speeds)
    assert same_resolution(resolve(cfg), resolve_oracle(cfg))


@given(st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=10),
       st.integers(min_value=0, max_value=10 ** 6))
def test_engine_oracle_equivalence_lattice_hypothesis(speeds, seed):
    rng = np.random.default_rng(seed)
    pos = np.cumsum(rng.integers(1, 4, len(speeds))).astype(np.int64)
    cfg = config_from(pos, speeds, mode=Mode.LATTICE)
    assert same_resolution(resolve(cfg), resolve_oracle(cfg))


def test_conservation():
    rng = np.random.default_rng(8)
    for i in range(300):
        lattice = i % 2 == 0
        cfg = random_config(rng, int(rng.integers(1, 120)), lattice)
        res = resolve(cfg)
        n_ann = int(np.count_nonzero(res.fates == FATE_ANNIHILATED))
        pairs = sum(1 for p in res.ev_participants if len(p) == 2)
        triples = sum(1 for p in res.ev_participants if len(p) == 3)
        assert n_ann == 2 * pairs + 3 * triples
        if not lattice:
            assert triples == 0 and n_ann % 2 == 0
            assert res.degenerate_tie_count == 0


def test_survivor_ordering():
    rng = np.random.default_rng(9)
    for i in range(300):
        cfg = random_config(rng, 100, lattice=i % 2 == 0)
        f = resolve(cfg).fates
        li, si, ri = (np.flatnonzero(f == c) for c in
                      (FATE_LEFT, FATE_STILL, FATE_RIGHT))
        if li.size and si.size:
            assert li.max() < si.min()
        if si.size and ri.size:
            assert si.max() < ri.min()
        if li.size and ri.size:
            assert li.max() < ri.min()


def test_monotone_origin_event():
    params = ModelParams(0.3)
    for t in range(150):
        cfg = sample_halfline(params, 300, derive_stream(31, t))
        prev = False
        for k in range(1, 301, 5):
            hit = resolve(restrict(cfg, 1, k)).origin_hit is not None
            assert not (prev and not hit), "hit window event must be increasing"
            prev = hit


def test_lightcone_soundness():
    params = ModelParams(0.45)
    for t in range(200):
        cfg = sample_halfline(params, 150, derive_stream(32, t))
        window = restrict(cfg, 1, 50)
        res = resolve(window)
        fin = finality(res, float(cfg.positions[49]))
        full = resolve(cfg)
        for i in np.flatnonzero(fin):
            assert res.fates[i] == full.fates[i]
            if res.fates[i] == FATE_ANNIHILATED:
                e1, e2 = res.event_of[i], full.event_of[i]
                assert res.ev_times[e1] == full.ev_times[e2]
                assert res.ev_positions[e1] == full.ev_positions[e2]
                assert res.ev_participants[e1] == full.ev_participants[e2]


def test_triple_geometry_lattice():
    rng = np.random.default_rng(12)
    found = 0
    for _ in range(400):
        cfg = random_config(rng, 60, lattice=True)
        res = resolve(cfg)
        for ev, parts in zip(res.events, res.ev_participants):
            if len(parts) == 3:
                a, b, c = (cfg.positions[i - 1] for i in parts)
                sa, sb, sc = (cfg.speeds[i - 1] for i in parts)
                assert (sa, sb, sc) == (1, 0, -1)
                assert b - a == c - b  # movers equidistant from the center
                found += 1
    assert found > 0


def test_origin_hit_is_leftmost_survivor():
    rng = np.random.default_rng(13)
    for _ in range(200):
        cfg = random_config(rng, 80)
        res = resolve(cfg)
        li = np.flatnonzero(res.fates == FATE_LEFT)
        if li.size:
            assert res.origin_hit == (int(li[0]) + 1,
                                      float(cfg.positions[li[0]]))
        else:
            assert res.origin_hit is None


def test_event_times_sorted():
    rng = np.random.default_rng(14)
    for i in range(100):
        cfg = random_config(rng, 200, lattice=i % 2 == 0)
        res = resolve(cfg)
        keys = list(zip(res.ev_times, res.ev_positions))
        assert keys == sorted(keys)


def test_resolution_json_schema():
    res = resolve(config_from([1, 2, 3], [1, 0, -1], mode=Mode.LATTICE))
    doc = json.loads(res.to_json())
    assert doc["schema_version"] == 1
    assert doc["fates"] == ["annihilated"] * 3
    assert doc["events"] == [{"time": 1.0, "position": 2.0,
                              "participants": [1, 2, 3]}]
    assert doc["origin_hit"] is None
    assert doc["degenerate_tie_count"] == 0


def test_restrict_matches_explorer_N():
    from ballistic.explorer import compute_N
    cfg = sample_halfline(ModelParams(0.5), 30, derive_stream(3, 3))
    n_left, n_still, _ = count_survivors(resolve(restrict(cfg, 1, 11)))
    assert compute_N(cfg, 1, 11) == n_still - n_left
