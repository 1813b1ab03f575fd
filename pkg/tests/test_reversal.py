import math

import numpy as np
import pytest
from scipy import stats as sstats

from ballistic.estimators import theory_q
from ballistic.model import Mode, ModelParams, Side, derive_stream, \
    sample_halfline
from ballistic.reversal import (check_reversal_bijection, event_flags, rev,
                                verify_halving)
from conftest import config_from

HL = lambda p, mode=Mode.CONTINUOUS: ModelParams(p, mode, Side.HALF_LINE)


def test_flags_single_left():
    fl = event_flags(config_from([1.0], [-1]))
    assert fl.origin_hit and fl.y0 == 1.0
    assert fl.y1 is None
    assert fl.first_right_hits_still is False
    assert fl.first_still_hit_from_right is False
    assert not fl.censored


def test_flags_right_then_still_then_left():
    # the first particle reaches the still at t=1, the left arrives at t=3
    fl = event_flags(config_from([1.0, 2.0, 5.0], [1, 0, -1]))
    assert fl.first_right_hits_still is True
    assert fl.y1 == 2.0
    assert fl.origin_hit and fl.y0 == 5.0


def test_flags_still_hit_from_right():
    fl = event_flags(config_from([1.0, 3.0, 4.0], [0, -1, -1]))
    assert fl.first_still_hit_from_right is True
    assert fl.y1 == 3.0
    assert fl.origin_hit and fl.y0 == 4.0
    assert fl.gap_comparison == (fl.y1 - 1.0 < fl.y0 - fl.y1)


def test_flags_surviving_still_left_open():
    fl = event_flags(config_from([1.0, 2.0], [0, 1]))
    assert fl.first_still_hit_from_right is None
    assert fl.first_right_hits_still is False
    assert not fl.censored


def test_rev_requires_annihilated_first():
    with pytest.raises(ValueError):
        rev(config_from([1.0], [-1]))


def test_rev_spec_example():
    cfg = config_from([1.0, 3.0, 10.0], [1, 0, -1])
    out = rev(cfg)
    assert out.positions.tolist() == [1.0, 3.0, 10.0]
    assert out.speeds.tolist() == [0, -1, -1]
    fl = event_flags(out)
    assert fl.first_still_hit_from_right is True


def test_rev_involution_exact_endpoints():
    params = HL(0.5)
    done = 0
    for t in range(300):
        cfg = sample_halfline(params, 60, derive_stream(51, t))
        fl = event_flags(cfg)
        if fl.y1 is None or fl.censored:
            continue
        image = rev(cfg, fl)
        assert (np.diff(image.positions) > 0).all()
        ifl = event_flags(image)
        if ifl.y1 != fl.y1:
            continue  # outside the exchanged events rev need not be stable
        back = rev(image, ifl)
        assert np.allclose(back.positions, cfg.positions, rtol=0, atol=1e-9)
        assert np.array_equal(back.speeds, cfg.speeds)
        done += 1
    assert done > 50


def test_rev_preserves_outside_and_reflects_inside():
    cfg = config_from([1.0, 2.5, 4.0, 9.0, 11.0], [1, -1, 0, -1, 1])
    fl = event_flags(cfg)
    assert fl.y1 == 2.5
    out = rev(cfg, fl)
    assert np.array_equal(out.positions[2:], cfg.positions[2:])
    assert np.array_equal(out.speeds[2:], cfg.speeds[2:])
    inside_original = sorted((1.0 + 2.5) - x for x in (1.0, 2.5))
    assert out.positions[:2].tolist() == inside_original


def test_rev_gap_multisets():
    # gaps outside the reversed interval are untouched; inside they reverse
    params = HL(0.5)
    done = 0
    for t in range(200):
        cfg = sample_halfline(params, 40, derive_stream(67, t))
        fl = event_flags(cfg)
        if fl.y1 is None or fl.censored:
            continue
        out = rev(cfg, fl)
        m = int(np.flatnonzero(cfg.positions == fl.y1)[0])
        inside_gaps = np.diff(cfg.positions[:m + 1])
        out_inside_gaps = np.diff(out.positions[:m + 1])
        assert np.allclose(out_inside_gaps, inside_gaps[::-1], rtol=0,
                           atol=1e-12)
        assert np.array_equal(out.positions[m + 1:], cfg.positions[m + 1:])
        done += 1
    assert done > 30


def test_bijection_battery():
    rep = check_reversal_bijection(HL(0.49), 400, 1500, 53)
    assert rep.n_forward_premise > 30
    assert rep.pathwise_ok
    assert rep.max_roundtrip_error < 1e-9
    assert rep.freq_gap <= 3 * rep.freq_gap_sigma
    assert rep.n_censored / rep.n_trials < 0.01


def test_halving_continuous():
    hv = verify_halving(HL(0.49), 1500, 5000, 57)
    assert hv.n_censored / hv.n_trials < 0.01
    assert abs(hv.halving_z) <= 3
    assert hv.n_distance_ties == 0
    assert abs(hv.event_prob_z) <= 3
    assert hv.event_prob_target == pytest.approx(
        0.49 * theory_q(0.49) ** 2)
    ks = sstats.ks_2samp(hv.killer_distances, hv.onward_distances)
    assert ks.pvalue > 0.01


def test_halving_lattice_below_half():
    hv = verify_halving(HL(0.5, Mode.LATTICE), 1500, 5000, 59)
    se = math.sqrt(0.25 / hv.n_conditioning)
    assert hv.halving_freq < 0.5 - 3 * se
    assert hv.n_distance_ties > 0
