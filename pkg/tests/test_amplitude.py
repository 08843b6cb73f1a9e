import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epenc.amplitude import (FIRST_ORDER_CORRECTION, ODD_PREFACTOR, PAIR_PREFACTOR, asymptotic_sum,
                             large_area_margin, norm_factor, odd_layout_contribution,
                             p1_from_amplitude, single_tp_contribution, survival_probability,
                             tp_pair_contribution, upper_tp_contribution)
from epenc.errors import EvenLayoutInput, OddLayoutInput
from epenc.model import ReducedPulseParams
from epenc.residua import ResiduumData, gamma_phi_at
from epenc.tpoints import TransitionPoint, find_central, separator_alpha

from conftest import FOUR_PI, SIX_PI


def _lead(p):
    cen = find_central(p)
    return cen, gamma_phi_at(p, cen[0], cen)


def _fake_residuum(p, integral, role="central_even_right", s=0.5 + 0.5j, k=0):
    tp = TransitionPoint(k=k, s=s, role=role, z=(-1) ** k, residual=0.0)
    return ResiduumData(tp=tp, integral=complex(integral), x=p.x)


# --- single and pair contributions ----------------------------------------------------

def test_branchcut_removes_one_third(even_point):
    _, res = _lead(even_point)
    for n in (0, 1, 2):
        c = single_tp_contribution(even_point, res, n=n)
        assert abs(c.total) == pytest.approx(abs(c.residuum) * (2 / 3 if n % 2 == 0 else 4 / 3))
    c0 = single_tp_contribution(even_point, res, n=0)
    assert abs(c0.residuum) == pytest.approx(
        (math.pi / 2) * math.exp(-even_point.kappa * res.integral.imag))


def test_pair_matches_residua(even_point):
    _, res = _lead(even_point)
    c = tp_pair_contribution(even_point, res.tp, res)
    kappa = FOUR_PI / math.sqrt(2 * math.pi)
    expected = PAIR_PREFACTOR * math.exp(-kappa * res.gamma / 5) * abs(math.cos(kappa * res.phi / 5))
    assert abs(c.total) == pytest.approx(expected, rel=1e-12)
    # the pair is twice the real part of one member
    single = single_tp_contribution(even_point, res)
    assert c.total.real == pytest.approx(2 * single.total.real, rel=1e-12)


def test_pair_at_zero_phase():
    p = ReducedPulseParams(5.0, 2.0, FOUR_PI)
    res = _fake_residuum(p, 0.3j)
    c = tp_pair_contribution(p, res.tp, res)
    assert c.total.real == pytest.approx(-PAIR_PREFACTOR * math.exp(-p.kappa * 0.3))


def test_pair_rabi_node():
    p = ReducedPulseParams(5.0, 2.0, FOUR_PI)
    res = _fake_residuum(p, complex(math.pi / (2 * p.kappa), 0.3))
    assert abs(tp_pair_contribution(p, res.tp, res).total) < 1e-15


def test_pair_rejects_on_axis(odd_point):
    cen, res = _lead(odd_point)
    with pytest.raises(OddLayoutInput):
        tp_pair_contribution(odd_point, cen[0], res)


def test_odd_contribution():
    p = ReducedPulseParams(2.0, 3.0, SIX_PI)
    cen, res = _lead(p)
    c = odd_layout_contribution(p, res)
    expected = -(math.pi / 3) * math.exp(-p.kappa * res.gamma / 2.0)
    assert c.total.real == pytest.approx(expected, rel=1e-12)
    assert c.total.imag == 0
    assert upper_tp_contribution(p, cen[1]).total == 0
    up = gamma_phi_at(p, cen[1], cen)
    assert odd_layout_contribution(p, up).total == 0


def test_odd_degenerate_gamma():
    p = ReducedPulseParams(2.0, 3.0, SIX_PI)
    res = _fake_residuum(p, 0j, role="central_odd_lower", s=0.4j)
    assert odd_layout_contribution(p, res).total.real == pytest.approx(-math.pi / 3)


def test_odd_rejects_even(even_point):
    _, res = _lead(even_point)
    with pytest.raises(EvenLayoutInput):
        odd_layout_contribution(even_point, res)


# --- asymptotic sum -------------------------------------------------------------------

def test_asymptotic_sum_hermitian():
    assert asymptotic_sum(ReducedPulseParams(math.inf, 2.0, FOUR_PI), 6) == (0j, 0.0)


def test_asymptotic_sum_geometric():
    # weak damping so the terms stay above underflow
    p = ReducedPulseParams(5.0, 0.3, math.pi)
    partial = [asymptotic_sum(p, K)[0] for K in range(1, 7)]
    steps = np.abs(np.diff(partial))
    ratios = steps[1:] / steps[:-1]
    assert np.all(ratios < 0.6)
    assert np.ptp(ratios) < 0.1
    _, tail = asymptotic_sum(p, 3)
    assert abs(partial[-1] - partial[2]) <= tail


def test_asymptotic_sum_small_in_ddp_regime():
    p = ReducedPulseParams(5.0, 2.0, 10 * math.pi)
    res = survival_probability(p)
    v_asym, _ = asymptotic_sum(p, 6)
    assert abs(v_asym) < 1e-3 * abs(res.v_central)


def test_asymptotic_sum_needs_k():
    with pytest.raises(ValueError):
        asymptotic_sum(ReducedPulseParams(5.0, 2.0), 0)


# --- normalization and p1 -------------------------------------------------------------

def test_norm_factor_tends_to_one():
    fs = [norm_factor(ReducedPulseParams(x, 2.0, FOUR_PI)) for x in (10.0, 100.0, 1e4)]
    dist = [abs(f - 1) for f in fs]
    assert dist[0] > dist[1] > dist[2]
    assert dist[2] < 1e-3
    assert norm_factor(ReducedPulseParams(math.inf, 2.0, FOUR_PI)) == 1.0


@pytest.mark.parametrize("x, ab", [(5.0, 2.0), (2.0, 3.0), (3.0, 0.5), (20.0, 1.0)])
def test_p1_identity(x, ab):
    res = survival_probability(ReducedPulseParams(x, ab, FOUR_PI))
    assert p1_from_amplitude(res) == pytest.approx(res.p1, rel=1e-10)


def test_p1_even_formula(even_point):
    res = survival_probability(even_point)
    kappa = even_point.kappa
    expected = (4 * math.pi ** 2 / 9) * math.exp(-2 * kappa * res.gamma_bar_over_x) \
        * math.cos(kappa * res.phi_over_x) ** 2
    assert res.p1 == pytest.approx(expected, rel=1e-12)
    assert res.p1 <= PAIR_PREFACTOR ** 2 * math.exp(-2 * kappa * res.gamma_bar_over_x)
    assert res.p1 == pytest.approx(4.144377e-4, rel=1e-4)


def test_p1_odd_formula(odd_point):
    res = survival_probability(odd_point)
    expected = ODD_PREFACTOR ** 2 * math.exp(-2 * odd_point.kappa * res.gamma_bar_over_x)
    assert res.p1 == pytest.approx(expected, rel=1e-12)
    assert res.p1 == pytest.approx(0.0137994, rel=1e-4)


def test_p1_odd_degenerate_overshoots():
    # a vanishing gamma_bar leaves the bare prefactor pi^2/9 > 1
    assert ODD_PREFACTOR ** 2 == pytest.approx(1.0966, abs=1e-4)
    res = survival_probability(ReducedPulseParams(2.0, 3.0, 1e-9))
    assert res.p1 == pytest.approx(math.pi ** 2 / 9, rel=1e-6)
    assert "p1_exceeds_unity" in res.flags
    assert res.p1_reported == 1.0


def test_layout_dichotomy():
    x = 5.0
    sep = separator_alpha(x)
    odd = [survival_probability(ReducedPulseParams(x, ab, SIX_PI)).p1
           for ab in np.linspace(sep + 0.05, sep + 1.5, 12)]
    assert np.all(np.diff(odd) > 0) or np.all(np.diff(odd) < 0)
    even = [survival_probability(ReducedPulseParams(x, ab, SIX_PI)).p1
            for ab in np.linspace(0.2, sep - 0.05, 60)]
    # interior nodes: p1 touches zero between maxima
    d = np.diff(even)
    assert np.sum((d[:-1] < 0) & (d[1:] > 0)) >= 2


# --- flags and diagnostics ------------------------------------------------------------

def test_separator_flag_reports_both():
    x = 5.0
    p = ReducedPulseParams(x, separator_alpha(x) - 1e-4, FOUR_PI)
    res = survival_probability(p)
    assert "separator_proximity" in res.flags
    assert res.p1_alternate is not None
    far = survival_probability(ReducedPulseParams(x, 1.0, FOUR_PI))
    assert "separator_proximity" not in far.flags
    assert far.p1_alternate is None


def test_separator_prefactor_jump():
    x = 5.0
    sep = separator_alpha(x)
    below = survival_probability(ReducedPulseParams(x, sep - 1e-5, FOUR_PI))
    above = survival_probability(ReducedPulseParams(x, sep + 1e-5, FOUR_PI))
    assert below.p1 / above.p1 == pytest.approx(4.0, rel=1e-2)


def test_three_over_pi_optional(even_point):
    plain = survival_probability(even_point)
    corrected = survival_probability(even_point, first_order_correction=True)
    assert "three_over_pi_applied" not in plain.flags
    assert corrected.p1 == pytest.approx(plain.p1 * FIRST_ORDER_CORRECTION ** 2)


def test_asymptotic_flag(even_point):
    res = survival_probability(even_point, include_asymptotic=True)
    assert "asymptotic_included" in res.flags
    assert res.v_asymptotic != 0
    assert p1_from_amplitude(res) == pytest.approx(res.p1, rel=1e-12)


@given(st.floats(1.0, 100.0))
def test_margin_linear_in_theta(scale):
    base = ReducedPulseParams(5.0, 2.0, FOUR_PI)
    scaled = ReducedPulseParams(5.0, 2.0, FOUR_PI * scale)
    tp = find_central(base)[0]
    assert large_area_margin(scaled, tp) == pytest.approx(scale * large_area_margin(base, tp))


def test_margin_vanishes_at_coalescence():
    x = 5.0
    sep = separator_alpha(x)
    margins = []
    for gap in (1e-2, 1e-3, 1e-4, 1e-5):
        p = ReducedPulseParams(x, sep - gap, FOUR_PI)
        margins.append(large_area_margin(p, find_central(p)[0]))
    # beta^(1) closes like the fourth root of the distance to the separator
    assert np.diff(np.log10(margins)) == pytest.approx([-0.25] * 3, abs=0.01)


def test_margin_recorded(even_point):
    res = survival_probability(even_point)
    assert res.margin == res.contributions[0].regime_margin
    assert res.margin > 0


def test_json_roundtrip(even_point):
    res = survival_probability(even_point)
    data = json.loads(res.to_json())
    for key in ("params", "layout", "R", "gamma_bar", "phi", "p1", "margin", "contributions"):
        assert key in data
    assert data["layout"] == "even"
    assert data["p1"] == res.p1
    herm = json.loads(survival_probability(ReducedPulseParams(math.inf, 2.0, FOUR_PI)).to_json())
    assert herm["params"]["x"] == "inf"
