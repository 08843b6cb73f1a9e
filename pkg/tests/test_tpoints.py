import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from epenc.errors import NoRoot
from epenc.model import HERMITIAN, ReducedPulseParams, delta_sq
from epenc.tpoints import (Layout, asymptotic_guess, asymptotic_guess_expansion, axis_root_count,
                           classify_layout, enumerate_tps, find_central, newton, separator_alpha,
                           separator_radius, xi_coal)

TWO_SQRT_E = 2 * math.sqrt(math.e)


def test_classify_examples():
    assert classify_layout(ReducedPulseParams(1.0, 0.0)).kind is Layout.COALESCENT
    assert classify_layout(ReducedPulseParams(1.0, 0.0)).R == pytest.approx(1.0)
    assert separator_radius(HERMITIAN, TWO_SQRT_E) == pytest.approx(1.0, abs=1e-12)
    assert classify_layout(ReducedPulseParams(5.0, 2.0)).kind is Layout.EVEN
    assert classify_layout(ReducedPulseParams(2.0, 3.0)).kind is Layout.ODD


def test_separator_limits():
    assert separator_alpha(1.0) == 0.0
    assert separator_alpha(1 + 1e-8) < 1e-3
    assert separator_alpha(1e4) == pytest.approx(TWO_SQRT_E, abs=1e-3)
    assert separator_alpha(2.658) == pytest.approx(2.5, abs=0.02)


def test_separator_rejects_weak_fields():
    with pytest.raises(NoRoot):
        separator_alpha(0.9)


def test_separator_monotonic():
    xs = np.geomspace(1.001, 1e3, 40)
    vals = [separator_alpha(x) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@given(x=st.floats(1.01, 500))
def test_separator_on_r_equals_one(x):
    assert separator_radius(x, separator_alpha(x)) == pytest.approx(1.0, abs=1e-6)


def test_odd_central_pair():
    p = ReducedPulseParams(2.0, 3.0)
    low, upp = find_central(p)
    assert low.role == "central_odd_lower" and upp.role == "central_odd_upper"
    assert low.s.real == 0 and upp.s.real == 0
    assert 0 < low.s.imag < xi_coal(p) < upp.s.imag
    for t in (low, upp):
        assert t.residual < 1e-10


def test_coalescent_at_origin():
    (tp,) = find_central(ReducedPulseParams(1.0, 0.0))
    assert tp.role == "coalescent"
    assert abs(tp.s) < 1e-6


def test_even_central_pair(even_point):
    s0, s0_bar = find_central(even_point)
    assert s0.s.real > 0 and s0.s.imag > 0
    assert abs(s0_bar.s + s0.s.conjugate()) < 1e-10
    assert max(s0.residual, s0_bar.residual) < 1e-10


def test_asymptotic_guess_direction():
    p = ReducedPulseParams(5.0, 2.0)
    s, _ = asymptotic_guess(p, 10 ** 6)
    assert np.angle(s) == pytest.approx(math.pi / 4, abs=1e-2)


@given(k=st.integers(1, 50), ab=st.floats(0.1, 5))
def test_asymptotic_guess_mirror(k, ab):
    s, s_bar = asymptotic_guess(ReducedPulseParams(3.0, ab), k)
    assert s_bar == -s.conjugate()


@pytest.mark.parametrize("ab", [2.0, 3.0])
@pytest.mark.parametrize("k", [2, 3, 6])
def test_asymptotic_guess_accuracy(ab, k):
    p = ReducedPulseParams(5.0, ab)
    guess, _ = asymptotic_guess(p, k)
    refined = newton(p, guess)
    assert abs(guess / refined - 1) < 0.02
    assert abs(asymptotic_guess_expansion(p, k) / refined - 1) < 0.02


def test_enumerate_central_only(even_point):
    cat = enumerate_tps(even_point, 0)
    assert [t.role for t in cat] == ["central_even_right", "central_even_left"]


def test_enumerate_odd_with_pairs(odd_point):
    cat = enumerate_tps(odd_point, 4)
    assert len(cat) == 10
    s = np.array([t.s for t in cat])
    dist = np.abs(s[:, None] - s[None, :]) + np.eye(len(s))
    assert dist.min() > 1e-6
    assert np.all(s.imag > 0)
    assert [t.k for t in cat] == sorted(t.k for t in cat)


@pytest.mark.parametrize("x, ab", [(5.0, 2.0), (2.0, 3.0), (20.0, 0.7)])
def test_catalog_invariants(x, ab):
    p = ReducedPulseParams(x, ab)
    cat = enumerate_tps(p, 6)
    for t in cat:
        assert abs(complex(delta_sq(p, t.s))) < 1e-10
        assert t.z == (-1) ** t.k
    by_k = {}
    for t in cat:
        by_k.setdefault(t.k, []).append(t)
    for k, pair in by_k.items():
        if k == 0 and pair[0].role.startswith("central_odd"):
            continue
        right, left = pair
        assert abs(left.s + right.s.conjugate()) < 1e-10


def test_layout_matches_root_count_grid():
    disagreements = 0
    for x in np.linspace(1.02, 12, 50):
        for ab in np.linspace(0.02, 4.5, 50):
            p = ReducedPulseParams(x, ab)
            tag = classify_layout(p)
            if abs(tag.R - 1) < 1e-3:
                continue
            roots = axis_root_count(p)
            if (tag.kind is Layout.ODD) != (roots == 2):
                disagreements += 1
    assert disagreements == 0
