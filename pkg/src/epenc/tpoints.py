"""Transition points: zeros of delta^2 in the upper half of the complex s-plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergenceFailure, NoRoot, SeparatorProximity
from .model import ReducedPulseParams, coupling_pole_sign, delta_sq, delta_sq_prime

SQRT_E = math.sqrt(math.e)
COALESCENT_TOL = 1e-6
PROXIMITY_TOL = 1e-3
RESIDUAL_TOL = 1e-10


class Layout(str, Enum):
    EVEN = "even"
    ODD = "odd"
    COALESCENT = "coalescent"


@dataclass(frozen=True)
class LayoutTag:
    kind: Layout
    R: float

    @property
    def near_separator(self) -> bool:
        return abs(self.R - 1.0) < PROXIMITY_TOL


@dataclass(frozen=True)
class TransitionPoint:
    k: int
    s: complex
    role: str
    z: int
    residual: float

    @property
    def side(self) -> str:
        return {
            "central_even_right": "right", "asymptotic_right": "right",
            "central_even_left": "left", "asymptotic_left": "left",
            "central_odd_lower": "lower", "central_odd_upper": "upper",
            "coalescent": "coalescent",
        }[self.role]

    @property
    def is_right(self) -> bool:
        return self.role in ("central_even_right", "asymptotic_right")


# --- natural coordinates and layout -----------------------------------------------

def separator_radius(x: float, alpha_bar: float) -> float:
    """R of the natural coordinates; R = 1 on the separator."""
    X = 0.0 if math.isinf(x) else 1.0 / x
    Y = alpha_bar / (2 * SQRT_E)
    if Y == 0:
        return X
    q = X / Y
    eta = 2 * SQRT_E / (math.sqrt(q * q + 4 * math.e) + q)  # rationalized: no cancellation at large q
    return math.exp(-eta * eta / 2) * (Y * SQRT_E * eta + X)


def classify_layout(params: ReducedPulseParams) -> LayoutTag:
    R = separator_radius(params.x, params.alpha_bar)
    if abs(R - 1.0) < COALESCENT_TOL:
        kind = Layout.COALESCENT
    elif R < 1.0:
        kind = Layout.EVEN
    else:
        kind = Layout.ODD
    return LayoutTag(kind=kind, R=R)


def _axis_fn(params: ReducedPulseParams):
    """Real on-axis function for s = i xi: exp(xi^2) - (alpha_bar xi/2 + 1/x)^2."""
    ab, ix = params.alpha_bar, params.inv_x
    return lambda xi: math.exp(xi * xi) - (ab * xi / 2 + ix) ** 2


def xi_coal(params: ReducedPulseParams) -> float:
    ax = params.alpha_bar * params.x
    if ax == 0:
        return 0.0
    if math.isinf(ax):
        return 1.0
    u = 1.0 / ax
    return math.sqrt(u * u + 1) - u


def _axis_minimum(params: ReducedPulseParams) -> tuple[float, float]:
    h = _axis_fn(params)
    hi = max(3.0, params.alpha_bar)
    res = minimize_scalar(h, bounds=(0.0, hi), method="bounded",
                          options={"xatol": 1e-13})
    return float(res.x), float(res.fun)


def axis_root_count(params: ReducedPulseParams) -> int:
    """Sign changes of the on-axis function on xi > 0 (0 or 2 for x > 1).

    Independent of R: counts roots from the minimum of the real function.
    """
    h = _axis_fn(params)
    if h(0.0) <= 0:
        return 1
    _, hmin = _axis_minimum(params)
    return 2 if hmin < 0 else 0


def separator_alpha(x: float) -> float:
    """alpha_bar at which the central pair coalesces for strength x (x >= 1)."""
    if x < 1:
        raise NoRoot("no coalescence for x < 1")
    if x == 1:
        return 0.0

    def h(ab):
        return _axis_fn(ReducedPulseParams(x, ab))(xi_coal(ReducedPulseParams(x, ab)))

    lo, hi = 1e-12, 2 * SQRT_E
    if h(hi) > 0:
        hi *= 1.0 + 1e-9
    return brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


# --- root finders -----------------------------------------------------------------

def newton(params: ReducedPulseParams, s0: complex, maxiter: int = 100, k: int | None = None) -> complex:
    s = complex(s0)
    for _ in range(maxiter):
        f = complex(delta_sq(params, s))
        fp = complex(delta_sq_prime(params, s))
        if fp == 0:
            break
        step = f / fp
        s -= step
        if abs(step) < 1e-15 * max(1.0, abs(s)):
            break
    if not abs(complex(delta_sq(params, s))) < RESIDUAL_TOL:
        raise ConvergenceFailure(f"Newton did not converge from {s0}", k=k)
    return s


def _make_tp(params: ReducedPulseParams, k: int, s: complex, role: str) -> TransitionPoint:
    z = (-1) ** k
    return TransitionPoint(k=k, s=complex(s), role=role, z=z,
                           residual=float(abs(complex(delta_sq(params, s)))))


def quadratic_guess(params: ReducedPulseParams) -> complex:
    """Low-order on-axis guess xi0 = (alpha_bar + sqrt(alpha_bar^2 + 8(1/x - 1)))/2, as s = i xi0."""
    ab = params.alpha_bar
    disc = complex(ab * ab + 8 * (params.inv_x - 1))
    xi = 0.5 * (ab + np.sqrt(disc))
    s = 1j * xi
    # keep the right-hand member of the pair
    return complex(abs(s.real), abs(s.imag))


def _refine_even(params: ReducedPulseParams) -> complex:
    seeds = [quadratic_guess(params)]
    seeds += [complex(r, i) for r in (0.3, 0.7, 1.2, 2.0) for i in (0.4, 0.8, 1.2)]
    for seed in seeds:
        if abs(seed.real) < 1e-3:
            seed += 0.05
        try:
            s = newton(params, seed, k=0)
        except ConvergenceFailure:
            continue
        if s.real > 1e-9 and s.imag > 0 and abs(s) < 4.0:
            # reject asymptotic members that happen to attract the seed
            k_est = (s * s).imag / (2 * math.pi) - 0.25
            if k_est < 0.5:
                return s
    raise ConvergenceFailure("central even-layout transition point not found", k=0)


def find_central(params: ReducedPulseParams, allow_coalescent: bool = True) -> list[TransitionPoint]:
    tag = classify_layout(params)
    h = _axis_fn(params)
    if tag.kind is Layout.COALESCENT:
        if not allow_coalescent:
            raise SeparatorProximity(f"|R - 1| = {abs(tag.R - 1):.2e}")
        xi, _ = _axis_minimum(params)
        return [_make_tp(params, 0, 1j * xi, "coalescent")]
    if tag.kind is Layout.ODD:
        if not h(0.0) > 0:
            raise NoRoot("x <= 1: delta^2(0) <= 0 and the on-axis pair is not bracketed")
        xc = xi_coal(params)
        if not h(xc) < 0:
            xc, hmin = _axis_minimum(params)
            if hmin >= 0:
                raise ConvergenceFailure("odd layout without on-axis roots", k=0)
        lo = brentq(h, 0.0, xc, xtol=1e-15)
        top = xc + 10.0
        while h(top) < 0:
            top += 10.0
        hi = brentq(h, xc, top, xtol=1e-15)
        # polish on the complex function (roots are exactly on the axis)
        lo_s = complex(0.0, newton(params, 1j * lo).imag)
        hi_s = complex(0.0, newton(params, 1j * hi).imag)
        return [_make_tp(params, 0, lo_s, "central_odd_lower"),
                _make_tp(params, 0, hi_s, "central_odd_upper")]
    s0 = _refine_even(params)
    s0_bar = newton(params, -s0.conjugate(), k=0)
    return [_make_tp(params, 0, s0, "central_even_right"),
            _make_tp(params, 0, s0_bar, "central_even_left")]


def asymptotic_guess(params: ReducedPulseParams, k: int) -> tuple[complex, complex]:
    """Series guess for (s_k, mirrored s_k): s_k^2 = 2i pi k + i pi/2 - ln(2k pi) - 2 ln(alpha_bar/2)."""
    if k < 1:
        raise ValueError("k >= 1 required")
    if not params.alpha_bar > 0:
        raise ValueError("alpha_bar > 0 required")
    sq = 2j * math.pi * k + 0.5j * math.pi - math.log(2 * k * math.pi) - 2 * math.log(params.alpha_bar / 2)
    s = complex(np.sqrt(sq))
    if s.real < 0:
        s = -s
    return s, -s.conjugate()


def asymptotic_guess_expansion(params: ReducedPulseParams, k: int) -> complex:
    """Explicit square-root expansion of the same series (leading corrections only)."""
    root = np.sqrt(2j * math.pi * k)
    corr = 1 + 1j / (4 * k * math.pi) * math.log(params.alpha_bar ** 2 * k * math.pi / 2) + 1 / (8 * k)
    return complex(root * corr)


def enumerate_tps(params: ReducedPulseParams, K: int) -> list[TransitionPoint]:
    if K < 0:
        raise ValueError("K >= 0 required")
    out = list(find_central(params))
    for k in range(1, K + 1):
        g_right, g_left = asymptotic_guess(params, k)
        # both members refined independently; the mirror symmetry is then a check
        s = newton(params, g_right, k=k)
        s_bar = newton(params, g_left, k=k)
        if s.real <= 0 or s.imag <= 0 or s_bar.real >= 0 or s_bar.imag <= 0:
            raise ConvergenceFailure(f"refinement of k={k} left its quadrant", k=k)
        out.append(_make_tp(params, k, s, "asymptotic_right"))
        out.append(_make_tp(params, k, s_bar, "asymptotic_left"))
    return out


def pole_sign(params: ReducedPulseParams, tp: TransitionPoint) -> int:
    """Residue sign of the coupling at tp, read from which factor of delta^2 vanishes."""
    return coupling_pole_sign(params, tp.s)
