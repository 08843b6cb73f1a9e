"""Residua gamma(s_k), phi(s_k) of the transition points and the decay constant gamma_bar.

Values are kept unscaled (``integral = int_0^{s_k} delta ds``) so that the
Hermitian sentinel x = inf stays finite; gamma = x Im(integral) and
phi = x Re(integral) are derived.  Exponents downstream only ever need
kappa * integral with kappa = theta/sqrt(2 pi), in which x cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import NonConvergent
from .model import GUARD_RADIUS, ReducedPulseParams, delta_sq, quad_tol, split_integral
from .tpoints import TransitionPoint, asymptotic_guess

TWO_LEG = "TwoLegQuadrature"
CLOSED_FORM = "AsymptoticClosedForm"

S_MAX = 12.0
# int_0^inf (1 - sqrt(1 - exp(-u))) du, the local correction of the split near s_k
_LOCAL_CORRECTION = 2.0 - 2.0 * math.log(2.0)


@dataclass(frozen=True)
class ResiduumData:
    tp: TransitionPoint
    integral: complex
    x: float
    method: str = TWO_LEG

    @property
    def gamma(self) -> float:
        return math.nan if math.isinf(self.x) else self.x * self.integral.imag

    @property
    def phi(self) -> float:
        return math.nan if math.isinf(self.x) else self.x * self.integral.real

    @property
    def gamma_over_x(self) -> float:
        return self.integral.imag

    @property
    def phi_over_x(self) -> float:
        return self.integral.real


def _detour_path(lower: complex, upper: complex) -> list[complex]:
    """Imaginary-axis path to the upper on-axis TP passing the lower one on its right."""
    r = min(0.1, 0.3 * abs(upper - lower))
    return [0j, lower - 1j * r, lower + r, lower + 1j * r, upper]


def gamma_phi_at(params: ReducedPulseParams, tp: TransitionPoint,
                 catalog: list[TransitionPoint] | None = None) -> ResiduumData:
    """Residua by quadrature along 0 -> Re s_k -> s_k (vertical leg included).

    The upper on-axis TP of the odd layout sits above the lower branch point;
    its path steps around that point on the right-hand side.
    """
    s = tp.s
    if abs(s) < GUARD_RADIUS:
        # TP at the origin (coalescence at x = 1): zero-length path
        return ResiduumData(tp=tp, integral=0j, x=params.x)
    if tp.role == "central_odd_upper":
        lower = next((t for t in catalog or [] if t.role == "central_odd_lower"), None)
        if lower is None:
            from .tpoints import find_central
            lower = find_central(params)[0]
        path = _detour_path(lower.s, s)
    elif s.real == 0:
        path = [0j, s]
    else:
        path = [0j, complex(s.real, 0.0), s]
    res = split_integral(params, path, ends_at_tp=True)
    integral = res.integral
    if tp.role in ("central_odd_lower", "coalescent"):
        # purely imaginary path and real integrand: the real part is a rounding residue
        integral = complex(0.0, integral.imag)
    return ResiduumData(tp=tp, integral=integral, x=params.x)


def straight_path_residuum(params: ReducedPulseParams, tp: TransitionPoint) -> ResiduumData:
    """Same residuum along the straight segment 0 -> s_k (path-invariance check)."""
    res = split_integral(params, [0j, tp.s], ends_at_tp=True)
    return ResiduumData(tp=tp, integral=res.integral, x=params.x)


# --- real-axis asymptotic constant ----------------------------------------------------

def _real_axis_delta(params: ReducedPulseParams, s):
    # principal root is continuous on s >= 0 for x > 1 (Im delta^2 >= 0 there)
    return np.sqrt(delta_sq(params, np.asarray(s, dtype=float)))


def _tail(params: ReducedPulseParams, s_max: float) -> complex:
    """int_{s_max}^inf (delta - d) ds with delta - d ~ exp(-s^2)/(2 d)."""
    d = params.alpha_bar * s_max / 2 + 1j * params.inv_x
    if d == 0:
        return 0j
    # leading term of the complementary error function tail
    return complex(math.exp(-s_max * s_max) / (2 * s_max) / (2 * d))


def _constant_to(params: ReducedPulseParams, s_max: float) -> complex:
    ab, ix = params.alpha_bar, params.inv_x

    def re(s):
        return float(_real_axis_delta(params, s).real) - ab * s / 2

    def im(s):
        return float(_real_axis_delta(params, s).imag) - ix

    # split at the integers to help the adaptive rule around the minima of Re delta
    pts = [p for p in np.arange(1.0, s_max) if p < s_max]
    eps = 1e-3 * quad_tol()
    r = quad(re, 0.0, s_max, points=pts, limit=400, epsabs=eps, epsrel=1e-13)[0]
    i = quad(im, 0.0, s_max, points=pts, limit=400, epsabs=eps, epsrel=1e-13)[0]
    return complex(r, i) + _tail(params, s_max)


@lru_cache(maxsize=4096)
def _asymptotic_constant_cached(x: float, alpha_bar: float, s_max: float, tol: float) -> complex:
    params = ReducedPulseParams(x, alpha_bar)
    c1 = _constant_to(params, s_max)
    c2 = _constant_to(params, 2 * s_max)
    scale = 1.0 if params.hermitian else params.x
    if scale * abs(c1 - c2) > max(tol, 1e-9):
        raise NonConvergent(
            f"real-axis limit differs by {scale * abs(c1 - c2):.2e} between s_max and 2 s_max")
    return c1


def asymptotic_constant(params: ReducedPulseParams, s_max: float = S_MAX) -> complex:
    """C = lim_{s->inf} [int_0^s delta - alpha_bar s^2/4 - i s/x] on the real axis.

    x Im C is the convergent gamma_inf = int_0^inf (Q - 1) ds and x Re C is
    phi_inf = int_0^inf (P - P_inf) ds.
    """
    if params.x <= 1:
        raise ValueError("the real-axis limit requires x > 1")
    return _asymptotic_constant_cached(float(params.x), float(params.alpha_bar), float(s_max),
                                       float(quad_tol()))


def gamma_inf(params: ReducedPulseParams) -> float:
    return params.scale(asymptotic_constant(params).imag)


def phi_inf(params: ReducedPulseParams) -> float:
    return params.scale(asymptotic_constant(params).real)


def decay_offset_over_x(params: ReducedPulseParams, s_max: float = S_MAX) -> float:
    """L/x with L = lim_{s->inf} (s - gamma(s)) along the real axis."""
    return -asymptotic_constant(params, s_max).imag


# --- closed forms -------------------------------------------------------------------

def gamma_phi_asymptotic(params: ReducedPulseParams, k: int, mirrored: bool = False,
                         tp: TransitionPoint | None = None) -> ResiduumData:
    """Closed-form residua of the k-th asymptotic pair.

    With s_k^2 = i pi (2k + 1/2) - ln(k pi alpha_bar^2/2) from the root series,

        gamma = (alpha_bar x/4) pi (2k + 1/2) + Re s_k + gamma_inf
        phi   = -(alpha_bar x/4) ln(k pi alpha_bar^2/2) - Im s_k + phi_inf
                + (alpha_bar x/4)(2 - 2 ln 2)

    The Re s_k, Im s_k terms come from i s/x in the far-field split and the
    last term from the local square-root profile of delta near s_k; the
    vertical-leg contribution is neglected.
    """
    if k < 1:
        raise ValueError("k >= 1 required")
    s_right, s_left = asymptotic_guess(params, k)
    sq = 1j * math.pi * (2 * k + 0.5) - math.log(k * math.pi * params.alpha_bar ** 2 / 2)
    C = asymptotic_constant(params)
    integral = (params.alpha_bar * sq / 4 + 1j * s_right * params.inv_x + C
                + params.alpha_bar * _LOCAL_CORRECTION / 4)
    if mirrored:
        integral = -integral.conjugate()
    if tp is None:
        role = "asymptotic_left" if mirrored else "asymptotic_right"
        s = s_left if mirrored else s_right
        tp = TransitionPoint(k=k, s=s, role=role, z=(-1) ** k,
                             residual=float(abs(complex(delta_sq(params, s)))))
    return ResiduumData(tp=tp, integral=complex(integral), x=params.x, method=CLOSED_FORM)


# --- decay constant -----------------------------------------------------------------

def gamma_bar_over_x(params: ReducedPulseParams, central: ResiduumData,
                     s_max: float = S_MAX) -> float:
    """gamma_bar/x = Im int_0^{s_0} delta - Im C (finite also for x = inf)."""
    if central.tp.role not in ("central_even_right", "central_even_left", "central_odd_lower",
                               "coalescent"):
        raise ValueError("gamma_bar needs s_0 (even) or the lower on-axis TP (odd)")
    return central.integral.imag - asymptotic_constant(params, s_max).imag


def gamma_bar(params: ReducedPulseParams, central: ResiduumData, s_max: float = S_MAX) -> float:
    """gamma_bar = gamma(s_0) + lim (s - gamma(s)); controls the exponential decay of p1."""
    return params.scale(gamma_bar_over_x(params, central, s_max))


def residua_catalog(params: ReducedPulseParams, catalog: list[TransitionPoint]) -> list[ResiduumData]:
    return [gamma_phi_at(params, tp, catalog) for tp in catalog]


__all__ = [
    "ResiduumData", "gamma_phi_at", "straight_path_residuum", "gamma_phi_asymptotic",
    "asymptotic_constant", "gamma_inf", "phi_inf", "decay_offset_over_x",
    "gamma_bar", "gamma_bar_over_x", "residua_catalog", "TWO_LEG", "CLOSED_FORM",
]
