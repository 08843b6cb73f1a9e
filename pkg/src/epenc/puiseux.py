"""Local Puiseux coefficients at transition points and their phases."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoalescentInput, NotCoalescent
from .model import ReducedPulseParams, delta_sq, delta_sq_prime, delta_sq_second
from .tpoints import Layout, TransitionPoint, classify_layout, find_central


@dataclass(frozen=True)
class PuiseuxData:
    tp: TransitionPoint
    order: int
    beta: complex

    @property
    def phase(self) -> float:
        return float(np.angle(self.beta))


def _wrap(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(a, 2 * math.pi)
    return math.pi if a == -math.pi else a


def _pick_sign(beta: complex, lo: float, hi: float) -> complex:
    """Choose +/- beta so that its phase lies in (lo, hi]."""
    a = float(np.angle(beta))
    if lo < a <= hi:
        return beta
    return -beta


def beta1(params: ReducedPulseParams, tp: TransitionPoint) -> PuiseuxData:
    """First-order coefficient sqrt(alpha_bar(alpha_bar s/2 + i/x) - 2 s exp(-s^2)).

    The square-root sign follows the continuity rules anchored at the exact
    on-axis phases (-3pi/4 lower, -pi/4 upper): right-hand members keep their
    phase in (-pi, 0] (from -pi/2 at coalescence to -5pi/8 asymptotically),
    left-hand members in (-pi/2, pi/2] (0 at coalescence, pi/8 asymptotically).
    """
    if tp.role == "coalescent":
        raise CoalescentInput("second-order point: use beta2_coal")
    raw = complex(np.sqrt(delta_sq_prime(params, tp.s)))
    if tp.role == "central_odd_lower":
        target = -0.75 * math.pi
    elif tp.role == "central_odd_upper":
        target = -0.25 * math.pi
    else:
        target = None
    if target is not None:
        beta = raw if abs(_wrap(np.angle(raw) - target)) < math.pi / 2 else -raw
    elif tp.is_right:
        beta = _pick_sign(raw, -math.pi, 0.0)
    else:
        beta = _pick_sign(raw, -math.pi / 2, math.pi / 2)
    return PuiseuxData(tp=tp, order=1, beta=beta)


def beta2_coal(params: ReducedPulseParams, tp: TransitionPoint | None = None) -> PuiseuxData:
    """Second-order coefficient (1/2) sqrt(alpha_bar^2 - 4 exp(-s_c^2)(1 - 2 s_c^2))."""
    if classify_layout(params).kind is not Layout.COALESCENT:
        raise NotCoalescent("parameters are not on the separator")
    if tp is None:
        tp = find_central(params)[0]
    s = tp.s
    beta = 0.5 * complex(np.sqrt(params.alpha_bar ** 2 - 4 * np.exp(-s * s) * (1 - 2 * s * s)))
    return PuiseuxData(tp=tp, order=2, beta=beta)


@dataclass(frozen=True)
class ProductReport:
    beta1: complex
    beta3: complex
    first_derivative_fd: complex
    second_derivative_fd: complex
    first_discrepancy: float
    second_discrepancy: float


def verify_product(params: ReducedPulseParams, catalog: list[TransitionPoint],
                   tp: TransitionPoint, h: float = 1e-4) -> ProductReport:
    """Check d(delta^2)/ds = beta1^2 and d2(delta^2)/ds2 = 4 beta1 beta3 at tp.

    Finite differences of the entire function delta^2 on a small complex
    stencil; beta3 is returned as the diagnostic estimate.
    """
    if tp not in catalog:
        raise ValueError("tp is not part of the catalog")
    b1 = beta1(params, tp).beta
    s = tp.s
    f = lambda z: complex(delta_sq(params, z))
    d1 = (f(s + h) - f(s - h) - (f(s + 2 * h) - f(s - 2 * h)) / 8) / (1.5 * h)
    d2 = (f(s + h) - 2 * f(s) + f(s - h)) / (h * h)
    beta3 = d2 / (4 * b1) if b1 != 0 else complex(math.inf)
    return ProductReport(
        beta1=b1, beta3=beta3,
        first_derivative_fd=d1, second_derivative_fd=d2,
        first_discrepancy=abs(b1 * b1 - d1),
        second_discrepancy=abs(complex(delta_sq_second(params, s)) - d2),
    )


def emanation_angles(pd: PuiseuxData) -> list[float]:
    """Directions (in [0, 2pi)) of the m+2 equivalue lines leaving a TP of order m."""
    m = pd.order
    n_lines = m + 2
    offset = -(2.0 / n_lines) * float(np.angle(2 * pd.beta / n_lines))
    return [float(np.mod(2 * math.pi * n / n_lines + offset, 2 * math.pi)) for n in range(n_lines)]
