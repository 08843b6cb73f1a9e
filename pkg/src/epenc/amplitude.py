"""First-order survival amplitude assembled from transition-point contributions.

Every TP enters through E_k = exp(i kappa J_k), J_k = int_0^{s_k} delta, which
equals exp[-(theta/(x sqrt(2 pi)))(gamma - i phi)] written without x.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import EvenLayoutInput, OddLayoutInput
from .model import ReducedPulseParams
from .puiseux import beta1
from .residua import (ResiduumData, asymptotic_constant, gamma_bar_over_x, gamma_phi_asymptotic,
                      gamma_phi_at)
from .tpoints import Layout, LayoutTag, TransitionPoint, classify_layout, find_central

PAIR_PREFACTOR = 2 * math.pi / 3
ODD_PREFACTOR = math.pi / 3
SEPARATOR_BAND = 1e-3
FIRST_ORDER_CORRECTION = 3 / math.pi  # diagnostic only, never applied by default


@dataclass(frozen=True)
class TPContribution:
    tp: TransitionPoint
    branchcut: complex
    residuum: complex
    total: complex
    regime_margin: float = math.nan


@dataclass
class SurvivalResult:
    params: ReducedPulseParams
    layout: LayoutTag
    v_central: complex
    v_asymptotic: complex
    f: float
    p1: float
    gamma_bar_over_x: float
    phi_over_x: float
    margin: float
    contributions: list[TPContribution] = field(default_factory=list)
    p1_alternate: float | None = None
    asymptotic_tail_bound: float = 0.0
    flags: list[str] = field(default_factory=list)

    @property
    def p1_reported(self) -> float:
        """p1 clipped at 1 for display (the raw value can overshoot at first order)."""
        return min(self.p1, 1.0)

    @property
    def gamma_bar(self) -> float:
        return self.params.scale(self.gamma_bar_over_x)

    @property
    def phi(self) -> float:
        return self.params.scale(self.phi_over_x)

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        return {
            "params": {"x": _num(p.x), "alpha_bar": p.alpha_bar, "theta": p.theta},
            "layout": self.layout.kind.value,
            "R": self.layout.R,
            "gamma_bar": _num(self.gamma_bar),
            "gamma_bar_over_x": self.gamma_bar_over_x,
            "phi": _num(self.phi),
            "phi_over_x": self.phi_over_x,
            "f": self.f,
            "p1": self.p1,
            "p1_reported": self.p1_reported,
            "p1_alternate": self.p1_alternate,
            "margin": self.margin,
            "v_central": _cplx(self.v_central),
            "v_asymptotic": _cplx(self.v_asymptotic),
            "asymptotic_tail_bound": self.asymptotic_tail_bound,
            "flags": list(self.flags),
            "contributions": [
                {"k": c.tp.k, "side": c.tp.side, "s": _cplx(c.tp.s), "residuum": _cplx(c.residuum),
                 "branchcut": _cplx(c.branchcut), "total": _cplx(c.total),
                 "regime_margin": _num(c.regime_margin)}
                for c in self.contributions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _num(v: float) -> float | str | None:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _weight(params: ReducedPulseParams, res: ResiduumData) -> complex:
    return complex(np.exp(1j * params.kappa * res.integral))


# --- regime margin ------------------------------------------------------------------

def large_area_margin(params: ReducedPulseParams, tp: TransitionPoint) -> float:
    """theta sqrt(2/pi)|beta^(1)|/3 in units of pi/2; above 1 the large-area limit applies."""
    if tp.role == "coalescent":
        return 0.0
    b = abs(beta1(params, tp).beta)
    return params.theta * math.sqrt(2 / math.pi) * b / 3 / (math.pi / 2)


# --- single contributions -----------------------------------------------------------

def single_tp_contribution(params: ReducedPulseParams, res: ResiduumData, n: int = 0) -> TPContribution:
    """Residuum over a full circle (three thirds) plus the branchcut along line n."""
    tp = res.tp
    w = _weight(params, res)
    residuum = -tp.z * (math.pi / 2) * w
    branchcut = tp.z * (-1) ** n * (math.pi / 6) * w
    return TPContribution(tp=tp, branchcut=branchcut, residuum=residuum,
                          total=residuum + branchcut,
                          regime_margin=_safe_margin(params, tp))


def _safe_margin(params: ReducedPulseParams, tp: TransitionPoint) -> float:
    try:
        return large_area_margin(params, tp)
    except Exception:  # margin is diagnostic; a failed beta evaluation must not sink the result
        return math.nan


def tp_pair_contribution(params: ReducedPulseParams, tp: TransitionPoint,
                         residua: ResiduumData) -> TPContribution:
    """Symmetric pair total -z (2 pi/3) exp(-kappa gamma/x) cos(kappa phi/x)."""
    if tp.s.real == 0 or tp.role.startswith("central_odd") or tp.role == "coalescent":
        raise OddLayoutInput("on-axis transition points do not form a mirror pair")
    single = single_tp_contribution(params, residua)
    damp = math.exp(-params.kappa * residua.integral.imag)
    total = -tp.z * PAIR_PREFACTOR * damp * math.cos(params.kappa * residua.integral.real)
    # the mirror contributes the complex conjugate, so the pair is twice the real part
    return TPContribution(tp=tp, branchcut=2 * single.branchcut.real,
                          residuum=2 * single.residuum.real, total=complex(total),
                          regime_margin=single.regime_margin)


def odd_layout_contribution(params: ReducedPulseParams, residua: ResiduumData) -> TPContribution:
    """-(pi/3) exp(-kappa gamma(s_low)/x) from the lower on-axis TP."""
    if classify_layout(params).kind is Layout.EVEN:
        raise EvenLayoutInput("odd-layout contribution requested in the even layout")
    tp = residua.tp
    if tp.role == "central_odd_upper":
        return upper_tp_contribution(params, tp)
    damp = math.exp(-params.kappa * residua.integral.imag)
    residuum = -(math.pi / 2) * damp
    branchcut = (math.pi / 6) * damp
    return TPContribution(tp=tp, branchcut=complex(branchcut), residuum=complex(residuum),
                          total=complex(residuum + branchcut),
                          regime_margin=_safe_margin(params, tp))


def upper_tp_contribution(params: ReducedPulseParams, tp: TransitionPoint) -> TPContribution:
    """The upper on-axis TP contributes nothing: its branchcut cancels its residuum."""
    return TPContribution(tp=tp, branchcut=0j, residuum=0j, total=0j,
                          regime_margin=_safe_margin(params, tp))


# --- asymptotic pairs ---------------------------------------------------------------

def asymptotic_sum(params: ReducedPulseParams, K: int) -> tuple[complex, float]:
    """Partial sum over the asymptotic pairs k = 1..K and a geometric bound on the rest.

    In the Hermitian sentinel the real-axis crossings of the asymptotic
    lines run off to infinity, the contour never encloses those TPs and
    the sum is zero.
    """
    if K < 1:
        raise ValueError("K >= 1 required")
    if params.hermitian:
        return 0j, 0.0
    total = 0.0
    env = []
    for k in range(1, K + 2):
        r = gamma_phi_asymptotic(params, k)
        damp = math.exp(-params.kappa * r.integral.imag)
        env.append(PAIR_PREFACTOR * damp)
        if k <= K:
            total += -((-1) ** k) * PAIR_PREFACTOR * damp * math.cos(params.kappa * r.integral.real)
    # envelopes shrink at least by exp(-kappa alpha_bar pi/2) per pair
    q = math.exp(-params.kappa * params.alpha_bar * math.pi / 2)
    tail = env[K] / (1 - q) if q < 1 else math.inf
    return complex(total), tail


# --- normalization and probability --------------------------------------------------

def norm_factor(params: ReducedPulseParams) -> float:
    """f = exp[kappa lim(Im int_0^s delta - s/x)] along the real axis."""
    return math.exp(params.kappa * asymptotic_constant(params).imag)


def _even_p1(kappa: float, gbar: float, phi: float) -> float:
    return (PAIR_PREFACTOR ** 2) * math.exp(-2 * kappa * gbar) * math.cos(kappa * phi) ** 2


def _odd_p1(kappa: float, gbar: float) -> float:
    return (ODD_PREFACTOR ** 2) * math.exp(-2 * kappa * gbar)


def survival_probability(params: ReducedPulseParams, include_asymptotic: bool = False,
                         K: int = 8, first_order_correction: bool = False) -> SurvivalResult:
    """Full pipeline: layout, central TPs, residua, gamma_bar and p1.

    Even layout: p1 = (4 pi^2/9) exp(-2 kappa gamma_bar/x) cos^2(kappa phi/x).
    Odd layout:  p1 = (pi^2/9) exp(-2 kappa gamma_bar/x).
    """
    tag = classify_layout(params)
    central = find_central(params)
    kappa = params.kappa
    flags: list[str] = []
    contributions: list[TPContribution] = []

    lead = central[0]
    res = gamma_phi_at(params, lead, central)
    gbar = gamma_bar_over_x(params, res)
    phi = res.integral.real
    f = norm_factor(params)

    if tag.kind is Layout.EVEN:
        contributions.append(tp_pair_contribution(params, lead, res))
        p1 = _even_p1(kappa, gbar, phi)
        alt = _odd_p1(kappa, gbar)
    elif tag.kind is Layout.ODD:
        contributions.append(odd_layout_contribution(params, res))
        contributions.append(upper_tp_contribution(params, central[1]))
        p1 = _odd_p1(kappa, gbar)
        alt = _even_p1(kappa, gbar, 0.0)
    else:
        # coalesced pair: phi = 0; the prefactor jumps between the two layouts
        contributions.append(TPContribution(tp=lead, branchcut=0j, residuum=0j,
                                            total=complex(-ODD_PREFACTOR * math.exp(-kappa * res.integral.imag)),
                                            regime_margin=0.0))
        p1 = _odd_p1(kappa, gbar)
        alt = _even_p1(kappa, gbar, 0.0)

    v_central = sum((c.total for c in contributions), 0j)
    v_asym, tail = 0j, 0.0
    if include_asymptotic:
        v_asym, tail = asymptotic_sum(params, K)
        v = v_central + v_asym
        p1 = f * f * abs(v) ** 2
        flags.append("asymptotic_included")

    margin = contributions[0].regime_margin
    if not margin > 1:
        flags.append("small_pulse_area")
    if abs(tag.R - 1) < SEPARATOR_BAND:
        flags.append("separator_proximity")
    else:
        alt = None
    if first_order_correction:
        p1 *= FIRST_ORDER_CORRECTION ** 2
        if alt is not None:
            alt *= FIRST_ORDER_CORRECTION ** 2
        flags.append("three_over_pi_applied")
    if p1 > 1:
        flags.append("p1_exceeds_unity")

    return SurvivalResult(params=params, layout=tag, v_central=v_central, v_asymptotic=v_asym,
                          f=f, p1=p1, gamma_bar_over_x=gbar, phi_over_x=phi, margin=margin,
                          contributions=contributions, p1_alternate=alt,
                          asymptotic_tail_bound=tail, flags=flags)


def p1_from_amplitude(result: SurvivalResult) -> float:
    """f^2 |v|^2 from the stored amplitude (identity check against the closed formula)."""
    v = result.v_central + result.v_asymptotic
    return result.f ** 2 * abs(v) ** 2
