"""Reduced two-level model: parameters, quasi-energy split, coupling, path integrals.

The reduced Hamiltonian (bare basis, units of the peak Rabi energy) is

    H(s) = [[0, exp(-s^2/2)/2], [exp(-s^2/2)/2, alpha_bar*s/2 + i/x]]

and the squared quasi-energy split is exp(-s^2) + (alpha_bar*s/2 + i/x)^2.
All integrals are stored unscaled (``integral = int_0^s delta ds``); the
x-scaled residua gamma = x Im(integral), phi = x Re(integral) are derived,
which keeps the Hermitian sentinel x = inf finite throughout.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContinuationAmbiguous, PoleProximity, TooCloseToTP

HERMITIAN = math.inf  # x sentinel: all 1/x terms are dropped exactly

GUARD_RADIUS = 1e-4
MAX_STEP = 0.1  # longest straight continuation step in s
MAX_CONTINUATION_STEPS = 100_000
_DEFAULT_TOL = 1e-10

# 10-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def quad_tol() -> float:
    """Absolute quadrature tolerance per segment; EPENC_TOL overrides."""
    env = os.environ.get("EPENC_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            pass
    return _DEFAULT_TOL


@dataclass(frozen=True)
class PhysicalPulseParams:
    mu: float
    Gamma: float
    tau: float
    eps0_max: float
    alpha: float
    hbar: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive (real dipole)")
        if self.Gamma < 0:
            raise ValueError("Gamma must be non-negative")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.eps0_max > 0:
            raise ValueError("eps0_max must be positive")


@dataclass(frozen=True)
class ReducedPulseParams:
    """Dimensionless triple (x, alpha_bar, theta); x may be HERMITIAN."""

    x: float
    alpha_bar: float
    theta: float = 4 * math.pi

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError("x must be positive")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.alpha_bar < 0:
            raise ValueError("alpha_bar must be >= 0 (negative chirp maps by time symmetry)")

    @property
    def inv_x(self) -> float:
        return 0.0 if math.isinf(self.x) else 1.0 / self.x

    @property
    def hermitian(self) -> bool:
        return math.isinf(self.x)

    @property
    def kappa(self) -> float:
        """theta/sqrt(2 pi): multiplies the unscaled split integral in exponents."""
        return self.theta / math.sqrt(2 * math.pi)

    def scale(self, value: float) -> float:
        """Multiply by x (NaN for the Hermitian sentinel, where x-scaled values diverge)."""
        return math.nan if self.hermitian else self.x * value


@dataclass(frozen=True)
class ComplexPathPoint:
    s: complex
    delta: complex
    branch_phase: float


@dataclass(frozen=True)
class SplitIntegrals:
    """gamma = x Im int_0^s delta, phi = x Re int_0^s delta."""

    integral: complex
    x: float
    end_delta: complex = field(default=0j, compare=False)

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


def to_reduced(p: PhysicalPulseParams) -> ReducedPulseParams:
    if p.Gamma == 0:
        raise ValueError("Gamma = 0: enter the Hermitian limit directly as x = HERMITIAN")
    x = 2 * p.mu * p.eps0_max / p.Gamma
    alpha_bar = (2 * p.hbar / p.mu) * (p.alpha * p.tau / p.eps0_max)
    theta = (p.mu * p.eps0_max / p.hbar) * p.tau * math.sqrt(2 * math.pi)
    return ReducedPulseParams(x=x, alpha_bar=alpha_bar, theta=theta)


# --- the entire function delta^2 and its derivatives ---------------------------

def detuning(params: ReducedPulseParams, s):
    return params.alpha_bar * np.asarray(s) / 2 + 1j * params.inv_x


def delta_sq(params: ReducedPulseParams, s):
    s = np.asarray(s, dtype=complex)
    d = params.alpha_bar * s / 2 + 1j * params.inv_x
    return np.exp(-s * s) + d * d


def delta_sq_prime(params: ReducedPulseParams, s):
    s = np.asarray(s, dtype=complex)
    d = params.alpha_bar * s / 2 + 1j * params.inv_x
    return -2 * s * np.exp(-s * s) + params.alpha_bar * d


def delta_sq_second(params: ReducedPulseParams, s):
    s = np.asarray(s, dtype=complex)
    return (4 * s * s - 2) * np.exp(-s * s) + params.alpha_bar ** 2 / 2


def anchor_delta(params: ReducedPulseParams) -> complex:
    """delta(0): positive real root of 1 - 1/x^2 (imaginary-positive for x < 1)."""
    v = 1.0 - params.inv_x ** 2
    if v == 0.0:
        raise TooCloseToTP("x = 1 puts a (coalescent) transition point at s = 0")
    return complex(math.sqrt(v)) if v > 0 else 1j * math.sqrt(-v)


def P(params: ReducedPulseParams, delta):
    """x Re delta."""
    return params.x * np.real(delta)


def Q(params: ReducedPulseParams, delta):
    """x Im delta."""
    return params.x * np.imag(delta)


def asymptotic_forms(params: ReducedPulseParams, s: complex) -> tuple[float, float]:
    s = complex(s)
    half = params.alpha_bar * params.x / 2
    p_inf = half * abs(s.real)
    q_inf = half * s.imag * np.sign(s.real) if s.real != 0 else 0.0
    return float(p_inf), float(q_inf)


# --- branch continuation ------------------------------------------------------

def _check_guard(s: complex, tps: Sequence[complex] | None, guard: float = GUARD_RADIUS):
    if tps:
        for t in tps:
            if abs(s - t) < guard:
                raise TooCloseToTP(f"path point {s} within {guard} of transition point {t}")


def continue_branch(params: ReducedPulseParams, s_from: complex, s_to: complex,
                    d_from: complex, max_halvings: int = 40) -> complex:
    """Carry delta(s_from) = d_from continuously along the straight segment to s_to.

    Steps are at most MAX_STEP long in s and are halved while the phase of
    delta^2 jumps by more than pi/2, so delta itself never turns by more than
    pi/4 and the sign pick is unambiguous.
    """
    if s_from == s_to:
        return d_from
    u, d = 0.0, complex(d_from)
    sq_prev = complex(delta_sq(params, s_from))
    # the phase test only sees the ratio modulo 2 pi, so long steps could alias
    cap = min(1.0, MAX_STEP / abs(s_to - s_from))
    step = cap
    n_steps = 0
    while u < 1.0:
        h = min(step, 1.0 - u)
        halvings = 0
        for halvings in range(max_halvings):
            s_new = s_from + (u + h) * (s_to - s_from)
            sq_new = complex(delta_sq(params, s_new))
            if sq_prev != 0 and sq_new != 0 and abs(np.angle(sq_new / sq_prev)) <= np.pi / 2:
                break
            h *= 0.5
        else:
            raise ContinuationAmbiguous(f"cannot resolve branch near s = {s_new}")
        n_steps += 1
        if halvings and (u + h == u or n_steps > MAX_CONTINUATION_STEPS):
            # steps shrinking geometrically: the segment runs into a branch point
            raise ContinuationAmbiguous(f"path runs into a branch point near s = {s_new}")
        cand = np.sqrt(sq_new)
        dot = (cand * np.conj(d)).real
        if abs(dot) < 1e-3 * abs(cand) * abs(d):
            raise ContinuationAmbiguous(f"branch candidates indistinguishable near s = {s_new}")
        d = cand if dot > 0 else -cand
        sq_prev = sq_new
        u += h
        step = min(2 * h, cap)
    return d


def quasi_split(params: ReducedPulseParams, path: Iterable[complex],
                tps: Sequence[complex] | None = None) -> list[ComplexPathPoint]:
    """Branch-tracked delta along an ordered path, anchored at delta(0).

    If the path does not start at 0 the branch is carried in from the origin
    along a straight segment.
    """
    pts = [complex(p) for p in path]
    out: list[ComplexPathPoint] = []
    if not pts:
        return out
    s_prev, d = 0j, anchor_delta(params)
    phase = float(np.angle(d))
    for s in pts:
        _check_guard(s, tps)
        d_new = continue_branch(params, s_prev, s, d)
        phase += float(np.angle(d_new / d)) if d != 0 else 0.0
        d, s_prev = d_new, s
        out.append(ComplexPathPoint(s=s, delta=d, branch_phase=phase))
    return out


# --- path integrals ---------------------------------------------------------------

def _segment_integral(params: ReducedPulseParams, a: complex, b: complex, d_a: complex,
                      tol: float, ends_at_tp: bool = False) -> tuple[complex, complex]:
    """Adaptive Gauss-Legendre integral of tracked delta over [a, b].

    With ends_at_tp the square-root endpoint singularity at b is removed by
    s = b - (b - a)(1 - u)^2, which makes the integrand smooth in u.
    """
    span = b - a
    if ends_at_tp:
        def s_of(u):
            return b - span * (1 - u) ** 2

        def ds_du(u):
            return 2 * span * (1 - u)
    else:
        def s_of(u):
            return a + span * u

        def ds_du(u):
            return span

    def gl(u0, u1, d0):
        # tracked values at the ordered nodes of [u0, u1]
        total = 0j
        s_prev, d_prev = s_of(u0), d0
        for xi, wi in zip(_GL_X, _GL_W):
            u = u0 + (u1 - u0) * xi
            s = s_of(u)
            d_prev = continue_branch(params, s_prev, s, d_prev)
            s_prev = s
            total += wi * d_prev * ds_du(u)
        return total * (u1 - u0)

    def walk(u0, u1, d0):
        return continue_branch(params, s_of(u0), s_of(u1), d0)

    result = 0j
    stack = [(0.0, 1.0, 0)]
    d_cur = d_a
    whole_cache: dict[tuple[float, float], complex] = {}
    # process panels left to right so the branch state stays sequential
    while stack:
        u0, u1, depth = stack.pop()
        whole = whole_cache.pop((u0, u1), None)
        if whole is None:
            whole = gl(u0, u1, d_cur)
        um = 0.5 * (u0 + u1)
        left = gl(u0, um, d_cur)
        d_mid = walk(u0, um, d_cur)
        right = gl(um, u1, d_mid)
        err = abs(whole - (left + right))
        if err <= max(tol * (u1 - u0), 1e-13 * abs(whole), 1e-15) or depth > 30:
            result += left + right
            if ends_at_tp and u1 == 1.0:
                d_cur = 0j
            else:
                d_cur = walk(um, u1, d_mid)
        else:
            whole_cache[(um, u1)] = right
            whole_cache[(u0, um)] = left
            stack.append((um, u1, depth + 1))
            stack.append((u0, um, depth + 1))
    return result, d_cur


def split_integral(params: ReducedPulseParams, path: Sequence[complex],
                   tps: Sequence[complex] | None = None, ends_at_tp: bool = False,
                   tol: float | None = None) -> SplitIntegrals:
    """gamma, phi accumulated along a polyline that starts at s = 0.

    ``ends_at_tp`` marks the final vertex as a transition point; the guard
    check is then skipped for that vertex and the endpoint singularity is
    integrated exactly.
    """
    tol = quad_tol() if tol is None else tol
    pts = [complex(p) for p in path]
    if not pts or pts[0] != 0:
        pts = [0j] + pts
    for i, s in enumerate(pts):
        if ends_at_tp and i == len(pts) - 1:
            continue
        _check_guard(s, tps)
    d = anchor_delta(params)
    total = 0j
    for i, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        if a == b:
            continue
        last = ends_at_tp and i == len(pts) - 2
        seg, d = _segment_integral(params, a, b, d, tol, ends_at_tp=last)
        total += seg
    return SplitIntegrals(integral=complex(total), x=params.x, end_delta=complex(d))


# --- non-adiabatic coupling ---------------------------------------------------------

def nonadiabatic_coupling(params: ReducedPulseParams, s, tps: Sequence[complex] | None = None):
    """N(s) = (1/2) lambda'/(1 + lambda^2), lambda = exp(s^2/2)(alpha_bar s/2 + i/x).

    Evaluated in the overflow-free form obtained by multiplying through by
    exp(-s^2); the denominator is then delta^2 itself.
    """
    if params.alpha_bar == 0 and params.hermitian:
        return np.zeros_like(np.asarray(s, dtype=complex)) if np.ndim(s) else 0j
    if tps is not None:
        for t in tps:
            if np.any(np.abs(np.asarray(s) - t) < GUARD_RADIUS):
                raise PoleProximity(f"s within guard radius of pole at {t}")
    s_arr = np.asarray(s, dtype=complex)
    num = (params.alpha_bar * (s_arr * s_arr + 1) / 2 + 1j * s_arr * params.inv_x) * np.exp(-s_arr * s_arr / 2)
    out = 0.5 * num / delta_sq(params, s_arr)
    return out if np.ndim(s) else complex(out)


def coupling_pole_sign(params: ReducedPulseParams, s_k: complex) -> int:
    """+1 if s_k is a zero of exp(-s^2/2) + i d(s), -1 if of exp(-s^2/2) - i d(s)."""
    e = np.exp(-s_k * s_k / 2)
    d = params.alpha_bar * s_k / 2 + 1j * params.inv_x
    return 1 if abs(e + 1j * d) < abs(e - 1j * d) else -1
