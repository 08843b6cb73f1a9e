"""Equivalue (Stokes) lines: curves leaving a TP on which Im int delta is constant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DriftExceeded, StallNearTP
from .model import (ReducedPulseParams, _segment_integral, continue_branch, delta_sq,
                    quad_tol)
from .puiseux import PuiseuxData, beta1, emanation_angles
from .tpoints import TransitionPoint


@dataclass
class TraceOptions:
    d_lambda0: float = 1e-3
    d_lambda_max: float = 0.1
    reproject_every: int = 10
    max_steps: int = 20000
    im_cap: float = 6.0
    re_cap: float = 60.0
    stop_at_real_axis: bool = True
    stop_radius: float = 2e-3
    drift_tol: float = 1e-6


@dataclass
class EquivalueLine:
    origin: TransitionPoint
    n: int
    angle: float
    points: np.ndarray
    integral: np.ndarray  # int_{s_k}^{s} delta at each vertex (real on an exact line)
    terminal: str  # RealAxisCross | ImagAsymptote | StepLimit | TPReached
    crossing: complex | None = None
    partner: TransitionPoint | None = None
    x: float = field(default=math.inf)

    @property
    def gamma_drift(self) -> np.ndarray:
        scale = 1.0 if math.isinf(self.x) else self.x
        return scale * np.imag(self.integral)

    @property
    def phi_along(self) -> np.ndarray:
        scale = 1.0 if math.isinf(self.x) else self.x
        return scale * np.real(self.integral)


def _unit(d: complex) -> complex:
    return np.conj(d) / abs(d)


def trace(params: ReducedPulseParams, origin: TransitionPoint, n: int,
          opts: TraceOptions | None = None, catalog: Sequence[TransitionPoint] = (),
          pd: PuiseuxData | None = None) -> EquivalueLine:
    """Follow ds/dlambda = sign * exp(-i arg delta) away from origin along line n."""
    opts = opts or TraceOptions()
    pd = pd or beta1(params, origin)
    angles = emanation_angles(pd)
    if not 0 <= n < len(angles):
        raise ValueError(f"n must be in 0..{len(angles) - 1}")
    phi_n = angles[n]
    others = [t for t in catalog if t.s != origin.s]
    tol = quad_tol()

    r0 = opts.d_lambda0
    s = origin.s + r0 * np.exp(1j * phi_n)
    guess = pd.beta * math.sqrt(r0) * np.exp(0.5j * phi_n)
    cand = complex(np.sqrt(delta_sq(params, s)))
    d = cand if (cand * np.conj(guess)).real > 0 else -cand
    # exact integral from the TP to the seed point (endpoint singularity handled)
    back, _ = _segment_integral(params, s, origin.s, d, tol, ends_at_tp=True)
    J = -back
    sigma = 1.0 if (_unit(d) * np.exp(-1j * phi_n)).real > 0 else -1.0

    scale = 1.0 if params.hermitian else params.x

    def project(z, dz, Jz):
        # Newton correction transverse to the line: d(Im J) = Im(delta * i u eta) = sigma |delta| eta
        for _ in range(4):
            if scale * abs(Jz.imag) < 1e-3 * opts.drift_tol:
                break
            u = sigma * _unit(dz)
            eta = -Jz.imag / (sigma * abs(dz))
            z_corr = z + 1j * u * eta
            seg, dz = _segment_integral(params, z, z_corr, dz, tol)
            z, Jz = z_corr, Jz + seg
        if scale * abs(Jz.imag) > opts.drift_tol:
            raise DriftExceeded(f"gamma drift {scale * abs(Jz.imag):.2e} at s = {z}")
        return z, dz, Jz

    s, d, J = project(s, d, J)
    pts, Js = [origin.s, s], [0j, J]
    terminal, crossing, partner = "StepLimit", None, None

    def field_at(z, d_ref, z_ref):
        dz = continue_branch(params, z_ref, z, d_ref)
        return sigma * _unit(dz), dz

    for step in range(opts.max_steps):
        dist = min((abs(s - t.s) for t in others), default=math.inf)
        dist = min(dist, abs(s - origin.s) * 5)
        h = min(opts.d_lambda_max, max(opts.d_lambda0, 0.2 * dist))
        if others and dist < 5 * h:
            h = max(0.2 * dist, 1e-5)
        # RK4 on the unit direction field with branch carried from the current point
        k1, _ = field_at(s, d, s)
        k2, _ = field_at(s + 0.5 * h * k1, d, s)
        k3, _ = field_at(s + 0.5 * h * k2, d, s)
        k4, _ = field_at(s + h * k3, d, s)
        s_new = s + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        seg, d_new = _segment_integral(params, s, s_new, d, tol)
        J_new = J + seg

        # scheduled Newton re-projection, brought forward whenever drift builds up early
        if (step + 1) % opts.reproject_every == 0 or scale * abs(J_new.imag) > 0.1 * opts.drift_tol:
            s_new, d_new, J_new = project(s_new, d_new, J_new)

        if opts.stop_at_real_axis and s.imag > 0 >= s_new.imag:
            w = s.imag / (s.imag - s_new.imag)
            crossing = complex(s.real + w * (s_new.real - s.real), 0.0)
            pts.append(s_new)
            Js.append(J_new)
            terminal = "RealAxisCross"
            break
        s, d, J = s_new, d_new, J_new
        pts.append(s)
        Js.append(J)
        near = [t for t in others if abs(s - t.s) < opts.stop_radius]
        if near:
            terminal, partner = "TPReached", near[0]
            break
        if abs(d) < 1e-3:
            raise StallNearTP(f"direction field vanishes near s = {s}, no cataloged TP within reach")
        if s.imag > opts.im_cap:
            terminal = "ImagAsymptote"
            break
        if abs(s.real) > opts.re_cap:
            terminal = "StepLimit"
            break

    return EquivalueLine(origin=origin, n=n, angle=phi_n, points=np.asarray(pts),
                         integral=np.asarray(Js), terminal=terminal, crossing=crossing,
                         partner=partner, x=params.x)


def c_closed_form(k: int, alpha_bar: float) -> float:
    """Asymptotic constant c_k of the real-direction branch Im s = c_k/Re s - 2/(alpha_bar x)."""
    a = k * math.pi + math.pi / 4
    return a + math.sqrt(a) * (1 - math.log(k * alpha_bar * math.pi) / (4 * math.pi * k))


def real_axis_crossings(params: ReducedPulseParams, k_range) -> list[tuple[int, float, float]]:
    """(k, c_k, s_0k) with s_0k = alpha_bar x c_k / 2 (mirror at -s_0k)."""
    out = []
    for k in k_range:
        if k < 1:
            raise ValueError("closed form needs k >= 1")
        c = c_closed_form(k, params.alpha_bar)
        s0k = params.alpha_bar * params.x * c / 2 if not params.hermitian else math.inf
        out.append((k, c, s0k))
    return out


def line_invariant(params: ReducedPulseParams, s: complex) -> float:
    """c = Im(s^2)/2 + (2/(alpha_bar x)) Re s, constant on the real-direction asymptote."""
    return 0.5 * (s * s).imag + 2 * params.inv_x / params.alpha_bar * s.real
