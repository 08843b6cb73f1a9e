"""Independent numerical references on the real time axis.

* first_order_quadrature: adaptive ODE quadrature of the first-order amplitude
* perturbation_series: all orders of the nested integrals on a spectral panel grid
* propagate_tdse: direct propagation of the 2x2 non-Hermitian RWA system
* fit_finite_theta: finite-area fits of first-order amplitudes across the separator
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import solve_ivp
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import FitIllConditioned, GridTooCoarse, StepFailure
from .model import ReducedPulseParams, delta_sq, nonadiabatic_coupling
from .tpoints import Layout, classify_layout

DEFAULT_S = 10.0
NOISE_FLOOR = 1e-13  # first-order amplitudes below this are quadrature noise


def _delta_axis(params: ReducedPulseParams, s):
    """delta on the real axis; principal root, continuous for x > 1 by time symmetry."""
    return np.sqrt(delta_sq(params, np.asarray(s, dtype=float)))


def _coupling_axis(params: ReducedPulseParams, s):
    return nonadiabatic_coupling(params, np.asarray(s, dtype=float))


def _support(params: ReducedPulseParams, S: float | None) -> float:
    """Half-width where the coupling envelope exp(-s^2/2)(1 + s^2) times the growth
    exp(kappa |s|/x) has fallen below 1e-14 of its peak value."""
    if S is not None:
        return float(S)
    k_over_x = params.kappa * params.inv_x
    S = DEFAULT_S
    while -S * S / 2 + 2 * math.log1p(S) + k_over_x * S > math.log(1e-14) and S < 80:
        S *= 1.25
    return S


# --- first order --------------------------------------------------------------------

def first_order_quadrature(params: ReducedPulseParams, S: float | None = None,
                           rtol: float = 1e-12, atol: float = 1e-15) -> complex:
    """v = -int exp(i kappa J(s)) N(s) ds with J(s) = int_0^s delta, by DOP853.

    The split integral and the amplitude are carried together as one ODE
    system, outward from s = 0 in both directions.
    """
    if params.x <= 1:
        raise ValueError("real-axis oracle requires x > 1")
    S = _support(params, S)
    kap = params.kappa

    def rhs(s, y):
        d = complex(_delta_axis(params, s))
        n = complex(_coupling_axis(params, s))
        return [d, -np.exp(1j * kap * y[0]) * n]

    ends = []
    for end in (S, -S):
        sol = solve_ivp(rhs, (0.0, end), [0j, 0j], method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise StepFailure(sol.message)
        ends.append(sol.y[1, -1])
    return complex(ends[0] - ends[1])


# --- spectral panel grid ------------------------------------------------------------

@dataclass(frozen=True)
class PanelGrid:
    """Chebyshev-Lobatto panels on [-S, S] with shared panel end nodes."""

    S: float
    width: float
    nodes: int
    s: np.ndarray  # (panels, nodes)
    weights_cum: np.ndarray  # (nodes, nodes) local cumulative integration on one panel

    @classmethod
    def build(cls, S: float, width: float = 0.1, nodes: int = 16) -> PanelGrid:
        panels = int(round(2 * S / width))
        if panels % 2:
            panels += 1
        width = 2 * S / panels
        t = -np.cos(np.pi * np.arange(nodes) / (nodes - 1))  # ascending, includes +-1
        vander = cheb.chebvander(t, nodes - 1)
        inv = np.linalg.inv(vander)
        # column j: cumulative integral from -1 of the interpolant of the j-th unit vector
        cum = np.empty((nodes, nodes))
        for j in range(nodes):
            coef = cheb.chebint(inv[:, j], lbnd=-1)
            cum[:, j] = cheb.chebval(t, coef)
        left = -S + width * np.arange(panels)
        s = left[:, None] + 0.5 * width * (t[None, :] + 1)
        return cls(S=S, width=width, nodes=nodes, s=s, weights_cum=cum * width / 2)

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """int_{-S}^{s} values at every node."""
        local = values @ self.weights_cum.T
        offsets = np.concatenate([[0], np.cumsum(local[:-1, -1])])
        return local + offsets[:, None]

    @property
    def origin_index(self) -> tuple[int, int]:
        # s = 0 is the right end node of the middle-left panel
        return self.s.shape[0] // 2 - 1, self.nodes - 1


@dataclass
class SeriesResult:
    orders: list[complex]  # v_1 .. v_J
    odd_partial_sums: list[complex]
    f: float
    converged: bool
    ratio_estimate: float
    grid_change: float = 0.0
    params: ReducedPulseParams | None = None

    @property
    def p1_partial(self) -> list[float]:
        return [self.f ** 2 * abs(v) ** 2 for v in self.odd_partial_sums]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "abs_v_j", "re_v_j", "im_v_j"])
        for j, v in enumerate(self.orders, start=1):
            w.writerow([j, repr(abs(v)), repr(v.real), repr(v.imag)])
        return buf.getvalue()


def _series_on(params: ReducedPulseParams, grid: PanelGrid, J: int) -> tuple[list[complex], float]:
    s = grid.s
    d = _delta_axis(params, s)
    n = _coupling_axis(params, s)
    C = grid.cumulative(d)
    i0 = grid.origin_index
    Jgrid = C - C[i0]
    kap = params.kappa
    phase = np.exp(1j * kap * Jgrid)
    prev = np.ones_like(phase)
    orders = []
    for j in range(1, J + 1):
        sign = (-1) ** j
        kernel = (phase if sign < 0 else np.exp(-1j * kap * Jgrid)) * n
        cur = sign * grid.cumulative(kernel * prev)
        orders.append(complex(cur[-1, -1]))
        prev = cur
    # normalization from the same grid: Im J(S) - S/x converges to Im C
    im_c = float(Jgrid[-1, -1].imag) - grid.S * params.inv_x
    return orders, math.exp(kap * im_c)


def perturbation_series(params: ReducedPulseParams, J: int, S: float | None = None,
                        width: float = 0.1, nodes: int = 16, check_grid: bool = True,
                        rel_tol: float = 1e-6) -> SeriesResult:
    """Orders v_j(S) of v_j(s) = (-1)^j int^s exp(-i kappa (-1)^j J) v_{j-1} N ds, v_0 = 1."""
    if J < 1 or J % 2 == 0:
        raise ValueError("J must be odd and >= 1")
    if params.x <= 1:
        raise ValueError("real-axis oracle requires x > 1")
    S = _support(params, S)
    orders, f = _series_on(params, PanelGrid.build(S, width, nodes), J)
    change = 0.0
    if check_grid:
        fine, _ = _series_on(params, PanelGrid.build(S, width / 2, nodes), J)
        scale = max(abs(fine[-1]), 1e-300)
        change = abs(fine[-1] - orders[-1]) / scale
        if change > rel_tol:
            raise GridTooCoarse(f"v_{J} changed by {change:.2e} (relative) on grid doubling")
    sums, acc = [], 0j
    for j, v in enumerate(orders, start=1):
        if j % 2:
            acc += v
            sums.append(acc)
    mags = np.abs(orders[::2])
    ratios = mags[1:] / mags[:-1] if len(mags) > 1 else np.array([math.nan])
    ratio = float(np.exp(np.mean(np.log(ratios)))) if np.all(ratios > 0) else math.nan
    converged = bool(len(sums) > 1 and abs(orders[-1]) < 1e-3 * abs(sums[-1]))
    return SeriesResult(orders=orders, odd_partial_sums=sums, f=f, converged=converged,
                        ratio_estimate=ratio, grid_change=change, params=params)


# --- direct propagation -------------------------------------------------------------

@dataclass
class TDSEResult:
    a1: complex
    p1: float
    s: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)


def propagate_tdse(params: ReducedPulseParams, S: float | None = None,
                   rtol: float = 1e-12, atol: float = 1e-14, dense: bool = False) -> TDSEResult:
    """Solve dc/ds = i kappa H(s) c, c(-S) = (1, 0), in the interaction picture.

    H = [[0, w(s)], [w(s), alpha_bar s/2 + i/x]] with w = exp(-s^2/2)/2; the
    diagonal detuning is removed by b2 = c2 exp(-i kappa D(s)),
    D = alpha_bar s^2/4 + i s/x, so only the Gaussian-limited coupling drives
    the solver.  The free decay of the excited state is restored when the
    norm is reported.
    """
    S = DEFAULT_S if S is None else float(S)
    kap, ab, ix = params.kappa, params.alpha_bar, params.inv_x

    def D(s):
        return ab * s * s / 4 + 1j * s * ix

    def rhs(s, b):
        w = 0.5 * math.exp(-s * s / 2)
        e = np.exp(1j * kap * D(s))
        return [1j * kap * w * e * b[1], 1j * kap * w * b[0] / e]

    b0 = [1 + 0j, 0j]
    sol = solve_ivp(rhs, (-S, S), b0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=False, t_eval=np.linspace(-S, S, 401) if dense else None)
    if not sol.success:
        raise StepFailure(sol.message)
    b1, b2 = sol.y[0], sol.y[1]
    # |c2|^2 = |b2|^2 |exp(i kappa D)|^2 = |b2|^2 exp(-2 kappa s/x)
    norm = np.abs(b1) ** 2 + np.abs(b2) ** 2 * np.exp(-2 * kap * sol.t * ix)
    a1 = complex(b1[-1])
    return TDSEResult(a1=a1, p1=abs(a1) ** 2, s=sol.t, norm=norm)


# --- finite-theta fits --------------------------------------------------------------

@dataclass
class FiniteThetaFit:
    x: float
    alpha_bar: float
    theta_center: float
    layout: str
    prefactor: float
    prefactor_err: float
    gamma_over_x: float
    phi_over_x: float = math.nan
    phase_fixed: bool = False


@dataclass
class FiniteThetaReport:
    fits: list[FiniteThetaFit]

    def side_stats(self, theta_center: float, layout: str) -> tuple[float, float, int]:
        """Mean prefactor, its standard error and the sample size on one side."""
        vals = np.array([f.prefactor for f in self.fits
                         if f.theta_center == theta_center and f.layout == layout])
        if vals.size == 0:
            return math.nan, math.nan, 0
        err = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
        return float(vals.mean()), err, int(vals.size)


def _window(theta: float, n: int = 9, rel: float = 0.1) -> np.ndarray:
    return theta * np.linspace(1 - rel, 1 + rel, n)


def fit_finite_theta(params_line: Sequence[ReducedPulseParams], theta_list: Sequence[float],
                     n_window: int = 9, phi_guess: dict[float, float] | None = None) -> FiniteThetaReport:
    """Fit first-order amplitudes on theta windows to the layout's asymptotic form.

    odd:  v(theta) = -a exp(-kappa g)
    even: v(theta) = -a exp(-kappa g) cos(kappa p)
    with kappa = theta/sqrt(2 pi); a should approach pi/3 (odd) and 2 pi/3 (even).
    """
    if list(theta_list) != sorted(theta_list):
        raise ValueError("theta list must be ascending")
    fits = []
    for base in params_line:
        layout = classify_layout(base).kind
        for th in theta_list:
            thetas = _window(th, n_window)
            kaps = thetas / math.sqrt(2 * math.pi)
            vals = np.array([first_order_quadrature(ReducedPulseParams(base.x, base.alpha_bar, t)).real
                             for t in thetas])
            if np.max(np.abs(vals)) < NOISE_FLOOR or not np.all(np.isfinite(vals)):
                raise FitIllConditioned(f"amplitudes below quadrature precision at x = {base.x}, theta = {th}")
            if layout is Layout.EVEN:
                fit = _fit_even(kaps, vals, base, th, phi_guess)
            else:
                if np.any(vals >= 0):
                    raise FitIllConditioned(f"odd-form fit needs a sign-definite amplitude at x = {base.x}")
                A = np.vstack([np.ones_like(kaps), -kaps]).T
                coef, *_ = np.linalg.lstsq(A, np.log(-vals), rcond=None)
                resid = np.log(-vals) - A @ coef
                dof = max(len(kaps) - 2, 1)
                cov = np.linalg.inv(A.T @ A) * (resid @ resid) / dof
                a = math.exp(coef[0])
                fit = FiniteThetaFit(base.x, base.alpha_bar, th, "odd", a,
                                     a * math.sqrt(cov[0, 0]), float(coef[1]))
            fits.append(fit)
    return FiniteThetaReport(fits)


def _curve_fit(model, kaps, vals, start, sigma):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(model, kaps, vals, p0=start, sigma=sigma, maxfev=20000)
    except RuntimeError:
        return None
    chi2 = float(np.sum(((model(kaps, *popt) - vals) / sigma) ** 2))
    return popt, pcov, chi2


def _fit_even(kaps, vals, base, th, phi_guess) -> FiniteThetaFit:
    from .residua import gamma_phi_at
    from .tpoints import find_central

    cen = find_central(base)
    res = gamma_phi_at(base, cen[0], cen)
    g0 = res.integral.imag
    p0 = res.integral.real if phi_guess is None else phi_guess.get(base.x, res.integral.real)
    # weight by the asymptotic envelope so the small end of the window counts
    sigma = np.exp(-kaps * g0)

    def model(k, a, g, p):
        return -a * np.exp(-k * g) * np.cos(k * p)

    # several phase seeds: a node inside the window makes the landscape multimodal
    best = None
    for shift in np.linspace(-0.3, 0.3, 7):
        out = _curve_fit(model, kaps, vals, [2 * math.pi / 3, g0, p0 * (1 + shift)], sigma)
        if out is not None and np.all(np.isfinite(out[1])) and out[0][0] > 0:
            if best is None or out[2] < best[2]:
                best = out
    if best is not None:
        popt, pcov, _ = best
        return FiniteThetaFit(base.x, base.alpha_bar, th, "even", float(popt[0]),
                              float(math.sqrt(pcov[0, 0])), float(popt[1]), float(popt[2]))
    # phase degenerate (phi -> 0 at the separator): pin it at the pipeline value
    out = _curve_fit(lambda k, a, g: model(k, a, g, p0), kaps, vals, [2 * math.pi / 3, g0], sigma)
    if out is None or not np.all(np.isfinite(out[1])):
        raise FitIllConditioned(f"singular covariance at x = {base.x}, theta = {th}")
    popt, pcov, _ = out
    return FiniteThetaFit(base.x, base.alpha_bar, th, "even", float(popt[0]),
                          float(math.sqrt(pcov[0, 0])), float(popt[1]), float(p0), phase_fixed=True)
