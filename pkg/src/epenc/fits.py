"""Closed-form fits of phi/x and gamma_bar/x over the (x, alpha_bar) plane."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import OutOfRegion
from .model import ReducedPulseParams

SQRT_E = math.sqrt(math.e)
DATA_FILE = "fit_coefficients.txt"


@dataclass(frozen=True)
class NaturalCoords:
    X: float
    Y: float
    varphi: float
    eta: float
    R: float

    @property
    def oscillatory(self) -> bool:
        return 0 <= self.X <= 1 and 0 <= self.Y <= 1 and self.R < 1


@dataclass(frozen=True)
class FitCoefficients:
    """Parsed coefficient file; every value is kept as its printed decimal string too."""

    a: tuple[float, ...]  # a1..a4
    b0: float
    b1: float
    c0: float
    a0_poly: tuple[float, float, float]  # varphi^2, varphi, 1
    c_minus: np.ndarray  # [k, l] with k = 0..5, l = 0..2
    c_plus: np.ndarray  # [k, l] with k = 0..2, l = 0..3
    c_inf: np.ndarray  # [k, l] with k = 0..2, l = 0..2
    raw: dict[str, dict[str, tuple[str, ...]]]


def _read_text() -> str:
    return resources.files("epenc").joinpath("data").joinpath(DATA_FILE).read_text(encoding="utf-8")


def coefficients_digest() -> str:
    return hashlib.sha256(_read_text().encode("utf-8")).hexdigest()


def _parse(text: str) -> dict[str, dict[str, tuple[str, ...]]]:
    sections: dict[str, dict[str, tuple[str, ...]]] = {}
    current = None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = {}
            continue
        if current is None:
            raise ValueError(f"entry outside a section: {line!r}")
        key, *vals = line.split()
        for v in vals:
            Decimal(v)  # reject anything that is not a plain decimal
        sections[current][key] = tuple(vals)
    return sections


def _table(section: dict[str, tuple[str, ...]]) -> np.ndarray:
    """Rows keyed by k, columns printed from the highest l down; returns [k, l]."""
    ks = sorted(int(k) for k in section)
    width = len(next(iter(section.values())))
    out = np.zeros((len(ks), width))
    for k in ks:
        out[k] = [float(v) for v in reversed(section[str(k)])]
    return out


@lru_cache(maxsize=1)
def load_coefficients() -> FitCoefficients:
    raw = _parse(_read_text())
    q, ang, a0 = raw["phi_quartic"], raw["phi_angular"], raw["a0"]
    return FitCoefficients(
        a=tuple(float(q[f"a{i}"][0]) for i in range(1, 5)),
        b0=float(ang["b0"][0]), b1=float(ang["b1"][0]), c0=float(ang["c0"][0]),
        a0_poly=(float(a0["p2"][0]), float(a0["p1"][0]), float(a0["p0"][0])),
        c_minus=_table(raw["c_minus"]), c_plus=_table(raw["c_plus"]), c_inf=_table(raw["c_inf"]),
        raw=raw,
    )


def natural_coords_xy(x: float, alpha_bar: float) -> NaturalCoords:
    X = 0.0 if math.isinf(x) else 1.0 / x
    Y = alpha_bar / (2 * SQRT_E)
    if Y == 0:
        # eta -> 0 and R -> X along the X axis
        return NaturalCoords(X=X, Y=0.0, varphi=math.pi / 2, eta=0.0, R=X)
    q = X / Y
    varphi = math.atan(q)
    eta = 2 * SQRT_E / (math.sqrt(q * q + 4 * math.e) + q)  # rationalized: no cancellation at large q
    R = math.exp(-eta * eta / 2) * (Y * SQRT_E * eta + X)
    return NaturalCoords(X=X, Y=Y, varphi=varphi, eta=eta, R=R)


def natural_coords(params: ReducedPulseParams) -> NaturalCoords:
    return natural_coords_xy(params.x, params.alpha_bar)


def phi_fit(nc: NaturalCoords) -> float:
    """phi/x = -sqrt(pi/2) + sum a_k R^k + g(varphi) sin[pi (R + delta_R)] (left-member sign)."""
    if nc.R > 1:
        raise OutOfRegion(f"phi fit covers R <= 1, got R = {nc.R:.6g}")
    c = load_coefficients()
    R, vp = nc.R, nc.varphi
    poly = -math.sqrt(math.pi / 2) + sum(a * R ** (i + 1) for i, a in enumerate(c.a))
    g = c.b0 * np.cbrt((1 - 2 * vp / math.pi) ** 3 + (c.b1 / c.b0) ** 3)
    shift = 8 * c.c0 * (vp / math.pi) * R * (R - 1)
    return float(poly + g * math.sin(math.pi * (R + shift)))


def _poly2d(table: np.ndarray, r: float, vp: float) -> float:
    radial = np.arange(table.shape[0])[:, None]
    angular = np.arange(table.shape[1])[None, :]
    return float(np.sum(table * vp ** angular * r ** radial))


def a0_fit(varphi: float) -> float:
    p2, p1, p0 = load_coefficients().a0_poly
    return p2 * varphi ** 2 + p1 * varphi + p0


def gamma_bar_fit(nc: NaturalCoords) -> float:
    """Piecewise fit of gamma_bar/x: log-singular form below R = 2, rational form above."""
    if nc.R < 0:
        raise OutOfRegion("R must be non-negative")
    c = load_coefficients()
    r, vp = nc.R - 1.0, nc.varphi
    if nc.R >= 2:
        return 1.0 / _poly2d(c.c_inf, r, vp)
    a0 = a0_fit(vp)
    if r == 0:
        return a0
    table = c.c_minus if r < 0 else c.c_plus
    return a0 + _poly2d(table, r, vp) * _log_tan(nc.R)


def _log_tan(R: float) -> float:
    """log|r| tan(2 atan r) with r = R - 1, written as 2 r log|r| / (R (2 - R))."""
    # both factors of 1 - r^2 are exact in R, so the pole at R -> 0 cancels cleanly
    r = R - 1.0
    if R == 0:
        return 1.0  # log1p(-R)/R -> -1 and 2r/(2-R) -> -1
    log_abs = math.log1p(-R) if r < 0 else math.log1p(R - 2.0)
    return 2 * r * (log_abs / R) / (2.0 - R)
