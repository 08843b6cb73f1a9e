"""Command-line front end emitting CSV/JSON plot data."""

from __future__ import annotations

import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import EpencError

_PI_FORM = re.compile(r"^\s*([0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$")


def parse_theta(text: str) -> float:
    """Accept plain numbers or pi multiples such as "4pi", "6*pi", "pi/2"."""
    m = _PI_FORM.match(text.lower())
    if m:
        mult = float(m.group(1)) if m.group(1) not in ("", ".") else 1.0
        div = float(m.group(2)) if m.group(2) else 1.0
        return mult * math.pi / div
    return float(text)


def parse_x(text: str) -> float:
    if text.strip().lower() in ("inf", "hermitian", "infinity"):
        return math.inf
    return float(text)


class ThetaType(click.ParamType):
    name = "theta"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            v = parse_theta(value)
        except ValueError:
            self.fail(f"{value!r} is neither a number nor a multiple of pi", param, ctx)
        if not v > 0:
            self.fail("theta must be positive", param, ctx)
        return v


class XType(click.ParamType):
    name = "x"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            v = parse_x(value)
        except ValueError:
            self.fail(f"{value!r} is not a number or 'inf'", param, ctx)
        if not v > 0:
            self.fail("x must be positive", param, ctx)
        return v


class RangeType(click.ParamType):
    """lo:hi closed interval."""

    name = "range"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            lo, hi = (float(v) for v in value.split(":"))
        except ValueError:
            self.fail(f"expected lo:hi, got {value!r}", param, ctx)
        if not (lo > 0 and hi >= lo):
            self.fail("ranges must be positive and ordered", param, ctx)
        return lo, hi


THETA, XVAL, RANGE = ThetaType(), XType(), RangeType()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _dump_json(data) -> str:
    return json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n"


def _rows_to_json(header, rows) -> str:
    return _dump_json([dict(zip(header, r)) for r in rows])


def _emit(text: str, out: str | None, meta: dict) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8")
    # run metadata lives beside the data so the data file stays byte-stable
    Path(str(path) + ".meta.json").write_text(_dump_json(meta), encoding="utf-8")


def _params(x, alpha_bar, theta=4 * math.pi):
    from .model import ReducedPulseParams

    try:
        return ReducedPulseParams(x, alpha_bar, theta)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


def _meta(ctx: click.Context) -> dict:
    import datetime
    from .model import quad_tol

    return {"command": ctx.command_path, "params": {k: _json_safe(v) if not isinstance(v, tuple) else list(v)
                                                    for k, v in ctx.params.items()},
            "version": __version__, "tolerance": quad_tol(),
            "utc": datetime.datetime.now(datetime.timezone.utc).isoformat()}


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="epenc")
def main():
    """Complex-time analysis of exceptional-point encircling (EPENC_TOL overrides tolerances)."""


def _run(fn):
    """Map computational failures to exit code 1 with a one-line diagnostic."""
    try:
        return fn()
    except EpencError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


# --- tps ----------------------------------------------------------------------------

@main.command()
@click.option("--x", "x", type=XVAL, required=True, help="Peak strength x (or 'inf').")
@click.option("--alpha-bar", type=float, required=True, help="Effective chirp.")
@click.option("--kmax", type=click.IntRange(0), default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def tps(ctx, x, alpha_bar, kmax, out, fmt):
    """Catalog transition points with residua and Puiseux phases."""
    p = _params(x, alpha_bar)

    def work():
        from .puiseux import beta1, beta2_coal
        from .residua import gamma_phi_at
        from .tpoints import enumerate_tps

        cat = enumerate_tps(p, kmax)
        rows = []
        for tp in cat:
            res = gamma_phi_at(p, tp, cat)
            pd = beta2_coal(p, tp) if tp.role == "coalescent" else beta1(p, tp)
            rows.append([tp.k, tp.side, tp.s.real, tp.s.imag, tp.residual, res.gamma, res.phi, pd.phase])
        return rows

    rows = _run(work)
    header = ["k", "side", "re_s", "im_s", "residual", "gamma", "phi", "arg_beta1"]
    _emit(_csv(header, rows) if fmt == "csv" else _rows_to_json(header, rows), out, _meta(ctx))


# --- trace --------------------------------------------------------------------------

@main.command()
@click.option("--x", "x", type=XVAL, required=True)
@click.option("--alpha-bar", type=float, required=True)
@click.option("--kmax", type=click.IntRange(0), default=2, show_default=True,
              help="Trace lines from central TPs and right-hand members up to this k.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def trace(ctx, x, alpha_bar, kmax, out, fmt):
    """Trace equivalue lines and export their vertices."""
    p = _params(x, alpha_bar)

    def work():
        from .equivalue import trace as trace_line
        from .puiseux import beta1, beta2_coal, emanation_angles
        from .tpoints import enumerate_tps

        cat = enumerate_tps(p, max(kmax, 1) + 1)
        rows = []
        for tp in cat:
            if tp.k > kmax or tp.side == "left":
                continue
            pd = beta2_coal(p, tp) if tp.role == "coalescent" else beta1(p, tp)
            for n in range(len(emanation_angles(pd))):
                line = trace_line(p, tp, n, catalog=cat, pd=pd)
                for s, g in zip(line.points, line.gamma_drift):
                    rows.append([tp.k, tp.side, n, s.real, s.imag, g, line.terminal])
        return rows

    rows = _run(work)
    header = ["k", "side", "n", "re_s", "im_s", "gamma_drift", "terminal"]
    _emit(_csv(header, rows) if fmt == "csv" else _rows_to_json(header, rows), out, _meta(ctx))


# --- survive ------------------------------------------------------------------------

def _survive_payload(x, alpha_bar, theta, mode, include_asymptotic, kmax) -> dict:
    from .amplitude import survival_probability
    from .oracle import first_order_quadrature, propagate_tdse, perturbation_series

    p = _params(x, alpha_bar, theta)
    payload: dict = {}
    if mode in ("analytic", "all"):
        payload["analytic"] = survival_probability(p, include_asymptotic=include_asymptotic,
                                                   K=max(kmax, 1)).to_dict()
    if mode in ("quadrature", "all"):
        v = first_order_quadrature(p)
        f = perturbation_series(p, 1, check_grid=False).f
        payload["quadrature"] = {"v": [v.real, v.imag], "f": f, "p1": f * f * abs(v) ** 2}
    if mode in ("tdse", "all"):
        r = propagate_tdse(p)
        payload["tdse"] = {"a1": [r.a1.real, r.a1.imag], "p1": r.p1}
    return payload


@main.command()
@click.option("--x", "x", type=XVAL, required=True)
@click.option("--alpha-bar", type=float, required=True)
@click.option("--theta", type=THETA, required=True, help="Pulse area: number or e.g. 4pi.")
@click.option("--mode", type=click.Choice(["analytic", "quadrature", "tdse", "all"]),
              default="analytic", show_default=True)
@click.option("--kmax", type=click.IntRange(1), default=8, show_default=True,
              help="Asymptotic pairs summed with --include-asymptotic.")
@click.option("--include-asymptotic", is_flag=True, help="Add the asymptotic TP pairs to v.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def survive(ctx, x, alpha_bar, theta, mode, kmax, include_asymptotic, out):
    """Survival probability at one parameter point (JSON)."""
    payload = _run(lambda: _survive_payload(x, alpha_bar, theta, mode, include_asymptotic, kmax))
    _emit(_dump_json(payload), out, _meta(ctx))


# --- scan ---------------------------------------------------------------------------

SCAN_HEADER = ["x", "alpha_bar", "theta", "R", "layout", "p1_analytic", "p1_quadrature",
               "gamma_bar_over_x", "phi_over_x", "margin"]


def _scan_point(args) -> list:
    x, ab, theta, mode = args
    from .amplitude import survival_probability
    from .model import ReducedPulseParams
    from .oracle import first_order_quadrature, perturbation_series
    from .tpoints import classify_layout

    p = ReducedPulseParams(x, ab, theta)
    tag = classify_layout(p)
    row = [x, ab, theta, tag.R, tag.kind.value, None, None, None, None, None]
    try:
        if mode in ("analytic", "all"):
            r = survival_probability(p)
            row[5], row[7], row[8], row[9] = r.p1, r.gamma_bar_over_x, r.phi_over_x, r.margin
        if mode in ("quadrature", "all"):
            v = first_order_quadrature(p)
            f = perturbation_series(p, 1, check_grid=False).f
            row[6] = f * f * abs(v) ** 2
    except EpencError as exc:
        row[4] = f"{tag.kind.value}:{type(exc).__name__}"
    return row


def _axis(rng, fixed, n):
    if rng is None:
        return [fixed]
    lo, hi = rng
    return list(np.linspace(lo, hi, n)) if n > 1 else [lo]


@main.command()
@click.option("--x", "x", type=XVAL, default=None, help="Fixed x (alternative to --x-range).")
@click.option("--x-range", type=RANGE, default=None)
@click.option("--alpha-bar", type=float, default=None, help="Fixed alpha_bar.")
@click.option("--alpha-range", type=RANGE, default=None)
@click.option("--theta", type=THETA, multiple=True, required=True)
@click.option("--grid", type=str, default="1,51", show_default=True, help="Grid sizes NX,NALPHA.")
@click.option("--mode", type=click.Choice(["analytic", "quadrature", "all"]), default="analytic",
              show_default=True)
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def scan(ctx, x, x_range, alpha_bar, alpha_range, theta, grid, mode, workers, out, fmt):
    """Grid scan over (x, alpha_bar, theta); rows follow grid order."""
    try:
        nx, na = (int(v) for v in grid.split(","))
    except ValueError:
        raise click.BadParameter("expected NX,NALPHA", param_hint="--grid")
    if nx < 1 or na < 1:
        raise click.BadParameter("grid sizes must be >= 1", param_hint="--grid")
    if (x is None) == (x_range is None):
        raise click.UsageError("give exactly one of --x or --x-range")
    if (alpha_bar is None) == (alpha_range is None):
        raise click.UsageError("give exactly one of --alpha-bar or --alpha-range")
    xs = _axis(x_range, x, nx)
    abs_ = _axis(alpha_range, alpha_bar, na)
    jobs = [(float(xv), float(av), float(th), mode) for th in theta for xv in xs for av in abs_]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_scan_point(j) for j in jobs]
    text = _csv(SCAN_HEADER, rows) if fmt == "csv" else _rows_to_json(SCAN_HEADER, rows)
    _emit(text, out, _meta(ctx))


# --- fitcheck -----------------------------------------------------------------------

def _fit_point(args) -> list | None:
    X, Y, quantity = args
    from .fits import gamma_bar_fit, natural_coords_xy, phi_fit
    from .model import ReducedPulseParams
    from .residua import gamma_bar_over_x, gamma_phi_at
    from .tpoints import find_central

    x = math.inf if X == 0 else 1 / X
    ab = 2 * math.sqrt(math.e) * Y
    nc = natural_coords_xy(x, ab)
    if quantity == "phi" and nc.R >= 1:
        return None
    if quantity == "gamma" and nc.R >= 5:
        return None
    p = ReducedPulseParams(x, ab)
    try:
        cen = find_central(p)
        res = gamma_phi_at(p, cen[0], cen)
    except EpencError:
        return [nc.R, nc.varphi, None, None, None]
    if quantity == "phi":
        # the fit describes the left-hand member, phi(s0_bar) = -phi(s0)
        fit, pipe = phi_fit(nc), -res.phi_over_x
    else:
        fit, pipe = gamma_bar_fit(nc), gamma_bar_over_x(p, res)
    return [nc.R, nc.varphi, fit, pipe, fit - pipe]


def fitcheck_rows(quantity: str, n: int, y_max: float, workers: int = 1) -> list[list]:
    Xs = np.linspace(0.0, 0.98, n)
    Ys = np.linspace(0.02, y_max, n)
    jobs = [(float(X), float(Y), quantity) for X in Xs for Y in Ys]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_fit_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_fit_point(j) for j in jobs]
    return [r for r in out if r is not None]


@main.command()
@click.option("--quantity", type=click.Choice(["phi", "gamma"]), default="gamma", show_default=True)
@click.option("--grid", type=click.IntRange(2), default=40, show_default=True,
              help="Points per axis of the (X, Y) grid.")
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def fitcheck(ctx, quantity, grid, workers, out, fmt):
    """Compare the closed-form fits against the residua pipeline on an (X, Y) grid."""
    y_max = 1.0 if quantity == "phi" else 4.9
    rows = fitcheck_rows(quantity, grid, y_max, workers)
    header = ["R", "varphi", "fit", "pipeline", "error"]
    errs = np.array([r[4] for r in rows if r[4] is not None])
    if errs.size:
        click.echo(f"{quantity}: {errs.size} points, max |error| {np.abs(errs).max():.3e}, "
                   f"std {errs.std():.3e}", err=True)
    _emit(_csv(header, rows) if fmt == "csv" else _rows_to_json(header, rows), out, _meta(ctx))


# --- oracle-series ------------------------------------------------------------------

@main.command("oracle-series")
@click.option("--x", "x", type=XVAL, required=True)
@click.option("--alpha-bar", type=float, required=True)
@click.option("--theta", type=THETA, required=True)
@click.option("--order", "--kmax", "order", type=click.IntRange(1), default=9, show_default=True,
              help="Highest perturbation order J (odd).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def oracle_series(ctx, x, alpha_bar, theta, order, out, fmt):
    """Perturbation-series table (j, |v_j|) and odd partial sums."""
    if order % 2 == 0:
        raise click.BadParameter("the highest order must be odd", param_hint="--order")
    p = _params(x, alpha_bar, theta)

    def work():
        from .oracle import perturbation_series

        return perturbation_series(p, order)

    res = _run(work)
    if fmt == "csv":
        text = res.to_csv()
    else:
        text = _dump_json({"orders": [[v.real, v.imag] for v in res.orders],
                           "p1_partial": res.p1_partial, "f": res.f,
                           "ratio_estimate": res.ratio_estimate, "converged": res.converged})
    _emit(text, out, _meta(ctx))


if __name__ == "__main__":
    main()
