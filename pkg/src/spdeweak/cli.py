"""Command-line interface: ``spdeweak <command> [options]``.

Every command writes CSV (default) or JSON to ``--out`` or stdout.  CSV output
starts with ``#``-prefixed lines echoing the configuration, then a header row
and the data rows; a fit, when present, is a trailing ``# fit`` record.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from . import acceptance
from . import experiments as ex
from .gaussian_calculus import GaussExp, Phi1, Phi2, Phi3, expectation, expectation_gap, limit_constant
from .monte_carlo import MCConfig, mc_expectation, mc_weak_error
from .series import SeriesPolicy
from .spectral_model import (
    Euler,
    Exact,
    Galerkin,
    Projected,
    alpha_moment,
    eigenvalue,
    strong_error_spectral,
    strong_error_temporal,
)

FAMILIES = ("phi1", "phi2", "phi3", "gauss_exp")


class UsageError(Exception):
    pass


# -- formatting ------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return fmt(v)
    if isinstance(v, float):
        return float(format(v, ".17g"))
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


class Result:
    """Rows plus optional fit and validation, renderable as CSV or JSON."""

    def __init__(self, config: dict, header: list[str], rows: list[list], fit=None, validation=None):
        self.config = config
        self.header = header
        self.rows = rows
        self.fit = fit
        self.validation = validation

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k in sorted(self.config):
            buf.write(f"# {k}={fmt(self.config[k])}\n")
        buf.write(",".join(self.header) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
        if self.fit is not None:
            buf.write("# fit," + ",".join(f"{k}={fmt(v)}" for k, v in self.fit.items()) + "\n")
        if self.validation is not None:
            buf.write("# validation," + ",".join(f"{k}={fmt(v)}" for k, v in self.validation.items()) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "config": _json_value(self.config),
            "rows": [dict(zip(self.header, _json_value(r))) for r in self.rows],
            "fit": _json_value(self.fit),
            "validation": _json_value(self.validation),
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _write(result: Result, args) -> None:
    text = result.to_json() if _format(args) == "json" else result.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _format(args) -> str:
    if args.format:
        return args.format
    if args.out and str(args.out).endswith(".json"):
        return "json"
    return "csv"


# -- argument helpers ---------------------------------------------------------------


def _ints(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _check_dt(dts):
    for d in dts:
        if not 0 < d < 1:
            raise UsageError(f"dt must lie in (0, 1), got {d}")


def _check_alpha(alpha):
    if alpha is None or not 0.25 < alpha <= 0.5:
        raise UsageError(f"alpha must lie in (1/4, 1/2], got {alpha}")


def _family(args, M=None):
    fam = args.family
    M = args.M if M is None else M
    if fam == "phi1":
        if M is None or M < 1 or args.eps is None or args.eps <= 0:
            raise UsageError("phi1 needs --M >= 1 and --eps > 0")
        return Phi1(args.eps, M)
    if fam == "phi2":
        if M is None or M < 2 or M % 2:
            raise UsageError(f"phi2 needs an even --M >= 2, got {M}")
        return Phi2(M)
    if fam == "phi3":
        _check_alpha(args.alpha)
        return Phi3(args.alpha, M or 1)
    return GaussExp()


def _policy(args) -> SeriesPolicy:
    return SeriesPolicy(abs_tol=args.tol)


def _base_config(args) -> dict:
    cfg = {"command": args.command, "version": __version__}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out", "format", "command") or v is None:
            continue
        cfg[k] = ",".join(fmt(x) for x in v) if isinstance(v, list) else v
    return cfg


def _law(args):
    if args.law == "exact":
        return Exact(args.T)
    if args.law == "galerkin":
        if args.N is None:
            raise UsageError("galerkin law needs --N")
        return Galerkin(args.T, args.N[0] if isinstance(args.N, list) else args.N)
    if args.dt is None:
        raise UsageError("euler law needs --dt")
    dt = args.dt[0] if isinstance(args.dt, list) else args.dt
    _check_dt([dt])
    return Euler(dt, args.k) if args.k is not None else Euler.at_time(args.T, dt)


def _fit_dict(x, y, coarse_first=True):
    try:
        fit, first = ex.fit_sweep(x, y, coarse_first)
    except ValueError:
        return None
    out = fit.as_dict()
    if first is not None:
        out.update({"first_slope": first.slope, "first_intercept": first.intercept, "first_r2": first.r_squared})
    return out


# -- commands -----------------------------------------------------------------------


def cmd_moments(args) -> int:
    law = _law(args)
    rows = []
    for a in args.alpha:
        if not 0 <= a <= 1:
            raise UsageError("alpha must lie in [0, 1]")
        m = alpha_moment(law, a, _policy(args))
        rows.append([a, m.value, m.diverges, m.status, m.cut])
    _write(Result(_base_config(args), ["alpha", "moment", "diverges", "status", "cut"], rows), args)
    return 0


def _grid(args):
    if args.scheme == "spectral":
        if not args.N:
            raise UsageError("spectral scheme needs --N")
        return args.N
    if not args.dt:
        raise UsageError("temporal scheme needs --dt")
    _check_dt(args.dt)
    for d in args.dt:
        if d > args.T:
            raise UsageError("dt must not exceed T")
    return args.dt


def cmd_weak_error(args) -> int:
    grid = _grid(args)
    fn = _family(args)
    pol = _policy(args)
    ref = Exact(args.T)
    rows, xs, ys = [], [], []
    max_z, ok = 0.0, True
    for h in grid:
        law = ex.approx_law(args.scheme, args.T, h)
        err = expectation_gap(fn, ref, law, pol)
        if args.scheme == "spectral":
            row = [h, float(eigenvalue(h)), err, "closed_form"]
            xs.append(float(h))
        else:
            row = [h, law.k, err, "closed_form"]
            xs.append(h)
        ys.append(err)
        if args.validate:
            cfg = MCConfig(args.samples, args.seed, dim=args.dim)
            est = mc_weak_error(ref, law, fn, cfg)
            target = expectation_gap(fn, Projected(ref, args.dim), Projected(law, args.dim), pol)
            z = est.z_score(target)
            max_z = max(max_z, z)
            ok &= z <= 3.0
            row += [target, est.mean, est.std_error, z]
        rows.append(row)
    header = (["N", "lambda_N"] if args.scheme == "spectral" else ["dt", "k"]) + ["weak_error", "method"]
    if args.validate:
        header += ["closed_form_dim", "mc_mean", "mc_se", "z"]
    fit = _fit_dict(xs, ys, coarse_first=args.scheme == "spectral") if len(xs) >= 3 else None
    validation = {"pass": ok, "max_z": max_z} if args.validate else None
    _write(Result(_base_config(args), header, rows, fit, validation), args)
    return 0 if ok else 1


def cmd_strong_error(args) -> int:
    grid = _grid(args)
    pol = _policy(args)
    rows, ys = [], []
    for h in grid:
        if args.scheme == "spectral":
            e = strong_error_spectral(args.T, h, pol)
        else:
            e = strong_error_temporal(args.T, h, pol)
        rows.append([h, e, "closed_form"])
        ys.append(e)
    header = ["N" if args.scheme == "spectral" else "dt", "strong_error", "method"]
    fit = _fit_dict(grid, ys, coarse_first=args.scheme == "spectral") if len(grid) >= 3 else None
    _write(Result(_base_config(args), header, rows, fit), args)
    return 0


def cmd_rates(args) -> int:
    pol = _policy(args)
    if args.suite == "theorem1":
        _check_alpha(args.alpha)
        if args.alpha >= 0.5:
            raise UsageError("rate suites need alpha < 1/2")
        grid = args.grid or list(acceptance.SPECTRAL_N if args.scheme == "spectral" else acceptance.TEMPORAL_M)
        sw = ex.theorem1_sweep(args.scheme, args.T, args.alpha, grid, pol)
        header = ["N", "lambda_N", "weak_error"] if args.scheme == "spectral" else ["M", "dt", "weak_error"]
        rows = [[g, x if args.scheme == "spectral" else args.T / g**2, e] for g, x, e in sw.rows()]
        fit = _fit_dict(sw.abscissae, sw.errors)
    else:
        if args.scheme == "spectral":
            grid = args.grid or list(acceptance.SPECTRAL_N)
        else:
            grid = [args.T / m**2 for m in (args.grid or acceptance.TEMPORAL_M)]
        sw = ex.prop2_sweep(args.scheme, args.T, grid, pol)
        header = ["N" if args.scheme == "spectral" else "dt", "weak_error"]
        rows = [[g, e] for g, _, e in sw.rows()]
        fit = _fit_dict(sw.abscissae, sw.errors, coarse_first=args.scheme == "spectral")
    _write(Result(_base_config(args), header, rows, fit), args)
    return 0


def cmd_constants(args) -> int:
    kind = args.kind
    if kind in ("C_alpha", "Cbar_alpha"):
        _check_alpha(args.alpha)
    lc = limit_constant(kind, args.alpha, _policy(args))
    _write(Result(_base_config(args), ["kind", "alpha", "value", "quad_error"], [[lc.kind, lc.alpha, lc.value, lc.quad_error]]), args)
    return 0


def cmd_mc_validate(args) -> int:
    law = _law(args)
    fn = _family(args)
    pol = _policy(args)
    cfg = MCConfig(args.samples, args.seed, dim=args.dim, antithetic=args.antithetic)
    full = expectation(fn, law, pol)
    target = expectation(fn, Projected(law, args.dim), pol)
    est = mc_expectation(law, fn, cfg)
    z = est.z_score(target)
    ok = z <= 3.0
    rows = [[args.family, args.law, full, target, est.mean, est.std_error, est.samples, z, ok]]
    header = ["family", "law", "closed_form", "closed_form_dim", "mc_mean", "mc_se", "samples", "z", "pass"]
    _write(Result(_base_config(args), header, rows, None, {"pass": ok, "max_z": z}), args)
    return 0 if ok else 1


def cmd_theorem0(args) -> int:
    pol = _policy(args)
    grid = args.grid or ([2**j for j in range(4, 10)] if args.scheme == "spectral" else [2**j for j in range(3, 10)])
    curve = ex.theorem0_gap(args.scheme, args.T, grid, phi1_eps=args.eps_grid or (), phi1_M=args.phi1_M or (), policy=pol)
    lim = ex.phi2_limits()["spectral_gap" if args.scheme == "spectral" else "temporal_gap"]
    head = "N" if args.scheme == "spectral" else "M"
    header = [head, "gap", "phi1_gap", "phi2_gap", "phi2_witness_M", "phi2_limit"]
    rows = [[h, g, a, b, w, lim] for h, g, a, b, w in zip(grid, curve.gap, curve.phi1, curve.phi2, curve.phi2_witness)]
    _write(Result(_base_config(args), header, rows), args)
    return 0


def _table_csv(config: dict, table) -> str:
    return Result(config, table.header, table.rows).to_csv()


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {"command": "report", "seed": args.seed, "version": __version__}
    index_rows, files = [], []
    all_ok = True
    for i in sorted(acceptance.CRITERIA):
        crit = acceptance.run(i, args.seed)
        sys.stderr.write(crit.summary() + "\n")
        all_ok &= crit.passed
        for name, table in crit.tables.items():
            fname = f"criterion{i}_{name}.csv"
            (out / fname).write_text(_table_csv({**config, "criterion": i, "table": name}, table), encoding="utf-8", newline="\n")
            files.append(fname)
        for chk in crit.checks:
            index_rows.append([i, crit.title, chk.name, chk.value, chk.target, chk.tolerance, chk.passed, chk.note])
    for chk in acceptance.prefactor_diagnostics():
        index_rows.append([5, "diagnostic (not a criterion)", chk.name, chk.value, chk.target, chk.tolerance, chk.passed, "corrected normalization"])
    header = ["criterion", "title", "check", "value", "target", "tolerance", "pass", "note"]
    checks = Result({**config, "table": "checks"}, header, index_rows)
    (out / "checks.csv").write_text(checks.to_csv(), encoding="utf-8", newline="\n")
    files.append("checks.csv")
    validation = {"pass": all_ok, "max_z": max((r[3] for r in index_rows if r[7] == "z-score"), default=0.0)}
    index = Result({**config, "files": sorted(files)}, header, index_rows, None, validation)
    (out / "index.json").write_text(index.to_json(), encoding="utf-8", newline="\n")
    if args.plot:
        from .plots import write_plots

        write_plots(out)
    return 0 if all_ok else 1


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spdeweak", description="Weak and strong errors for the discretized stochastic heat equation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--tol", type=float, default=1e-10, help="series tolerance")
        sp.add_argument("--T", type=float, default=1.0)
        return sp

    def family(sp, required=True):
        sp.add_argument("--family", choices=FAMILIES, required=required)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--M", type=int)
        sp.add_argument("--eps", type=float)

    def law(sp):
        sp.add_argument("--law", choices=("exact", "galerkin", "euler"), required=True)
        sp.add_argument("--N", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--k", type=int)

    sp = common(sub.add_parser("moments", help="E|X|_alpha^2 under a law"))
    law(sp)
    sp.add_argument("--alpha", type=_floats, required=True)
    sp.set_defaults(func=cmd_moments)

    sp = common(sub.add_parser("weak-error", help="weak errors along a grid"))
    sp.add_argument("--scheme", choices=ex.SCHEMES, required=True)
    family(sp)
    sp.add_argument("--N", type=_ints)
    sp.add_argument("--dt", type=_floats)
    sp.add_argument("--validate", action="store_true", help="cross-check every row by Monte Carlo")
    sp.add_argument("--samples", type=int, default=10**5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dim", type=int, default=256)
    sp.set_defaults(func=cmd_weak_error)

    sp = common(sub.add_parser("strong-error", help="mean-square errors along a grid"))
    sp.add_argument("--scheme", choices=ex.SCHEMES, required=True)
    sp.add_argument("--N", type=_ints)
    sp.add_argument("--dt", type=_floats)
    sp.set_defaults(func=cmd_strong_error)

    sp = common(sub.add_parser("rates", help="rate sweeps with log-log fits"))
    sp.add_argument("--suite", choices=("theorem1", "prop2"), required=True)
    sp.add_argument("--scheme", choices=ex.SCHEMES, required=True)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--grid", type=_ints, help="N values (spectral) or M values with dt = T/M^2 (temporal)")
    sp.set_defaults(func=cmd_rates)

    sp = common(sub.add_parser("constants", help="limit constants by quadrature"))
    sp.add_argument("--kind", choices=("C_alpha", "Cbar_alpha", "Phi2ExactLimit", "Phi2EulerLimit"), required=True)
    sp.add_argument("--alpha", type=float)
    sp.set_defaults(func=cmd_constants)

    sp = common(sub.add_parser("mc-validate", help="closed form vs Monte Carlo for one expectation"))
    family(sp)
    law(sp)
    sp.add_argument("--samples", type=int, default=10**5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dim", type=int, default=4096)
    sp.add_argument("--antithetic", action="store_true")
    sp.set_defaults(func=cmd_mc_validate)

    sp = common(sub.add_parser("theorem0", help="sup-error lower bounds over the bounded witnesses"))
    sp.add_argument("--scheme", choices=ex.SCHEMES, required=True)
    sp.add_argument("--grid", type=_ints, help="N values (spectral) or M values with dt = T/M^2 (temporal)")
    sp.add_argument("--eps-grid", type=_floats)
    sp.add_argument("--phi1-M", type=_ints)
    sp.set_defaults(func=cmd_theorem0)

    sp = sub.add_parser("report", help="run the acceptance suite and write a directory of artifacts")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out", required=True)
    sp.add_argument("--plot", action="store_true", help="also write SVG convergence plots")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if getattr(args, "samples", 1) < 1:
            raise UsageError("--samples must be positive")
        if getattr(args, "T", 1.0) <= 0:
            raise UsageError("--T must be positive")
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"spdeweak: error: {e}\n")
        return 2
    except ValueError as e:
        sys.stderr.write(f"spdeweak: error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
