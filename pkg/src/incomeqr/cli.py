"""Command-line interface: ``incomeqr {fit,diagnose,predict,simulate,dist}``.

Reports go to ``--output`` (or stdout) as JSON, or as CSV with
``--format csv``. A failing command still writes a JSON report carrying an
``error`` block and exits with status 1; usage errors exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from incomeqr import __version__
from incomeqr.diagnostics import prediction_interval, residual_report, simulated_envelope
from incomeqr.distributions import ClassicalDA, ClassicalSM, QuantileDA, QuantileSM
from incomeqr.errors import DataError, IncomeQRError
from incomeqr.montecarlo import DEFAULT_N_GRID, DEFAULT_TAU_GRID, ScenarioConfig, run_study
from incomeqr.regression import (
    DesignData,
    Family,
    FitResult,
    Link,
    RegressionSpec,
    coefficient_table,
    design_matrix,
    fit,
)

_FAMILY_CHOICES = {"sm": Family.QSM, "dagum": Family.QDA}


class CliError(IncomeQRError):
    """Invalid flag combination detected before any computation."""


# --------------------------------------------------------------------------
# ingestion


def ingest_csv(path, response_column: str, covariate_columns, intercept: bool = True):
    """Read a header-first CSV into :class:`DesignData`.

    Rows are numbered from 1 (the first line after the header). Returns the
    data and the covariate names used.
    """
    covariate_columns = list(covariate_columns)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: file is empty") from None
            rows = [r for r in reader if any(cell.strip() for cell in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    for col in [response_column, *covariate_columns]:
        if col not in header:
            raise DataError(f"column {col!r} not found in header {header}")
    if not rows:
        raise DataError(f"{path}: no data rows")
    idx_y = header.index(response_column)
    idx_x = [header.index(c) for c in covariate_columns]
    y = np.empty(len(rows))
    X = np.empty((len(rows), len(idx_x)))
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} fields, found {len(row)}")
        for dest, j, col in [(None, idx_y, response_column)] + [(k, j, c) for k, (j, c) in enumerate(zip(idx_x, covariate_columns))]:
            try:
                value = float(row[j])
            except ValueError:
                raise DataError(f"row {i}, column {col!r}: cannot parse {row[j]!r} as a number") from None
            if not math.isfinite(value):
                raise DataError(f"row {i}, column {col!r}: non-finite value {row[j]!r}")
            if dest is None:
                if not value > 0:
                    raise DataError(f"row {i}: response {col!r} must be > 0, got {row[j]!r}")
                y[i - 1] = value
            else:
                X[i - 1, dest] = value
    return DesignData(design_matrix(X, intercept) if idx_x or intercept else X, y), covariate_columns


# --------------------------------------------------------------------------
# helpers


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_rows(text: str) -> list[int]:
    """``"1,4,10-12"`` -> ``[1, 4, 10, 11, 12]`` (1-based data rows)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return sorted(set(out))


def _clean(obj):
    """Replace non-finite floats and numpy scalars for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}" if math.isfinite(v) else ""
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args, tau: float, covariates) -> RegressionSpec:
    return RegressionSpec(_FAMILY_CHOICES[args.family], tau, Link.parse(args.link),
                          intercept=True, covariate_names=tuple(covariates))


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) in (None, [], "")]
    if missing:
        raise CliError(f"{args.command} requires {', '.join(missing)}")


def _fit_block(res: FitResult) -> dict:
    return {
        "tau": res.tau,
        "coefficients": coefficient_table(res),
        "loglik": res.loglik,
        "aic": res.aic,
        "bic": res.bic,
        "n_params": res.n_params,
        "nobs": res.nobs,
        "convergence": {
            "converged": res.converged,
            "iterations": res.iterations,
            "grad_norm": res.grad_norm,
            "message": res.message,
            "covariance_available": res.covariance is not None,
            "covariance_message": res.covariance_message,
        },
    }


def _load(args):
    _require(args, "input", "response", "covariates")
    return ingest_csv(args.input, args.response, args.covariates)


# --------------------------------------------------------------------------
# subcommands


def run_fit(args) -> tuple[dict, str | None]:
    data, covs = _load(args)
    taus = args.tau_grid if args.tau_grid else [args.tau]
    if taus == [None]:
        raise CliError("fit requires --tau or --tau-grid")
    fits = []
    errors = []
    prev = None
    for tau in taus:
        spec = _spec_from_args(args, tau, covs)
        res = fit(spec, data, init=prev.estimates if (args.warm_start and prev is not None) else None)
        fits.append(res)
        if res.converged:
            prev = res
        else:
            errors.append(f"fit at tau={tau:g} did not converge: {res.message}")
    report = {
        "command": "fit",
        "family": _FAMILY_CHOICES[args.family].value,
        "link": args.link,
        "response": args.response,
        "covariates": covs,
        "n": data.n,
        "fits": [_fit_block(r) for r in fits],
    }
    if errors:
        report["error"] = {"type": "NonConvergence", "message": "; ".join(errors)}
    csv_text = None
    if args.format == "csv":
        rows = []
        for r in fits:
            for row in coefficient_table(r):
                rows.append([r.tau, row["parameter"], row["term"], row["estimate"],
                             row["std_error"], row["z"], row["p_value"]])
            for stat in ("loglik", "aic", "bic"):
                rows.append([r.tau, stat, "", getattr(r, stat), None, None, None])
        csv_text = _csv_text(["tau", "parameter", "term", "estimate", "std_error", "z", "p_value"], rows)
    return report, csv_text


def run_diagnose(args) -> tuple[dict, str | None]:
    data, covs = _load(args)
    if args.tau is None:
        raise CliError("diagnose requires --tau")
    res = fit(_spec_from_args(args, args.tau, covs), data)
    report = {"command": "diagnose", "family": _FAMILY_CHOICES[args.family].value,
              "link": args.link, "n": data.n, "fit": _fit_block(res)}
    if not res.converged:
        report["error"] = {"type": "NonConvergence", "message": res.message}
        return report, None
    rep = residual_report(res, data)
    report["residuals"] = rep.as_dict()
    types = ["gcs", "rq"] if args.residual == "both" else [args.residual]
    envelopes = {}
    for rtype in types:
        band = simulated_envelope(res, data, rtype, n_sim=args.n_sim, level=args.level, seed=args.seed)
        envelopes[rtype] = band
        report.setdefault("envelope", {})[rtype] = {
            "n_sim": band.n_sim, "level": band.level, "n_dropped": band.n_dropped,
            "outside_fraction": band.outside_fraction,
            "theoretical": band.theoretical_quantiles, "observed": band.sorted_residuals,
            "lower": band.lower, "median": band.median, "upper": band.upper,
        }
    csv_text = None
    if args.format == "csv":
        csv_text = envelopes[types[0]].to_csv()
    return report, csv_text


def run_predict(args) -> tuple[dict, str | None]:
    data, covs = _load(args)
    if args.tau is None:
        raise CliError("predict requires --tau")
    _require(args, "holdout")
    rows = parse_rows(args.holdout)
    bad = [r for r in rows if not 1 <= r <= data.n]
    if bad:
        raise CliError(f"holdout rows out of range 1..{data.n}: {bad[:10]}")
    mask = np.zeros(data.n, dtype=bool)
    mask[[r - 1 for r in rows]] = True
    train = DesignData(data.X[~mask], data.y[~mask])
    res = fit(_spec_from_args(args, args.tau, covs), train)
    report = {"command": "predict", "family": _FAMILY_CHOICES[args.family].value,
              "link": args.link, "n_train": train.n, "holdout_rows": rows, "fit": _fit_block(res)}
    if not res.converged:
        report["error"] = {"type": "NonConvergence", "message": res.message}
        return report, None
    band = prediction_interval(res, data.X[mask], level=args.level, y_true=data.y[mask])
    report["prediction"] = band.as_dict()
    report["prediction"]["observed"] = data.y[mask]
    csv_text = None
    if args.format == "csv":
        csv_text = _csv_text(
            ["row", "observed", "lower", "point", "upper", "covered"],
            [[r, yv, lo, pt, hi, int(lo <= yv <= hi)] for r, yv, lo, pt, hi in
             zip(rows, data.y[mask], band.lower, band.point, band.upper)],
        )
    return report, csv_text


def run_simulate(args) -> tuple[dict, str | None]:
    family = _FAMILY_CHOICES[args.family]
    shapes = args.shapes or ([5.0, 1.0] if family is Family.QSM else [1.0, 0.5])
    replicas = args.replicas if args.replicas is not None else (500 if args.full else 200)
    config = ScenarioConfig(
        family=family,
        true_beta=tuple(args.beta),
        true_shapes=tuple(shapes),
        tau_grid=tuple(args.tau_grid or DEFAULT_TAU_GRID),
        n_grid=tuple(args.n_grid or DEFAULT_N_GRID),
        n_replicas=replicas,
        link=Link.parse(args.link),
        base_seed=args.seed,
        level=args.level,
    )
    report = run_study(config, workers=args.workers)
    out = {"command": "simulate", **report.as_dict()}
    aborted = [(c.n, c.tau) for c in report.cells if c.aborted]
    if aborted:
        out["error"] = {"type": "AbortedCells",
                        "message": f"cells with >10% failed replicas: {aborted}"}
    return out, report.to_csv() if args.format == "csv" else None


def _dist_object(args):
    family = _FAMILY_CHOICES[args.family]
    if args.a is None or args.shape is None:
        raise CliError("dist requires --a and --shape")
    if args.b is not None:
        return (ClassicalSM(args.a, args.b, args.shape) if family is Family.QSM
                else ClassicalDA(args.a, args.b, args.shape))
    if args.gamma is None or args.tau is None:
        raise CliError("dist requires --gamma and --tau (or --b for the classical form)")
    return (QuantileSM(args.a, args.gamma, args.shape, args.tau) if family is Family.QSM
            else QuantileDA(args.a, args.gamma, args.shape, args.tau))


def run_dist(args) -> tuple[dict, str | None]:
    dist = _dist_object(args)
    query = args.query
    params = {"family": _FAMILY_CHOICES[args.family].value, "a": args.a, "shape": args.shape}
    params.update({"b": args.b} if args.b is not None else {"gamma": args.gamma, "tau": args.tau})
    classical = args.b is not None
    if classical and query not in ("pdf", "cdf", "quantile", "curve"):
        raise CliError(f"query {query!r} needs the quantile-based form (--gamma/--tau)")
    rows = []
    if query == "mode":
        rows.append([None, dist.mode()])
    elif query == "curve":
        lo, hi, num = args.grid
        for yv in np.linspace(lo, hi, int(num)):
            rows.append([float(yv), float(dist.pdf(yv)), float(dist.cdf(yv))])
    else:
        _require(args, "at")
        for v in args.at:
            if query == "pdf":
                rows.append([v, float(dist.pdf(v))])
            elif query == "cdf":
                rows.append([v, float(dist.cdf(v))])
            elif query == "quantile":
                rows.append([v, float(dist.ppf(v))])
            elif query == "moment":
                rows.append([v, dist.moment(v)])
            elif query == "truncated-moment":
                _require(args, "x")
                rows.append([v, dist.truncated_moment(v, args.x)])
    report = {"command": "dist", "query": query, "params": params}
    if query == "curve":
        report["curve"] = [{"y": r[0], "pdf": r[1], "cdf": r[2]} for r in rows]
        header = ["y", "pdf", "cdf"]
    else:
        report["values"] = [{"at": r[0], "value": r[1]} for r in rows]
        if query == "truncated-moment":
            report["truncation_point"] = args.x
        header = ["at", "value"]
    return report, _csv_text(header, rows) if args.format == "csv" else None


COMMANDS = {"fit": run_fit, "diagnose": run_diagnose, "predict": run_predict,
            "simulate": run_simulate, "dist": run_dist}


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=sorted(_FAMILY_CHOICES), default="sm")
    common.add_argument("--link", choices=[lk.value for lk in Link], default="log")
    common.add_argument("--tau", type=float)
    common.add_argument("--level", type=float, default=0.95)
    common.add_argument("--seed", type=int, default=20240101)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--output", "-o")

    data_opts = argparse.ArgumentParser(add_help=False)
    data_opts.add_argument("--input", "-i", help="CSV file with a header row")
    data_opts.add_argument("--response")
    data_opts.add_argument("--covariates", type=_name_list, help="comma-separated column names")

    parser = argparse.ArgumentParser(prog="incomeqr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common, data_opts], help="fit a quantile regression")
    p.add_argument("--tau-grid", type=_float_list)
    p.add_argument("--warm-start", action="store_true", help="start each tau from the previous fit")

    p = sub.add_parser("diagnose", parents=[common, data_opts], help="residuals and envelopes")
    p.add_argument("--residual", choices=["gcs", "rq", "both"], default="both")
    p.add_argument("--n-sim", type=int, default=100)

    p = sub.add_parser("predict", parents=[common, data_opts], help="prediction bands on held-out rows")
    p.add_argument("--holdout", help="1-based data rows, e.g. '81-100' or '3,7,12'")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo study")
    p.add_argument("--tau-grid", type=_float_list)
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--replicas", type=int)
    p.add_argument("--full", action="store_true", help="500 replicas per cell")
    p.add_argument("--beta", type=_float_list, default=[1.0, 0.5, 1.5])
    p.add_argument("--shapes", type=_float_list, help="a and q (sm) or a and p (dagum)")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("dist", parents=[common], help="evaluate distribution quantities")
    p.add_argument("--query", required=True,
                   choices=["pdf", "cdf", "quantile", "mode", "moment", "truncated-moment", "curve"])
    p.add_argument("--a", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--b", type=float, help="classical scale; replaces --gamma/--tau")
    p.add_argument("--shape", type=float, help="q (sm) or p (dagum)")
    p.add_argument("--at", type=_float_list, help="points, probabilities or moment orders")
    p.add_argument("--x", type=float, help="truncation point")
    p.add_argument("--grid", type=_float_list, default=[0.01, 5.0, 100], help="lo,hi,num for curve")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, csv_text = COMMANDS[args.command](args)
    except CliError as exc:
        parser.print_usage(sys.stderr)
        report = {"command": args.command, "error": {"type": "UsageError", "message": str(exc)}}
        _emit(dumps_report(report), args.output)
        return 2
    except (IncomeQRError, ValueError) as exc:
        report = {"command": args.command,
                  "error": {"type": type(exc).__name__, "message": str(exc)}}
        _emit(dumps_report(report), args.output)
        return 1
    if "error" in report or csv_text is None:
        _emit(dumps_report(report), args.output)
    else:
        _emit(csv_text, args.output)
    return 1 if "error" in report else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
