"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 statistical degeneracy, 4 a
simulation tolerance was not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import svg
from .bootstrap import BootstrapConfig, empirical_data_efficiency, trajectory
from .components import correlation_report
from .dataset import by_system, estimate_system, judged_system, load_dataset, metric_values
from .errors import DegeneracyError, InputError, DegenerateInput
from .estimators import TheoryParams, plan_sample_size, variance_control
from .simulate import GaussianWorldConfig, bias_curve, minimax_check, verify_estimator_variance
from .textmetrics import TEXT_METRICS, load_embeddings

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_TOLERANCE = 0, 2, 3, 4


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}_"))
        else:
            out[f"{prefix}{k}"] = v
    return out


def _csv_text(rows: list[dict], columns: list[str] | None = None, footer: list | None = None) -> str:
    buf = io.StringIO()
    if columns is None:
        columns = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    if footer is not None:
        w.writerow([_fmt(x) for x in footer])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(obj, rows: list[dict], args) -> None:
    if args.format == "csv":
        _emit(_csv_text([_flatten(r) for r in rows]), args.out)
    else:
        _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", args.out)


def _bootstrap_cfg(args) -> BootstrapConfig:
    return BootstrapConfig(level=args.level, replicates=args.bootstrap, seed=args.seed, workers=args.workers)


def _embeddings(args):
    return load_embeddings(args.embeddings) if getattr(args, "embeddings", None) else None


def _select_systems(records, system: str | None) -> dict:
    groups = by_system(records)
    if system is not None:
        if system not in groups:
            raise InputError(f"system {system!r} not in dataset")
        groups = {system: groups[system]}
    return groups


def cmd_estimate(args) -> int:
    records = load_dataset(args.input)
    emb = _embeddings(args)
    cfg = _bootstrap_cfg(args)
    reports = []
    for sys_id, recs in _select_systems(records, args.system).items():
        js = judged_system(recs, args.metric, args.prompt, emb)
        rep = estimate_system(js, cfg, per_judgment=args.per_judgment)
        rep.update(metric=args.metric, prompt=args.prompt)
        reports.append(rep)
    _report({"reports": reports}, reports, args)
    return EXIT_OK


def cmd_correlate(args) -> int:
    records = load_dataset(args.input)
    emb = _embeddings(args)
    instance, system_rows = [], []
    for metric in args.metric:
        scatter = []
        sys_h, sys_m = [], []
        for sys_id, recs in _select_systems(records, args.system).items():
            judged = [r for r in recs if r.values_for(args.prompt)]
            if not judged:
                continue
            human = np.array([float(np.mean(r.values_for(args.prompt))) for r in judged])
            values = metric_values(judged, metric, emb)
            if len(judged) < 2:
                raise DegenerateInput(f"system {sys_id!r} has fewer than 2 judged items")
            rep = correlation_report(values, human, "instance")
            instance.append({"system_id": sys_id, "metric": metric, **rep.as_dict()})
            scatter += [
                {"item_id": r.item_id, "system_id": sys_id, "metric": float(m), "human": float(h)}
                for r, m, h in zip(judged, values, human)
            ]
            sys_h.append(float(human.mean()))
            sys_m.append(float(values.mean()))
        if not scatter:
            raise InputError(f"no judgments for prompt {args.prompt!r}")
        if len(sys_h) >= 2:
            rep = correlation_report(sys_m, sys_h, "system")
            system_rows.append({"system_id": "*", "metric": metric, **rep.as_dict()})
        if args.scatter:
            path = Path(args.scatter)
            if len(args.metric) > 1:
                path = path.with_name(f"{path.stem}.{metric}{path.suffix}")
            path.write_text(_csv_text(scatter, ["item_id", "system_id", "metric", "human"]), encoding="utf-8")
    rows = instance + system_rows
    if args.format == "csv":
        _emit(_csv_text(rows, ["level", "system_id", "metric", "pearson", "spearman", "n"]), args.out)
    else:
        _emit(json.dumps({"instance": instance, "system": system_rows}, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_plan(args) -> int:
    params = TheoryParams(sigma_f2=args.sigma_f2, sigma_a2=args.sigma_a2, rho=args.rho)
    n = plan_sample_size(params, args.target_variance)
    rep = {
        "n": n,
        "sigma_f2": args.sigma_f2,
        "sigma_a2": args.sigma_a2,
        "rho": args.rho,
        "target_variance": args.target_variance,
        "predicted_variance": variance_control(params, n),
    }
    _report(rep, [rep], args)
    return EXIT_OK


def cmd_trajectory(args) -> int:
    records = load_dataset(args.input)
    groups = _select_systems(records, args.system)
    if len(groups) != 1:
        raise InputError("dataset has several systems; pick one with --system")
    (recs,) = groups.values()
    js = judged_system(recs, args.metric, args.prompt, _embeddings(args))
    points = trajectory(js.sample(args.per_judgment), args.n_grid, args.reps, _bootstrap_cfg(args))
    de = empirical_data_efficiency(points)
    rows = [{"n": p.n, "width_simple": p.width_simple, "width_cv": p.width_cv} for p in points]
    if args.format == "json":
        _emit(json.dumps({"points": rows, "empirical_data_efficiency": de}, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(_csv_text(rows, ["n", "width_simple", "width_cv"], footer=["empirical_data_efficiency", de, ""]), args.out)
    if args.svg:
        Path(args.svg).write_text(svg.line_chart(points, title=f"{js.system_id}: {args.prompt} / {args.metric}"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = GaussianWorldConfig.from_rho(
        mu=args.mu,
        sigma_f2=args.sigma_f2,
        sigma_a2=args.sigma_a2,
        rho=args.rho,
        n=args.n,
        seed=args.seed,
        skew=args.skew,
    )
    if args.mode == "variance":
        res = verify_estimator_variance(cfg, args.estimator, args.replicates, args.workers, args.theory_variance)
        rep = {"mode": "variance", **res.as_dict(), "tolerance": args.tolerance}
        ok = res.rel_err < args.tolerance
    elif args.mode == "bias":
        grid = args.n_grid or [5, 10, 20, 40, 80]
        curve = bias_curve(cfg, grid, args.replicates, args.estimator, args.workers)
        rep = {"mode": "bias", **curve.as_dict()}
        if args.estimator == "control_variates" and cfg.skew != 0:
            ok = -1.25 <= curve.slope <= -0.75
            rep["slope_band"] = [-1.25, -0.75]
        else:
            ok = curve.within_noise(4.0)
    else:
        variances = minimax_check(cfg, args.replicates, args.workers)
        best = variances["control_variates_oracle"]
        beaten = {k: v for k, v in variances.items() if v < best * (1 - args.tolerance)}
        rep = {"mode": "minimax", "variances": variances, "beaten_by": beaten, "tolerance": args.tolerance}
        ok = not beaten
    rep["passed"] = ok
    _emit(json.dumps(rep, indent=2, sort_keys=True, default=float) + "\n", args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_metrics(args) -> int:
    records = load_dataset(args.input)
    emb = _embeddings(args)
    rows = [{"item_id": r.item_id, "system_id": r.system_id} for r in records]
    for metric in args.metric:
        for row, v in zip(rows, metric_values(records, metric, emb)):
            row[metric] = float(v)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        _emit(_csv_text(rows, ["item_id", "system_id", *args.metric]), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cveval", description="Control-variates estimates of human evaluation scores")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["csv", "json"], default=fmt_default)

    def data(sp, multi_metric=False):
        sp.add_argument("--input", required=True, help="line-delimited JSON dataset")
        if multi_metric:
            sp.add_argument("--metric", type=_names, default=["rougeL"],
                            help=f"comma-separated; one of {', '.join(TEXT_METRICS)} or a precomputed name")
        else:
            sp.add_argument("--metric", default="rougeL",
                            help=f"one of {', '.join(TEXT_METRICS)} or a precomputed metric name")
        sp.add_argument("--prompt", default="Overall")
        sp.add_argument("--system", help="restrict to one system_id")
        sp.add_argument("--embeddings", help="word vector file for vecsim")

    def boot(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--level", type=float, default=0.80)
        sp.add_argument("--bootstrap", type=int, default=1000, help="bootstrap replicates")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--per-judgment", action="store_true",
                        help="use each judgment as a sample instead of item means")

    sp = sub.add_parser("estimate", help="control variates estimate with bootstrap CIs")
    data(sp), boot(sp), common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("correlate", help="instance- and system-level correlations")
    data(sp, multi_metric=True), common(sp)
    sp.add_argument("--scatter", help="write item-level scatter CSV here")
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("plan", help="judgments needed for a target variance")
    sp.add_argument("--sigma-f2", type=float, required=True)
    sp.add_argument("--sigma-a2", type=float, required=True)
    sp.add_argument("--rho", type=float, default=0.0)
    sp.add_argument("--target-variance", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("trajectory", help="bootstrap CI width against number of judgments")
    data(sp), boot(sp), common(sp, fmt_default="csv")
    sp.add_argument("--n-grid", type=_ints, required=True)
    sp.add_argument("--reps", type=int, default=10, help="subsamples per grid size")
    sp.add_argument("--svg", help="also write a line chart here")
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("simulate", help="Monte Carlo check of the variance and bias theory")
    sp.add_argument("--mode", choices=["variance", "bias", "minimax"], default="variance")
    sp.add_argument("--estimator", choices=["sample_mean", "control_variates_oracle", "control_variates"],
                    default="control_variates_oracle")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--sigma-f2", type=float, default=1.0)
    sp.add_argument("--sigma-a2", type=float, default=1.0)
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--skew", type=float, default=0.0, help="weight of the (g^2 - 1) term in f")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--replicates", type=int, default=200_000)
    sp.add_argument("--n-grid", type=_ints, help="sample sizes for --mode bias")
    sp.add_argument("--tolerance", type=float, default=0.03)
    sp.add_argument("--theory-variance", type=float, help="override the closed-form variance")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("metrics", help="compute automatic metrics for every record")
    data(sp, multi_metric=True), common(sp, fmt_default="csv")
    sp.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegeneracyError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
