"""Command-line surface tying the pipeline together.

Subcommands:
  predict    print the QM and classical coincidence curves
  run        simulate one model batch and write results + manifest
  fit f2     fit the detector-acceptance coefficient on a raw collapse batch
  fit sigma  fit the smearing width at fixed f2 (closed-form or mc)
  replicate  full pipeline: raw collapse -> f2 fit -> three model batches ->
             sigma fit -> reports, plots, correlation length
  report     summarize previously written results (no re-simulation)
  bench      compare the numba and numpy kernel backends

Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
Precedence for settings: CLI flags > config file (--config) > defaults.
Worker count comes from the FCSIM_WORKERS environment variable (default:
all cores); kernel backend from FCSIM_BACKEND (default: numba if present).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import correlation_length, deviation_report
from .config import ExperimentConfig, config_from_dict, default_config
from .errors import ConfigError, InfeasibleFitError
from .fitting import fit_f2, fit_sigma, mean_chi_squared
from . import kernels
from .io import (
    REFERENCE_CURVES,
    RunManifest,
    build_result_rows,
    load_config,
    read_results_csv,
    write_json,
    write_manifest,
    write_results_csv,
)
from .models import ModelKind
from .physics import classical_coincidence_ratio, matched_f2, qm_coincidence_ratio
from .plotting import emit_plot
from .runner import resolve_workers, run_batch


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_config_options(parser):
    parser.add_argument("--config", metavar="FILE", help="JSON config document")
    parser.add_argument("--seed", type=int, metavar="N", help="override master_seed")
    parser.add_argument("--pairs", type=int, metavar="N", help="override pairs_per_experiment")
    parser.add_argument("--experiments", type=int, metavar="N", help="override experiments")
    parser.add_argument(
        "--scale",
        type=float,
        default=None,
        metavar="X",
        help="multiply the experiment count by X (statistics formulas stay valid)",
    )


def _add_out_option(parser):
    parser.add_argument("--out", metavar="DIR", default="fcsim-out", help="output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="fcsim", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"fcsim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_predict = sub.add_parser("predict", help="print the QM and classical curves")
    _add_config_options(p_predict)
    p_predict.add_argument("--phi", type=float, default=None, help="single relative angle (rad)")

    p_run = sub.add_parser("run", help="run one model batch")
    _add_config_options(p_run)
    _add_out_option(p_run)
    p_run.add_argument("--model", required=True, choices=[m.value for m in ModelKind])
    p_run.add_argument("--sigma", type=float, default=None, help="smearing width (smeared model)")
    p_run.add_argument("--f2", type=float, default=None, help="acceptance coefficient to apply")

    p_fit = sub.add_parser("fit", help="fit f2 or sigma")
    fit_sub = p_fit.add_subparsers(dest="parameter", parser_class=_Parser)

    p_fit_f2 = fit_sub.add_parser("f2", help="fit the acceptance coefficient")
    _add_config_options(p_fit_f2)
    _add_out_option(p_fit_f2)
    p_fit_f2.add_argument(
        "--weighting",
        default="model-variance",
        choices=("model-variance", "inverse-variance", "unweighted"),
    )

    p_fit_sigma = fit_sub.add_parser("sigma", help="fit the smearing width")
    _add_config_options(p_fit_sigma)
    _add_out_option(p_fit_sigma)
    p_fit_sigma.add_argument("--f2", type=float, default=None, help="fixed f2 (default: constant-matched)")
    p_fit_sigma.add_argument("--mode", default="closed-form", choices=("closed-form", "mc"))

    p_rep = sub.add_parser("replicate", help="full replication pipeline")
    _add_config_options(p_rep)
    _add_out_option(p_rep)
    p_rep.add_argument(
        "--smeared-f2",
        type=float,
        default=None,
        help="f2 for the smeared stage (default: constant-matched value)",
    )
    p_rep.add_argument("--sigma-mode", default="closed-form", choices=("closed-form", "mc"))
    p_rep.add_argument("--no-plots", action="store_true", help="skip SVG output")

    p_report = sub.add_parser("report", help="summarize stored results")
    p_report.add_argument("--results", required=True, metavar="DIR", help="directory with results.csv")
    p_report.add_argument("--out", metavar="DIR", default=None, help="regenerate plots here")

    p_bench = sub.add_parser("bench", help="benchmark kernel backends")
    p_bench.add_argument("--pairs", type=int, default=100_000)
    p_bench.add_argument("--repeats", type=int, default=20)

    return parser


def _build_config(args) -> ExperimentConfig:
    doc = {}
    if getattr(args, "config", None):
        doc = load_config(args.config).to_dict()
    else:
        doc = default_config().to_dict()
    if getattr(args, "seed", None) is not None:
        doc["master_seed"] = args.seed
    if getattr(args, "pairs", None) is not None:
        doc["pairs_per_experiment"] = args.pairs
    if getattr(args, "experiments", None) is not None:
        doc["experiments"] = args.experiments
    if getattr(args, "scale", None) is not None:
        if args.scale <= 0:
            raise ConfigError(f"--scale must be > 0, got {args.scale}", keys=["experiments"])
        doc["experiments"] = max(1, round(doc["experiments"] * args.scale))
    return config_from_dict(doc)


def _manifest(args, cfg: ExperimentConfig, outputs: list[str], notes: dict | None = None) -> RunManifest:
    return RunManifest(
        command=args.command,
        argv=list(getattr(args, "_argv", [])),
        config=cfg.to_dict(),
        outputs=outputs,
        backend=kernels.active_backend(),
        workers=resolve_workers(),
        notes=notes or {},
    )


def _cmd_predict(args) -> int:
    cfg = _build_config(args)
    phis = [args.phi] if args.phi is not None else list(cfg.angles)
    print(f"{'phi_rad':>10}  {'qm':>8}  {'classical':>9}")
    for phi in phis:
        qm = qm_coincidence_ratio(phi, cfg)
        cl = classical_coincidence_ratio(phi, cfg)
        print(f"{phi:>10.6f}  {qm:>8.4f}  {cl:>9.4f}")
    return 0


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    model = ModelKind(args.model)
    batch = run_batch(model, cfg, sigma=args.sigma, f2=args.f2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = build_result_rows([batch], cfg)
    write_results_csv(out / "results.csv", rows)
    write_manifest(
        out / "manifest.json",
        _manifest(args, cfg, ["results.csv"], notes={"model": model.value, "sigma": batch.sigma, "f2": batch.f2}),
    )
    print(f"wrote {out / 'results.csv'} ({len(rows)} rows)")
    return 0


def _cmd_fit_f2(args) -> int:
    cfg = _build_config(args)
    batch = run_batch(ModelKind.COLLAPSE, cfg, f2=1.0)
    result = fit_f2(batch, cfg, weighting=args.weighting)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "parameter": result.parameter,
        "value": result.value,
        "uncertainty": result.uncertainty,
        "objective": result.objective,
        "method": result.method,
    }
    write_json(out / "fit_f2.json", payload)
    write_manifest(out / "manifest.json", _manifest(args, cfg, ["fit_f2.json"]))
    print(f"f2 = {result.value:.6f} +- {result.uncertainty if result.uncertainty is not None else 0:.6f}")
    return 0


def _cmd_fit_sigma(args) -> int:
    cfg = _build_config(args)
    f2 = args.f2 if args.f2 is not None else matched_f2(cfg)
    result = fit_sigma(cfg, f2, mode=args.mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "parameter": result.parameter,
        "value": result.value,
        "uncertainty": result.uncertainty,
        "objective": result.objective,
        "method": result.method,
        "f2": f2,
    }
    write_json(out / "fit_sigma.json", payload)
    write_manifest(out / "manifest.json", _manifest(args, cfg, ["fit_sigma.json"]))
    print(f"sigma = {result.value:.6f} +- {result.uncertainty if result.uncertainty is not None else 0:.6f} (f2={f2:.6f})")
    return 0


def _cmd_replicate(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    qm = lambda phi: qm_coincidence_ratio(phi, cfg)

    # Stage 1: raw collapse batch and the acceptance-coefficient fit.
    raw_collapse = run_batch(ModelKind.COLLAPSE, cfg, f2=1.0)
    f2_fit = fit_f2(raw_collapse, cfg)
    collapse = raw_collapse.with_f2(f2_fit.value)

    # Stage 2: local-realistic batch under the fitted coefficient.
    local = run_batch(ModelKind.LOCAL_REALISTIC, cfg, f2=f2_fit.value)

    # Stage 3: smeared stage at the constant-matched coefficient (the
    # fitted f2 would leave the QM constant term unmatched; see README).
    f2_smeared = args.smeared_f2 if args.smeared_f2 is not None else matched_f2(cfg)
    sigma_fit = fit_sigma(cfg, f2_smeared, mode=args.sigma_mode, f2_err=f2_fit.uncertainty)
    smeared = run_batch(ModelKind.SMEARED, cfg, sigma=sigma_fit.value, f2=f2_smeared)

    # Stage 4: reports.
    rows = build_result_rows([collapse, local, smeared], cfg)
    write_results_csv(out / "results.csv", rows)

    rc = correlation_length(sigma_fit.value, sigma_fit.uncertainty or 0.0, cfg)
    chi_collapse = mean_chi_squared(collapse, qm)
    chi_smeared = mean_chi_squared(smeared, qm)

    write_json(
        out / "fit_f2.json",
        {
            "parameter": "f2",
            "value": f2_fit.value,
            "uncertainty": f2_fit.uncertainty,
            "objective": f2_fit.objective,
            "method": f2_fit.method,
        },
    )
    write_json(
        out / "fit_sigma.json",
        {
            "parameter": "sigma",
            "value": sigma_fit.value,
            "uncertainty": sigma_fit.uncertainty,
            "objective": sigma_fit.objective,
            "method": sigma_fit.method,
            "f2": f2_smeared,
        },
    )
    write_json(
        out / "correlation_length.json",
        {
            "r_c_cm": rc.r_c_cm,
            "uncertainty_cm": rc.uncertainty_cm,
            "sigma": rc.sigma,
            "sigma_err": rc.sigma_err,
            "wavelength1_cm": rc.wavelength1_cm,
            "wavelength2_cm": rc.wavelength2_cm,
        },
    )

    deviations = {}
    for batch in (collapse, local, smeared):
        name = batch.model.value
        reference = REFERENCE_CURVES[name]
        curve = qm if reference == "qm" else (lambda phi: classical_coincidence_ratio(phi, cfg))
        report = deviation_report(batch, curve)
        deviations[name] = {
            "reference": reference,
            "small_band_pct": report.small_band,
            "large_band_pct": report.large_band,
        }
    deviations["mean_chi_squared"] = {
        "collapse_vs_qm": chi_collapse,
        "smeared_vs_qm": chi_smeared,
        "ratio": chi_collapse / chi_smeared if chi_smeared > 0 else None,
    }
    write_json(out / "deviations.json", deviations)

    outputs = ["results.csv", "fit_f2.json", "fit_sigma.json", "correlation_length.json", "deviations.json"]
    if not args.no_plots:
        classical = lambda phi: classical_coincidence_ratio(phi, cfg)
        emit_plot(
            out / "fig_collapse_local.svg",
            curves=[("qm", qm), ("classical", classical)],
            batches=[collapse, local],
            title="collapse + local realistic models",
        )
        emit_plot(
            out / "fig_smeared.svg",
            curves=[("qm", qm)],
            batches=[smeared],
            title=f"smeared polarization model (sigma={sigma_fit.value:.4f})",
        )
        outputs += ["fig_collapse_local.svg", "fig_smeared.svg"]

    write_manifest(
        out / "manifest.json",
        _manifest(
            args,
            cfg,
            outputs,
            notes={
                "f2_fitted": f2_fit.value,
                "f2_smeared": f2_smeared,
                "sigma_fitted": sigma_fit.value,
                "sigma_mode": args.sigma_mode,
            },
        ),
    )

    print(f"f2 = {f2_fit.value:.6f} +- {f2_fit.uncertainty or 0:.6f}")
    print(f"sigma = {sigma_fit.value:.6f} +- {sigma_fit.uncertainty or 0:.6f} (at f2={f2_smeared:.6f})")
    print(f"r_c = {rc.r_c_cm:.4e} +- {rc.uncertainty_cm:.2e} cm")
    print(f"mean chi2: collapse {chi_collapse:.3e}, smeared {chi_smeared:.3e}, ratio {chi_collapse / chi_smeared:.1f}")
    print(f"artifacts in {out}")
    return 0


def _cmd_report(args) -> int:
    results_dir = Path(args.results)
    rows = read_results_csv(results_dir / "results.csv")
    by_model: dict[str, list[dict]] = {}
    for row in rows:
        by_model.setdefault(row["model"], []).append(row)

    for model, model_rows in by_model.items():
        reference = REFERENCE_CURVES.get(model, "qm")
        print(f"model {model} (reference: {reference})")
        print(f"  {'phi_rad':>10} {'ratio':>12} {'se':>11} {'dev_%':>9} {'z':>9}")
        for row in model_rows:
            se = row["ratio_se"]
            dev = row["deviation_pct"]
            z = row["z_score"]
            print(
                f"  {row['angle_rad']:>10.6f} {row['ratio_mean']:>12.6f} "
                f"{se if se is not None else float('nan'):>11.2e} "
                f"{dev if dev is not None else float('nan'):>9.3f} "
                f"{z if z is not None else float('nan'):>9.1f}"
            )
        devs = [abs(r["deviation_pct"]) for r in model_rows if r["deviation_pct"] is not None]
        small = [abs(r["deviation_pct"]) for r in model_rows
                 if r["deviation_pct"] is not None and r["angle_rad"] <= math.pi / 8 + 1e-12]
        large = [abs(r["deviation_pct"]) for r in model_rows
                 if r["deviation_pct"] is not None and r["angle_rad"] >= 3 * math.pi / 8 - 1e-12]
        if devs:
            print(f"  |deviation| overall [{min(devs):.3f}%, {max(devs):.3f}%]", end="")
            if small:
                print(f"; phi<=pi/8 [{min(small):.3f}%, {max(small):.3f}%]", end="")
            if large:
                print(f"; phi>=3pi/8 [{min(large):.3f}%, {max(large):.3f}%]", end="")
            print()

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        series = []
        for model, model_rows in by_model.items():
            series.append(
                (
                    model,
                    [r["angle_rad"] for r in model_rows],
                    [r["ratio_mean"] for r in model_rows],
                    [r["ratio_se"] for r in model_rows],
                )
            )
        curves = [
            ("qm", lambda phi, rows=rows: _interp_column(rows, phi, "qm_prediction")),
            ("classical", lambda phi, rows=rows: _interp_column(rows, phi, "classical_prediction")),
        ]
        emit_plot(out / "fig_report.svg", curves=curves, series=series, title="stored results")
        print(f"wrote {out / 'fig_report.svg'}")
    return 0


def _interp_column(rows: list[dict], phi: float, column: str) -> float:
    pts = sorted({(r["angle_rad"], r[column]) for r in rows})
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if phi <= xs[0]:
        return ys[0]
    if phi >= xs[-1]:
        return ys[-1]
    import bisect

    i = bisect.bisect_left(xs, phi)
    t = (phi - xs[i - 1]) / (xs[i] - xs[i - 1])
    return ys[i - 1] + t * (ys[i] - ys[i - 1])


def _cmd_bench(args) -> int:
    results = kernels.benchmark(pairs=args.pairs, repeats=args.repeats)
    print(f"pairs={results['pairs']} repeats={results['repeats']}")
    for backend, timings in results["backends"].items():
        for model, sec in timings.items():
            rate = results["pairs"] / sec / 1e6
            print(f"  {backend:>6} {model:<16} {sec * 1e3:8.3f} ms/call  {rate:8.1f} Mpairs/s")
    print(f"backend counts agree: {results['agree']}")
    return 0 if results["agree"] else 2


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command == "fit" and getattr(args, "parameter", None) is None:
        print("error: fit requires a parameter: f2 or sigma", file=sys.stderr)
        return 1

    args._argv = argv
    handlers = {
        "predict": _cmd_predict,
        "run": _cmd_run,
        "replicate": _cmd_replicate,
        "report": _cmd_report,
        "bench": _cmd_bench,
    }
    try:
        if args.command == "fit":
            handler = _cmd_fit_f2 if args.parameter == "f2" else _cmd_fit_sigma
        else:
            handler = handlers[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleFitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures -> exit 2 with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
