"""Command-line front end.

Subcommands: fit, calibrate, bench, verify-theory, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

Flags can also come from a flat key=value config file (--config); explicit
command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import (
    CostConfig,
    DataError,
    KernelSpec,
    SelregError,
    SplitSpec,
    model_from_json,
    model_to_json,
    split_dataset,
)
from .harness import (
    ExperimentConfig,
    RunReport,
    emit_report,
    load_csv,
    run_experiment,
)
from .models import KnnConfig, MlpConfig, fit_knn_auto, fit_mlp
from .rejection import conformal_threshold, kernel_calibrate, select_bandwidth

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if "=" not in line:
            raise SelregError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _collect_defaults(parser: argparse.ArgumentParser) -> dict:
    defaults = {a.dest: a.default for a in parser._actions}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                defaults.update({a.dest: a.default for a in sub._actions})
    return defaults


def _apply_config_file(args: argparse.Namespace, parser: _Parser) -> None:
    if not getattr(args, "config", None):
        return
    file_values = _read_config_file(args.config)
    defaults = _collect_defaults(parser)
    for key, raw in file_values.items():
        if not hasattr(args, key):
            raise SelregError(f"config file sets unknown option {key!r}")
        if getattr(args, key) != defaults.get(key):
            continue  # explicit flag wins
        current = defaults.get(key)
        if isinstance(current, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int) and not isinstance(current, bool):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        else:
            value = raw
        setattr(args, key, value)


def _add_common_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV path or synthetic task name")
    p.add_argument("--target-col", default="target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="flat key=value config file")


def _sigma_grid(arg: str | None) -> tuple[float, ...]:
    if not arg:
        return KernelSpec().bandwidth_grid
    return tuple(float(tok) for tok in arg.split(","))


def _build_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.mode == "cost":
        if args.cost is None:
            raise SelregError("--cost is required with --mode cost")
        cost = CostConfig.fixed_cost(args.cost)
    else:
        if args.budget is None:
            raise SelregError("--budget is required with --mode budget")
        cost = CostConfig.fixed_budget(args.budget)
    return ExperimentConfig(
        dataset_source=args.data,
        cost_config=cost,
        regressor=args.regressor,
        rejector=args.rejector,
        split=SplitSpec(seed=args.seed),
        repeats=args.repeats,
        seed=args.seed,
        target_column=args.target_col,
        synthetic_n=args.synthetic_n,
        kernel=KernelSpec(bandwidth_grid=_sigma_grid(args.sigma_grid)),
        output_dir=args.out,
    )


def _cmd_fit(args) -> int:
    dataset = load_csv(args.data, args.target_col)
    train, val, _ = split_dataset(dataset, SplitSpec(seed=args.seed))
    if args.regressor == "knn":
        model = fit_knn_auto(train, val, KnnConfig())
    else:
        from .core import RngHandle, STREAM_MLP

        model = fit_mlp(train, MlpConfig(init_seed=RngHandle(args.seed, STREAM_MLP)))
    doc = model_to_json(model)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(doc + "\n")
    print(f"wrote {args.regressor} model to {out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    dataset = load_csv(args.data, args.target_col)
    train, val, _ = split_dataset(dataset, SplitSpec(seed=args.seed))
    model = model_from_json(Path(args.model).read_text())
    kernel = KernelSpec(bandwidth_grid=_sigma_grid(args.sigma_grid))
    half = val.n // 2
    inner, outer = val.subset(np.arange(half)), val.subset(np.arange(half, val.n))
    spec = select_bandwidth(model, inner, outer, kernel, args.cost)
    calibrator = kernel_calibrate(model, val, spec)
    scores = calibrator.estimate(val.features)
    doc = {
        "calibrator": json.loads(model_to_json(calibrator)),
        "sigma": spec.length_scale_sigma,
        "cost": args.cost,
        "scores": scores.tolist(),
    }
    if args.budget is not None:
        th = conformal_threshold(scores, args.budget)
        doc["conformal"] = {
            "c_hat": th.c_hat if th.c_hat != float("inf") else "inf",
            "m": th.m,
            "gamma": th.gamma,
            "order_statistic_index": th.order_statistic_index,
        }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"wrote calibration to {out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _build_experiment_config(args)
    report = run_experiment(cfg)
    path = emit_report(report, args.format, args.out, stem="bench")
    print(f"{report.method} on {report.dataset}: rwr={report.rwr_mean:.4f} "
          f"machine={report.machine_mean:.4f} rej={report.rej_mean:.4f} -> {path}")
    return EXIT_OK


def _cmd_verify_theory(args) -> int:
    from .oracle import run_verification_suite

    results = run_verification_suite(seed=args.seed, trials=args.trials)
    doc = {
        "passed": all(r.passed for r in results),
        "properties": [r.to_dict() for r in results],
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    print(text)
    return EXIT_OK if doc["passed"] else EXIT_VERIFY


def _cmd_report(args) -> int:
    report = RunReport.from_json(Path(args.input).read_text())
    path = emit_report(report, args.format, args.out, stem=Path(args.input).stem)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="selreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a regressor on the train split")
    _add_common_data_flags(p_fit)
    p_fit.add_argument("--regressor", choices=("knn", "mlp"), default="knn")
    p_fit.add_argument("--out", default="model.json")
    p_fit.set_defaults(fn=_cmd_fit)

    p_cal = sub.add_parser("calibrate", help="kernel-calibrate a fitted model")
    _add_common_data_flags(p_cal)
    p_cal.add_argument("--model", required=True, help="model JSON from `fit`")
    p_cal.add_argument("--cost", type=float, default=1.0)
    p_cal.add_argument("--budget", type=float, default=None)
    p_cal.add_argument("--sigma-grid", default=None, help="comma-separated bandwidths")
    p_cal.add_argument("--out", default="calibration.json")
    p_cal.set_defaults(fn=_cmd_calibrate)

    p_bench = sub.add_parser("bench", help="run the repeated benchmark protocol")
    _add_common_data_flags(p_bench)
    p_bench.add_argument("--mode", choices=("cost", "budget"), required=True)
    p_bench.add_argument("--cost", type=float, default=None)
    p_bench.add_argument("--budget", type=float, default=None)
    p_bench.add_argument("--regressor", choices=("knn", "mlp", "oracle"), default="knn")
    p_bench.add_argument(
        "--rejector", choices=("kernel", "loss-linear", "conformal", "oracle"), default="kernel"
    )
    p_bench.add_argument("--scores-from", choices=("kernel", "loss-linear", "oracle"),
                         default=None, help="budget mode: score function for the threshold")
    p_bench.add_argument("--repeats", type=int, default=10)
    p_bench.add_argument("--synthetic-n", type=int, default=1000)
    p_bench.add_argument("--sigma-grid", default=None)
    p_bench.add_argument("--out", default=".")
    p_bench.add_argument("--format", choices=("json", "csv"), default="json")
    p_bench.set_defaults(fn=_cmd_bench)

    p_ver = sub.add_parser("verify-theory", help="run the numerical verification suite")
    p_ver.add_argument("--seed", type=int, default=20240000)
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--out", default=None)
    p_ver.set_defaults(fn=_cmd_verify_theory)

    p_rep = sub.add_parser("report", help="convert a JSON run report")
    p_rep.add_argument("--input", required=True)
    p_rep.add_argument("--out", default=".")
    p_rep.add_argument("--format", choices=("json", "csv"), default="csv")
    p_rep.set_defaults(fn=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, parser)
        if getattr(args, "scores_from", None) and getattr(args, "mode", None) == "budget":
            args.rejector = args.scores_from
        return args.fn(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SelregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
