"""Command-line surface: train, ablate, gradcheck, sweep, report, reference.

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ._binio import FileFormatError
from .config import canonical_toml, config_hash, load_config, reference, validate_config
from .data import load_dataset, save_dataset
from .distill import METHODS, ConfigError, NumericError
from .gradcheck import run_all
from .models import load_network
from .report import smoothness_report
from .runner import build_dataset, format_float, run_to_directory

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_PARTIAL = 3

OUT_ROOT_ENV = "KDLAB_OUT_ROOT"


def _out_root(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_ROOT_ENV)
    if env:
        return Path(env)
    return Path(cfg["output"]["root"])


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    result = run_to_directory(cfg, _out_root(args, cfg))
    if result.record.rows and cfg["data"]["kind"] == "noisy_sine":
        full, _, _, _ = build_dataset(cfg, result.seed)
        save_dataset(full, result.run_dir / "dataset.kdd")
    print((result.run_dir / "summary.txt").read_text().strip())
    print(f"run directory: {result.run_dir}")
    return EXIT_OK


def ablation_arms(cfg: dict) -> dict[str, dict]:
    """The four single-dynamic-factor arms, from the hard-coded constants.

    A: psi dynamic, both coefficients frozen; B: teacher coefficient
    dynamic; C: margin coefficient dynamic; D: everything dynamic.
    """
    m = cfg["method"]
    if m["name"] != "continuation":
        raise ConfigError(f"ablate needs a continuation config, got method {m['name']!r}")
    if any(m[k] is not None for k in ("freeze_psi", "freeze_phi_teacher", "freeze_phi_margin")):
        raise ConfigError("ablate needs a base config without freeze keys")
    psi_freeze = cfg["ablation"]["psi_freeze"]
    coeff = cfg["ablation"]["coeff_freeze"]

    def with_freezes(**kw):
        arm = {sec: dict(vals) for sec, vals in cfg.items()}
        arm["method"].update(kw)
        return validate_config(arm)

    return {
        "A": with_freezes(freeze_phi_teacher=coeff, freeze_phi_margin=coeff),
        "B": with_freezes(freeze_psi=psi_freeze, freeze_phi_margin=coeff),
        "C": with_freezes(freeze_psi=psi_freeze, freeze_phi_teacher=coeff),
        "D": with_freezes(),
    }


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    arms = ablation_arms(cfg)
    root = _out_root(args, cfg) / f"ablate-seed{cfg['method']['seed']}-{config_hash(cfg)}"
    lines = ["arm,best_metric"]
    for name, arm_cfg in arms.items():
        result = run_to_directory(arm_cfg, root / f"arm{name}")
        lines.append(f"{name},{format_float(result.record.best_metric)}")
        print(f"arm {name}: best_metric={format_float(result.record.best_metric)} "
              f"({result.run_dir})")
    root.mkdir(parents=True, exist_ok=True)
    (root / "ablation.csv").write_text("\n".join(lines) + "\n")
    print(f"ablation table: {root / 'ablation.csv'}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = run_all(n_points=args.points, seed=args.seed)
    ok = True
    for name, err, passed in results:
        print(f"{name}: max_rel_err={err:.3e} {'PASS' if passed else 'FAIL'}")
        ok = ok and passed
    if not ok:
        failed = ", ".join(name for name, _, passed in results if not passed)
        print(f"gradient check failed for: {failed}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _sweep_arm(arm_cfg: dict, out_root: str) -> dict:
    """One (method, seed) sweep run; returns a summary row dict."""
    result = run_to_directory(arm_cfg, Path(out_root))
    row = {
        "method": result.method, "seed": result.seed, "status": "ok",
        "best_epoch": result.record.best_epoch, "best_metric": result.record.best_metric,
        "mse_to_clean": None, "highfreq_energy": None,
    }
    if result.smoothness is not None:
        row["mse_to_clean"] = result.smoothness["mse_to_clean"]
        row["highfreq_energy"] = result.smoothness["highfreq_energy"]
    return row


def _mean_std(values):
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def sweep_csv_rows(rows: list[dict], methods: list[str]) -> str:
    """Run rows followed by one aggregate row per method."""
    header = ("kind,method,seed,status,best_epoch,best_metric,best_metric_std,"
              "mse_to_clean,mse_to_clean_std,highfreq_energy,highfreq_energy_std")

    def fmt(v):
        return "" if v is None else (format_float(v) if isinstance(v, float) else str(v))

    lines = [header]
    for r in rows:
        lines.append(",".join(["run", r["method"], str(r["seed"]), r["status"],
                               fmt(r["best_epoch"]), fmt(r["best_metric"]), "",
                               fmt(r["mse_to_clean"]), "", fmt(r["highfreq_energy"]), ""]))
    for method in methods:
        ok = [r for r in rows if r["method"] == method and r["status"] == "ok"]
        if not ok:
            lines.append(",".join(["aggregate", method, "", "no_successful_runs",
                                   "", "", "", "", "", "", ""]))
            continue
        mean, std = _mean_std([r["best_metric"] for r in ok])
        cells = ["aggregate", method, "", "ok", "", format_float(mean), format_float(std)]
        for key in ("mse_to_clean", "highfreq_energy"):
            vals = [r[key] for r in ok if r[key] is not None]
            if vals:
                m, s = _mean_std(vals)
                cells += [format_float(m), format_float(s)]
            else:
                cells += ["", ""]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    if len(seeds) < 2:
        raise ConfigError(f"sweep needs at least 2 seeds, got {seeds}")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; expected one of {METHODS}")
    root = _out_root(args, cfg) / f"sweep-{config_hash(cfg)}"
    root.mkdir(parents=True, exist_ok=True)

    arms = []
    for method in methods:
        for seed in seeds:
            arm = {sec: dict(vals) for sec, vals in cfg.items()}
            arm["method"]["name"] = method
            arm["method"]["seed"] = seed
            arms.append(validate_config(arm))

    rows = []
    failures = 0
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_arm, arm, str(root)) for arm in arms]
            outcomes = [f for f in futures]
    else:
        outcomes = None

    for i, arm in enumerate(arms):
        try:
            row = outcomes[i].result() if outcomes is not None else _sweep_arm(arm, str(root))
        except Exception as e:  # record the arm failure, keep sweeping
            failures += 1
            msg = f"error: {e}".replace(",", ";").replace("\n", " ")
            row = {"method": arm["method"]["name"], "seed": arm["method"]["seed"],
                   "status": msg, "best_epoch": None, "best_metric": None,
                   "mse_to_clean": None, "highfreq_energy": None}
        rows.append(row)
        print(f"{row['method']} seed {row['seed']}: {row['status']}"
              + (f" best_metric={format_float(row['best_metric'])}" if row["status"] == "ok" else ""))

    (root / "sweep.csv").write_text(sweep_csv_rows(rows, methods))
    print(f"sweep table: {root / 'sweep.csv'}")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_report(args) -> int:
    net = load_network(args.checkpoint)
    dataset = load_dataset(args.dataset)
    out_dir = Path(args.out) if args.out else Path(args.checkpoint).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = smoothness_report(net, dataset, grid_size=args.grid_size,
                                plot_path=out_dir / "plotdata.csv")
    print(f"mse_to_clean={format_float(metrics['mse_to_clean'])}")
    print(f"highfreq_energy={format_float(metrics['highfreq_energy'])}")
    print(f"plot data: {out_dir / 'plotdata.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one configured training job")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None, help="output root directory")
    p_train.set_defaults(fn=cmd_train)

    p_ablate = sub.add_parser("ablate", help="run the four single-dynamic-factor arms")
    p_ablate.add_argument("--config", required=True)
    p_ablate.add_argument("--out", default=None)
    p_ablate.set_defaults(fn=cmd_ablate)

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of every loss")
    p_grad.add_argument("--points", type=int, default=100)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(fn=cmd_gradcheck)

    p_sweep = sub.add_parser("sweep", help="methods x seeds grid with aggregate CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seeds", required=True, help="comma-separated, e.g. 0,1,2")
    p_sweep.add_argument("--methods", default=",".join(METHODS))
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_report = sub.add_parser("report", help="smoothness metrics for a regression checkpoint")
    p_report.add_argument("--checkpoint", required=True)
    p_report.add_argument("--dataset", required=True, help="dataset file with clean targets")
    p_report.add_argument("--grid-size", type=int, default=512)
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(fn=cmd_report)

    p_ref = sub.add_parser("reference", help="print the generated config reference")
    p_ref.set_defaults(fn=lambda args: (print(reference()), EXIT_OK)[1])

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileFormatError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
