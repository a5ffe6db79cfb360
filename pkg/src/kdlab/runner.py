"""Turns a validated config into datasets, networks, and a finished run
directory (config snapshot, metrics.csv, checkpoints, summary)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .config import build_distill_config, canonical_toml, config_hash
from .data import Dataset, gen_gaussian_mixture, gen_noisy_sine, split
from .distill import (ConfigError, DistillConfig, RunRecord, train_annealing, train_continuation,
                      train_scratch, train_takd, train_vanilla)
from .models import TeacherSource, init_network, load_network, mlp_spec, save_network
from .report import smoothness_report

# Deterministic seed offsets so the teacher and TA never share the student's
# init stream.
_TEACHER_SEED_OFFSET = 101
_SPLIT_SEED_OFFSET = 1

METRICS_HEADER = "epoch,temperature,phi,psi,train_loss,val_metric,is_best"


def resolve_activation(name: str, task_kind: str) -> str:
    if name == "auto":
        return "tanh" if task_kind == "regression" else "relu"
    return name


def build_dataset(cfg: dict, run_seed: int) -> tuple[Dataset, Dataset, Dataset, Dataset]:
    """Full dataset plus train/val/test splits; seeds combine data and run seeds."""
    d = cfg["data"]
    seed = d["seed"] + run_seed
    if d["kind"] == "noisy_sine":
        full = gen_noisy_sine(d["n_samples"], (d["x_lo"], d["x_hi"]), d["base_freq"],
                              d["noise_freq"], d["noise_amp"], seed)
    elif d["kind"] == "gaussian_mixture":
        full = gen_gaussian_mixture(d["n_classes"], d["dim"], d["n_per_class"],
                                    d["spread"], d["separation"], seed)
    else:
        raise ConfigError(f"unknown data kind {d['kind']!r}")
    fractions = (d["train_fraction"], d["val_fraction"], d["test_fraction"])
    try:
        train, val, test = split(full, fractions, seed + _SPLIT_SEED_OFFSET)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return full, train, val, test


def build_teacher(cfg: dict, train: Dataset, val: Dataset, run_seed: int,
                  dconfig: DistillConfig) -> tuple[TeacherSource, RunRecord | None]:
    """Teacher per config: tabulated targets, a freshly trained network, or a checkpoint."""
    m = cfg["model"]
    kind = m["teacher_kind"]
    if kind == "dataset":
        return TeacherSource.from_table(train.inputs, train.targets), None
    if kind == "checkpoint":
        if not m["teacher_checkpoint"]:
            raise ConfigError("teacher_kind = checkpoint needs teacher_checkpoint")
        return TeacherSource.from_network(load_network(m["teacher_checkpoint"])), None
    if kind != "network":
        raise ConfigError(f"unknown teacher_kind {kind!r}")
    act = resolve_activation(m["teacher_activation"], train.kind)
    out_dim = train.n_classes if train.kind == "classification" else 1
    spec = mlp_spec(train.inputs.shape[1], m["teacher_hidden"], out_dim, act)
    teacher_net = init_network(spec, run_seed + _TEACHER_SEED_OFFSET)
    teacher_cfg = DistillConfig(
        method="scratch", epochs=m["teacher_epochs"], batch_size=dconfig.batch_size,
        seed=run_seed + _TEACHER_SEED_OFFSET, learning_rate=dconfig.learning_rate,
        momentum=dconfig.momentum)
    record = train_scratch(teacher_net, train, val, teacher_cfg)
    return TeacherSource.from_network(record.network), record


def _student_spec(cfg: dict, train: Dataset):
    m = cfg["model"]
    act = resolve_activation(m["student_activation"], train.kind)
    out_dim = train.n_classes if train.kind == "classification" else 1
    return mlp_spec(train.inputs.shape[1], m["student_hidden"], out_dim, act)


def _ta_spec(cfg: dict, train: Dataset):
    m = cfg["model"]
    act = resolve_activation(m["ta_activation"], train.kind)
    out_dim = train.n_classes if train.kind == "classification" else 1
    return mlp_spec(train.inputs.shape[1], m["ta_hidden"], out_dim, act)


@dataclass
class RunResult:
    run_dir: Path
    record: RunRecord
    method: str
    seed: int
    smoothness: dict | None    # noisy-sine runs only


def format_float(x: float) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def metrics_csv(record: RunRecord) -> str:
    lines = [METRICS_HEADER]
    for r in record.rows:
        lines.append(",".join([
            str(r.epoch), str(r.temperature), format_float(r.phi), format_float(r.psi),
            format_float(r.train_loss), format_float(r.val_metric), "1" if r.is_best else "0",
        ]))
    return "\n".join(lines) + "\n"


def execute(cfg: dict) -> RunResult:
    """Run the configured method end to end, without touching the filesystem."""
    dconfig = build_distill_config(cfg)
    run_seed = dconfig.seed
    full, train, val, test = build_dataset(cfg, run_seed)
    student = init_network(_student_spec(cfg, train), run_seed)

    if dconfig.method == "scratch":
        record = train_scratch(student, train, val, dconfig)
    else:
        teacher, teacher_record = build_teacher(cfg, train, val, run_seed, dconfig)
        if dconfig.method == "vanilla":
            record = train_vanilla(student, teacher, train, val, dconfig)
        elif dconfig.method == "annealing":
            record = train_annealing(student, teacher, train, val, dconfig)
        elif dconfig.method == "continuation":
            record = train_continuation(student, teacher, train, val, dconfig)
        elif dconfig.method == "takd":
            record = train_takd(teacher, _ta_spec(cfg, train), student, train, val, dconfig)
        else:
            raise ConfigError(f"unknown method {dconfig.method!r}")
        if teacher_record is not None:
            record.aux["teacher_best_metric"] = teacher_record.best_metric

    smoothness = None
    if train.kind == "regression" and full.clean_targets is not None:
        smoothness = smoothness_report(record.network, full)
    return RunResult(Path(), record, dconfig.method, run_seed, smoothness)


def run_to_directory(cfg: dict, out_root) -> RunResult:
    """Execute a run and write its artifacts under out_root."""
    result = execute(cfg)
    run_dir = Path(out_root) / f"{result.method}-seed{result.seed}-{config_hash(cfg)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.toml").write_text(canonical_toml(cfg))
    (run_dir / "metrics.csv").write_text(metrics_csv(result.record))
    save_network(result.record.network, run_dir / "best.ckpt")
    save_network(result.record.final_network, run_dir / "final.ckpt")
    if "ta_record" in result.record.aux:
        save_network(result.record.aux["ta_record"].network, run_dir / "ta.ckpt")
    summary = (f"method={result.method} seed={result.seed} "
               f"best_epoch={result.record.best_epoch} "
               f"best_metric={format_float(result.record.best_metric)}")
    if "ta_best_epoch" in result.record.aux:
        summary += f" ta_best_epoch={result.record.aux['ta_best_epoch']}"
    if result.smoothness is not None:
        summary += (f" mse_to_clean={format_float(result.smoothness['mse_to_clean'])}"
                    f" highfreq_energy={format_float(result.smoothness['highfreq_energy'])}")
    (run_dir / "summary.txt").write_text(summary + "\n")
    return RunResult(run_dir, result.record, result.method, result.seed, result.smoothness)
