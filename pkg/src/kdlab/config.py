"""Run configuration files: TOML with fixed sections, strict key checking,
canonical re-serialization (for byte-stable snapshots), and a generated
reference of every key and default."""

from __future__ import annotations

import hashlib
import math
import tomllib
from pathlib import Path

from .distill import ConfigError, DistillConfig
from .losses import LossHyper
from .schedules import PsiSpec

# Schema: section -> key -> (type, default, doc).  A default of None marks
# an optional key that may be omitted (and is omitted when unset in the
# canonical form).
_PI = math.pi

SCHEMA = {
    "data": {
        "kind": (str, "gaussian_mixture", "dataset generator: gaussian_mixture | noisy_sine"),
        "seed": (int, 0, "generator seed; the run seed is added to it, so seed sweeps vary the data too"),
        "train_fraction": (float, 0.8, "fraction of rows for training"),
        "val_fraction": (float, 0.1, "fraction of rows for validation (best-checkpoint metric)"),
        "test_fraction": (float, 0.1, "fraction of rows held out"),
        "n_classes": (int, 10, "gaussian_mixture: number of classes"),
        "dim": (int, 16, "gaussian_mixture: input dimension"),
        "n_per_class": (int, 300, "gaussian_mixture: samples per class"),
        "spread": (float, 1.0, "gaussian_mixture: within-class standard deviation"),
        "separation": (float, 4.0, "gaussian_mixture: radius of the sphere holding class means"),
        "n_samples": (int, 3000, "noisy_sine: number of sampled points"),
        "x_lo": (float, -_PI, "noisy_sine: left end of the input range"),
        "x_hi": (float, _PI, "noisy_sine: right end of the input range"),
        "base_freq": (float, 1.0, "noisy_sine: angular frequency of the clean component"),
        "noise_freq": (float, 20.0, "noisy_sine: angular frequency of the disturbance"),
        "noise_amp": (float, 0.3, "noisy_sine: amplitude of the disturbance"),
    },
    "model": {
        "student_hidden": (list, [16, 16], "student hidden layer widths"),
        "student_activation": (str, "auto", "relu | tanh | auto (tanh for regression, relu otherwise)"),
        "teacher_kind": (str, "network", "network (train from scratch) | dataset (tabulated targets) | checkpoint"),
        "teacher_hidden": (list, [256, 256], "teacher hidden widths (teacher_kind = network)"),
        "teacher_activation": (str, "auto", "teacher activation, as student_activation"),
        "teacher_epochs": (int, 40, "scratch-training epochs for a network teacher"),
        "teacher_checkpoint": (str, "", "checkpoint path (teacher_kind = checkpoint)"),
        "ta_hidden": (list, [64, 64], "teacher-assistant hidden widths (takd)"),
        "ta_activation": (str, "auto", "TA activation, as student_activation"),
    },
    "method": {
        "name": (str, "continuation", "scratch | vanilla | takd | annealing | continuation"),
        "epochs": (int, 60, "total training epochs n"),
        "batch_size": (int, 32, "mini-batch size"),
        "seed": (int, 0, "run seed: student init and per-epoch shuffles"),
        "lam": (float, 0.5, "vanilla KD mixing weight for the hard-label term"),
        "tau": (float, 2.0, "vanilla KD softening temperature"),
        "margin": (float, 0.0, "hinge margin of the continuation loss"),
        "annealing_stage1": (int, 0, "annealing: logit-matching epochs k"),
        "annealing_stage2": (int, 0, "annealing: fine-tuning epochs (stage1 + stage2 = epochs)"),
        "freeze_psi": (float, None, "optional: hold psi at this constant (ablation)"),
        "freeze_phi_teacher": (float, None, "optional: hold the teacher coefficient at this constant"),
        "freeze_phi_margin": (float, None, "optional: hold the margin coefficient at this constant"),
    },
    "schedule": {
        "t_max": (int, 10, "maximum temperature of the ladder"),
        "psi_kind": (str, "capped_ramp", "step | capped_ramp | constant"),
        "psi_switch": (int, 1, "step: last epoch with psi = 0"),
        "psi_denominator": (float, 45.0, "capped_ramp: psi = min(i/denominator, 1) up to the cutover"),
        "psi_cutover": (int, 45, "capped_ramp: epochs after this have psi = 1"),
        "psi_value": (float, 0.5, "constant: the fixed psi"),
    },
    "optimizer": {
        "learning_rate": (float, 0.1, "SGD learning rate"),
        "momentum": (float, 0.9, "SGD momentum"),
    },
    "output": {
        "root": (str, "runs", "output root; --out and KDLAB_OUT_ROOT take precedence"),
    },
    "ablation": {
        "psi_freeze": (float, 0.5, "constant psi used by the arms that freeze psi"),
        "coeff_freeze": (float, 1.0, "constant coefficient used by the arms that freeze phi"),
    },
}

_SECTION_ORDER = ("data", "model", "method", "schedule", "optimizer", "output", "ablation")


def default_config() -> dict:
    """A fully-populated config dict with every default."""
    return {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}


def _check_type(section: str, key: str, value, want):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"[{section}] {key} must be finite, got {value!r}")
        return value
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer, got {value!r}")
        return value
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string, got {value!r}")
        return value
    if want is list:
        if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
            raise ConfigError(f"[{section}] {key} must be a list of integers, got {value!r}")
        return list(value)
    raise AssertionError(f"unhandled schema type {want}")


def validate_config(raw: dict) -> dict:
    """Merge a parsed TOML dict over the defaults; reject unknown keys."""
    cfg = default_config()
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    for section, keys in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in keys.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            want = SCHEMA[section][key][0]
            cfg[section][key] = _check_type(section, key, value, want)
    return cfg


def load_config(path) -> dict:
    try:
        raw = tomllib.loads(Path(path).read_text())
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    return validate_config(raw)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(str(x) for x in value) + "]"
    raise AssertionError(f"unhandled value {value!r}")


def canonical_toml(cfg: dict) -> str:
    """Fixed section and key order; omitted optional keys; repr floats.

    Re-parsing the result reproduces the config exactly, so the snapshot
    written into a run directory replays the run byte-identically.
    """
    lines = []
    for section in _SECTION_ORDER:
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            value = cfg[section][key]
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: dict) -> str:
    """Short content hash identifying a run; ignores the [output] section."""
    text = canonical_toml({**cfg, "output": {"root": ""}})
    return hashlib.sha256(text.encode()).hexdigest()[:10]


def reference() -> str:
    """Generated key-by-key reference of the config format and defaults."""
    lines = ["Configuration reference (TOML).  Unknown sections or keys are rejected.", ""]
    for section in _SECTION_ORDER:
        lines.append(f"[{section}]")
        for key, (want, default, doc) in SCHEMA[section].items():
            typename = {int: "int", float: "float", str: "str", list: "list[int]"}[want]
            shown = "unset" if default is None else _toml_value(default)
            lines.append(f"  {key} ({typename}, default {shown}): {doc}")
        lines.append("")
    return "\n".join(lines)


def build_distill_config(cfg: dict) -> DistillConfig:
    """Instantiate the training configuration from a validated config dict."""
    m = cfg["method"]
    s = cfg["schedule"]
    epochs = m["epochs"]
    psi_spec = None
    if m["name"] == "continuation":
        kind = s["psi_kind"]
        if kind == "step":
            psi_spec = PsiSpec.step(s["psi_switch"], epochs)
        elif kind == "capped_ramp":
            psi_spec = PsiSpec.capped_ramp(s["psi_denominator"], s["psi_cutover"], epochs)
        elif kind == "constant":
            psi_spec = PsiSpec.constant(s["psi_value"], epochs)
        else:
            raise ConfigError(f"unknown psi_kind {kind!r}")
    try:
        hyper = LossHyper(lam=m["lam"], tau=m["tau"], margin=m["margin"])
        return DistillConfig(
            method=m["name"],
            epochs=epochs,
            batch_size=m["batch_size"],
            seed=m["seed"],
            t_max=s["t_max"],
            psi_spec=psi_spec,
            hyper=hyper,
            learning_rate=cfg["optimizer"]["learning_rate"],
            momentum=cfg["optimizer"]["momentum"],
            freeze_psi=m["freeze_psi"],
            freeze_phi_teacher=m["freeze_phi_teacher"],
            freeze_phi_margin=m["freeze_phi_margin"],
            annealing_stage1=m["annealing_stage1"],
            annealing_stage2=m["annealing_stage2"],
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e
