"""Training engines: the annealed-hinge continuation loop plus the scratch,
vanilla KD, two-stage annealing, and TAKD baselines, with best-checkpoint
selection on a validation split.

Every engine is deterministic in (config, seed): mini-batch order is a
seeded permutation keyed by (seed, epoch), and optimizer state starts at
zero.  Engines mutate the student in place and return it, loaded with the
best checkpoint, inside a RunRecord.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Graph, Tensor
from .data import Dataset
from .losses import (LossHyper, annealing_loss, composite_loss, continuation_kd_loss,
                     cross_entropy, mse_regression, vanilla_kd_loss, vanilla_kd_regression_loss)
from .models import Network, TeacherSource, forward, init_network, predict
from .schedules import PsiSpec, TemperatureLadder, phi_of_temperature, psi, temperature_at_epoch

METHODS = ("scratch", "vanilla", "takd", "annealing", "continuation")


class NumericError(ArithmeticError):
    """Non-finite loss or gradient; aborts the run."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class OptimizerState:
    """SGD with heavy-ball momentum: v <- momentum*v + g; p <- p - lr*v."""

    learning_rate: float
    momentum: float = 0.0
    velocity: list[np.ndarray] | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")


def sgd_step(params: list[Tensor], state: OptimizerState, epoch: int | None = None):
    """One momentum-SGD update from the grads accumulated on ``params``."""
    if state.velocity is None:
        state.velocity = [np.zeros_like(p.data) for p in params]
    for p, v in zip(params, state.velocity):
        if not np.isfinite(p.grad).all():
            where = f" at epoch {epoch}" if epoch is not None else ""
            raise NumericError(f"non-finite gradient{where}")
        v *= state.momentum
        v += p.grad
        p.data -= state.learning_rate * v


@dataclass(frozen=True)
class DistillConfig:
    """Everything a single training run needs besides data and networks."""

    method: str
    epochs: int
    batch_size: int = 32
    seed: int = 0
    t_max: int = 10
    psi_spec: PsiSpec | None = None
    hyper: LossHyper = LossHyper()
    learning_rate: float = 0.1
    momentum: float = 0.9
    freeze_psi: float | None = None
    freeze_phi_teacher: float | None = None
    freeze_phi_margin: float | None = None
    annealing_stage1: int = 0
    annealing_stage2: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.method == "continuation":
            if self.t_max < 1 or self.epochs < self.t_max:
                raise ConfigError(
                    f"continuation requires epochs >= t_max >= 1 (epochs={self.epochs}, t_max={self.t_max})"
                )
            if self.psi_spec is None:
                raise ConfigError("continuation requires a psi schedule")
            if self.psi_spec.n != self.epochs:
                raise ConfigError(
                    f"psi schedule horizon {self.psi_spec.n} != epochs {self.epochs}"
                )
        if self.method == "annealing":
            if self.annealing_stage1 + self.annealing_stage2 != self.epochs:
                raise ConfigError(
                    f"annealing stages must sum to epochs "
                    f"({self.annealing_stage1} + {self.annealing_stage2} != {self.epochs})"
                )
            if self.annealing_stage1 > 0 and self.annealing_stage1 < self.t_max:
                raise ConfigError(
                    f"annealing stage 1 needs at least t_max epochs "
                    f"(stage1={self.annealing_stage1}, t_max={self.t_max})"
                )
        for name in ("freeze_psi",):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        for name in ("freeze_phi_teacher", "freeze_phi_margin"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {v}")


@dataclass
class EpochRow:
    epoch: int
    temperature: int
    phi: float
    psi: float
    train_loss: float
    val_metric: float
    is_best: bool


@dataclass
class RunRecord:
    """Per-epoch metrics plus the best and final parameter snapshots."""

    rows: list[EpochRow]
    network: Network          # best checkpoint loaded
    final_network: Network    # parameters after the last epoch
    best_epoch: int
    best_metric: float
    aux: dict = field(default_factory=dict)


def evaluate(net: Network, dataset: Dataset, task_kind: str | None = None) -> float:
    """Validation metric, higher is better: accuracy, or negative MSE."""
    kind = task_kind if task_kind is not None else dataset.kind
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty split")
    preds = predict(net, dataset.inputs)
    if kind == "classification":
        return float(np.mean(preds.argmax(axis=1) == dataset.targets))
    if kind == "regression":
        return float(-np.mean((preds - dataset.targets) ** 2))
    raise ValueError(f"unknown task kind {kind!r}")


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int):
    """Seeded permutation of range(n), yielded in batch_size slices.

    Every sample appears exactly once per epoch; the order depends only on
    (seed, epoch).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, epoch])))
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def _train_loop(net: Network, train: Dataset, val: Dataset, config: DistillConfig,
                epochs: range, epoch_ctx) -> RunRecord:
    """Shared epoch loop: mini-batch SGD, per-epoch validation, best tracking.

    ``epoch_ctx(i)`` returns (temperature, phi, psi, batch_loss_fn) for epoch
    i, where batch_loss_fn(graph, x_tensor, idx) builds the scalar loss.
    """
    state = OptimizerState(config.learning_rate, config.momentum)
    params = net.parameters()
    rows: list[EpochRow] = []
    best_metric = -np.inf
    best_snapshot = net.snapshot()
    best_epoch = 0
    for i in epochs:
        temperature, phi_value, psi_value, batch_loss = epoch_ctx(i)
        total = 0.0
        n_batches = 0
        for idx in epoch_batches(len(train), config.batch_size, config.seed, i):
            g = Graph()
            x = Tensor(train.inputs[idx])
            loss = batch_loss(g, x, idx)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {i}")
            g.backward(loss)
            sgd_step(params, state, epoch=i)
            net.zero_grads()
            total += value
            n_batches += 1
        val_metric = evaluate(net, val)
        is_best = val_metric > best_metric
        if is_best:
            best_metric = val_metric
            best_snapshot = net.snapshot()
            best_epoch = i
        rows.append(EpochRow(i, temperature, phi_value, psi_value,
                             total / n_batches, val_metric, is_best))
    final = net.clone()
    net.restore(best_snapshot)
    return RunRecord(rows, net, final, best_epoch, best_metric)


def _hard_loss(task_kind: str, train: Dataset):
    if task_kind == "classification":
        return lambda g, logits, idx: cross_entropy(g, logits, train.targets[idx])
    return lambda g, pred, idx: mse_regression(g, pred, train.targets[idx])


def train_scratch(student: Network, train: Dataset, val: Dataset, config: DistillConfig) -> RunRecord:
    """Hard-label training only; the no-teacher baseline."""
    hard = _hard_loss(train.kind, train)

    def ctx(i):
        def batch_loss(g, x, idx):
            return hard(g, forward(g, student, x), idx)
        return 1, 1.0, 1.0, batch_loss

    return _train_loop(student, train, val, config, range(1, config.epochs + 1), ctx)


def train_vanilla(student: Network, teacher: TeacherSource, train: Dataset, val: Dataset,
                  config: DistillConfig) -> RunRecord:
    """Hard labels mixed with softened-teacher matching (classification) or
    with MSE to teacher outputs (regression)."""
    zt_all = teacher.logits(train.inputs)

    if train.kind == "classification":
        def batch_loss_for(i):
            def batch_loss(g, x, idx):
                logits = forward(g, student, x)
                return vanilla_kd_loss(g, logits, zt_all[idx], train.targets[idx], config.hyper)
            return batch_loss
    else:
        def batch_loss_for(i):
            def batch_loss(g, x, idx):
                pred = forward(g, student, x)
                return vanilla_kd_regression_loss(g, pred, zt_all[idx], train.targets[idx], config.hyper)
            return batch_loss

    def ctx(i):
        return 1, 1.0, 1.0, batch_loss_for(i)

    return _train_loop(student, train, val, config, range(1, config.epochs + 1), ctx)


def train_continuation(student: Network, teacher: TeacherSource, train: Dataset, val: Dataset,
                       config: DistillConfig) -> RunRecord:
    """Composite objective: psi(i) * hard loss + (1 - psi(i)) * annealed hinge.

    Each epoch sets the temperature from the ladder, derives phi, and takes
    psi from the schedule; the ablation freeze flags replace the teacher
    coefficient, the margin coefficient, or psi with constants.
    """
    if config.method != "continuation":
        raise ConfigError(f"train_continuation got method {config.method!r}")
    ladder = TemperatureLadder(config.t_max, config.epochs)
    zt_all = teacher.logits(train.inputs)
    hard = _hard_loss(train.kind, train)
    margin = config.hyper.margin

    def ctx(i):
        t_i = temperature_at_epoch(ladder, i)
        phi_dyn = phi_of_temperature(t_i, config.t_max)
        phi_teacher = config.freeze_phi_teacher if config.freeze_phi_teacher is not None else phi_dyn
        phi_margin = config.freeze_phi_margin if config.freeze_phi_margin is not None else phi_dyn
        psi_value = config.freeze_psi if config.freeze_psi is not None else psi(config.psi_spec, i)

        def batch_loss(g, x, idx):
            logits = forward(g, student, x)
            l_hard = hard(g, logits, idx)
            l_cnt = continuation_kd_loss(g, logits, zt_all[idx], phi_teacher, margin,
                                         margin_phi=phi_margin)
            return composite_loss(g, l_hard, l_cnt, psi_value)

        return t_i, phi_teacher, psi_value, batch_loss

    return _train_loop(student, train, val, config, range(1, config.epochs + 1), ctx)


def train_annealing(student: Network, teacher: TeacherSource, train: Dataset, val: Dataset,
                    config: DistillConfig) -> RunRecord:
    """Two stages: match phi-scaled teacher logits for stage1 epochs, then
    fine-tune the stage-1 best checkpoint on hard labels."""
    if config.method != "annealing":
        raise ConfigError(f"train_annealing got method {config.method!r}")
    k, m_epochs = config.annealing_stage1, config.annealing_stage2
    zt_all = teacher.logits(train.inputs)
    hard = _hard_loss(train.kind, train)

    rows: list[EpochRow] = []
    if k > 0:
        ladder = TemperatureLadder(config.t_max, k)

        def stage1_ctx(i):
            t_i = temperature_at_epoch(ladder, i)
            phi_value = phi_of_temperature(t_i, config.t_max)

            def batch_loss(g, x, idx):
                return annealing_loss(g, forward(g, student, x), zt_all[idx], phi_value)

            return t_i, phi_value, 0.0, batch_loss

        stage1 = _train_loop(student, train, val, config, range(1, k + 1), stage1_ctx)
        rows.extend(stage1.rows)
        # student now holds the stage-1 best checkpoint, which seeds stage 2
        stage1_best = (stage1.best_epoch, stage1.best_metric)
    else:
        stage1 = None
        stage1_best = (0, -np.inf)

    def stage2_ctx(i):
        def batch_loss(g, x, idx):
            return hard(g, forward(g, student, x), idx)
        return 1, 1.0, 1.0, batch_loss

    stage2 = _train_loop(student, train, val, config, range(k + 1, k + m_epochs + 1), stage2_ctx)
    rows.extend(stage2.rows)
    if m_epochs == 0 and stage1 is not None:
        record = RunRecord(rows, student, stage1.final_network, *stage1_best)
    else:
        record = RunRecord(rows, student, stage2.final_network, stage2.best_epoch, stage2.best_metric)
    record.aux["stage1_best_epoch"] = stage1_best[0]
    return record


def train_takd(teacher: TeacherSource, ta_spec, student: Network, train: Dataset, val: Dataset,
               config: DistillConfig) -> RunRecord:
    """Two vanilla hops: teacher trains a TA, the TA trains the student.

    The TA is initialized from seed + 1 so it does not mirror the student.
    """
    if ta_spec is None:
        raise ConfigError("takd requires a TA spec")
    ta = init_network(ta_spec, config.seed + 1)
    ta_record = train_vanilla(ta, teacher, train, val, config)
    ta_teacher = TeacherSource.from_network(ta_record.network)
    record = train_vanilla(student, ta_teacher, train, val, config)
    record.aux["ta_record"] = ta_record
    record.aux["ta_best_epoch"] = ta_record.best_epoch
    return record
