"""Training objectives: cross-entropy, MSE, vanilla KD, annealed logit
matching, the annealed-hinge KD loss, and their convex composite.

All losses are batch means over 2-D (batch x classes) logit tensors and
return scalar graph tensors.  Teacher logits enter as constants and never
receive gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .autodiff import Graph, ShapeError, Tensor


@dataclass(frozen=True)
class LossHyper:
    """Mixing weight, softening temperature, and hinge margin."""

    lam: float = 0.5
    tau: float = 2.0
    margin: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.tau < 1.0:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.margin < 0.0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


def _const(x) -> np.ndarray:
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(data, dtype=np.float64)


def cross_entropy(g: Graph, logits: Tensor, labels) -> Tensor:
    """Mean negative log softmax probability of the labelled class."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy expects 2-D logits, got {logits.data.shape}")
    b, c = logits.data.shape
    if b < 1:
        raise ShapeError("cross_entropy needs at least one sample")
    if labels.shape != (b,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {b}")
    if labels.min() < 0 or labels.max() >= c:
        raise IndexError(f"label out of range [0, {c})")
    lse = g.log_sum_exp(logits, axis=1)
    picked = g.pick(logits, labels)
    return g.mean(g.sub(lse, picked))


def mse_regression(g: Graph, pred: Tensor, targets) -> Tensor:
    """Mean over the batch of per-sample squared error."""
    t = _const(targets)
    if pred.data.shape != t.shape:
        raise ShapeError(f"mse shapes differ: {pred.data.shape} vs {t.shape}")
    diff = g.sub(pred, Tensor(t))
    return g.mean(g.sum_sq(diff, axis=1))


def vanilla_kd_loss(g: Graph, z_s: Tensor, z_t, labels, hyper: LossHyper) -> Tensor:
    """lam * CE(labels, student) + (1 - lam) * KL(teacher_tau || student_tau).

    The KL term uses temperature-softened distributions on both sides and
    is expressed as (lse_S - lse_T) + (cross_T - cross_S) per sample, which
    is exactly zero when the student's logits equal the teacher's.
    """
    zt = _const(z_t)
    if z_s.data.shape != zt.shape:
        raise ShapeError(f"logit shapes differ: {z_s.data.shape} vs {zt.shape}")
    inv_tau = 1.0 / hyper.tau

    zt_soft = zt * inv_tau
    lse_t, p_t = K.logsumexp_softmax_rows(zt_soft)
    cross_t = (p_t * zt_soft).sum(axis=1)

    zs_soft = g.scale(z_s, inv_tau)
    lse_s = g.log_sum_exp(zs_soft, axis=1)
    cross_s = g.sum(g.mul(zs_soft, Tensor(p_t)), axis=1)

    kl_rows = g.add(g.sub(lse_s, Tensor(lse_t)), g.sub(Tensor(cross_t), cross_s))
    kl = g.mean(kl_rows)
    ce = cross_entropy(g, z_s, labels)
    return g.add(g.scale(ce, hyper.lam), g.scale(kl, 1.0 - hyper.lam))


def vanilla_kd_regression_loss(g: Graph, pred: Tensor, teacher_out, targets, hyper: LossHyper) -> Tensor:
    """Regression surrogate: lam * MSE(pred, targets) + (1 - lam) * MSE(pred, teacher)."""
    hard = mse_regression(g, pred, targets)
    soft = mse_regression(g, pred, teacher_out)
    return g.add(g.scale(hard, hyper.lam), g.scale(soft, 1.0 - hyper.lam))


def annealing_loss(g: Graph, z_s: Tensor, z_t, phi: float) -> Tensor:
    """Mean squared distance between student logits and phi-scaled teacher logits."""
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must be in [0, 1], got {phi}")
    zt = _const(z_t)
    if z_s.data.shape != zt.shape:
        raise ShapeError(f"logit shapes differ: {z_s.data.shape} vs {zt.shape}")
    diff = g.sub(z_s, Tensor(zt * phi))
    return g.mean(g.sum_sq(diff, axis=1))


def continuation_kd_loss(g: Graph, z_s: Tensor, z_t, phi: float, margin: float,
                         margin_phi: float | None = None) -> Tensor:
    """Annealed hinge: mean of max(0, ||z_s - phi*z_t||^2 - margin*phi) per sample.

    ``margin_phi`` lets the ablation freeze the margin coefficient
    independently of the teacher coefficient; by default both use ``phi``.
    """
    if not 0.0 < phi <= 1.0:
        raise ValueError(f"phi must be in (0, 1], got {phi}")
    if margin < 0.0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    if margin_phi is None:
        margin_phi = phi
    zt = _const(z_t)
    if z_s.data.shape != zt.shape:
        raise ShapeError(f"logit shapes differ: {z_s.data.shape} vs {zt.shape}")
    diff = g.sub(z_s, Tensor(zt * phi))
    sq_dist = g.sum_sq(diff, axis=1)
    hinged = g.relu(g.add_scalar(sq_dist, -(margin * margin_phi)))
    return g.mean(hinged)


def composite_loss(g: Graph, l_ce: Tensor, l_cnt: Tensor, psi: float) -> Tensor:
    """psi * l_ce + (1 - psi) * l_cnt."""
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must be in [0, 1], got {psi}")
    return g.add(g.scale(l_ce, psi), g.scale(l_cnt, 1.0 - psi))
