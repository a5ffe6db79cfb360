"""Finite-difference verification of every training objective.

Each loss is checked at many random parameter/input settings of a small
smooth (tanh) network; the hinge loss is only sampled with every
per-sample squared distance at least 1e-3 away from the hinge threshold,
where the subgradient convention would spoil the comparison.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, grad_check
from .losses import (LossHyper, annealing_loss, composite_loss, continuation_kd_loss,
                     cross_entropy, mse_regression, vanilla_kd_loss)
from .models import forward, init_network, mlp_spec

LOSS_NAMES = ("cross_entropy", "mse", "vanilla", "annealing", "continuation", "composite")

_KINK_CLEARANCE = 1e-3


def _case(rng, out_dim):
    """One random check setting: tiny tanh net, batch, teacher logits, labels."""
    spec = mlp_spec(3, [5], out_dim, "tanh")
    net = init_network(spec, int(rng.integers(0, 2**31)))
    # nudge biases off zero so no parameter sits at a symmetric point
    for b in net.biases:
        b.data += rng.normal(0.0, 0.3, size=b.data.shape)
    x = rng.normal(0.0, 1.0, size=(4, 3))
    z_t = rng.normal(0.0, 1.5, size=(4, out_dim))
    labels = rng.integers(0, out_dim, size=4)
    return net, x, z_t, labels


def _clear_of_kink(net, x, z_t, phi, margin, margin_phi):
    from .models import predict

    sq = ((predict(net, x) - phi * z_t) ** 2).sum(axis=1)
    return np.all(np.abs(sq - margin * margin_phi) >= _KINK_CLEARANCE)


def check_loss(name: str, n_points: int = 100, seed: int = 0, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    done = 0
    while done < n_points:
        out_dim = 1 if name == "mse" else int(rng.integers(2, 6))
        net, x, z_t, labels = _case(rng, out_dim)
        phi = float(rng.uniform(0.2, 1.0))
        margin = float(rng.uniform(0.0, 2.0))
        margin_phi = float(rng.uniform(0.2, 1.0))
        psi = float(rng.uniform(0.0, 1.0))
        hyper = LossHyper(lam=float(rng.uniform(0.0, 1.0)), tau=float(rng.uniform(1.0, 4.0)))
        targets = rng.normal(0.0, 1.0, size=(4, out_dim))

        if name in ("continuation", "composite") and not _clear_of_kink(
                net, x, z_t, phi, margin, margin_phi):
            continue

        def loss_fn(g):
            logits = forward(g, net, Tensor(x))
            if name == "cross_entropy":
                return cross_entropy(g, logits, labels)
            if name == "mse":
                return mse_regression(g, logits, targets)
            if name == "vanilla":
                return vanilla_kd_loss(g, logits, z_t, labels, hyper)
            if name == "annealing":
                return annealing_loss(g, logits, z_t, phi)
            if name == "continuation":
                return continuation_kd_loss(g, logits, z_t, phi, margin, margin_phi=margin_phi)
            if name == "composite":
                l_ce = cross_entropy(g, logits, labels)
                l_cnt = continuation_kd_loss(g, logits, z_t, phi, margin, margin_phi=margin_phi)
                return composite_loss(g, l_ce, l_cnt, psi)
            raise ValueError(f"unknown loss {name!r}")

        worst = max(worst, grad_check(loss_fn, net.parameters(), eps=eps))
        done += 1
    return worst


def run_all(n_points: int = 100, seed: int = 0, tolerance: float = 1e-4):
    """(name, max_rel_err, passed) for every loss."""
    results = []
    for i, name in enumerate(LOSS_NAMES):
        err = check_loss(name, n_points=n_points, seed=seed + i)
        results.append((name, err, err <= tolerance))
    return results
