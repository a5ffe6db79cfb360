"""Smoothness report for noisy-sine students: distance to the clean signal
and spectral energy above the clean band, plus plot-ready column data."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Dataset
from .models import Network, predict


def smoothness_report(net: Network, dataset: Dataset, grid_size: int = 512,
                      plot_path=None) -> dict:
    """Evaluate a regression checkpoint on a uniform grid over the data range.

    Returns mse_to_clean (MSE against the clean sinusoid) and
    highfreq_energy (sum of squared rFFT magnitudes of the prediction
    sequence at frequencies above 4x the clean frequency).  When
    ``plot_path`` is given, writes (x, prediction, clean, noisy) columns.
    """
    if dataset.clean_targets is None:
        raise ValueError("smoothness report needs a dataset with clean targets (noisy_sine)")
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    meta = dataset.metadata
    lo, hi = meta["x_lo"], meta["x_hi"]
    base_freq, noise_freq, noise_amp = meta["base_freq"], meta["noise_freq"], meta["noise_amp"]

    x = np.linspace(lo, hi, grid_size)
    pred = predict(net, x[:, None])[:, 0]
    clean = np.sin(base_freq * x)
    noisy = clean + noise_amp * np.sin(noise_freq * x)

    mse_to_clean = float(np.mean((pred - clean) ** 2))
    spectrum = np.abs(np.fft.rfft(pred)) ** 2
    freqs = np.fft.rfftfreq(grid_size, d=(hi - lo) / (grid_size - 1))
    cutoff = 4.0 * base_freq / (2.0 * np.pi)   # angular -> cycles per unit
    highfreq_energy = float(spectrum[freqs > cutoff].sum())

    if plot_path is not None:
        lines = ["x,prediction,clean,noisy"]
        for i in range(grid_size):
            lines.append(f"{x[i]!r},{pred[i]!r},{clean[i]!r},{noisy[i]!r}")
        Path(plot_path).write_text("\n".join(lines) + "\n")

    return {"mse_to_clean": mse_to_clean, "highfreq_energy": highfreq_energy}


def highfreq_energy_of(values: np.ndarray, lo: float, hi: float, base_freq: float) -> float:
    """Spectral energy above 4x base_freq for an already-sampled uniform sequence."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    spectrum = np.abs(np.fft.rfft(values)) ** 2
    freqs = np.fft.rfftfreq(values.size, d=(hi - lo) / (values.size - 1))
    return float(spectrum[freqs > 4.0 * base_freq / (2.0 * np.pi)].sum())
