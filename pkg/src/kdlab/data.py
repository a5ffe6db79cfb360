"""Deterministic synthetic datasets: the noisy sinusoid regression task and
Gaussian-mixture classification tasks, plus splitting and file round-trip."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._binio import FileFormatError, read_framed, write_framed

_DATA_MAGIC = b"KDLABDAT"
_DATA_VERSION = 1


@dataclass
class Dataset:
    kind: str                       # "regression" | "classification"
    inputs: np.ndarray              # (n, d) float64
    targets: np.ndarray             # (n, 1) float64 or (n,) int64 labels
    clean_targets: np.ndarray | None = None   # (n, 1), noisy-sine only
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("regression", "classification"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        if not np.isfinite(self.inputs).all():
            raise ValueError("dataset inputs must be finite")
        if self.kind == "regression":
            self.targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        else:
            self.targets = np.ascontiguousarray(self.targets, dtype=np.int64)
        if self.clean_targets is not None:
            self.clean_targets = np.ascontiguousarray(self.clean_targets, dtype=np.float64)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_classes(self) -> int:
        if self.kind != "classification":
            raise ValueError("n_classes only applies to classification datasets")
        return int(self.metadata.get("n_classes", int(self.targets.max()) + 1))

    def take(self, idx: np.ndarray, metadata: dict) -> "Dataset":
        return Dataset(
            kind=self.kind,
            inputs=self.inputs[idx],
            targets=self.targets[idx],
            clean_targets=None if self.clean_targets is None else self.clean_targets[idx],
            metadata=metadata,
        )


def gen_noisy_sine(n_samples: int = 3000, x_range=(-np.pi, np.pi), base_freq: float = 1.0,
                   noise_freq: float = 20.0, noise_amp: float = 0.3, seed: int = 0) -> Dataset:
    """Low-frequency sinusoid plus a high-frequency sinusoidal disturbance.

    x is uniform over the range; targets are sin(base_freq*x) +
    noise_amp*sin(noise_freq*x), with the clean component kept alongside.
    """
    lo, hi = float(x_range[0]), float(x_range[1])
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if hi <= lo:
        raise ValueError(f"invalid x range [{lo}, {hi}]")
    if noise_freq <= base_freq:
        raise ValueError(f"noise_freq {noise_freq} must exceed base_freq {base_freq}")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.uniform(lo, hi, size=(n_samples, 1))
    clean = np.sin(base_freq * x)
    noisy = clean + noise_amp * np.sin(noise_freq * x)
    meta = {"generator": "noisy_sine", "n_samples": n_samples, "x_lo": lo, "x_hi": hi,
            "base_freq": base_freq, "noise_freq": noise_freq, "noise_amp": noise_amp, "seed": seed}
    return Dataset("regression", x, noisy, clean_targets=clean, metadata=meta)


def gen_gaussian_mixture(n_classes: int = 10, dim: int = 16, n_per_class: int = 300,
                         spread: float = 1.0, separation: float = 4.0, seed: int = 0) -> Dataset:
    """Balanced isotropic Gaussian blobs with means on a random sphere."""
    if n_classes < 2:
        raise ValueError(f"n_classes must be >= 2, got {n_classes}")
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    if spread <= 0 or separation <= 0:
        raise ValueError("spread and separation must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    directions = rng.standard_normal((n_classes, dim))
    means = separation * directions / np.linalg.norm(directions, axis=1, keepdims=True)
    inputs = np.empty((n_classes * n_per_class, dim))
    labels = np.empty(n_classes * n_per_class, dtype=np.int64)
    for c in range(n_classes):
        block = slice(c * n_per_class, (c + 1) * n_per_class)
        inputs[block] = means[c] + spread * rng.standard_normal((n_per_class, dim))
        labels[block] = c
    meta = {"generator": "gaussian_mixture", "n_classes": n_classes, "dim": dim,
            "n_per_class": n_per_class, "spread": spread, "separation": separation, "seed": seed}
    return Dataset("classification", inputs, labels, metadata=meta)


def split(dataset: Dataset, fractions, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded permutation then contiguous train/val/test partition."""
    fractions = [float(f) for f in fractions]
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"need three positive fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got sum {sum(fractions)}")
    n = len(dataset)
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    n_train = int(fractions[0] * n)
    n_val = int(fractions[1] * n)
    bounds = [(0, n_train), (n_train, n_train + n_val), (n_train + n_val, n)]
    names = ("train", "val", "test")
    out = []
    for name, (a, b) in zip(names, bounds):
        idx = perm[a:b]
        meta = dict(dataset.metadata)
        meta.update({"split": name, "split_seed": seed, "parent_indices": idx.tolist()})
        out.append(dataset.take(idx, meta))
    return tuple(out)


def save_dataset(dataset: Dataset, path):
    """Versioned binary dataset file; bit-exact round trip."""
    meta_bytes = json.dumps(dataset.metadata, sort_keys=True, separators=(",", ":")).encode()
    n, d = dataset.inputs.shape
    kind_code = 0 if dataset.kind == "regression" else 1
    has_clean = dataset.clean_targets is not None
    parts = [struct.pack("<BIIB I", kind_code, n, d, int(has_clean), len(meta_bytes)), meta_bytes,
             dataset.inputs.astype("<f8").tobytes()]
    if dataset.kind == "regression":
        parts.append(dataset.targets.astype("<f8").tobytes())
    else:
        parts.append(dataset.targets.astype("<i8").tobytes())
    if has_clean:
        parts.append(dataset.clean_targets.astype("<f8").tobytes())
    write_framed(path, _DATA_MAGIC, _DATA_VERSION, b"".join(parts))


def load_dataset(path) -> Dataset:
    payload = read_framed(path, _DATA_MAGIC, _DATA_VERSION)
    try:
        kind_code, n, d, has_clean, meta_len = struct.unpack_from("<BIIB I", payload, 0)
        off = struct.calcsize("<BIIB I")
        metadata = json.loads(payload[off:off + meta_len].decode())
        off += meta_len
        inputs = np.frombuffer(payload, dtype="<f8", count=n * d, offset=off).reshape(n, d).copy()
        off += 8 * n * d
        if kind_code == 0:
            targets = np.frombuffer(payload, dtype="<f8", count=n, offset=off).reshape(n, 1).copy()
        else:
            targets = np.frombuffer(payload, dtype="<i8", count=n, offset=off).copy()
        off += 8 * n
        clean = None
        if has_clean:
            clean = np.frombuffer(payload, dtype="<f8", count=n, offset=off).reshape(n, 1).copy()
            off += 8 * n
        if off != len(payload):
            raise FileFormatError(f"{path}: {len(payload) - off} trailing payload bytes")
    except (struct.error, ValueError, json.JSONDecodeError) as e:
        raise FileFormatError(f"{path}: malformed dataset payload: {e}") from e
    kind = "regression" if kind_code == 0 else "classification"
    return Dataset(kind, inputs, targets, clean_targets=clean, metadata=metadata)
