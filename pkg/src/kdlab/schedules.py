"""Dynamic training factors: the integer temperature ladder, the teacher
softening factor phi, and the epoch-mixing factor psi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TemperatureLadder:
    """Integer temperature schedule: start at t_max, decrement every k epochs.

    k = floor(n / t_max); requires n >= t_max so that k >= 1.  The raw
    ladder would reach 0 on long runs, so the reported temperature is
    clamped below at 1.
    """

    t_max: int
    n: int

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.n < self.t_max:
            raise ValueError(f"need n >= t_max (n={self.n}, t_max={self.t_max})")

    @property
    def k(self) -> int:
        return self.n // self.t_max


def temperature_at_epoch(ladder: TemperatureLadder, i: int) -> int:
    """Temperature at epoch i in [1, n]: max(1, t_max - floor(i / k))."""
    if not 1 <= i <= ladder.n:
        raise ValueError(f"epoch {i} outside [1, {ladder.n}]")
    return max(1, ladder.t_max - i // ladder.k)


def phi_of_temperature(t_i: int, t_max: int) -> float:
    """Teacher softening factor 1 - (t_i - 1)/t_max, in [1/t_max, 1].

    Computed as (t_max - t_i + 1) / t_max so the endpoints 1/t_max and 1.0
    are exact in floating point.
    """
    if not 1 <= t_i <= t_max:
        raise ValueError(f"temperature {t_i} outside [1, {t_max}]")
    return (t_max - t_i + 1) / t_max


@dataclass(frozen=True)
class PsiSpec:
    """Epoch-mixing schedule: one of step / capped_ramp / constant.

    step(switch):          0 for i <= switch, 1 after.
    capped_ramp(d, c):     min(i/d, 1) for i <= c, 1 for i > c.
    constant(v):           v for every epoch.

    Values are always in [0, 1] and non-decreasing in the epoch.
    """

    kind: str
    n: int
    switch: int = 0
    denominator: float = 1.0
    cutover: int = 0
    value: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.kind == "step":
            if self.switch < 1:
                raise ValueError(f"step switch must be >= 1, got {self.switch}")
        elif self.kind == "capped_ramp":
            if self.denominator <= 0:
                raise ValueError(f"ramp denominator must be > 0, got {self.denominator}")
            if self.cutover < 1:
                raise ValueError(f"ramp cutover must be >= 1, got {self.cutover}")
        elif self.kind == "constant":
            if not 0.0 <= self.value <= 1.0:
                raise ValueError(f"constant value must be in [0, 1], got {self.value}")
        else:
            raise ValueError(f"unknown psi kind {self.kind!r}")

    @staticmethod
    def step(switch: int, n: int) -> "PsiSpec":
        return PsiSpec(kind="step", n=n, switch=switch)

    @staticmethod
    def capped_ramp(denominator: float, cutover: int, n: int) -> "PsiSpec":
        return PsiSpec(kind="capped_ramp", n=n, denominator=denominator, cutover=cutover)

    @staticmethod
    def constant(value: float, n: int) -> "PsiSpec":
        return PsiSpec(kind="constant", n=n, value=value)


def psi(spec: PsiSpec, i: int) -> float:
    """Mixing weight at epoch i in [1, n]."""
    if not 1 <= i <= spec.n:
        raise ValueError(f"epoch {i} outside [1, {spec.n}]")
    if spec.kind == "step":
        return 0.0 if i <= spec.switch else 1.0
    if spec.kind == "capped_ramp":
        return min(i / spec.denominator, 1.0) if i <= spec.cutover else 1.0
    return spec.value


def temperature_schedule(ladder: TemperatureLadder) -> np.ndarray:
    """Vector of temperatures for epochs 1..n."""
    i = np.arange(1, ladder.n + 1)
    return np.maximum(1, ladder.t_max - i // ladder.k)


def phi_schedule(ladder: TemperatureLadder) -> np.ndarray:
    """Vector of phi values for epochs 1..n."""
    t = temperature_schedule(ladder)
    return (ladder.t_max - t + 1) / ladder.t_max
