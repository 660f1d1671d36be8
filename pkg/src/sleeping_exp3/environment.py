"""Simulated world: Bernoulli availability, oblivious losses, trace files.

Availability and losses come from two independent streams split off the
master seed, so the loss matrix never depends on which arms were available
or played.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .core import ConfigError, TraceTooShort, as_available_set
from .policy import SleepingExp3MP

LossKind = Literal["constant-gap", "periodic-swap", "drifting", "replay-file"]
LOSS_KINDS = ("constant-gap", "periodic-swap", "drifting", "replay-file")
IN_MEMORY_LIMIT = 10**8


@dataclass(frozen=True)
class LossGeneratorSpec:
    """How per-round losses are produced.

    ``means`` defaults to values evenly spaced in [0.1, 0.9]. With
    ``bernoulli=True`` each loss is a 0/1 draw with the current mean, otherwise
    the mean itself. ``periodic-swap`` reverses the means on every odd block
    of ``period`` rounds; ``drifting`` adds a sinusoid of ``amplitude`` with
    per-arm phase offsets.
    """

    kind: LossKind = "constant-gap"
    means: tuple[float, ...] | None = None
    bernoulli: bool = True
    period: int = 1000
    amplitude: float = 0.3
    path: str | None = None

    def validate(self, n_arms: int, prefix: str = "loss") -> None:
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"{prefix}.kind", f"must be one of {LOSS_KINDS}, got {self.kind!r}")
        if self.means is not None:
            if len(self.means) != n_arms:
                raise ConfigError(f"{prefix}.means", f"expected {n_arms} values, got {len(self.means)}")
            if any(not 0.0 <= m <= 1.0 for m in self.means):
                raise ConfigError(f"{prefix}.means", "values must lie in [0, 1]")
        if self.period < 1:
            raise ConfigError(f"{prefix}.period", "must be >= 1")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ConfigError(f"{prefix}.amplitude", "must lie in [0, 1]")
        if self.kind == "replay-file" and not self.path:
            raise ConfigError(f"{prefix}.path", "required for replay-file losses")

    def mean_matrix(self, n_arms: int, horizon: int) -> np.ndarray:
        """``(T, N)`` loss means; row ``t-1`` holds round ``t``."""
        base = np.linspace(0.1, 0.9, n_arms) if self.means is None else np.asarray(self.means, float)
        t = np.arange(1, horizon + 1)
        if self.kind == "constant-gap":
            return np.broadcast_to(base, (horizon, n_arms))
        if self.kind == "periodic-swap":
            swapped = (t // self.period) % 2 == 1
            return np.where(swapped[:, None], base[::-1], base)
        if self.kind == "drifting":
            phase = 2 * np.pi * np.arange(n_arms) / n_arms
            wave = np.sin(2 * np.pi * t[:, None] / self.period + phase)
            return np.clip(base + self.amplitude * wave, 0.0, 1.0)
        raise ValueError(f"{self.kind} has no mean matrix")


@dataclass(frozen=True)
class EnvironmentConfig:
    n_arms: int
    k: int
    horizon: int
    availability: tuple[float, ...]
    loss: LossGeneratorSpec = field(default_factory=LossGeneratorSpec)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "availability", tuple(float(a) for a in self.availability))

    def validate(self, prefix: str = "environment") -> None:
        if self.n_arms < 1:
            raise ConfigError(f"{prefix}.n_arms", "must be >= 1")
        if not 1 <= self.k <= self.n_arms:
            raise ConfigError(f"{prefix}.k", f"must lie in [1, {self.n_arms}]")
        if self.horizon < 1:
            raise ConfigError(f"{prefix}.horizon", "must be >= 1")
        if len(self.availability) != self.n_arms:
            raise ConfigError(f"{prefix}.availability", f"expected {self.n_arms} values")
        if any(not 0.0 <= a <= 1.0 for a in self.availability):
            raise ConfigError(f"{prefix}.availability", "values must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"{prefix}.seed", "must be a 64-bit unsigned integer")
        self.loss.validate(self.n_arms, f"{prefix}.loss")


def seed_streams(seed: int) -> dict[str, np.random.SeedSequence]:
    """Fixed split of one master seed into availability, loss and policy streams."""
    avail, loss, policy = np.random.SeedSequence(seed).spawn(3)
    return {"availability": avail, "loss": loss, "policy": policy}


@dataclass(frozen=True)
class RoundRecord:
    t: int
    available: tuple[int, ...]
    chosen: tuple[int, ...]
    losses_incurred: tuple[float, ...]
    lambda_t: float
    degenerate: bool = False

    @property
    def loss_sum(self) -> float:
        return float(sum(self.losses_incurred))


def _allocate(shape: tuple[int, int], dtype) -> np.ndarray:
    if shape[0] * shape[1] <= IN_MEMORY_LIMIT:
        return np.empty(shape, dtype=dtype)
    fd, name = tempfile.mkstemp(suffix=".npy")
    os.close(fd)
    return np.lib.format.open_memmap(name, mode="w+", dtype=dtype, shape=shape)


class Environment:
    """Pre-generated availability and loss sequences for one episode."""

    def __init__(self, cfg: EnvironmentConfig):
        cfg.validate()
        self.cfg = cfg
        n, horizon = cfg.n_arms, cfg.horizon
        if cfg.loss.kind == "replay-file":
            available, losses = read_replay_file(cfg.loss.path, n)
            if len(available) < horizon:
                raise TraceTooShort(f"replay file has {len(available)} rounds, need {horizon}")
            self.availability = np.zeros((horizon, n), dtype=bool)
            for row, s in enumerate(available[:horizon]):
                self.availability[row, list(s)] = True
            self.losses = np.ascontiguousarray(losses[:horizon])
            return

        streams = seed_streams(cfg.seed)
        avail_rng = np.random.Generator(np.random.PCG64(streams["availability"]))
        loss_rng = np.random.Generator(np.random.PCG64(streams["loss"]))
        a = np.asarray(cfg.availability)
        self.availability = avail_rng.random((horizon, n)) < a
        self.losses = _allocate((horizon, n), np.float64)
        means = cfg.loss.mean_matrix(n, horizon)
        chunk = max(1, IN_MEMORY_LIMIT // (10 * n))
        for lo in range(0, horizon, chunk):
            hi = min(horizon, lo + chunk)
            if cfg.loss.bernoulli:
                self.losses[lo:hi] = loss_rng.random((hi - lo, n)) < means[lo:hi]
            else:
                self.losses[lo:hi] = means[lo:hi]

    @property
    def horizon(self) -> int:
        return self.cfg.horizon

    def generate_round(self, t: int) -> tuple[tuple[int, ...], np.ndarray]:
        """Availability set and full loss vector of round ``t`` (1-based)."""
        if not 1 <= t <= self.horizon:
            raise ValueError(f"round {t} outside [1, {self.horizon}]")
        s = tuple(int(i) for i in np.flatnonzero(self.availability[t - 1]))
        return s, self.losses[t - 1]

    def write_replay_file(self, path: str | Path) -> None:
        write_replay_file(
            path,
            [np.flatnonzero(row).tolist() for row in self.availability],
            self.losses,
        )


def generate_round(env: Environment, t: int) -> tuple[tuple[int, ...], np.ndarray]:
    return env.generate_round(t)


def run_episode(
    env: Environment,
    policy: SleepingExp3MP,
    on_round: Callable[[RoundRecord], None] | None = None,
) -> list[RoundRecord]:
    """Play the whole horizon: generate, select, reveal played losses, update."""
    if policy.n_arms != env.cfg.n_arms or policy.k != env.cfg.k:
        raise ValueError("environment and policy disagree on N or k")
    records = []
    for t in range(1, env.horizon + 1):
        s, loss_row = env.generate_round(t)
        sel = policy.select(s)
        revealed = {i: float(loss_row[i]) for i in sel.chosen}
        policy.feedback(revealed)
        rec = RoundRecord(
            t=t,
            available=s,
            chosen=sel.chosen,
            losses_incurred=tuple(revealed[i] for i in sel.chosen),
            lambda_t=policy.lambda_t(t),
            degenerate=sel.degenerate,
        )
        records.append(rec)
        if on_round is not None:
            on_round(rec)
    return records


# trace files


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def write_replay_file(path: str | Path, available: Sequence[Sequence[int]], losses: np.ndarray) -> None:
    """One round per line: ``t;i,j,...;l_0,...,l_{N-1}`` with 9 decimals."""
    with open(path, "w", newline="\n") as fh:
        for t, (s, row) in enumerate(zip(available, losses), start=1):
            fh.write(f"{t};{','.join(str(i) for i in s)};{','.join(_fmt(v) for v in row)}\n")


def read_replay_file(path: str | Path, n_arms: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    available, rows = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(";")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 't;available;losses'")
            t, avail, loss = parts
            if int(t) != len(available) + 1:
                raise ValueError(f"{path}:{lineno}: round {t} out of sequence")
            s = as_available_set((int(i) for i in avail.split(",") if i), n_arms)
            values = [float(v) for v in loss.split(",")]
            if len(values) != n_arms:
                raise ValueError(f"{path}:{lineno}: expected {n_arms} losses, got {len(values)}")
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"{path}:{lineno}: losses must lie in [0, 1]")
            available.append(s)
            rows.append(values)
    return available, np.asarray(rows, dtype=np.float64).reshape(len(rows), n_arms)


TRACE_COLUMNS = ("t", "available", "chosen", "loss_sum", "lambda", "degenerate")


def write_trace_csv(path: str | Path, records: Sequence[RoundRecord]) -> None:
    """Per-round trace; arm lists are space-separated inside their column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in records:
            w.writerow(
                (
                    r.t,
                    " ".join(map(str, r.available)),
                    " ".join(map(str, r.chosen)),
                    _fmt(r.loss_sum),
                    _fmt(r.lambda_t),
                    int(r.degenerate),
                )
            )


def read_trace_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["t"] = int(row["t"])
        row["available"] = tuple(int(i) for i in row["available"].split())
        row["chosen"] = tuple(int(i) for i in row["chosen"].split())
        row["loss_sum"] = float(row["loss_sum"])
        row["lambda"] = float(row["lambda"])
        row["degenerate"] = bool(int(row["degenerate"]))
    return rows


def cumulative_loss(records: Sequence[RoundRecord]) -> float:
    return math.fsum(r.loss_sum for r in records)
