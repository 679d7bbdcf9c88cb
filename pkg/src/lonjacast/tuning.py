"""Seeded random hyperparameter search over per-family spaces."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Uniform",
    "LogUniform",
    "IntUniform",
    "Choice",
    "SearchSpace",
    "TrialRecord",
    "sample_params",
    "random_search",
]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("require lo < hi")

    def draw(self, rng: np.random.Generator):
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not 0 < self.lo < self.hi:
            raise ValueError("require 0 < lo < hi")

    def draw(self, rng: np.random.Generator):
        return float(np.exp(rng.uniform(np.log(self.lo), np.log(self.hi))))


@dataclass(frozen=True)
class IntUniform:
    lo: int
    hi: int  # inclusive

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("require lo < hi")

    def draw(self, rng: np.random.Generator):
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("Choice needs at least one value")

    def draw(self, rng: np.random.Generator):
        return self.values[int(rng.integers(0, len(self.values)))]


@dataclass(frozen=True)
class SearchSpace:
    family: str
    params: dict[str, Uniform | LogUniform | IntUniform | Choice]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True)
class TrialRecord:
    index: int
    params: dict
    rmse: float  # validation RMSE; inf for failed trials
    wall_time: float
    status: str = "ok"  # "ok" | "failed: <reason>"

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "params": self.params,
                "rmse": None if not np.isfinite(self.rmse) else self.rmse,
                "wall_time": self.wall_time,
                "status": self.status,
            },
            sort_keys=True,
        )


def sample_params(space: SearchSpace, rng: np.random.Generator) -> dict:
    """Draw each parameter independently; advances ``rng`` deterministically.

    Parameters are drawn in sorted name order so the sample stream does not
    depend on dict construction order.
    """
    return {name: space.params[name].draw(rng) for name in sorted(space.params)}


def random_search(
    space: SearchSpace,
    trials: int,
    objective,
    seed: int = 0,
) -> tuple[dict, list[TrialRecord]]:
    """Evaluate ``trials`` independent samples; minimum validation RMSE wins,
    ties broken by lowest trial index.  Failed trials are recorded, never
    selected.  Parameter draws happen up front so per-trial evaluation order
    cannot change the sample stream.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    sampled = [sample_params(space, rng) for _ in range(trials)]

    records: list[TrialRecord] = []
    best: tuple[float, int] | None = None
    for i, params in enumerate(sampled):
        t0 = time.perf_counter()
        try:
            rmse = float(objective(params))
            status = "ok"
            if not np.isfinite(rmse):
                raise ValueError(f"objective returned non-finite RMSE {rmse}")
        except Exception as exc:  # noqa: BLE001 - failures are data, not crashes
            rmse = float("inf")
            status = f"failed: {exc}"
        wall = time.perf_counter() - t0
        records.append(TrialRecord(index=i, params=params, rmse=rmse, wall_time=wall, status=status))
        if status == "ok" and (best is None or rmse < best[0]):
            best = (rmse, i)
    if best is None:
        raise RuntimeError("all trials failed")
    return records[best[1]].params, records
