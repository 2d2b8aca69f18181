"""Frontier Monte Carlo for accessibility percolation.

Only the fitness values of accessible vertices at the current level (the
frontier) are tracked. A frontier value ``x`` with ``c`` children produces
``Binomial(c, P(child > x))`` accessible children, each uniform above ``x``.
Trials are pure functions of ``(config, trial_index)``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from ._util import wald_stderr
from .env import EnvSchedule
from .errors import ConfigError
from .rng import trial_rng
from .tree import GrowthFunction, MaterializedTree

log = logging.getLogger(__name__)

ROOT_MODES = ("random", "zero")


@dataclass(frozen=True)
class Frontier:
    """Fitness values of the accessible vertices at one level."""

    values: np.ndarray
    level: int = 0

    def __len__(self) -> int:
        return self.values.size

    @property
    def extinct(self) -> bool:
        return self.values.size == 0


def advance_frontier(frontier: Frontier, c: int, rng: np.random.Generator,
                     next_floor: float = 0.0) -> Frontier:
    """One level of growth: the accessible children of every frontier value.

    Each value ``x`` gets ``k ~ Binomial(c, p)`` children with
    ``p = (1 - x) / (1 - next_floor)`` (1 if ``x <= next_floor``), uniform on
    ``(max(x, next_floor), 1)``.
    """
    if c < 1:
        raise ConfigError(f"child count must be >= 1, got {c}")
    if not 0.0 <= next_floor < 1.0:
        raise ConfigError(f"next_floor must lie in [0, 1), got {next_floor}")
    vals = np.ascontiguousarray(frontier.values, dtype=np.float64)
    out = _kernels.step_plain(rng, vals, int(c), float(next_floor))
    return Frontier(out, frontier.level + 1)


@dataclass(frozen=True)
class TrialConfig:
    growth: GrowthFunction
    max_depth: int
    root_mode: str = "random"
    frontier_cap: int | None = 100_000
    seed: int = 0
    trial_index: int = 0
    env: EnvSchedule | None = None

    def __post_init__(self):
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.root_mode not in ROOT_MODES:
            raise ConfigError(f"root_mode must be one of {ROOT_MODES}, got {self.root_mode!r}")
        if self.frontier_cap is not None and self.frontier_cap < 1:
            raise ConfigError(f"frontier_cap must be >= 1, got {self.frontier_cap}")
        h = self.growth.horizon()
        if h is not None and h < self.max_depth:
            raise ConfigError(f"growth defined for {h} levels, max_depth is {self.max_depth}")

    @property
    def cap(self) -> int:
        return _kernels.NO_CAP if self.frontier_cap is None else int(self.frontier_cap)

    def children(self) -> np.ndarray:
        return self.growth.children_array(self.max_depth)

    def headrooms(self) -> np.ndarray:
        if self.env is None:
            return np.ones(self.max_depth)
        return self.env.headrooms(self.max_depth)

    def root_value(self, rng: np.random.Generator) -> float:
        """Root position relative to the level-0 fitness range."""
        if self.root_mode == "random":
            return rng.random()
        a0 = 0.0 if self.env is None else self.env.level_floor(0)
        return -a0 / (1.0 - a0)

    def to_dict(self) -> dict:
        return {
            "growth": self.growth.to_dict(),
            "max_depth": self.max_depth,
            "root_mode": self.root_mode,
            "frontier_cap": self.frontier_cap,
            "seed": self.seed,
            "trial_index": self.trial_index,
            "env": None if self.env is None else self.env.to_dict(),
        }


def martingale_normalizers(growth: GrowthFunction, depth: int) -> np.ndarray:
    """``prod_{i<n} children(i) / (i+1)`` for ``n = 0..depth``, i.e. ``E(N_n)`` from a zero root."""
    logs = [0.0]
    for i in range(depth):
        logs.append(logs[-1] + math.log(growth.children(i)) - math.log(i + 1))
    return np.exp(np.array(logs))


@dataclass(frozen=True)
class LevelStats:
    level: int
    count: int
    martingale: float
    capped: bool


@dataclass(frozen=True)
class TrialResult:
    levels: list[LevelStats]
    survived: bool
    extinction_level: int | None
    root_mode: str = "random"
    trial_index: int = 0

    @property
    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.levels], dtype=np.int64)

    def to_dict(self) -> dict:
        return asdict(self)


def _trial_arrays(config: TrialConfig, trial_index: int, children, rho):
    rng = trial_rng(config.seed, trial_index)
    root = np.array([config.root_value(rng)])
    counts, capped, _ = _kernels.evolve(rng, root, children, rho, config.cap, 0)
    return counts, capped


def run_trial(config: TrialConfig) -> TrialResult:
    """One independent realization, keyed by ``(config.seed, config.trial_index)``.

    Frontiers larger than ``frontier_cap`` keep their smallest values, which can
    only turn survival into extinction; affected levels are flagged ``capped``.
    """
    counts, capped = _trial_arrays(config, config.trial_index, config.children(), config.headrooms())
    norm = martingale_normalizers(config.growth, config.max_depth)
    levels = [LevelStats(n, int(counts[n]), float(counts[n] / norm[n]), bool(capped[n]))
              for n in range(config.max_depth + 1)]
    dead = np.flatnonzero(counts == 0)
    extinction = int(dead[0]) if dead.size else None
    return TrialResult(levels, extinction is None, extinction, config.root_mode, config.trial_index)


def default_threads() -> int:
    return os.cpu_count() or 1


def simulate_counts(config: TrialConfig, trials: int, threads: int | None = 1):
    """Counts ``N_n`` and capped flags for trials ``trial_index .. trial_index+trials-1``.

    Returns two ``(trials, max_depth + 1)`` arrays. The thread count only
    changes scheduling; each row depends on its own trial key alone.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    threads = default_threads() if threads is None else threads
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    children = config.children()
    rho = config.headrooms()
    counts = np.zeros((trials, config.max_depth + 1), dtype=np.int64)
    capped = np.zeros((trials, config.max_depth + 1), dtype=bool)

    def work(rows: range) -> None:
        for r in rows:
            counts[r], capped[r] = _trial_arrays(config, config.trial_index + r, children, rho)

    if threads == 1:
        work(range(trials))
    else:
        n_chunks = min(trials, threads * 8)
        bounds = np.linspace(0, trials, n_chunks + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]))
    log.debug("simulated %d trials of %s", trials, config.growth)
    return counts, capped


@dataclass(frozen=True)
class LevelEstimate:
    level: int
    n_trials: int
    n_survived: int
    p_hat: float
    stderr: float
    frac_capped: float

    CSV_HEADER = ("level", "n_trials", "n_survived", "p_hat", "stderr", "frac_capped")

    def row(self) -> tuple:
        return (self.level, self.n_trials, self.n_survived, self.p_hat, self.stderr, self.frac_capped)


def level_estimates(counts: np.ndarray, capped: np.ndarray) -> list[LevelEstimate]:
    trials = counts.shape[0]
    alive = (counts > 0).sum(axis=0)
    n_capped = capped.sum(axis=0)
    return [
        LevelEstimate(n, trials, int(alive[n]), float(alive[n] / trials),
                      wald_stderr(int(alive[n]), trials), float(n_capped[n] / trials))
        for n in range(counts.shape[1])
    ]


def estimate_lambda_prob(config: TrialConfig, trials: int, threads: int | None = 1) -> list[LevelEstimate]:
    """Per-level fraction of trials with ``N_n > 0`` and its Wald standard error.

    The estimates are nonincreasing in ``n`` exactly, because extinction is
    absorbing within every trial.
    """
    return level_estimates(*simulate_counts(config, trials, threads))


def martingale_sequence(trial: TrialResult, growth: GrowthFunction) -> np.ndarray:
    """``M_n = N_n / prod_{i<n}(children(i)/(i+1))``; needs a zero-fitness root."""
    if trial.root_mode != "zero":
        raise ConfigError("martingale normalization assumes root_mode='zero'")
    norm = martingale_normalizers(growth, len(trial.levels) - 1)
    return trial.counts / norm


def enumerate_accessible(tree: MaterializedTree, fitness: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Indices of the vertices reachable from the root by increasing paths, per level.

    ``fitness[n]`` holds the values of the level-``n`` vertices. Ties are
    rejected since they have probability zero under the model.
    """
    if len(fitness) != tree.depth + 1:
        raise ConfigError(f"need fitness for {tree.depth + 1} levels, got {len(fitness)}")
    fit = [np.asarray(f, dtype=np.float64) for f in fitness]
    for n, f in enumerate(fit):
        if f.shape != (tree.level_sizes[n],):
            raise ConfigError(f"level {n}: expected {tree.level_sizes[n]} values, got shape {f.shape}")
    flat = np.concatenate(fit)
    if np.unique(flat).size != flat.size:
        raise ConfigError("duplicate fitness values")
    ok = np.ones(1, dtype=bool)
    out = [np.zeros(1, dtype=np.int64)]
    for n in range(1, tree.depth + 1):
        par = tree.parents[n]
        ok = ok[par] & (fit[n] > fit[n - 1][par])
        out.append(np.flatnonzero(ok))
    return out
