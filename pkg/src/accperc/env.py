"""Level-dependent fitness floors for homogeneous trees.

At level ``k`` fitness values are ``U(a_k, 1)`` with ``a_k`` strictly
increasing. Schedules are evaluated lazily from their formulas. The harmonic
schedule ``b_i = 1 - 1/i`` is undefined at ``i = 0``, so it starts at
``i = 1`` and the tree's level ``k`` uses ``b_{k+1}``; ``index_offset``
records this shift.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ._util import tail_inf_exceeds_one
from .errors import ConfigError
from .tree import HorizonError


class EnvSchedule:
    kind = ""
    #: schedule index used for tree level 0
    index_offset = 0
    #: False only for the unconditioned standard model (all floors zero)
    strict = True

    def value(self, i: int) -> float:
        """``a_i`` in the schedule's own indexing."""
        raise NotImplementedError

    def ratio(self, i: int) -> float:
        """``(a_{i+1} - a_i) / (1 - a_i)``, exact per variant."""
        raise NotImplementedError

    def headroom(self, i: int) -> float:
        """``(1 - a_i) / (1 - a_{i+1})``, exact per variant."""
        return 1.0 / (1.0 - self.ratio(i))

    def horizon(self) -> int | None:
        """One past the last valid schedule index, or None if unbounded."""
        return None

    def _check_index(self, i: int) -> None:
        if i < self.index_offset:
            raise ConfigError(f"{self.kind} schedule starts at index {self.index_offset}, got {i}")
        h = self.horizon()
        if h is not None and i >= h:
            raise HorizonError(f"{self.kind} schedule defined for indices < {h}, got {i}")

    def level_floor(self, level: int) -> float:
        return self.value(level + self.index_offset)

    def level_ratio(self, level: int) -> float:
        return self.ratio(level + self.index_offset)

    def level_headroom(self, level: int) -> float:
        return self.headroom(level + self.index_offset)

    def headrooms(self, depth: int) -> np.ndarray:
        """Headroom ratios for levels ``0 .. depth-1``."""
        return np.array([self.level_headroom(k) for k in range(depth)], dtype=np.float64)

    def floors(self, depth: int) -> np.ndarray:
        """Floors for levels ``0 .. depth`` inclusive."""
        return np.array([self.level_floor(k) for k in range(depth + 1)], dtype=np.float64)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_json()})"


class Geometric(EnvSchedule):
    """``a_i = 1 - beta**-i``; every ratio equals ``1 - 1/beta``."""

    kind = "geometric"

    def __init__(self, beta: float):
        if not beta > 1:
            raise ConfigError(f"beta must exceed 1, got {beta}")
        self.beta = float(beta)

    def value(self, i: int) -> float:
        self._check_index(i)
        return -math.expm1(-i * math.log(self.beta))

    def ratio(self, i: int) -> float:
        self._check_index(i)
        return 1.0 - 1.0 / self.beta

    def headroom(self, i: int) -> float:
        self._check_index(i)
        return self.beta

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta}


class Harmonic(EnvSchedule):
    """``b_i = 1 - 1/i`` for ``i >= 1``; ratio ``1/(i+1)``."""

    kind = "harmonic"
    index_offset = 1

    def value(self, i: int) -> float:
        self._check_index(i)
        return 1.0 - 1.0 / i

    def ratio(self, i: int) -> float:
        self._check_index(i)
        return 1.0 / (i + 1)

    def headroom(self, i: int) -> float:
        self._check_index(i)
        return (i + 1) / i

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class Constant0(EnvSchedule):
    """All floors zero: the standard iid model."""

    kind = "constant0"
    strict = False

    def value(self, i: int) -> float:
        self._check_index(i)
        return 0.0

    def ratio(self, i: int) -> float:
        self._check_index(i)
        return 0.0

    def headroom(self, i: int) -> float:
        self._check_index(i)
        return 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class ExplicitEnv(EnvSchedule):
    kind = "explicit"

    def __init__(self, a: Sequence[float]):
        a = tuple(float(x) for x in a)
        if not a:
            raise ConfigError("explicit schedule must be nonempty")
        if any(not 0.0 <= x < 1.0 for x in a):
            raise ConfigError("schedule values must lie in [0, 1)")
        if any(y <= x for x, y in zip(a, a[1:])):
            raise ConfigError("schedule must be strictly increasing")
        self.a = a

    def horizon(self) -> int:
        return len(self.a)

    def value(self, i: int) -> float:
        self._check_index(i)
        return self.a[i]

    def ratio(self, i: int) -> float:
        self._check_index(i + 1)
        return (self.a[i + 1] - self.a[i]) / (1.0 - self.a[i])

    def headroom(self, i: int) -> float:
        self._check_index(i + 1)
        return (1.0 - self.a[i]) / (1.0 - self.a[i + 1])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": list(self.a)}


def env_from_dict(spec: dict) -> EnvSchedule:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    try:
        if kind == "geometric":
            return Geometric(spec["beta"])
        if kind == "harmonic":
            return Harmonic()
        if kind == "constant0":
            return Constant0()
        if kind == "explicit":
            return ExplicitEnv(spec["a"])
    except KeyError as exc:
        raise ConfigError(f"env spec {spec!r} missing field {exc}") from None
    raise ConfigError(f"unknown env spec {spec!r}")


def parse_env(text: str | dict | EnvSchedule) -> EnvSchedule:
    if isinstance(text, EnvSchedule):
        return text
    if isinstance(text, dict):
        return env_from_dict(text)
    try:
        return env_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"env spec is not valid JSON: {exc}") from None


def ratio(env: EnvSchedule, i: int) -> float:
    return env.ratio(i)


def chain_product(env: EnvSchedule, n: int) -> float:
    """Product of the first ``n`` level ratios.

    This is the probability that the chain clears every next floor,
    ``X_k < a_{k+1}`` for all ``k``, which forces it to be increasing; it is a
    lower bound on the increasing-chain probability, not equal to it
    (``exact.varyenv_chain_exact`` gives the exact value).
    """
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    return math.prod(env.level_ratio(k) for k in range(n))


@dataclass(frozen=True)
class SufCondReport:
    d: int
    n: int
    values: list[float]
    tail_inf: float
    holds: bool
    index_offset: int

    def to_dict(self) -> dict:
        return asdict(self)


def sufcond_check(d: int, env: EnvSchedule, n: int, horizon: int = 100,
                  margin: float = 1e-6) -> SufCondReport:
    """Evaluate ``v_j = d**n * prod_{i=jn}^{jn+n-1} r_i`` for ``j = 0..horizon``.

    ``holds`` iff the infimum over ``j`` in ``[horizon//2, horizon]`` exceeds
    ``1 + margin``; a finite check, not a certificate for the liminf.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if d < 2:
        raise ConfigError(f"d must be >= 2, got {d}")
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    logs = []
    for j in range(horizon + 1):
        s = n * math.log(d)
        for k in range(j * n, j * n + n):
            r = env.level_ratio(k)
            s += math.log(r) if r > 0 else -math.inf
        logs.append(s)
    tail_inf, holds = tail_inf_exceeds_one(logs, margin)
    return SufCondReport(d, n, [math.exp(v) for v in logs], tail_inf, holds, env.index_offset)
