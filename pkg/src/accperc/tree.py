"""Spherically symmetric trees described by their growth function.

A growth function gives the number of children of every vertex at a level;
it determines the tree completely. Vertices are indexed level by level, and
the children of vertex ``j`` at level ``n`` occupy indices
``j*c .. j*c + c - 1`` at level ``n + 1`` where ``c = children(n)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import CapacityError, ConfigError


class HorizonError(ConfigError, IndexError):
    """A finite (explicit) sequence was queried beyond its last entry."""


def _as_fraction(x: Any) -> Fraction:
    # floats go through their shortest repr so 1.1 means 11/10, not the binary neighbour
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


class GrowthFunction:
    """Base class; subclasses implement :meth:`children`."""

    kind: str = ""

    def children(self, level: int) -> int:
        raise NotImplementedError

    def _check_level(self, level: int) -> None:
        if level < 0:
            raise ConfigError(f"level must be >= 0, got {level}")

    def horizon(self) -> int | None:
        """Number of levels with a defined child count, or None if unbounded."""
        return None

    def children_array(self, depth: int) -> np.ndarray:
        """Child counts for levels ``0 .. depth-1`` as an int64 array."""
        return np.array([self.children(i) for i in range(depth)], dtype=np.int64)

    def level_size(self, n: int) -> int:
        """Exact number of vertices at distance ``n`` from the root."""
        self._check_level(n)
        size = 1
        for i in range(n):
            size *= self.children(i)
        return size

    def log_level_size(self, n: int) -> float:
        """``log(level_size(n))`` without forming the big integer."""
        self._check_level(n)
        return math.fsum(math.log(self.children(i)) for i in range(n))

    def dominated_by(self, other: "GrowthFunction", depth: int) -> bool:
        """True if ``children(i) <= other.children(i)`` for all ``i < depth``."""
        return all(self.children(i) <= other.children(i) for i in range(depth))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_json()})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GrowthFunction) and self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(self.to_json())


class LinearCeil(GrowthFunction):
    """``children(i) = ceil((i + 1) * alpha)``."""

    kind = "linear_ceil"

    def __init__(self, alpha):
        alpha = _as_fraction(alpha)
        if alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {alpha}")
        self.alpha = alpha

    def children(self, level: int) -> int:
        self._check_level(level)
        return math.ceil((level + 1) * self.alpha)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": float(self.alpha)}


class VaryingLinear(GrowthFunction):
    """``children(i) = (i + 1) * alphas[i]`` for a finite sequence of positive integers."""

    kind = "varying"

    def __init__(self, alphas: Sequence[int]):
        alphas = tuple(int(a) for a in alphas)
        if not alphas:
            raise ConfigError("alphas must be nonempty")
        if any(a < 1 for a in alphas):
            raise ConfigError("alphas must be positive integers")
        self.alphas = alphas

    def horizon(self) -> int:
        return len(self.alphas)

    def children(self, level: int) -> int:
        self._check_level(level)
        if level >= len(self.alphas):
            raise HorizonError(f"varying growth defined for levels < {len(self.alphas)}, got {level}")
        return (level + 1) * self.alphas[level]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alphas": list(self.alphas)}


class Factorial(GrowthFunction):
    """``children(i) = i + 1``; level ``n`` holds ``n!`` vertices."""

    kind = "factorial"

    def children(self, level: int) -> int:
        self._check_level(level)
        return level + 1

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class Homogeneous(GrowthFunction):
    """Every vertex has ``d`` children."""

    kind = "homogeneous"

    def __init__(self, d: int):
        if int(d) != d or d < 2:
            raise ConfigError(f"d must be an integer >= 2, got {d}")
        self.d = int(d)

    def children(self, level: int) -> int:
        self._check_level(level)
        return self.d

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d}


class Explicit(GrowthFunction):
    """Finite explicit list of child counts."""

    kind = "explicit"

    def __init__(self, children: Sequence[int]):
        seq = tuple(int(c) for c in children)
        if not seq:
            raise ConfigError("explicit children sequence must be nonempty")
        if any(c < 1 for c in seq):
            raise ConfigError("child counts must be >= 1")
        self.seq = seq

    def horizon(self) -> int:
        return len(self.seq)

    def children(self, level: int) -> int:
        self._check_level(level)
        if level >= len(self.seq):
            raise HorizonError(f"explicit growth defined for levels < {len(self.seq)}, got {level}")
        return self.seq[level]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "children": list(self.seq)}


_KINDS = {
    "linear_ceil": lambda d: LinearCeil(d["alpha"]),
    "varying": lambda d: VaryingLinear(d["alphas"]),
    "factorial": lambda d: Factorial(),
    "homogeneous": lambda d: Homogeneous(d["d"]),
    "explicit": lambda d: Explicit(d["children"]),
}


def growth_from_dict(spec: dict) -> GrowthFunction:
    try:
        kind = spec["kind"]
        build = _KINDS[kind]
    except (KeyError, TypeError):
        raise ConfigError(f"unknown growth spec {spec!r}") from None
    try:
        return build(spec)
    except KeyError as exc:
        raise ConfigError(f"growth spec {spec!r} missing field {exc}") from None


def parse_growth(text: str | dict | GrowthFunction) -> GrowthFunction:
    """Accept a growth function, a dict, or its JSON text."""
    if isinstance(text, GrowthFunction):
        return text
    if isinstance(text, dict):
        return growth_from_dict(text)
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"growth spec is not valid JSON: {exc}") from None
    return growth_from_dict(spec)


@dataclass(frozen=True)
class MaterializedTree:
    """Explicit tree up to ``depth``.

    ``parents[n][k]`` is the index (within level ``n-1``) of the parent of the
    ``k``-th vertex at level ``n``; ``parents[0]`` is empty.
    """

    growth: GrowthFunction
    depth: int
    level_sizes: tuple[int, ...]
    parents: tuple[np.ndarray, ...]

    @property
    def n_vertices(self) -> int:
        return sum(self.level_sizes)


def materialize(g: GrowthFunction, depth: int, size_cap: int = 1_000_000) -> MaterializedTree:
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    sizes = [1]
    parents = [np.empty(0, dtype=np.int64)]
    total = 1
    for n in range(depth):
        c = g.children(n)
        size = sizes[-1] * c
        total += size
        if total > size_cap:
            raise CapacityError(
                f"materializing level {n + 1} ({size} vertices) exceeds size_cap={size_cap}"
            )
        sizes.append(size)
        parents.append(np.repeat(np.arange(sizes[-2], dtype=np.int64), c))
    return MaterializedTree(g, depth, tuple(sizes), tuple(parents))


def embed(small: MaterializedTree, big: MaterializedTree) -> list[np.ndarray]:
    """Map each vertex of ``small`` to its image in ``big``.

    The image of a vertex's ``k``-th child is the ``k``-th child of the
    vertex's image, which requires ``small`` to be dominated by ``big``
    level by level.
    """
    if small.depth > big.depth:
        raise ConfigError("cannot embed a deeper tree into a shallower one")
    mapping = [np.zeros(1, dtype=np.int64)]
    for n in range(small.depth):
        c1 = small.growth.children(n)
        c2 = big.growth.children(n)
        if c1 > c2:
            raise ConfigError(f"level {n}: {c1} children do not fit into {c2}")
        idx = np.arange(small.level_sizes[n + 1], dtype=np.int64)
        mapping.append(mapping[n][idx // c1] * c2 + idx % c1)
    return mapping
