"""Points, configurations, measures and extended-valued costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

MASS_RTOL = 1e-9
PMF_ATOL = 1e-9


class DimensionError(ValueError):
    """Points of different dimensions were mixed in one computation."""


def as_point(x: Any) -> np.ndarray:
    """Coerce a scalar or coordinate sequence into a 1-D float array."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"a point needs a flat list of k >= 1 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinate in point {arr.tolist()}")
    return arr


def half_sq_dist(x: Any, y: Any) -> float:
    """Ground cost ``||x - y||^2 / 2`` between two points."""
    x = as_point(x)
    y = as_point(y)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    d = x - y
    return 0.5 * float(np.dot(d, d))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_point_array(points: Any, dim: int | None = None) -> np.ndarray:
    """Stack points into an ``(n, k)`` float array.

    Scalars and flat lists of scalars are read as 1-D points. An empty input
    yields shape ``(0, dim)`` with ``dim`` defaulting to 1.
    """
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim or 1))
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if (dim is None or dim == 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"expected an (n, k) array of points, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


@dataclass(frozen=True)
class Configuration:
    """A finite point configuration, i.e. the counting measure on its atoms.

    Build through :func:`validate_configuration` (or :meth:`of`), which checks
    coordinates and sets the ``simple`` flag.
    """

    points: np.ndarray
    simple: bool = True

    @classmethod
    def of(cls, points: Any, simple: bool | None = None, dim: int | None = None) -> "Configuration":
        return validate_configuration(points, simple=simple, dim=dim)

    @classmethod
    def empty(cls, dim: int = 1) -> "Configuration":
        return cls(_frozen(np.zeros((0, dim))), True)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.simple == other.simple
            and self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )

    def __hash__(self) -> int:
        return hash((self.points.shape, self.points.tobytes(), self.simple))

    def to_json(self) -> dict:
        return {"points": self.points.tolist()}

    @classmethod
    def from_json(cls, obj: dict, simple: bool | None = None) -> "Configuration":
        return validate_configuration(obj["points"], simple=simple, dim=obj.get("dim"))


def _has_duplicates(points: np.ndarray, eps: float | None) -> bool:
    n = points.shape[0]
    if n < 2:
        return False
    if eps is None:
        rows = {p.tobytes() for p in points}
        return len(rows) < n
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    iu = np.triu_indices(n, 1)
    return bool(np.any(dist[iu] <= eps))


def validate_configuration(
    points: Any,
    simple: bool | None = None,
    eps: float | None = None,
    dim: int | None = None,
) -> Configuration:
    """Validate raw points and return an immutable :class:`Configuration`.

    ``simple=True`` demands pairwise distinct atoms and raises on a duplicate,
    ``simple=None`` just records whether the atoms are distinct, and
    ``simple=False`` accepts multiplicities. Distinctness is exact bitwise
    comparison unless ``eps`` is given.
    """
    if isinstance(points, Configuration):
        points = points.points
    arr = as_point_array(points, dim=dim).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError("configuration has a non-finite coordinate")
    dup = _has_duplicates(arr, eps)
    if simple is True and dup:
        raise ValueError("duplicate atoms in a configuration required to be simple")
    return Configuration(_frozen(arr), simple=not dup)


@dataclass(frozen=True, order=False)
class ExtendedCost:
    """Nonnegative real or the tagged value INFINITE.

    ``value`` is ``None`` exactly when the cost is infinite; no float sentinel
    is stored.
    """

    value: float | None

    def __post_init__(self):
        if self.value is not None:
            v = float(self.value)
            if not math.isfinite(v):
                raise ValueError("use ExtendedCost.infinite() for an infinite cost")
            if v < 0:
                raise ValueError(f"costs are nonnegative, got {v}")
            object.__setattr__(self, "value", v)

    @classmethod
    def infinite(cls) -> "ExtendedCost":
        return INFINITE

    @classmethod
    def finite(cls, value: float) -> "ExtendedCost":
        return cls(value)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def _coerce(self, other: Any) -> "ExtendedCost":
        if isinstance(other, ExtendedCost):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return INFINITE if math.isinf(other) else ExtendedCost(float(other))
        raise TypeError(f"cannot combine ExtendedCost with {type(other).__name__}")

    def __add__(self, other: Any) -> "ExtendedCost":
        other = self._coerce(other)
        if self.is_infinite or other.is_infinite:
            return INFINITE
        return ExtendedCost(self.value + other.value)

    __radd__ = __add__

    def __float__(self) -> float:
        return math.inf if self.value is None else self.value

    def _key(self) -> float:
        return float(self)

    def __lt__(self, other: Any) -> bool:
        return self._key() < self._coerce(other)._key()

    def __le__(self, other: Any) -> bool:
        return self._key() <= self._coerce(other)._key()

    def __gt__(self, other: Any) -> bool:
        return self._key() > self._coerce(other)._key()

    def __ge__(self, other: Any) -> bool:
        return self._key() >= self._coerce(other)._key()

    def __repr__(self) -> str:
        return "ExtendedCost(INFINITE)" if self.is_infinite else f"ExtendedCost({self.value!r})"

    def to_json(self) -> float | str:
        return "inf" if self.value is None else self.value

    @classmethod
    def from_json(cls, obj: float | str) -> "ExtendedCost":
        if isinstance(obj, str):
            if obj != "inf":
                raise ValueError(f"unknown cost token {obj!r}")
            return INFINITE
        return cls(float(obj))


INFINITE = ExtendedCost(None)


def cost_min(*costs: ExtendedCost) -> ExtendedCost:
    return min(costs, key=float)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms; used for intensities and for empirical laws."""

    atoms: np.ndarray
    weights: np.ndarray
    total_mass: float = field(default=float("nan"))

    def __post_init__(self):
        atoms = as_point_array(self.atoms)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("non-finite atom coordinate")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(weights.tolist())
        declared = self.total_mass
        if declared is None or (isinstance(declared, float) and math.isnan(declared)):
            declared = total
        declared = float(declared)
        if abs(total - declared) > MASS_RTOL * max(1.0, abs(declared)):
            raise ValueError(f"weights sum to {total}, declared total_mass {declared}")
        object.__setattr__(self, "atoms", _frozen(atoms.copy()))
        object.__setattr__(self, "weights", _frozen(weights.copy()))
        object.__setattr__(self, "total_mass", declared)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.total_mass == other.total_mass
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.atoms.tobytes(), self.weights.tobytes(), self.total_mass))

    @classmethod
    def uniform(cls, atoms: Any, total_mass: float = 1.0) -> "DiscreteMeasure":
        atoms = as_point_array(atoms)
        n = atoms.shape[0]
        return cls(atoms, np.full(n, total_mass / n), total_mass)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def normalized(self) -> "DiscreteMeasure":
        return self.scaled(1.0 / self.total_mass)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, self.weights * factor, self.total_mass * factor)

    def to_json(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "DiscreteMeasure":
        return cls(obj["atoms"], obj["weights"], obj.get("total_mass", float("nan")))


@dataclass(frozen=True, eq=False)
class CountDistribution:
    """Truncated law of the number of atoms, ``p_0 .. p_Nmax`` plus tail mass."""

    pmf: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float).reshape(-1)
        if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
            raise ValueError("pmf entries must be finite and nonnegative")
        tail = float(self.tail_mass)
        if tail < 0:
            raise ValueError("tail_mass must be nonnegative")
        total = math.fsum(pmf.tolist()) + tail
        if abs(total - 1.0) > PMF_ATOL:
            raise ValueError(f"pmf plus tail sums to {total}, not 1")
        object.__setattr__(self, "pmf", _frozen(pmf.copy()))
        object.__setattr__(self, "tail_mass", tail)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountDistribution):
            return NotImplemented
        return self.tail_mass == other.tail_mass and np.array_equal(self.pmf, other.pmf)

    __hash__ = None

    @property
    def n_max(self) -> int:
        return self.pmf.size - 1

    def __getitem__(self, n: int) -> float:
        return float(self.pmf[n]) if 0 <= n < self.pmf.size else 0.0

    def padded(self, n_max: int) -> np.ndarray:
        out = np.zeros(n_max + 1)
        m = min(n_max + 1, self.pmf.size)
        out[:m] = self.pmf[:m]
        return out

    def truncate_ok(self, budget: float) -> bool:
        return self.tail_mass <= budget

    @classmethod
    def from_counts(cls, counts: Iterable[int], n_max: int | None = None) -> "CountDistribution":
        """Empirical count frequencies (no tail)."""
        counts = np.asarray(list(counts), dtype=int)
        if counts.size == 0:
            raise ValueError("no counts")
        top = int(counts.max()) if n_max is None else max(n_max, int(counts.max()))
        freq = np.bincount(counts, minlength=top + 1) / counts.size
        return cls(freq, 0.0)

    def to_json(self) -> dict:
        return {"pmf": self.pmf.tolist(), "tail_mass": self.tail_mass}


def check_same_dim(*dims: int) -> int:
    ds = {d for d in dims}
    if len(ds) > 1:
        raise DimensionError(f"mixed dimensions {sorted(ds)}")
    return ds.pop()


def configurations_from_json(items: Sequence[dict]) -> list[Configuration]:
    return [Configuration.from_json(it) for it in items]
