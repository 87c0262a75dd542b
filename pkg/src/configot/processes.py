"""Finite point process models: Poisson, binomial (fixed count) and Cox.

Every sampler takes ``(seed, index)`` and draws from its own counter-based
Philox stream, so sample ``index`` is the same no matter which worker or in
which order it is produced.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import integrate, stats

from .core import Configuration, CountDistribution, DiscreteMeasure, MASS_RTOL, validate_configuration

DEFAULT_NMAX = 20


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for sample ``index`` under ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


# ---------------------------------------------------------------- densities


class _ArrayEq:
    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(json.dumps(self.to_json(), sort_keys=True))


@dataclass(frozen=True, eq=False)
class UniformDensity(_ArrayEq):
    """Uniform probability density on the box ``[a, b]`` (an interval when k = 1)."""

    a: Any = 0.0
    b: Any = 1.0

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or np.any(b <= a):
            raise ValueError(f"invalid box [{a.tolist()}, {b.tolist()}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.a + (self.b - self.a) * rng.random((size, self.dim))

    def quantiles(self, levels: np.ndarray) -> np.ndarray:
        _require_1d(self)
        return self.a[0] + (self.b[0] - self.a[0]) * np.asarray(levels)

    def integrate(self, f: Callable[[np.ndarray], float]) -> float:
        if self.dim == 1:
            val, _ = integrate.quad(lambda x: f(np.array([x])), self.a[0], self.b[0], epsabs=1e-13, epsrel=1e-12)
            return val / (self.b[0] - self.a[0])
        ranges = list(zip(self.a.tolist(), self.b.tolist()))
        val, _ = integrate.nquad(lambda *x: f(np.array(x)), ranges, opts={"epsabs": 1e-12, "epsrel": 1e-10})
        return val / float(np.prod(self.b - self.a))

    def to_json(self) -> dict:
        if self.dim == 1:
            return {"kind": "uniform", "a": float(self.a[0]), "b": float(self.b[0])}
        return {"kind": "uniform", "a": self.a.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class PiecewiseDensity(_ArrayEq):
    """1-D density proportional to ``values[i]`` on ``[edges[i], edges[i+1])``."""

    edges: Any
    values: Any

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if e.ndim != 1 or v.size != e.size - 1 or np.any(np.diff(e) <= 0) or np.any(v < 0):
            raise ValueError("need strictly increasing edges and one nonnegative value per cell")
        mass = v * np.diff(e)
        if mass.sum() <= 0:
            raise ValueError("density has zero mass")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v / mass.sum())

    dim = 1

    @property
    def _cdf_knots(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.values * np.diff(self.edges))])

    def quantiles(self, levels: np.ndarray) -> np.ndarray:
        levels = np.asarray(levels, dtype=float)
        cdf = self._cdf_knots
        cdf[-1] = 1.0
        k = np.clip(np.searchsorted(cdf, levels, side="left") - 1, 0, self.values.size - 1)
        # Skip zero-density cells so the quantile stays left-continuous.
        while True:
            dead = self.values[k] == 0
            if not np.any(dead):
                break
            k = np.where(dead, k + 1, k)
        return self.edges[k] + (levels - cdf[k]) / self.values[k]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantiles(rng.random(size)).reshape(-1, 1)

    def integrate(self, f: Callable[[np.ndarray], float]) -> float:
        total = 0.0
        for lo, hi, val in zip(self.edges[:-1], self.edges[1:], self.values):
            if val > 0:
                part, _ = integrate.quad(lambda x: f(np.array([x])), lo, hi, epsabs=1e-13, epsrel=1e-12)
                total += val * part
        return total

    def to_json(self) -> dict:
        return {"kind": "piecewise", "edges": self.edges.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class AtomicDensity(_ArrayEq):
    """Probability law carried by the atoms of a discrete measure."""

    measure: DiscreteMeasure

    def __post_init__(self):
        object.__setattr__(self, "measure", self.measure.normalized())

    @property
    def dim(self) -> int:
        return self.measure.dim

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(self.measure.size, size=size, p=self.measure.weights)
        return self.measure.atoms[idx]

    def quantiles(self, levels: np.ndarray) -> np.ndarray:
        _require_1d(self)
        order = np.argsort(self.measure.atoms[:, 0], kind="stable")
        xs = self.measure.atoms[order, 0]
        cw = np.cumsum(self.measure.weights[order])
        cw[-1] = 1.0
        idx = np.searchsorted(cw, np.asarray(levels), side="left")
        return xs[np.clip(idx, 0, xs.size - 1)]

    def integrate(self, f: Callable[[np.ndarray], float]) -> float:
        return math.fsum(w * f(x) for x, w in zip(self.measure.atoms, self.measure.weights))

    def to_json(self) -> dict:
        return {"kind": "discrete", **self.measure.to_json()}


def point_mass(at: Any) -> AtomicDensity:
    return AtomicDensity(DiscreteMeasure(np.atleast_2d(np.asarray(at, dtype=float)), [1.0]))


Density = UniformDensity | PiecewiseDensity | AtomicDensity


def _require_1d(density: Any) -> None:
    if density.dim != 1:
        raise ValueError("quantile functions exist only in dimension 1")


def midpoint_levels(m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("grid size must be positive")
    return (np.arange(m) + 0.5) / m


def quantile_grid(density: Density, m: int = 1024) -> np.ndarray:
    """Quantile function of a 1-D density at the ``m`` midpoint levels."""
    return np.asarray(density.quantiles(midpoint_levels(m)), dtype=float)


def density_from_json(obj: dict) -> Density:
    kind = obj.get("kind")
    if kind == "uniform":
        return UniformDensity(obj.get("a", 0.0), obj.get("b", 1.0))
    if kind == "piecewise":
        return PiecewiseDensity(obj["edges"], obj["values"])
    if kind == "discrete":
        return AtomicDensity(DiscreteMeasure(obj["atoms"], obj["weights"]))
    if kind == "point":
        return point_mass(obj["at"])
    raise ValueError(f"unknown density kind {kind!r}")


def as_density(d: Any) -> Density:
    if isinstance(d, (UniformDensity, PiecewiseDensity, AtomicDensity)):
        return d
    if isinstance(d, DiscreteMeasure):
        return AtomicDensity(d)
    if isinstance(d, dict):
        return density_from_json(d)
    raise TypeError(f"not a density: {d!r}")


# ------------------------------------------------------------------- models


@dataclass(frozen=True)
class PoissonModel:
    """Poisson process with intensity ``mass * density``."""

    density: Density
    mass: float = 1.0

    def __post_init__(self):
        if isinstance(self.density, DiscreteMeasure):
            declared = self.mass
            if abs(declared - self.density.total_mass) > MASS_RTOL * max(1.0, declared):
                raise ValueError(f"mass {declared} differs from intensity total {self.density.total_mass}")
        object.__setattr__(self, "density", as_density(self.density))
        object.__setattr__(self, "mass", float(self.mass))

    @classmethod
    def from_measure(cls, intensity: DiscreteMeasure) -> "PoissonModel":
        return cls(AtomicDensity(intensity), intensity.total_mass)

    @property
    def dim(self) -> int:
        return self.density.dim

    def to_json(self) -> dict:
        return {"type": "poisson", "mass": self.mass, "density": self.density.to_json()}


@dataclass(frozen=True)
class BinomialModel:
    """Exactly ``n`` i.i.d. points from ``density``."""

    n: int
    density: Density

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "density", as_density(self.density))

    @property
    def dim(self) -> int:
        return self.density.dim

    def to_json(self) -> dict:
        return {"type": "binomial", "n": self.n, "density": self.density.to_json()}


@dataclass(frozen=True)
class Intensity:
    density: Density
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "density", as_density(self.density))
        if not self.mass > 0:
            raise ValueError("intensity mass must be positive")

    def to_json(self) -> dict:
        return {"mass": self.mass, "density": self.density.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Intensity":
        return cls(density_from_json(obj["density"]), float(obj.get("mass", 1.0)))


IntensitySampler = Callable[[np.random.Generator], tuple[Intensity, Intensity]]


@dataclass(frozen=True)
class CoxModel:
    """Pair of Cox processes driven by jointly random intensities.

    ``intensity_sampler(rng)`` returns one draw ``(sigma1, sigma2)``. Models
    built by :meth:`mixture` also keep their finite component list, which is
    what :func:`count_pmf` needs.
    """

    intensity_sampler: IntensitySampler
    components: tuple[tuple[float, Intensity, Intensity], ...] = field(default=())

    @classmethod
    def mixture(cls, components: Sequence[tuple[float, Any, Any]]) -> "CoxModel":
        comps = []
        for w, s1, s2 in components:
            s1 = s1 if isinstance(s1, Intensity) else Intensity(s1)
            s2 = s2 if isinstance(s2, Intensity) else Intensity(s2)
            comps.append((float(w), s1, s2))
        weights = np.array([c[0] for c in comps])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")

        def sampler(rng: np.random.Generator) -> tuple[Intensity, Intensity]:
            k = int(rng.choice(len(comps), p=weights))
            return comps[k][1], comps[k][2]

        return cls(sampler, tuple(comps))

    @classmethod
    def degenerate(cls, sigma1: Any, sigma2: Any) -> "CoxModel":
        return cls.mixture([(1.0, sigma1, sigma2)])

    def to_json(self) -> dict:
        if not self.components:
            raise ValueError("only finite mixtures serialize")
        return {
            "type": "cox",
            "mixture": [{"weight": w, "sigma1": s1.to_json(), "sigma2": s2.to_json()} for w, s1, s2 in self.components],
        }


def model_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "poisson":
        return PoissonModel(density_from_json(obj["density"]), float(obj.get("mass", 1.0)))
    if kind == "binomial":
        return BinomialModel(int(obj["n"]), density_from_json(obj["density"]))
    if kind == "cox":
        return CoxModel.mixture(
            [(c["weight"], Intensity.from_json(c["sigma1"]), Intensity.from_json(c["sigma2"])) for c in obj["mixture"]]
        )
    raise ValueError(f"unknown model type {kind!r}")


# ----------------------------------------------------------------- sampling


def _points_to_config(points: np.ndarray, dim: int, simple: bool | None) -> Configuration:
    if points.shape[0] == 0:
        return Configuration.empty(dim)
    return validate_configuration(points, simple=simple, dim=dim)


def _draw_points(density: Density, rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, density.dim))
    return np.asarray(density.sample(rng, n), dtype=float).reshape(n, density.dim)


def _simple_flag(density: Density) -> bool | None:
    # Atomic intensities can repeat atoms; diffuse ones collide with probability 0.
    return None if isinstance(density, AtomicDensity) else True


def sample_poisson(model: PoissonModel, seed: int, index: int = 0) -> Configuration:
    if not model.mass > 0:
        raise ValueError("Poisson intensity mass must be positive")
    rng = stream(seed, index)
    n = int(rng.poisson(model.mass))
    return _points_to_config(_draw_points(model.density, rng, n), model.dim, _simple_flag(model.density))


def sample_binomial(model: BinomialModel, seed: int, index: int = 0) -> Configuration:
    rng = stream(seed, index)
    return _points_to_config(_draw_points(model.density, rng, model.n), model.dim, _simple_flag(model.density))


@dataclass(frozen=True)
class CoxSample:
    eta: Configuration
    omega: Configuration
    sigma1: Intensity
    sigma2: Intensity


def sample_cox(model: CoxModel, seed: int, index: int = 0) -> CoxSample:
    """Draw ``(sigma1, sigma2)`` and then independent Poisson configurations."""
    rng = stream(seed, index)
    sigma1, sigma2 = model.intensity_sampler(rng)
    for s in (sigma1, sigma2):
        if not isinstance(s, Intensity):
            raise TypeError(f"intensity sampler returned {type(s).__name__}, expected Intensity")
    n1 = int(rng.poisson(sigma1.mass))
    eta = _points_to_config(_draw_points(sigma1.density, rng, n1), sigma1.density.dim, _simple_flag(sigma1.density))
    n2 = int(rng.poisson(sigma2.mass))
    omega = _points_to_config(_draw_points(sigma2.density, rng, n2), sigma2.density.dim, _simple_flag(sigma2.density))
    return CoxSample(eta, omega, sigma1, sigma2)


def sample(model: Any, seed: int, index: int = 0) -> Configuration:
    if isinstance(model, PoissonModel):
        return sample_poisson(model, seed, index)
    if isinstance(model, BinomialModel):
        return sample_binomial(model, seed, index)
    raise TypeError(f"cannot sample {type(model).__name__} into a single configuration")


def sample_many(model: Any, seed: int, count: int, start: int = 0) -> list[Configuration]:
    return [sample(model, seed, start + i) for i in range(count)]


# -------------------------------------------------------------- count laws


def poisson_count_pmf(mass: float, n_max: int = DEFAULT_NMAX) -> CountDistribution:
    n = np.arange(n_max + 1)
    pmf = stats.poisson.pmf(n, mass)
    tail = float(stats.poisson.sf(n_max, mass))
    return CountDistribution(pmf, tail)


def count_pmf(model: Any, n_max: int = DEFAULT_NMAX, side: int = 0) -> CountDistribution:
    """Exact law of the number of atoms, truncated at ``n_max``.

    For a Cox mixture, ``side`` picks the first (0) or second (1) process.
    """
    if isinstance(model, PoissonModel):
        return poisson_count_pmf(model.mass, n_max)
    if isinstance(model, BinomialModel):
        pmf = np.zeros(max(n_max, model.n) + 1)
        pmf[model.n] = 1.0
        return CountDistribution(pmf, 0.0)
    if isinstance(model, CoxModel):
        if not model.components:
            raise ValueError("count law needs a finite Cox mixture")
        if side not in (0, 1):
            raise ValueError("side must be 0 or 1")
        pmf = np.zeros(n_max + 1)
        tail = 0.0
        for w, s1, s2 in model.components:
            part = poisson_count_pmf((s1, s2)[side].mass, n_max)
            pmf += w * part.pmf
            tail += w * part.tail_mass
        return CountDistribution(pmf, tail)
    raise TypeError(f"unsupported model {type(model).__name__}")
