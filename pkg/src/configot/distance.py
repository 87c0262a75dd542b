"""Process-level Wasserstein distances built on the configuration cost.

All squared distances here are optimal values ``W^2 = inf E c(eta, omega)``.
Two finite processes are at finite distance only if their count laws agree;
when they do, the squared distance splits into a count-weighted sum of the
distances between the laws conditioned on the number of atoms.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import INFINITE, Configuration, CountDistribution, DiscreteMeasure, ExtendedCost
from .matching import config_cost
from .ot import MonotoneMap1D, TransportPlan, lift_map, solve_1d_quadratic, solve_discrete_ot, solve_transport
from .processes import (
    AtomicDensity,
    BinomialModel,
    CoxModel,
    Intensity,
    PoissonModel,
    UniformDensity,
    as_density,
    poisson_count_pmf,
    quantile_grid,
    sample_binomial,
    sample_poisson,
    stream,
)

DEFAULT_GRID = 1024
UNIT_MASS_TOL = 1e-9


# ------------------------------------------------------------ small records


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with its standard error."""

    mean: float
    se: float
    n: int
    std: float = 0.0

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MCEstimate":
        vals = np.asarray(values, dtype=float)
        n = vals.size
        if n == 0:
            raise ValueError("no samples")
        mean = math.fsum(vals.tolist()) / n
        if n == 1:
            return cls(mean, 0.0, 1, 0.0)
        var = math.fsum(((vals - mean) ** 2).tolist()) / (n - 1)
        std = math.sqrt(var)
        return cls(mean, std / math.sqrt(n), n, std)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.se

    def to_json(self) -> dict:
        return {"mean": self.mean, "se": self.se, "samples": self.n}


@dataclass(frozen=True)
class GateResult:
    passed: bool
    max_pmf_diff: float
    tail_diff: float

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"passed": self.passed, "max_pmf_diff": self.max_pmf_diff, "tail_diff": self.tail_diff}


@dataclass(frozen=True)
class StratumRow:
    n: int
    w2: ExtendedCost
    weight: float
    samples_mu: int = 0
    samples_nu: int = 0


@dataclass
class DecompositionReport:
    """Count-stratified squared distance ``W^2 = sum_n p_n W_n^2``."""

    rows: list[StratumRow]
    combined: ExtendedCost
    truncation_error_bound: float
    gate: GateResult | None = None
    se: float | None = None
    plans: dict[int, TransportPlan] = field(default_factory=dict, repr=False)
    reason: str | None = None

    @property
    def per_n(self) -> list[tuple[int, ExtendedCost, float]]:
        return [(r.n, r.w2, r.weight) for r in self.rows]

    def recomputed(self) -> ExtendedCost:
        return _weighted_sum((r.w2, r.weight) for r in self.rows)

    def to_json(self) -> dict:
        out = {
            "w2": self.combined.to_json(),
            "truncation_error_bound": self.truncation_error_bound,
            "strata": [
                {"n": r.n, "w2": r.w2.to_json(), "weight": r.weight, "samples_mu": r.samples_mu, "samples_nu": r.samples_nu}
                for r in self.rows
            ],
        }
        if self.gate is not None:
            out["gate"] = self.gate.to_json()
        if self.se is not None:
            out["se"] = self.se
        if self.reason:
            out["reason"] = self.reason
        return out


def _weighted_sum(terms: Iterable[tuple[ExtendedCost, float]]) -> ExtendedCost:
    parts = []
    for w2, p in terms:
        if p == 0:
            continue
        if w2.is_infinite:
            return INFINITE
        parts.append(p * w2.value)
    return ExtendedCost(math.fsum(parts))


# ------------------------------------------------------------- count gate


def finiteness_gate(p: CountDistribution, q: CountDistribution, eps: float | Sequence[float] = 0.0) -> GateResult:
    """Pass iff the two count laws agree bin by bin (and in their tails) up to ``eps``.

    ``eps`` may be a scalar or one tolerance per bin ``0..N``; the tail uses the
    largest of them. A failed gate means every coupling has infinite cost.
    """
    n_max = max(p.n_max, q.n_max)
    diff = np.abs(p.padded(n_max) - q.padded(n_max))
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=float), diff.shape) if np.ndim(eps) == 0 else np.asarray(eps, float)
    if eps_arr.shape != diff.shape:
        eps_arr = np.concatenate([eps_arr, np.zeros(max(0, diff.size - eps_arr.size))])[: diff.size]
    tail_diff = abs(p.tail_mass - q.tail_mass)
    passed = bool(np.all(diff <= eps_arr)) and tail_diff <= float(np.max(eps_arr))
    return GateResult(passed, float(diff.max()), tail_diff)


# -------------------------------------------------------- decomposition


def _as_cost(v: Any) -> ExtendedCost:
    if isinstance(v, ExtendedCost):
        return v
    return INFINITE if math.isinf(v) else ExtendedCost(float(v))


def combine_by_count(
    per_n: Mapping[int, Any] | Sequence[tuple[int, Any]],
    p: CountDistribution,
    tol: float = 1e-15,
) -> DecompositionReport:
    """Combine per-count squared distances with the count weights.

    Every count ``n >= 1`` with ``p_n > tol`` must be listed; ``n = 0`` costs
    nothing. The truncation bound is the heuristic
    ``tail_mass * max(sup W_n^2, (N + 1) sup W_n^2 / n)``, which also covers
    strata whose cost grows linearly in ``n``.
    """
    items = dict(per_n.items() if isinstance(per_n, Mapping) else per_n)
    rows = []
    for n in range(1, p.n_max + 1):
        if n not in items:
            if p[n] > tol:
                raise ValueError(f"missing stratum n={n} with weight {p[n]:.3g}")
            continue
        rows.append(StratumRow(n, _as_cost(items[n]), p[n]))
    combined = _weighted_sum((r.w2, r.weight) for r in rows)
    finite = [r.w2.value for r in rows if r.w2.is_finite]
    sup = max(finite, default=0.0)
    sup_rate = max((r.w2.value / r.n for r in rows if r.w2.is_finite), default=0.0)
    bound = p.tail_mass * max(sup, (p.n_max + 1) * sup_rate)
    return DecompositionReport(rows, combined, bound)


# --------------------------------------------------- base (point) transport


def as_intensity(sigma: Any) -> Intensity:
    if isinstance(sigma, Intensity):
        return sigma
    if isinstance(sigma, PoissonModel):
        return Intensity(sigma.density, sigma.mass)
    if isinstance(sigma, DiscreteMeasure):
        return Intensity(AtomicDensity(sigma), sigma.total_mass)
    if isinstance(sigma, dict) and "density" in sigma:
        return Intensity.from_json(sigma)
    return Intensity(as_density(sigma), 1.0)


def discretize(density: Any, per_axis: int = 16) -> DiscreteMeasure:
    """Cell-midpoint discretization of a uniform box; atomic laws pass through."""
    density = as_density(density)
    if isinstance(density, AtomicDensity):
        return density.measure
    if isinstance(density, UniformDensity):
        axes = [lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis for lo, hi in zip(density.a, density.b)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, density.dim)
        return DiscreteMeasure.uniform(grid)
    if density.dim == 1:
        return DiscreteMeasure.uniform(quantile_grid(density, per_axis).reshape(-1, 1))
    raise ValueError(f"cannot discretize {type(density).__name__}")


@dataclass(frozen=True)
class BaseTransport:
    """Optimal transport between two unit-mass intensities.

    In 1-D ``t`` is the monotone map; in higher dimension ``plan`` couples the
    discretized laws.
    """

    cost: float
    t: MonotoneMap1D | None = None
    plan: TransportPlan | None = None

    @property
    def distance(self) -> float:
        return math.sqrt(self.cost)


def base_transport(sigma1: Any, sigma2: Any, grid_size: int = DEFAULT_GRID, per_axis: int = 16) -> BaseTransport:
    """Quadratic transport ``T_e(sigma1, sigma2)^2`` between normalized intensities."""
    d1 = as_intensity(sigma1).density
    d2 = as_intensity(sigma2).density
    if d1.dim != d2.dim:
        raise ValueError(f"dimension mismatch: {d1.dim} vs {d2.dim}")
    if d1.dim == 1:
        cost, t = solve_1d_quadratic(quantile_grid(d1, grid_size), quantile_grid(d2, grid_size))
        return BaseTransport(cost, t=t)
    plan = solve_discrete_ot(discretize(d1, per_axis), discretize(d2, per_axis))
    return BaseTransport(plan.cost, plan=plan)


def _require_unit(*sigmas: Intensity) -> None:
    for s in sigmas:
        if abs(s.mass - 1.0) > UNIT_MASS_TOL:
            raise ValueError(f"intensity mass {s.mass} is not 1; use scaled_poisson_distance for other masses")


def poisson_distance(sigma1: Any, sigma2: Any, grid_size: int = DEFAULT_GRID) -> float:
    """Squared distance between Poisson processes with unit-mass intensities.

    It equals the quadratic transport cost between the intensities themselves.
    """
    s1, s2 = as_intensity(sigma1), as_intensity(sigma2)
    _require_unit(s1, s2)
    return base_transport(s1, s2, grid_size).cost


def scaled_poisson_distance(sigma1: Any, sigma2: Any, grid_size: int = DEFAULT_GRID) -> DecompositionReport:
    """Experimental: equal-mass ``lam`` Poisson processes, not only unit mass.

    Combines the per-count costs ``n T_e^2`` of the normalized intensities with
    Poisson(lam) weights, giving ``lam * T_e^2`` up to truncation. Only the
    unit-mass case is covered by the established identity.
    """
    s1, s2 = as_intensity(sigma1), as_intensity(sigma2)
    p, q = poisson_count_pmf(s1.mass), poisson_count_pmf(s2.mass)
    gate = finiteness_gate(p, q, 0.0)
    if not gate:
        return DecompositionReport([], INFINITE, 0.0, gate, reason="count laws differ")
    n_max = max(20, int(s1.mass + 12 * math.sqrt(s1.mass) + 10))
    p = poisson_count_pmf(s1.mass, n_max)
    te2 = base_transport(s1, s2, grid_size).cost
    report = combine_by_count({n: n * te2 for n in range(1, n_max + 1)}, p)
    report.gate = gate
    return report


# ---------------------------------------------------------- MC couplings


def pushed_configuration(base: BaseTransport, rng: np.random.Generator, n: int, source: Intensity) -> tuple[Configuration, Configuration]:
    """Draw ``n`` source atoms and their images under the optimal point coupling."""
    if base.t is not None:
        pts = np.asarray(source.density.sample(rng, n), dtype=float).reshape(n, 1)
        eta = Configuration.of(pts, simple=None) if n else Configuration.empty(1)
        return eta, lift_map(base.t, eta)
    plan = base.plan
    k = rng.choice(plan.mass.size, size=n, p=plan.mass / plan.mass.sum())
    x = plan.source.atoms[plan.rows[k]]
    y = plan.target.atoms[plan.cols[k]]
    dim = plan.source.dim
    if n == 0:
        return Configuration.empty(dim), Configuration.empty(dim)
    return Configuration.of(x, simple=None), Configuration.of(y, simple=None)


@dataclass(frozen=True)
class CouplingEstimate:
    estimate: MCEstimate
    base_cost: float
    identity: bool
    values: np.ndarray = field(repr=False, compare=False, default=None)

    def to_json(self) -> dict:
        return {**self.estimate.to_json(), "base_cost": self.base_cost, "pass": bool(self.identity)}


def poisson_coupling_estimate(
    sigma1: Any, sigma2: Any, mc_samples: int, seed: int, grid_size: int = DEFAULT_GRID, k_se: float = 3.0
) -> CouplingEstimate:
    """Monte-Carlo cost of the lifted optimal coupling between two Poisson processes.

    Each sample draws ``eta`` from the first process and pairs it with the
    image of its atoms under the optimal point map (or point plan); the cost
    is ``config_cost(eta, T eta)``. ``identity`` reports whether the mean lies
    within ``k_se`` standard errors of ``T_e^2``.
    """
    s1, s2 = as_intensity(sigma1), as_intensity(sigma2)
    _require_unit(s1, s2)
    base = base_transport(s1, s2, grid_size)
    costs = np.empty(mc_samples)
    for i in range(mc_samples):
        rng = stream(seed, i)
        n = int(rng.poisson(s1.mass))
        eta, omega = pushed_configuration(base, rng, n, s1)
        costs[i] = config_cost(eta, omega)[0].value
    est = MCEstimate.from_values(costs)
    return CouplingEstimate(est, base.cost, bool(est.within(base.cost, k_se)), costs)


# ------------------------------------------------------------------- Cox


@dataclass(frozen=True)
class CoxEstimate:
    """Averages over intensity draws of ``T_e`` and of ``T_e^2``."""

    distance: MCEstimate | None
    squared: MCEstimate | None
    values: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def infinite(self) -> bool:
        return self.distance is None

    def to_json(self) -> dict:
        if self.infinite:
            return {"mean_te": "inf", "mean_te2": "inf"}
        return {
            "mean_te": self.distance.mean,
            "se_te": self.distance.se,
            "mean_te2": self.squared.mean,
            "se_te2": self.squared.se,
            "samples": self.distance.n,
        }


def _intensity_key(s: Intensity) -> str:
    return json.dumps(s.to_json(), sort_keys=True)


def intensity_cost(s1: Intensity, s2: Intensity, grid_size: int = DEFAULT_GRID) -> ExtendedCost:
    """Quadratic transport cost between two intensities of equal mass ``lam``.

    Equals ``lam * T_e^2`` of the normalized laws; unequal masses are infinite.
    """
    if abs(s1.mass - s2.mass) > UNIT_MASS_TOL * max(1.0, s1.mass):
        return INFINITE
    return ExtendedCost(s1.mass * base_transport(s1, s2, grid_size).cost)


def cox_distance(model: CoxModel, mc_samples: int, seed: int, grid_size: int = DEFAULT_GRID) -> CoxEstimate:
    """Monte-Carlo average of the intensity distance over the joint intensity law."""
    cache: dict[tuple[str, str], ExtendedCost] = {}
    te = np.empty(mc_samples)
    for i in range(mc_samples):
        s1, s2 = model.intensity_sampler(stream(seed, i))
        key = (_intensity_key(s1), _intensity_key(s2))
        if key not in cache:
            cache[key] = intensity_cost(s1, s2, grid_size)
        c = cache[key]
        if c.is_infinite:
            return CoxEstimate(None, None)
        te[i] = math.sqrt(c.value)
    return CoxEstimate(MCEstimate.from_values(te), MCEstimate.from_values(te**2), te)


# ---------------------------------------------------------------- Barbour


@dataclass(frozen=True)
class BarbourResult:
    closed_form: float
    decomposition: DecompositionReport
    base_cost: float

    @property
    def discrepancy(self) -> float:
        return abs(self.closed_form - self.decomposition.combined.value)

    def to_json(self) -> dict:
        return {
            "w2": self.closed_form,
            "w2_decomposition": self.decomposition.combined.to_json(),
            "discrepancy": self.discrepancy,
            "base_cost": self.base_cost,
            "truncation_error_bound": self.decomposition.truncation_error_bound,
        }


def barbour_distance(sigma1: Any, sigma2: Any, n_max: int = 20, grid_size: int = DEFAULT_GRID) -> BarbourResult:
    """Squared distance for the count-normalized cost ``c(eta, omega) / eta(X)``.

    Each stratum costs ``(1/n) * n T_e^2``; the Poisson(1) weights of
    ``n >= 1`` add up to ``1 - e^{-1}``.
    """
    s1, s2 = as_intensity(sigma1), as_intensity(sigma2)
    _require_unit(s1, s2)
    te2 = base_transport(s1, s2, grid_size).cost
    closed = (1.0 - math.exp(-1.0)) * te2
    p = poisson_count_pmf(1.0, n_max)
    report = combine_by_count({n: (n * te2) / n for n in range(1, n_max + 1)}, p)
    return BarbourResult(closed, report, te2)


# ---------------------------------------------------- empirical estimator


def pairwise_config_costs(etas: Sequence[Configuration], omegas: Sequence[Configuration]) -> np.ndarray:
    """Matrix of ``config_cost`` values.

    Same-cardinality blocks with ``n <= 6`` are evaluated by vectorized
    enumeration of the ``n!`` matchings; larger ones call the assignment solver.
    """
    out = np.full((len(etas), len(omegas)), np.inf)
    n_eta = np.array([c.n for c in etas])
    n_om = np.array([c.n for c in omegas])
    for n in np.intersect1d(n_eta, n_om):
        ii = np.flatnonzero(n_eta == n)
        jj = np.flatnonzero(n_om == n)
        if n == 0:
            out[np.ix_(ii, jj)] = 0.0
            continue
        if n <= 6:
            x = np.stack([etas[i].points for i in ii])
            y = np.stack([omegas[j].points for j in jj])
            diff = x[:, None, :, None, :] - y[None, :, None, :, :]
            d = 0.5 * np.einsum("abijk,abijk->abij", diff, diff)
            best = np.full((ii.size, jj.size), np.inf)
            rows = np.arange(n)
            for perm in itertools.permutations(range(n)):
                best = np.minimum(best, d[:, :, rows, list(perm)].sum(axis=-1))
            out[np.ix_(ii, jj)] = best
        else:
            for a, i in enumerate(ii):
                for b, j in enumerate(jj):
                    out[i, j] = config_cost(etas[i], omegas[j])[0].value
    return out


def plan_standard_error(plan: TransportPlan) -> float:
    """Standard error of an empirical OT value between two independent samples.

    First-order fluctuation ``Var(F)/m + Var(G)/m'`` of the optimal dual
    potentials, each sample weighted uniformly.
    """
    f, g = plan.potentials
    var_f = float(np.var(f, ddof=1)) if f.size > 1 else 0.0
    var_g = float(np.var(g, ddof=1)) if g.size > 1 else 0.0
    return math.sqrt(var_f / f.size + var_g / g.size)


def count_gate_tolerance(p: np.ndarray, q: np.ndarray, m_p: int, m_q: int, k: float = 3.0) -> np.ndarray:
    """Per-bin binomial confidence half-width for a difference of two frequencies."""
    pooled = (p * m_p + q * m_q) / (m_p + m_q)
    return k * np.sqrt(pooled * (1.0 - pooled) * (1.0 / m_p + 1.0 / m_q))


def empirical_process_distance(
    samples_mu: Sequence[Configuration],
    samples_nu: Sequence[Configuration],
    eps: float | Sequence[float] | None = None,
) -> DecompositionReport:
    """Count-stratified OT between two samples of configurations.

    Samples are grouped by number of atoms, the empirical count laws go
    through the finiteness gate, and each stratum is an exact transport
    between uniform empirical laws with the configuration cost as ground
    cost. Strata are combined with the averaged empirical count law.
    Upward biased for small samples.
    """
    if not samples_mu or not samples_nu:
        raise ValueError("both sample lists must be nonempty")
    m_mu, m_nu = len(samples_mu), len(samples_nu)
    n_mu = np.array([c.n for c in samples_mu])
    n_nu = np.array([c.n for c in samples_nu])
    top = int(max(n_mu.max(), n_nu.max()))
    p = CountDistribution.from_counts(n_mu, top)
    q = CountDistribution.from_counts(n_nu, top)
    if eps is None:
        eps = count_gate_tolerance(p.pmf, q.pmf, m_mu, m_nu)
    gate = finiteness_gate(p, q, eps)
    rows_empty = [StratumRow(n, INFINITE, 0.5 * (p[n] + q[n]), int((n_mu == n).sum()), int((n_nu == n).sum())) for n in range(1, top + 1)]
    if not gate:
        return DecompositionReport(rows_empty, INFINITE, 0.0, gate, reason="count laws differ")
    avg = CountDistribution(0.5 * (p.pmf + q.pmf), 0.0)

    per_n: dict[int, ExtendedCost] = {}
    plans: dict[int, TransportPlan] = {}
    stratum_se: dict[int, float] = {}
    reason = None
    for n in range(1, top + 1):
        ii = np.flatnonzero(n_mu == n)
        jj = np.flatnonzero(n_nu == n)
        if ii.size == 0 and jj.size == 0:
            per_n[n] = ExtendedCost(0.0)
            continue
        if ii.size == 0 or jj.size == 0:
            per_n[n] = INFINITE
            reason = f"stratum n={n} observed on one side only"
            continue
        c = pairwise_config_costs([samples_mu[i] for i in ii], [samples_nu[j] for j in jj])
        plan = solve_transport(np.full(ii.size, 1.0 / ii.size), np.full(jj.size, 1.0 / jj.size), c)
        plans[n] = plan
        per_n[n] = ExtendedCost(max(plan.cost, 0.0))
        stratum_se[n] = plan_standard_error(plan)

    report = combine_by_count(per_n, avg)
    rows = [StratumRow(r.n, r.w2, r.weight, int((n_mu == r.n).sum()), int((n_nu == r.n).sum())) for r in report.rows]
    se = None
    if report.combined.is_finite:
        # Within-stratum OT fluctuation plus the spread due to estimated count weights.
        w = avg.pmf
        vals = np.array([0.0] + [per_n[n].value for n in range(1, top + 1)])
        spread = math.fsum((w * (vals - report.combined.value) ** 2).tolist()) / (m_mu + m_nu)
        se = math.sqrt(math.fsum(w[n] ** 2 * stratum_se.get(n, 0.0) ** 2 for n in range(1, top + 1)) + spread)
    return DecompositionReport(rows, report.combined, report.truncation_error_bound, gate, se, plans, reason)


def paired_count_samples(
    model1: PoissonModel, model2: PoissonModel, count: int, seed: int
) -> tuple[list[Configuration], list[Configuration]]:
    """Samples of two equal-mass Poisson processes sharing their atom counts.

    Sample ``i`` of each list is marginally a draw of its own process; the
    count ``N_i`` is common, which keeps every stratum populated on both sides.
    """
    if abs(model1.mass - model2.mass) > UNIT_MASS_TOL * max(1.0, model1.mass):
        raise ValueError("shared counts need equal intensity masses")
    mu, nu = [], []
    for i in range(count):
        n = int(stream(seed, 3 * i).poisson(model1.mass))
        mu.append(sample_binomial(BinomialModel(n, model1.density), seed, 3 * i + 1))
        nu.append(sample_binomial(BinomialModel(n, model2.density), seed, 3 * i + 2))
    return mu, nu


# ---------------------------------------------------------- tensorization


@dataclass(frozen=True)
class TensorizationRow:
    n: int
    per_point: float
    se: float
    plan: TransportPlan = field(repr=False, compare=False)


@dataclass(frozen=True)
class TensorizationReport:
    rows: list[TensorizationRow]
    base_cost: float
    k_se: float = 3.0

    def pairwise(self) -> list[tuple[int, int, float, float, bool]]:
        out = []
        for a, b in itertools.combinations(self.rows, 2):
            diff = float(abs(a.per_point - b.per_point))
            tol = self.k_se * math.hypot(a.se, b.se)
            out.append((a.n, b.n, diff, tol, bool(diff <= tol)))
        return out

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.pairwise())

    def to_json(self) -> dict:
        return {
            "base_cost": self.base_cost,
            "strata": [{"n": r.n, "w2_per_point": float(r.per_point), "se": float(r.se)} for r in self.rows],
            "pairs": [
                {"n1": a, "n2": b, "diff": float(d), "tol": float(t), "pass": bool(ok)} for a, b, d, t, ok in self.pairwise()
            ],
            "pass": self.passed,
        }


def tensorization_check(
    sigma1: Any,
    sigma2: Any,
    ns: Sequence[int] = (1, 2, 3),
    tuples: int = 500,
    seed: int = 0,
    grid_size: int = DEFAULT_GRID,
    k_se: float = 3.0,
) -> TensorizationReport:
    """Empirical OT between ``sigma1^n`` and ``sigma2^n`` samples, per point.

    For each ``n`` draws ``tuples`` independent n-point configurations from
    each side, solves the exact assignment under the configuration cost and
    divides by ``n``. The per-point values should not depend on ``n``.
    """
    s1, s2 = as_intensity(sigma1), as_intensity(sigma2)
    rows = []
    for pos, n in enumerate(ns):
        base_index = 2 * tuples * pos
        etas = [sample_binomial(BinomialModel(n, s1.density), seed, base_index + 2 * i) for i in range(tuples)]
        omegas = [sample_binomial(BinomialModel(n, s2.density), seed, base_index + 2 * i + 1) for i in range(tuples)]
        c = pairwise_config_costs(etas, omegas)
        w = np.full(tuples, 1.0 / tuples)
        plan = solve_transport(w, w, c)
        rows.append(TensorizationRow(n, float(plan.cost) / n, plan_standard_error(plan) / n, plan))
    return TensorizationReport(rows, base_transport(s1, s2, grid_size).cost, k_se)


# -------------------------------------------------------------- shift bound


@dataclass(frozen=True)
class ShiftBoundResult:
    bound: float
    estimate: MCEstimate
    passed: bool
    values: np.ndarray = field(repr=False, compare=False, default=None)

    def to_json(self) -> dict:
        return {"bound": self.bound, "estimate": self.estimate.mean, "se": self.estimate.se, "samples": self.estimate.n, "pass": self.passed}


def shift_bound_check(
    model: PoissonModel, h: Callable[[np.ndarray], Any], mc_samples: int, seed: int, k_se: float = 3.0
) -> ShiftBoundResult:
    """Compare ``W^2(P, (Id + h) P)`` against ``1/2 int ||h||^2 d sigma``.

    The estimate averages ``config_cost(eta, (Id + h) eta)`` over Poisson
    samples; it passes when it does not exceed the bound by more than
    ``k_se`` standard errors.
    """
    dim = model.dim

    def h_vec(x: np.ndarray) -> np.ndarray:
        y = np.atleast_1d(np.asarray(h(x if dim > 1 else float(x[0])), dtype=float)).reshape(-1)
        if y.size != dim or not np.all(np.isfinite(y)):
            raise ValueError(f"shift undefined or unbounded at {np.asarray(x).tolist()}")
        return y

    integral = model.density.integrate(lambda x: float(np.dot(h_vec(x), h_vec(x))))
    if not math.isfinite(integral):
        raise ValueError("shift has infinite energy on the intensity")
    bound = 0.5 * model.mass * integral

    def shifted(x: Any) -> np.ndarray:
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        return xv + h_vec(xv)

    costs = np.empty(mc_samples)
    for i in range(mc_samples):
        eta = sample_poisson(model, seed, i)
        costs[i] = config_cost(eta, lift_map(shifted, eta))[0].value
    est = MCEstimate.from_values(costs)
    return ShiftBoundResult(bound, est, bool(est.mean <= bound + k_se * est.se + 1e-12), costs)
