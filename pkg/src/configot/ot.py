"""Exact discrete optimal transport, 1-D quantile transport, lifted maps.

Discrete problems go through the transportation LP (HiGHS dual simplex,
a vertex solution of the min-cost-flow formulation) and come back with a
dual pair that has been made exactly feasible by alternating c-transforms.
Uniform problems of equal size reduce to an assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import Configuration, DimensionError, DiscreteMeasure, MASS_RTOL, validate_configuration
from .matching import assignment, cost_matrix

MARGINAL_TOL = 1e-9
CERT_RTOL = 1e-7


class MassMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal coupling with its dual certificate.

    ``rows``, ``cols`` and ``mass`` list the support entries. ``source_weights``
    and ``target_weights`` are the marginals the plan was solved for.
    ``potentials`` holds ``(F, G)`` with ``F_i + G_j <= C_ij`` for all ``i, j``.
    """

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray
    cost: float
    potentials: tuple[np.ndarray, np.ndarray]
    dual_value: float
    cost_matrix: np.ndarray
    source: DiscreteMeasure | None = None
    target: DiscreteMeasure | None = None

    @property
    def gap(self) -> float:
        return self.cost - self.dual_value

    def dense(self) -> np.ndarray:
        out = np.zeros((self.source_weights.size, self.target_weights.size))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def marginal_error(self) -> float:
        g = self.dense()
        return float(max(np.max(np.abs(g.sum(1) - self.source_weights)), np.max(np.abs(g.sum(0) - self.target_weights))))

    def dual_infeasibility(self) -> float:
        f, g = self.potentials
        return float(np.max(f[:, None] + g[None, :] - self.cost_matrix))

    def slackness(self) -> float:
        """Largest reduced cost on the support; zero for an exactly optimal pair."""
        f, g = self.potentials
        red = self.cost_matrix[self.rows, self.cols] - f[self.rows] - g[self.cols]
        return float(np.max(np.abs(red))) if red.size else 0.0

    def certified(self, rtol: float = CERT_RTOL) -> bool:
        scale = rtol * (1.0 + abs(self.cost))
        return (
            self.gap <= scale
            and self.dual_infeasibility() <= scale
            and self.slackness() <= scale
            and self.marginal_error() <= MARGINAL_TOL
        )

    def is_permutation(self) -> bool:
        n = self.source_weights.size
        return (
            n == self.target_weights.size
            and self.rows.size == n
            and np.array_equal(np.sort(self.rows), np.arange(n))
            and np.array_equal(np.sort(self.cols), np.arange(n))
        )

    def to_json(self) -> dict:
        return {
            "entries": [[int(i), int(j), float(w)] for i, j, w in zip(self.rows, self.cols, self.mass)],
            "cost": self.cost,
            "dual_value": self.dual_value,
        }


def _is_uniform(w: np.ndarray) -> bool:
    return w.size > 0 and bool(np.all(w == w[0]))


def _c_transform_duals(cost: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = np.min(cost - f[:, None], axis=0)
    f = np.min(cost - g[None, :], axis=1)
    return f, g


def solve_transport(a: Any, b: Any, cost: np.ndarray) -> TransportPlan:
    """Exact optimal coupling of weight vectors ``a`` and ``b`` for a cost matrix.

    Infinite cost entries are allowed as long as some finite coupling exists.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    cost = np.asarray(cost, dtype=float)
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise ValueError("empty support")
    if cost.shape != (n, m):
        raise ValueError(f"cost matrix shape {cost.shape} does not match ({n}, {m})")
    ta, tb = math.fsum(a.tolist()), math.fsum(b.tolist())
    if abs(ta - tb) > MASS_RTOL * max(1.0, ta, tb):
        raise MassMismatchError(f"total masses differ: {ta} vs {tb}")

    if n == m and _is_uniform(a) and _is_uniform(b) and a[0] == b[0] and np.all(np.isfinite(cost)):
        perm, total, u, v = assignment(cost)
        w = a[0]
        rows = np.arange(n)
        mass = np.full(n, w)
        f, g = _c_transform_duals(cost, u)
        primal = total * w
        dual = math.fsum((a * f).tolist()) + math.fsum((b * g).tolist())
        return TransportPlan(rows, perm, mass, a, b, primal, (f, g), dual, cost)

    finite = np.isfinite(cost)
    ii, jj = np.nonzero(finite)
    nv = ii.size
    data = np.ones(2 * nv)
    row_idx = np.concatenate([ii, n + jj])
    col_idx = np.concatenate([np.arange(nv), np.arange(nv)])
    a_eq = sparse.csr_matrix((data, (row_idx, col_idx)), shape=(n + m, nv))
    # Drop one redundant balance row; its dual is recovered by the c-transform.
    rhs = np.concatenate([a, b * (ta / tb)])
    res = linprog(
        cost[ii, jj],
        A_eq=a_eq[:-1],
        b_eq=rhs[:-1],
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    x = np.clip(res.x, 0.0, None)
    keep = x > 0
    rows, cols, mass = ii[keep], jj[keep], x[keep]
    f0 = np.asarray(res.eqlin.marginals[:n], dtype=float)
    safe = np.where(finite, cost, np.inf)
    f, g = _c_transform_duals(safe, f0)
    primal = math.fsum((mass * cost[rows, cols]).tolist())
    dual = math.fsum((a * f).tolist()) + math.fsum((b * g).tolist())
    return TransportPlan(rows, cols, mass, a, b, primal, (f, g), dual, cost)


def solve_discrete_ot(mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportPlan:
    """Optimal plan between two discrete measures for the half squared distance."""
    if mu.size == 0 or nu.size == 0:
        raise ValueError("empty support")
    if mu.dim != nu.dim:
        raise DimensionError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if abs(mu.total_mass - nu.total_mass) > MASS_RTOL * max(1.0, mu.total_mass, nu.total_mass):
        raise MassMismatchError(f"total masses differ: {mu.total_mass} vs {nu.total_mass}")
    c = cost_matrix(mu.atoms, nu.atoms)
    plan = solve_transport(mu.weights, nu.weights, c)
    return TransportPlan(
        plan.rows, plan.cols, plan.mass, plan.source_weights, plan.target_weights,
        plan.cost, plan.potentials, plan.dual_value, plan.cost_matrix, mu, nu,
    )


@dataclass(frozen=True)
class MonotoneMap1D:
    """Piecewise-linear nondecreasing map through ``(breakpoints, values)``.

    Outside the breakpoints the terminal segments are continued linearly.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        y = np.asarray(self.values, dtype=float).reshape(-1)
        if x.size != y.size or x.size == 0:
            raise ValueError("breakpoints and values must be nonempty and of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(y) < 0):
            raise ValueError("values must be nondecreasing")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", y)

    @classmethod
    def from_quantiles(cls, q_source: np.ndarray, q_target: np.ndarray) -> "MonotoneMap1D":
        # A repeated source quantile is an atom; keep its first (left-continuous) image.
        q_source = np.asarray(q_source, dtype=float)
        first = np.concatenate([[True], np.diff(q_source) > 0])
        return cls(q_source[first], np.asarray(q_target, dtype=float)[first])

    def _slopes(self) -> tuple[float, float]:
        x, y = self.breakpoints, self.values
        if x.size < 2:
            return 0.0, 0.0
        return (y[1] - y[0]) / (x[1] - x[0]), (y[-1] - y[-2]) / (x[-1] - x[-2])

    def __call__(self, x: Any) -> Any:
        xa = np.asarray(x, dtype=float)
        out = np.interp(xa, self.breakpoints, self.values)
        lo, hi = self._slopes()
        out = np.where(xa < self.breakpoints[0], self.values[0] + lo * (xa - self.breakpoints[0]), out)
        out = np.where(xa > self.breakpoints[-1], self.values[-1] + hi * (xa - self.breakpoints[-1]), out)
        return out if out.ndim else float(out)

    def potential(self, x: Any) -> Any:
        """Convex potential ``phi`` with ``phi' = t`` and ``phi(breakpoints[0]) = 0``."""
        bx, by = self.breakpoints, self.values
        seg = np.concatenate([[0.0], np.cumsum(0.5 * (by[1:] + by[:-1]) * np.diff(bx))])
        xa = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(bx, xa, side="right") - 1, 0, bx.size - 1)
        x0 = bx[k]
        t0 = by[k]
        tx = np.asarray(self(xa), dtype=float)
        out = seg[k] + 0.5 * (t0 + tx) * (xa - x0)
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


def solve_1d_quadratic(q_source: Any, q_target: Any) -> tuple[float, MonotoneMap1D]:
    """Quadratic transport between two 1-D laws given on a common quantile grid.

    Inputs are the quantile functions at ``M`` equally weighted levels (for
    example the midpoints ``(i + 1/2)/M``). Returns the cost
    ``(1/2M) sum (q1 - q2)^2`` and the monotone map ``q1 -> q2``.
    """
    q1 = np.asarray(q_source, dtype=float)
    q2 = np.asarray(q_target, dtype=float)
    for q in (q1, q2):
        if q.ndim == 2 and q.shape[1] == 1:
            continue
        if q.ndim != 1:
            raise DimensionError("quantile grids are one-dimensional")
    q1, q2 = q1.reshape(-1), q2.reshape(-1)
    if q1.size != q2.size or q1.size == 0:
        raise ValueError("quantile grids must be nonempty and of equal size")
    if np.any(np.diff(q1) < 0) or np.any(np.diff(q2) < 0):
        raise ValueError("quantile grids must be sorted")
    d = q1 - q2
    cost = math.fsum((d * d).tolist()) / (2 * q1.size)
    return cost, MonotoneMap1D.from_quantiles(q1, q2)


def lift_map(t: Callable[[np.ndarray], Any], eta: Configuration) -> Configuration:
    """Apply a point map to every atom: ``sum eps_x -> sum eps_t(x)``."""
    if not isinstance(eta, Configuration):
        eta = validate_configuration(eta, simple=None)
    if eta.n == 0:
        return eta
    out = []
    for x in eta.points:
        try:
            y = t(x[0] if eta.dim == 1 else x)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise ValueError(f"map undefined at atom {x.tolist()}: {exc}") from exc
        y = np.atleast_1d(np.asarray(y, dtype=float)).reshape(-1)
        if y.size != eta.dim or not np.all(np.isfinite(y)):
            raise ValueError(f"map undefined at atom {x.tolist()}")
        out.append(y)
    return validate_configuration(np.vstack(out), simple=None, dim=eta.dim)


def lift_potential(phi: Callable[[np.ndarray], Any], eta: Configuration) -> float:
    """Sum of a point potential over the atoms of a configuration."""
    if not isinstance(eta, Configuration):
        eta = validate_configuration(eta, simple=None)
    vals = []
    for x in eta.points:
        try:
            v = float(np.asarray(phi(x if eta.dim > 1 else x[0]), dtype=float))
        except Exception as exc:  # noqa: BLE001
            raise ValueError(f"potential undefined at atom {x.tolist()}: {exc}") from exc
        if not math.isfinite(v):
            raise ValueError(f"potential undefined at atom {x.tolist()}")
        vals.append(v)
    return math.fsum(vals)


def identity_coupling_cost(eta: Configuration, omega: Configuration) -> float:
    """Cost of matching atom ``i`` to atom ``i``; an upper bound for the optimal cost."""
    if eta.n != omega.n:
        return math.inf
    if eta.n == 0:
        return 0.0
    d = eta.points - omega.points
    return math.fsum((0.5 * np.einsum("ij,ij->i", d, d)).tolist())
