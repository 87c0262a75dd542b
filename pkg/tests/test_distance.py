import math

import numpy as np
import pytest
from scipy.optimize import linprog

from configot.core import INFINITE, Configuration, CountDistribution
from configot.distance import (
    MCEstimate,
    barbour_distance,
    base_transport,
    combine_by_count,
    count_gate_tolerance,
    cox_distance,
    empirical_process_distance,
    finiteness_gate,
    paired_count_samples,
    pairwise_config_costs,
    plan_standard_error,
    poisson_coupling_estimate,
    poisson_distance,
    scaled_poisson_distance,
    shift_bound_check,
    tensorization_check,
)
from configot.matching import brute_force_cost, cycle_monotonicity, plan_cross_costs
from configot.processes import (
    BinomialModel,
    CoxModel,
    Intensity,
    PoissonModel,
    UniformDensity,
    poisson_count_pmf,
    sample_binomial,
)


def _cd(pmf, tail=0.0):
    return CountDistribution(np.asarray(pmf, float), tail)


# ---------------------------------------------------------------- gate


def test_gate_equal_laws_pass():
    assert finiteness_gate(poisson_count_pmf(1.0), poisson_count_pmf(1.0))


def test_gate_poisson_means_differ():
    g = finiteness_gate(poisson_count_pmf(1.0), poisson_count_pmf(2.0))
    assert not g
    assert g.max_pmf_diff > 0.1


def test_gate_binomial_counts_differ():
    assert not finiteness_gate(_cd([0, 0, 1]), _cd([0, 0, 0, 1]))


def test_gate_tolerance_scalar_and_per_bin():
    p, q = _cd([0.5, 0.5]), _cd([0.52, 0.48])
    assert not finiteness_gate(p, q, 0.01)
    assert finiteness_gate(p, q, 0.03)
    assert finiteness_gate(p, q, [0.03, 0.03])
    assert not finiteness_gate(p, q, [0.03, 0.0])


def test_gate_checks_tail():
    p, q = _cd([0.5, 0.5]), _cd([0.5, 0.45], tail=0.05)
    assert finiteness_gate(p, q, 0.05)
    g = finiteness_gate(p, q, [0.0, 0.05])
    assert g and g.tail_diff == pytest.approx(0.05)
    assert not finiteness_gate(p, q, 0.04)


def _min_offdiagonal_mass(p, q):
    k = len(p)
    c = np.array([0.0 if i == j else 1.0 for i in range(k) for j in range(k)])
    a_eq = []
    for i in range(k):
        a_eq.append([1.0 if r == i else 0.0 for r in range(k) for _ in range(k)])
    for j in range(k):
        a_eq.append([1.0 if s == j else 0.0 for _ in range(k) for s in range(k)])
    res = linprog(c, A_eq=np.array(a_eq), b_eq=np.concatenate([p, q]), bounds=(0, None), method="highs")
    return res.fun


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gate_soundness_on_small_supports(k, rng):
    # Any coupling of unequal count laws puts mass where the counts differ,
    # and there the configuration cost is infinite.
    for _ in range(30):
        p = rng.dirichlet(np.ones(k))
        q = rng.dirichlet(np.ones(k)) if rng.random() < 0.8 else p.copy()
        off = _min_offdiagonal_mass(p, q)
        gate = finiteness_gate(_cd(p), _cd(q), 1e-12)
        assert bool(gate) == (off <= 1e-12)
        assert off == pytest.approx(0.5 * np.abs(p - q).sum(), abs=1e-9)


def test_count_gate_tolerance_shrinks_with_samples():
    p = np.array([0.4, 0.6])
    assert np.all(count_gate_tolerance(p, p, 1000, 1000) < count_gate_tolerance(p, p, 100, 100))


# ------------------------------------------------------ combine_by_count


def test_combine_series_oracle():
    # Poisson(1) weights with W_n^2 = n: the full series sums n e^-1 / n! = 1.
    series = math.fsum(n * math.exp(-1) / math.factorial(n) for n in range(1, 60))
    p = poisson_count_pmf(1.0, 30)
    rep = combine_by_count({n: float(n) for n in range(1, 31)}, p)
    assert series == pytest.approx(1.0, abs=1e-15)
    assert rep.combined.value == pytest.approx(series, abs=1e-12)
    assert rep.recomputed() == rep.combined
    assert rep.truncation_error_bound < 1e-30


def test_combine_monotone_in_each_stratum():
    p = poisson_count_pmf(1.0, 6)
    base = {n: 0.1 * n for n in range(1, 7)}
    v0 = combine_by_count(base, p).combined.value
    for n in base:
        bumped = dict(base)
        bumped[n] += 0.05
        assert combine_by_count(bumped, p).combined.value > v0


def test_combine_infinite_stratum_absorbs():
    p = poisson_count_pmf(1.0, 3)
    rep = combine_by_count({1: 0.1, 2: INFINITE, 3: 0.3}, p)
    assert rep.combined.is_infinite


def test_combine_zero_weight_infinite_ignored():
    p = _cd([0.5, 0.5, 0.0])
    rep = combine_by_count({1: 0.2, 2: math.inf}, p)
    assert rep.combined.value == pytest.approx(0.1)


def test_combine_missing_stratum_raises():
    with pytest.raises(ValueError, match="missing stratum"):
        combine_by_count({1: 0.1}, poisson_count_pmf(1.0, 3))


# ------------------------------------------------------------- Poisson


def test_poisson_distance_benchmark(u01, u02):
    assert poisson_distance(u01, u02, 4096) == pytest.approx(1 / 6, abs=1e-6)


def test_poisson_distance_same_law_is_zero(u01):
    assert poisson_distance(u01, u01) == pytest.approx(0.0, abs=1e-14)


def test_poisson_distance_translation():
    # Translating a law by t costs t^2/2.
    assert poisson_distance(UniformDensity(0, 1), UniformDensity(0.3, 1.3)) == pytest.approx(0.045, abs=1e-12)


def test_poisson_distance_requires_unit_mass(u01, u02):
    with pytest.raises(ValueError, match="not 1"):
        poisson_distance(Intensity(u01, 2.0), Intensity(u02, 2.0))


def test_scaled_poisson_distance_is_linear_in_mass(u01, u02):
    rep = scaled_poisson_distance(Intensity(u01, 2.5), Intensity(u02, 2.5))
    assert rep.combined.value == pytest.approx(2.5 / 6, rel=1e-5)
    assert scaled_poisson_distance(Intensity(u01, 1.0), Intensity(u02, 2.0)).combined.is_infinite


def test_base_transport_2d_translation():
    a = UniformDensity([0, 0], [1, 1])
    b = UniformDensity([0.5, 0], [1.5, 1])
    assert base_transport(a, b, per_axis=8).cost == pytest.approx(0.125, abs=1e-9)


def test_coupling_estimate_same_law_is_zero(u01):
    est = poisson_coupling_estimate(u01, u01, 500, seed=3)
    assert est.estimate.mean == pytest.approx(0.0, abs=1e-12)
    assert est.identity


def test_coupling_estimate_small_run(u01, u02):
    est = poisson_coupling_estimate(u01, u02, 4000, seed=11)
    assert abs(est.estimate.mean - 1 / 6) <= 4 * est.estimate.se


# ----------------------------------------------------------------- Cox


def test_cox_degenerate_zero_variance(u01, u02):
    est = cox_distance(CoxModel.degenerate(u01, u02), 200, seed=5)
    assert est.squared.mean == pytest.approx(1 / 6, abs=1e-6)
    assert est.distance.se == 0.0
    assert est.squared.std == 0.0


def test_cox_mixture_mean_distance(u01, u02):
    model = CoxModel.mixture([(0.5, u01, u02), (0.5, u01, u01)])
    est = cox_distance(model, 3000, seed=9)
    assert est.distance.within(0.5 * math.sqrt(1 / 6), 3.0)
    assert est.squared.within(0.5 / 6, 3.0)


def test_cox_unequal_masses_are_infinite(u01):
    model = CoxModel.mixture([(1.0, Intensity(u01, 1.0), Intensity(u01, 2.0))])
    assert cox_distance(model, 10, seed=0).infinite


# ------------------------------------------------------------- Barbour


def test_barbour_benchmark(u01, u02):
    res = barbour_distance(u01, u02, n_max=20, grid_size=4096)
    series = math.fsum(math.exp(-1) / math.factorial(n) * (1 / 6) for n in range(1, 60))
    assert res.discrepancy <= 1e-9
    assert res.closed_form == pytest.approx(series, abs=2e-7)
    assert res.closed_form == pytest.approx(0.1053534, abs=1e-6)


# ---------------------------------------------------- empirical estimator


def _configs(lists):
    return [Configuration.of(x) if len(x) else Configuration.empty(1) for x in lists]


def test_pairwise_costs_match_brute_force(rng):
    etas = _configs([rng.random(n).tolist() for n in (0, 1, 2, 3, 7, 2)])
    omegas = _configs([rng.random(n).tolist() for n in (2, 3, 1, 7, 0)])
    got = pairwise_config_costs(etas, omegas)
    for i, e in enumerate(etas):
        for j, o in enumerate(omegas):
            want = brute_force_cost(e, o)
            if want.is_infinite:
                assert math.isinf(got[i, j])
            else:
                assert got[i, j] == pytest.approx(want.value, abs=1e-12)


def test_empirical_identical_samples_zero(rng):
    cfgs = _configs([rng.random(int(n)).tolist() for n in rng.poisson(1.0, 60)])
    rep = empirical_process_distance(cfgs, cfgs)
    assert rep.combined.value == pytest.approx(0.0, abs=1e-12)


def test_empirical_single_pair():
    eta, omega = _configs([[0.0, 1.0]]), _configs([[2.0, 0.5]])
    rep = empirical_process_distance(eta, omega)
    # Only the 2-atom stratum: matching 0->0.5, 1->2 costs 0.125 + 0.5.
    assert rep.combined.value == pytest.approx(0.625, abs=1e-12)


def test_empirical_gate_failure_is_infinite():
    a = _configs([[0.0]] * 50)
    b = _configs([[0.0, 1.0]] * 50)
    rep = empirical_process_distance(a, b)
    assert rep.combined.is_infinite
    assert rep.reason == "count laws differ"


def test_empirical_one_sided_stratum_is_infinite():
    a = _configs([[0.0]] * 49 + [[0.0, 1.0, 2.0]])
    b = _configs([[0.0]] * 50)
    rep = empirical_process_distance(a, b)
    assert rep.combined.is_infinite
    assert "one side" in rep.reason


def test_empirical_binomial_single_stratum(u01, u02):
    etas = [sample_binomial(BinomialModel(2, u01), 1, i) for i in range(150)]
    omegas = [sample_binomial(BinomialModel(2, u02), 2, i) for i in range(150)]
    rep = empirical_process_distance(etas, omegas)
    assert [r.n for r in rep.rows] == [1, 2]
    assert rep.rows[0].weight == 0.0
    # Upward biased around 2 * T_e^2.
    assert 2 / 6 - 3 * rep.se <= rep.combined.value <= 2 / 6 * 1.5


def test_empirical_plans_are_cyclically_monotone(u01, u02):
    mu, nu = paired_count_samples(PoissonModel(u01), PoissonModel(u02), 80, seed=4)
    rep = empirical_process_distance(mu, nu)
    assert rep.combined.is_finite and rep.se > 0
    for plan in rep.plans.values():
        assert plan.certified()
        cross = plan_cross_costs(plan.cost_matrix, plan.rows, plan.cols)
        assert cycle_monotonicity(cross).ok


def test_paired_counts_share_counts(u01, u02):
    mu, nu = paired_count_samples(PoissonModel(u01), PoissonModel(u02), 40, seed=1)
    assert [c.n for c in mu] == [c.n for c in nu]
    with pytest.raises(ValueError):
        paired_count_samples(PoissonModel(u01, 1.0), PoissonModel(u02, 2.0), 5, seed=1)


def test_plan_standard_error_zero_for_constant_potentials():
    from configot.ot import solve_transport

    c = np.zeros((4, 4))
    plan = solve_transport(np.full(4, 0.25), np.full(4, 0.25), c)
    assert plan_standard_error(plan) == 0.0


def test_mc_estimate():
    est = MCEstimate.from_values([1.0, 2.0, 3.0])
    assert est.mean == 2.0
    assert est.se == pytest.approx(1 / math.sqrt(3))
    assert est.within(2.5, 1.0)
    assert not est.within(3.0, 1.0)


# -------------------------------------------------------- tensorization


def test_tensorization_small(u01, u02):
    rep = tensorization_check(u01, u02, (1, 2), tuples=120, seed=2)
    assert rep.base_cost == pytest.approx(1 / 6, abs=1e-6)
    assert len(rep.pairwise()) == 1
    for row in rep.rows:
        assert row.se > 0
        assert row.plan.is_permutation
    assert rep.to_json()["pass"] == rep.passed


# ---------------------------------------------------------- shift bound


def test_shift_zero_is_zero(u01):
    res = shift_bound_check(PoissonModel(u01), lambda x: 0.0, 200, seed=0)
    assert res.bound == 0.0
    assert res.estimate.mean == 0.0
    assert res.passed


def test_shift_constant(u01):
    res = shift_bound_check(PoissonModel(u01), lambda x: 0.1, 2000, seed=0)
    assert res.bound == pytest.approx(0.005, abs=1e-12)
    assert res.estimate.within(0.005, 3.0)
    assert res.passed


def test_shift_linear_bound_quadrature_oracle(u01):
    # 1/2 * int_0^1 (0.1 x)^2 dx by a midpoint rule.
    m = 100000
    x = (np.arange(m) + 0.5) / m
    oracle = 0.5 * math.fsum((0.01 * x**2).tolist()) / m
    res = shift_bound_check(PoissonModel(u01), lambda x: 0.1 * x, 2000, seed=0)
    assert res.bound == pytest.approx(oracle, abs=1e-10)
    assert res.bound == pytest.approx(1 / 600, abs=1e-12)
    assert res.passed


def test_shift_2d_constant():
    model = PoissonModel(UniformDensity([0, 0], [1, 1]), 2.0)
    res = shift_bound_check(model, lambda x: np.array([0.1, 0.2]), 300, seed=0)
    assert res.bound == pytest.approx(2.0 * 0.5 * 0.05, abs=1e-10)


def test_shift_rejects_wrong_dimension(u01):
    with pytest.raises(ValueError):
        shift_bound_check(PoissonModel(u01), lambda x: [0.1, 0.1], 10, seed=0)
