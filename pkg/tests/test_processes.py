import math

import numpy as np
import pytest
from scipy import stats

from configot.core import DiscreteMeasure
from configot.processes import (
    AtomicDensity,
    BinomialModel,
    CoxModel,
    Intensity,
    PiecewiseDensity,
    PoissonModel,
    UniformDensity,
    count_pmf,
    model_from_json,
    quantile_grid,
    sample_binomial,
    sample_cox,
    sample_poisson,
    stream,
)


def test_poisson_small_mass_gives_empty(u01):
    model = PoissonModel(u01, 1e-9)
    assert all(sample_poisson(model, 3, i).n == 0 for i in range(200))


def test_poisson_rejects_nonpositive_mass(u01):
    with pytest.raises(ValueError):
        sample_poisson(PoissonModel(u01, 0.0), 1)


def test_poisson_mean_count_clt(u01):
    model = PoissonModel(u01, 1.0)
    counts = np.array([sample_poisson(model, 5, i).n for i in range(100_000)])
    assert abs(counts.mean() - 1.0) <= 3 * math.sqrt(1.0 / 100_000)


def test_poisson_atoms_uniform_ks(u01):
    model = PoissonModel(u01, 1.0)
    atoms = np.concatenate([sample_poisson(model, 9, i).points[:, 0] for i in range(20_000)])
    assert stats.kstest(atoms, "uniform").pvalue > 0.01


def test_poisson_thinning_chi_square(u01):
    # Keeping the atoms of a mass-2 process in [0, 1/2] leaves a mass-1 Poisson process.
    model = PoissonModel(u01, 2.0)
    counts = np.array([int((sample_poisson(model, 13, i).points[:, 0] < 0.5).sum()) for i in range(100_000)])
    top = 6
    observed = np.bincount(np.minimum(counts, top), minlength=top + 1)
    probs = stats.poisson.pmf(np.arange(top), 1.0)
    probs = np.append(probs, 1 - probs.sum())
    assert stats.chisquare(observed, probs * counts.size).pvalue > 0.01


def test_binomial_cardinality(u01):
    assert sample_binomial(BinomialModel(0, u01), 1).n == 0
    assert all(sample_binomial(BinomialModel(3, u01), 1, i).n == 3 for i in range(50))


def test_binomial_mean(u01):
    model = BinomialModel(2, u01)
    atoms = np.concatenate([sample_binomial(model, 2, i).points[:, 0] for i in range(100_000)])
    assert abs(atoms.mean() - 0.5) <= 3 * math.sqrt(1 / 12 / atoms.size)


def test_determinism_and_stream_independence(u01):
    model = PoissonModel(u01, 3.0)
    a = [sample_poisson(model, 42, i) for i in range(20)]
    b = [sample_poisson(model, 42, i) for i in reversed(range(20))][::-1]
    assert a == b
    assert sample_poisson(model, 42, 0) != sample_poisson(model, 42, 1)
    assert stream(1, 0).random() != stream(2, 0).random()


def test_cox_degenerate_reduces_to_poisson(u01, u02):
    model = CoxModel.degenerate(Intensity(u01), Intensity(u02))
    draws = [sample_cox(model, 4, i) for i in range(5000)]
    assert all(d.sigma2.density == u02 for d in draws)
    counts = np.array([d.omega.n for d in draws])
    assert abs(counts.mean() - 1.0) <= 4 * math.sqrt(1 / 5000)
    assert max(d.omega.points.max() for d in draws if d.omega.n) > 1.0


def test_cox_mixture_count_pmf(u01):
    model = CoxModel.mixture([(0.5, Intensity(u01, 1.0), Intensity(u01, 1.0)), (0.5, Intensity(u01, 3.0), Intensity(u01, 3.0))])
    pmf = count_pmf(model, 30)
    expected = 0.5 * stats.poisson.pmf(np.arange(31), 1.0) + 0.5 * stats.poisson.pmf(np.arange(31), 3.0)
    assert np.allclose(pmf.pmf, expected, atol=1e-15)
    counts = np.array([sample_cox(model, 8, i).eta.n for i in range(20_000)])
    freq = np.bincount(counts, minlength=31)[:31] / counts.size
    se = np.sqrt(expected * (1 - expected) / counts.size)
    assert np.all(np.abs(freq - expected) <= 4 * se + 1e-12)


def test_cox_determinism(u01, u02):
    model = CoxModel.mixture([(0.5, u01, u01), (0.5, u01, u02)])
    a, b = sample_cox(model, 7, 3), sample_cox(model, 7, 3)
    assert a.eta == b.eta and a.omega == b.omega and a.sigma2 == b.sigma2


def test_count_pmf_values(u01):
    assert count_pmf(BinomialModel(3, u01)).pmf[3] == 1.0
    p = count_pmf(PoissonModel(u01, 1.0), 20)
    assert p[0] == pytest.approx(math.exp(-1), rel=1e-15)
    assert p[1] == pytest.approx(math.exp(-1), rel=1e-15)
    # Remainder oracle: sum_{n>20} e^-1/n! < e^-1/21! * (1 + 1/22 + 1/22^2 + ...)
    assert p.tail_mass < math.exp(-1) / math.factorial(21) * 22 / 21 < 1e-18
    assert abs(p.pmf.sum() + p.tail_mass - 1.0) <= 1e-12
    with pytest.raises(TypeError):
        count_pmf("not a model")


def test_piecewise_density_quantiles():
    d = PiecewiseDensity([0.0, 1.0, 2.0, 3.0], [1.0, 0.0, 1.0])
    q = quantile_grid(d, 4)
    assert np.allclose(q, [0.25, 0.75, 2.25, 2.75])
    rng = stream(0)
    xs = d.sample(rng, 10_000)[:, 0]
    assert not np.any((xs > 1.0) & (xs < 2.0))


def test_atomic_density_left_continuous_quantiles():
    d = AtomicDensity(DiscreteMeasure([[2.0], [0.0]], [0.5, 0.5]))
    assert quantile_grid(d, 4).tolist() == [0.0, 0.0, 2.0, 2.0]
    assert d.quantiles(np.array([0.5]))[0] == 0.0


def test_model_json():
    m = model_from_json({"type": "poisson", "mass": 1.0, "density": {"kind": "uniform", "a": 0, "b": 1}})
    assert isinstance(m, PoissonModel) and m.mass == 1.0 and m.density == UniformDensity(0, 1)
    assert model_from_json(m.to_json()) == m
    b = model_from_json({"type": "binomial", "n": 2, "density": {"kind": "uniform", "a": 0, "b": 1}})
    assert b.n == 2
    with pytest.raises(ValueError):
        model_from_json({"type": "gibbs"})


def test_atomic_intensity_mass_check():
    with pytest.raises(ValueError):
        PoissonModel(DiscreteMeasure([[0.0]], [2.0]), 1.0)
    m = PoissonModel.from_measure(DiscreteMeasure([[0.0], [1.0]], [1.0, 1.0]))
    assert m.mass == 2.0
