import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betalab import sampler
from betalab.errors import DomainError, MixingError, PrecisionError
from betalab.exact import exact_linear_statistic
from betalab.potential import GAUSSIAN, Polynomial
from betalab.sampler import (EnsembleConfig, batch_means, connected_kernel, empirical_stieltjes,
                             exact_partition, linear_statistic, loop_residual, run_chains)

from conftest import QUARTIC

F2 = Polynomial([0, 0, 1.0])


@pytest.fixture(scope="module")
def gauss_batch():
    return run_chains(EnsembleConfig(8, 1.0), chains=2, steps=6000, seed=3)


def test_config_validation():
    for kw in ({"n": 0, "beta": 1}, {"n": 2.5, "beta": 1}, {"n": 4, "beta": 0},
               {"n": 4, "beta": 1, "epsilon": 0}, {"n": 4, "beta": 1, "potential": [0, 0, 0.5]}):
        with pytest.raises(DomainError):
            EnsembleConfig(**kw)


def test_domain_and_perturbation():
    cfg = EnsembleConfig(10, 2.0, QUARTIC, epsilon=0.25, h=Polynomial([0, 1.0]))
    a, b = cfg.domain
    assert a == pytest.approx(-(16 / 3) ** 0.25 - 0.25) and b == pytest.approx(-a)
    assert cfg.V_h == QUARTIC + Polynomial([0, 0.1])
    assert cfg.as_dict()["h"] == [0.0, 1.0]


def test_run_chains_argument_checks():
    cfg = EnsembleConfig(4, 1.0)
    for kw in ({"chains": 0}, {"steps": 1}, {"steps": 10, "burnin": 10}, {"seed": -1}):
        with pytest.raises(DomainError):
            run_chains(cfg, **kw)


def test_shapes_acceptance_and_domain(gauss_batch):
    b = gauss_batch
    assert b.configurations.shape[0] == 2 and b.configurations.shape[2] == 8
    assert 0.3 <= b.acceptance_rate <= 0.5
    lo, hi = b.config.domain
    assert b.configurations.min() >= lo and b.configurations.max() <= hi
    assert b.burnin == 1200


def test_reproducible_and_thread_independent():
    cfg = EnsembleConfig(6, 4.0, QUARTIC)
    a = run_chains(cfg, chains=3, steps=1500, seed=11)
    b = run_chains(cfg, chains=3, steps=1500, seed=11, threads=3)
    c = run_chains(cfg, chains=3, steps=1500, seed=12)
    assert np.array_equal(a.configurations, b.configurations)
    assert not np.array_equal(a.configurations, c.configurations)


def test_thinning_limits_storage():
    b = run_chains(EnsembleConfig(4, 2.0), chains=1, steps=5000, burnin=1000, seed=0, max_stored=100)
    assert b.thin == 40 and b.configurations.shape[1] == 100


def test_mixing_error(monkeypatch):
    monkeypatch.setattr(sampler, "MIXING_LIMITS", (0.99, 1.0))
    with pytest.raises(MixingError):
        run_chains(EnsembleConfig(4, 1.0), chains=1, steps=600, seed=0)


@pytest.mark.slow
def test_matches_exact_second_moment():
    # a wide domain makes the truncation bias negligible at n = 2
    cfg = EnsembleConfig(2, 2.0, epsilon=4.0)
    est = linear_statistic(run_chains(cfg, chains=4, steps=40000, seed=5), F2)
    exact = exact_linear_statistic(GAUSSIAN, 2, 2.0, lambda x: x * x)
    assert abs(est.mean - exact) < 4 * est.stderr


def test_connected_kernel_equals_variance(gauss_batch):
    for f in (F2, Polynomial([0, 1.0]), np.cos):
        assert connected_kernel(gauss_batch, f) == pytest.approx(linear_statistic(gauss_batch, f).variance,
                                                                 rel=1e-9, abs=1e-12)


def test_constant_statistic_has_zero_error(gauss_batch):
    est = linear_statistic(gauss_batch, Polynomial([1.0]))
    assert est.mean == 8.0 and est.variance == 0.0 and est.stderr == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_batch_means_iid(seed):
    x = np.random.default_rng(seed).normal(size=(4, 4096))
    se = batch_means(x)
    assert 0.5 / np.sqrt(x.size) < se < 1.6 / np.sqrt(x.size)


def test_batch_means_needs_two_batches():
    with pytest.raises(PrecisionError):
        batch_means(np.ones((1, 1)))


def test_stieltjes_and_loop_residual(gauss_batch):
    z = np.array([4.0, 0.5 + 2.0j])
    st_ = empirical_stieltjes(gauss_batch, z)
    assert np.all(np.abs(st_.g_n - st_.g) < 0.05)
    lr = loop_residual(gauss_batch, z)
    assert np.all(lr.magnitude < 5 * lr.stderr + 1e-12)
    with pytest.raises(DomainError):
        empirical_stieltjes(gauss_batch, 0.0 + 0.05j)


def test_loop_residual_needs_samples():
    b = run_chains(EnsembleConfig(4, 1.0), chains=1, steps=100, burnin=50, seed=0)
    with pytest.raises(PrecisionError):
        loop_residual(b, 4.0)


def test_exact_partition_truncation():
    cfg = EnsembleConfig(2, 2.0, epsilon=0.25)
    full = exact_partition(cfg)
    assert np.exp(full) == pytest.approx(np.pi, rel=1e-12)
    assert exact_partition(cfg, truncate=True) < full
