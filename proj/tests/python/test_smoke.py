"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import dosessr as ds


@pytest.fixture(scope="module")
def multi_design():
    doses = np.arange(5.0)
    phi = ds.Allocation.equal(5)
    contrasts = ds.optimal_contrasts(
        [
            {"model": "linear"},
            {"model": "emax", "ed50": 0.3},
            {"model": "exponential", "delta": 0.3},
            {"model": "sigmoid_emax", "ed50": 1.0, "h": 3.0},
        ],
        doses,
        phi,
    )
    return ds.TwoStageDesign(
        doses=doses, sigma=2.0, alloc1=phi, alloc2=phi, n1=70, n2=100,
        contrasts=contrasts, alpha=0.10, beta=0.20, n_max=195, cp_min=0.30,
    )


def single_design():
    doses = np.arange(5.0)
    phi = ds.Allocation.equal(5)
    profile = ds.shape_profile("linear", doses)
    c = ds.optimal_contrast(profile, phi)
    contrasts = ds.ContrastSet(c.reshape(1, -1))
    return ds.TwoStageDesign(
        doses=doses, sigma=2.0, alloc1=phi, alloc2=phi, n1=60, n2=90,
        contrasts=contrasts, alpha=0.10, beta=0.20, n_max=170, cp_min=0.30,
    )


def test_normal_functions():
    assert ds.norm_cdf(0.0) == 0.5
    assert abs(ds.norm_quantile(0.9) - 1.2816) < 1e-4
    assert abs(ds.norm_cdf(ds.norm_quantile(0.975)) - 0.975) < 1e-12
    with pytest.raises(ValueError):
        ds.norm_quantile(1.5)


def test_mvn_engine():
    spec = ds.MvnSpec(np.zeros(3), np.eye(3))
    value, se = ds.mvn_equicoordinate_cdf(spec, 0.0)
    assert abs(value - 0.125) < 1e-4
    u = ds.mvn_equicoordinate_quantile(ds.MvnSpec(np.zeros(1), np.eye(1)), 0.9)
    assert abs(u - 1.2816) < 1e-3


def test_design_numbers():
    doses = np.arange(5.0)
    phi = ds.Allocation.equal(5)
    c = ds.optimal_contrast(ds.shape_profile("linear", doses), phi)
    np.testing.assert_allclose(c, np.array([-2, -1, 0, 1, 2]) / math.sqrt(10), atol=1e-12)

    mu_opt = np.array([0, 0.25, 0.5, 0.75, 1.0])
    delta = float(c @ mu_opt)
    n = ds.single_sample_size(delta, c, phi, 2.0, 0.10, 0.20, ds.Rounding.per_arm_equal)
    assert n == 150.0
    power = ds.single_power(0.8 * delta, c, phi, 2.0, 150.0, 0.10)
    assert abs(power - 0.674) < 5e-3


def test_mcp_critical_value(multi_design):
    ua = ds.mcp_critical_value(multi_design)
    assert ua > ds.norm_quantile(0.9)
    power = ds.mcp_power(np.array([0, 0.25, 0.5, 0.75, 1.0]), multi_design, ua, 170.0)
    assert abs(power - 0.80) < 0.01


def test_ssr_decision_roundtrip():
    d = single_design()
    phi = ds.Allocation.equal(5)
    contrasts = ds.ContrastSet(d.contrast_matrix)
    interim = ds.InterimState.from_means(
        np.array([0.0, 0.2, 0.4, 0.6, 0.8]), 60.0, phi, contrasts, 2.0
    )
    dec = ds.cp_ssr_decide(interim, d)
    assert dec.zone in (ds.Zone.unfavorable, ds.Zone.favorable, ds.Zone.promising)
    assert d.n2 <= dec.n2_new <= d.n_max

    post = ds.posterior(ds.Prior.flat(), interim, 2.0)
    pp = ds.pp_closed_form_single(post, 90.0, interim, d)
    cp = ds.conditional_power_single(90.0, float(d.contrast_matrix[0] @ interim.ybar1), interim, d)
    assert abs(pp - 0.5) <= abs(cp - 0.5) + 1e-12


def test_simulation_reproducible():
    d = single_design()
    scenario = ds.Scenario(
        design=d, true_mu=np.array([0, 0.2, 0.4, 0.6, 0.8]),
        method=ds.MethodSpec.make("FQ1"), replicates=500, master_seed=99,
    )
    a = ds.run_study(scenario, threads=1)
    b = ds.run_study(scenario, threads=2)
    assert a.power == b.power
    assert a.mean_ss == b.mean_ss
    assert abs(a.pct_unfavorable + a.pct_favorable + a.pct_promising - 100.0) < 0.01

    dist = ds.metric_distribution(scenario, threads=2)
    assert len(dist.values) == 500
    assert dist.q25 <= dist.q50 <= dist.q75
