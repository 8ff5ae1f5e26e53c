import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_factory.analytic import (analytic_inputs, blockage_moment, expected_snr_void,
                                  expected_snr_void_assembled, fb_capacity_bound)
from irs_factory.channel import achievable_rate
from irs_factory.engine import ScenarioConfig

# exp(-0.5457 * 0.99), frozen; a truncated series sum of the Poisson pmf agrees
MOMENT_05457 = 0.5826066617526201


def _inputs(lam=1.0, M=8, ue=(11, 25, 0.5), h=4.0):
    cfg = ScenarioConfig(num_irs_M=M, irs_height_h=h)
    cfg = replace(cfg, blockage=replace(cfg.blockage, density_lambdaB=lam))
    return analytic_inputs(cfg.layout, cfg.deployment, cfg.blockage, cfg.radio, ue)


def test_blockage_moment_oracle():
    assert blockage_moment(0.5457, 0.01) == pytest.approx(MOMENT_05457, rel=1e-14)
    k = np.arange(60)
    pmf = np.exp(-0.5457 + k * math.log(0.5457) - np.array([math.lgamma(i + 1) for i in k]))
    assert np.sum(pmf * 0.1**k) == pytest.approx(blockage_moment(0.5457, 0.01, sqrt_flag=True))
    assert blockage_moment(0.0, 0.01) == 1.0
    with pytest.raises(ValueError):
        blockage_moment(-1.0, 0.01)


def _monte_carlo_void(inp, n=400_000, seed=0):
    """Straight simulation: Poisson counts, Rayleigh fading, coherent sum."""
    rng = np.random.default_rng(seed)
    per = inp.N // inp.M
    b0 = rng.poisson(inp.E_B0, n)
    amp = np.sqrt(inp.beta0 * inp.omega * inp.v**b0) * np.sqrt(rng.standard_exponential(n))
    for m in range(inp.M):
        bm = rng.poisson(inp.E_Bm[m], n)
        # sum of `per` Rayleigh magnitudes, drawn in one block per IRS
        s = np.sqrt(rng.standard_exponential((n, per), dtype=np.float32)).sum(1, dtype=float)
        amp += np.sqrt(inp.betam[m] * inp.v**bm) * s
    g = inp.rho * amp**2
    return g.mean(), g.std() / math.sqrt(n)


@pytest.mark.parametrize("M, ue", [(1, (11, 25, 0.5)), (4, (5, 11, 0.5))])
def test_closed_form_matches_simulation(M, ue):
    inp = _inputs(lam=1.0, M=M, ue=ue)
    mean, se = _monte_carlo_void(inp, n=100_000 if M == 4 else 300_000)
    assert abs(expected_snr_void(inp) - mean) < 4 * se


def test_printed_self_term_differs_from_simulation():
    # 1 IRS, near the wall: the self term dominates and the printed N/M is too large
    inp = _inputs(lam=1.0, M=1, ue=(1, 25, 0.5))
    mean, se = _monte_carlo_void(inp, n=300_000, seed=3)
    assert abs(expected_snr_void(inp) - mean) < 4 * se
    printed = expected_snr_void(inp, printed_self_term=True)
    assert printed > expected_snr_void(inp)
    assert abs(printed - mean) > 10 * se


@pytest.mark.parametrize("lam, ue, value", [
    (1.0, (11, 25, 0.5), 2200.2787469080617),
    (1.0, (1, 1, 0.5), 21.966566785153034),
    (0.2, (19, 49, 0.5), 1252.4176841300368),
])
def test_closed_form_regression(lam, ue, value):
    assert expected_snr_void(_inputs(lam, 8, ue)) == pytest.approx(value, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.6, 19.4), st.floats(0.6, 49.4), st.sampled_from([1, 4, 8, 12, 16]),
       st.floats(1.7, 5.0), st.floats(0.01, 2.0))
def test_two_routes_agree(x, y, M, h, lam):
    inp = _inputs(lam, M, (x, y, 0.5), h)
    assert expected_snr_void(inp) == pytest.approx(expected_snr_void_assembled(inp), rel=1e-10)


def test_no_irs_reduces_to_direct_link():
    cfg = ScenarioConfig(num_irs_M=0)
    inp = analytic_inputs(cfg.layout, cfg.deployment, cfg.blockage, cfg.radio, (11, 25, 0.5))
    want = inp.rho * inp.beta0 * inp.omega * math.exp(-inp.E_B0 * (1 - inp.v))
    assert expected_snr_void(inp) == pytest.approx(want, rel=1e-12)
    assert expected_snr_void_assembled(inp) == pytest.approx(want, rel=1e-12)


def test_expected_snr_falls_with_density():
    vals = [expected_snr_void(_inputs(lam, 8, (7, 33, 0.5))) for lam in (0.05, 0.2, 1.0, 3.0)]
    assert np.all(np.diff(vals) < 0)


def test_fb_capacity_bound_is_clipped_rate():
    assert fb_capacity_bound(1.0, 200, 1e-9) == pytest.approx(float(achievable_rate(1.0, 200, 1e-9)))
    assert fb_capacity_bound(1e-3, 200, 1e-9) == 0.0
    with pytest.raises(ValueError):
        fb_capacity_bound(-1.0, 200, 1e-9)


def test_inputs_validation():
    inp = _inputs()
    with pytest.raises(ValueError):
        replace(inp, v=0.0)
    with pytest.raises(ValueError):
        replace(inp, beta0=0.0)
