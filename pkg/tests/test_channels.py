import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from hybrid_relay.channels import (
    WEATHER,
    SystemParams,
    derive_link_budget,
    gamma_gamma_shapes,
    noise_power_dbm,
    sample_access_channels,
    sample_backhaul_channels,
    sample_block,
    sample_fso_gains,
)
from hybrid_relay.numerics import DomainError, make_rng

GOLDEN = json.loads((Path(__file__).parent / "data" / "budget_golden.json").read_text())


def test_table_defaults():
    p = SystemParams()
    assert (p.users, p.relay_antennas, p.dest_antennas) == (5, 10, 10)
    assert p.user_rate_bits == (8.0,) * 5
    assert p.total_user_rate == 40.0
    assert p.access_rice == (0.0, 1.0)


def test_named_weather_points():
    assert WEATHER == {
        "clear_air": (0.43e-3, 50e-15),
        "haze": (4.2e-3, 17e-15),
        "light_fog": (20e-3, 3e-15),
        "moderate_fog": (42.2e-3, 2e-15),
        "heavy_fog": (125e-3, 1e-15),
    }


@pytest.mark.parametrize("field, value", [
    ("relay_antennas", 3),
    ("users", 0),
    ("user_power_w", -1.0),
    ("relay_distance_m", 0.0),
    ("rf_bandwidth_hz", 0.0),
    ("backhaul_rice", (1.0, 0.0)),
    ("access_rice", (-1.0, 1.0)),
    ("symbols_per_block", 0),
])
def test_params_validation(field, value):
    with pytest.raises(DomainError):
        SystemParams(**{field: value})


def test_jk_message():
    with pytest.raises(DomainError, match="J ≥ K required"):
        SystemParams(relay_antennas=3, users=5)


def test_per_user_broadcast():
    p = SystemParams(user_distance_m=(100, 200, 300, 400, 500))
    b = derive_link_budget(p)
    assert b.h_a_access.shape == (5,)
    assert np.all(np.diff(b.h_a_access) < 0)


def test_golden_budget():
    b = derive_link_budget(SystemParams())
    assert b.h_a_access[0] == pytest.approx(GOLDEN["h_a_access"], rel=1e-12)
    assert b.h_a_backhaul == pytest.approx(GOLDEN["h_a_backhaul"], rel=1e-12)
    assert b.g_a == pytest.approx(GOLDEN["g_a"], rel=1e-12)
    assert b.alpha == pytest.approx(GOLDEN["alpha"], rel=1e-10)
    assert b.beta == pytest.approx(GOLDEN["beta"], rel=1e-10)
    assert b.sigma2_relay == pytest.approx(GOLDEN["sigma2"], rel=1e-12)
    assert b.sigma2_dest == b.sigma2_relay
    assert b.p_scale == pytest.approx(GOLDEN["p_scale"], rel=1e-12)
    assert b.M == 50


def test_noise_arithmetic():
    assert noise_power_dbm(-114, 20e6, 5) == pytest.approx(-114 + 10 * math.log10(20) + 5)
    assert round(noise_power_dbm(-114, 20e6, 5), 2) == -95.99


def test_large_aperture_limit():
    p = SystemParams(aperture_radius_m=10.0)
    b = derive_link_budget(p)
    assert b.g_a == pytest.approx(10 ** (-p.kappa_db_per_m * 1000 / 10), rel=1e-12)


def test_distance_scaling():
    near = derive_link_budget(SystemParams(relay_distance_m=1000))
    far = derive_link_budget(SystemParams(relay_distance_m=2000))
    assert far.h_a_backhaul / near.h_a_backhaul == pytest.approx(2 ** -3.5, rel=1e-12)


def test_ga_decreasing_in_kappa_and_distance():
    base = SystemParams()
    kappas = np.logspace(-4, -0.8, 15)
    ga = [derive_link_budget(base.with_point(kappa_db_per_m=k)).g_a for k in kappas]
    assert np.all(np.diff(ga) < 0)
    ds = np.linspace(200, 3000, 15)
    ga = [derive_link_budget(base.with_point(distance_m=d)).g_a for d in ds]
    assert np.all(np.diff(ga) < 0)


def test_shapes_decreasing_in_cn2():
    cn2 = np.logspace(-15, math.log10(50e-15), 20)
    shapes = np.array([gamma_gamma_shapes(c, 1550e-9, 1000.0, 0.1) for c in cn2])
    assert np.all(np.diff(shapes[:, 0]) < 0)
    assert np.all(np.diff(shapes[:, 1]) < 0)


def test_zero_cn2_is_no_turbulence():
    b = derive_link_budget(SystemParams(cn2=0.0))
    assert math.isinf(b.alpha) and math.isinf(b.beta)
    g = sample_fso_gains(b, make_rng(0), 10)
    assert np.all(g == b.g_a)


def test_budget_errors():
    with pytest.raises(DomainError):
        derive_link_budget(SystemParams(kappa_db_per_m=10.0))  # 10^-1000 underflows
    with pytest.raises(DomainError):
        derive_link_budget(SystemParams(fso_bandwidth_hz=1e6))


def test_budget_deterministic():
    a = derive_link_budget(SystemParams())
    b = derive_link_budget(SystemParams())
    assert a.g_a == b.g_a and a.alpha == b.alpha


def test_block_shapes_and_reproducibility():
    p = SystemParams()
    b = derive_link_budget(p)
    x = sample_block(p, b, make_rng(5))
    y = sample_block(p, b, make_rng(5))
    assert x.H1.shape == (10, 5) and x.H2.shape == (10, 10) and x.g > 0
    assert np.array_equal(x.H1, y.H1) and np.array_equal(x.H2, y.H2) and x.g == y.g


def test_access_power_matches_budget():
    p = SystemParams(users=1, relay_antennas=1)
    b = derive_link_budget(p)
    h = sample_access_channels(p, b, make_rng(1), 10**6)[:, 0, 0]
    assert np.mean(np.abs(h) ** 2) == pytest.approx(b.h_a_access[0], rel=0.01)


def test_backhaul_power_matches_budget():
    p = SystemParams(relay_antennas=5, dest_antennas=1)
    b = derive_link_budget(p)
    h = sample_backhaul_channels(p, b, make_rng(2), 200_000)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(b.h_a_backhaul, rel=0.01)


def test_fso_gain_mean():
    b = derive_link_budget(SystemParams())
    g = sample_fso_gains(b, make_rng(3), 10**6)
    assert g.mean() == pytest.approx(b.g_a, rel=0.01)


def test_phase_uniform():
    p = SystemParams(users=1, relay_antennas=1)
    b = derive_link_budget(p)
    h = sample_access_channels(p, b, make_rng(4), 10**6)[:, 0, 0]
    ks = stats.kstest(np.angle(h), stats.uniform(-np.pi, 2 * np.pi).cdf)
    assert ks.statistic < 0.005


def test_with_point():
    p = SystemParams().with_point(*WEATHER["heavy_fog"], 2000)
    assert (p.kappa_db_per_m, p.cn2, p.relay_distance_m) == (125e-3, 1e-15, 2000.0)
