import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcris.channel import (
    ArrayGeometry,
    ChannelParams,
    ChannelSet,
    direction,
    draw_ue_positions,
    generate_channel_set,
    los_matrix,
    pathloss_linear,
    rician_channel,
    steering_from_direction,
    steering_vector,
)
from lcris.config import desk_config
from lcris.errors import ConfigError

LAM = 299792458.0 / 28e9
PARAMS = ChannelParams()


def test_pathloss_at_one_metre():
    assert pathloss_linear(1.0, PARAMS) == pytest.approx(10 ** -6.1, rel=1e-14)


@pytest.mark.parametrize("sigma", [0.0, 1.5, 2.0, 3.7])
def test_pathloss_at_reference_distance(sigma):
    p = ChannelParams(pathloss_exponent=sigma, d0=2.5, c0_db=-40.0)
    assert pathloss_linear(2.5, p) == 10 ** (-4.0)


def test_pathloss_at_ten_metres_high_precision():
    mpmath.mp.dps = 40
    ref = mpmath.mpf(10) ** (mpmath.mpf("-61") / 10) * (mpmath.mpf(1) / 10) ** 2
    assert pathloss_linear(10.0, PARAMS) == pytest.approx(float(ref), rel=1e-13)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_pathloss_domain(d):
    with pytest.raises(ValueError):
        pathloss_linear(d, PARAMS)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4), st.floats(0.1, 4.0))
def test_pathloss_decreasing(d1, d2, sigma):
    p = ChannelParams(pathloss_exponent=sigma)
    lo, hi = sorted((d1, d2))
    if hi > lo * (1 + 1e-9):
        assert pathloss_linear(lo, p) > pathloss_linear(hi, p)


def test_broadside_is_all_ones():
    ula = ArrayGeometry.ula(6, LAM / 2)
    # y axis is orthogonal to an x-axis ULA
    a = steering_from_direction(ula, [0.0, 1.0, 0.0], LAM)
    assert np.allclose(a, 1.0, atol=1e-12)
    upa = ArrayGeometry.upa(3, 4, LAM / 2)
    assert np.allclose(steering_vector(upa, math.pi / 2, 0.0, LAM), 1.0, atol=1e-12)


def test_single_element_is_one():
    g = ArrayGeometry.ula(1, LAM / 2)
    assert np.allclose(steering_vector(g, 0.7, -0.3, LAM), [1.0])


def test_two_element_endfire():
    g = ArrayGeometry.ula(2, LAM / 2)
    a = steering_vector(g, 0.0, 0.0, LAM)
    assert np.allclose(a, [1.0, np.exp(1j * math.pi)], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-math.pi / 2, math.pi / 2),
       st.integers(1, 5), st.integers(1, 5))
def test_unit_modulus_and_conjugate_symmetry(az, el, nx, nz):
    g = ArrayGeometry.upa(nx, nz, LAM / 2)
    u = direction(az, el)
    a = steering_from_direction(g, u, LAM)
    assert np.all(np.abs(np.abs(a) - 1.0) < 1e-12)
    assert np.allclose(steering_from_direction(g, -u, LAM), a.conj(), atol=1e-12)


def test_upa_flattening_order():
    g = ArrayGeometry.upa(3, 2, 0.1)
    off = g.element_offsets()
    assert g.size == 6 and off.shape == (6, 3)
    # x runs fastest, z slowest; the array sits in the xz-plane
    assert np.allclose(off[:3, 0], [0.0, 0.1, 0.2]) and np.allclose(off[3:, 2], 0.1)
    assert np.allclose(off[:, 1], 0.0)


@pytest.mark.parametrize("kwargs", [dict(kind="ula-x", counts=(0,), element_spacing=0.1),
                                    dict(kind="upa-xz", counts=(2, 2), element_spacing=0.0),
                                    dict(kind="ring", counts=(2,), element_spacing=0.1)])
def test_geometry_validation(kwargs):
    with pytest.raises((ValueError, ConfigError)):
        ArrayGeometry(**kwargs)


def _pair():
    tx = ArrayGeometry.ula(4, LAM / 2, (0.0, 20.0, 4.0))
    rx = ArrayGeometry.upa(3, 3, LAM / 2, (0.0, 0.0, 4.0))
    return tx, rx


def test_los_limit():
    tx, rx = _pair()
    h = rician_channel(tx, rx, 300.0, 2e-7, np.random.default_rng(1), LAM)
    expected = math.sqrt(2e-7) * los_matrix(tx, rx, LAM)
    assert np.allclose(h, expected, rtol=1e-12, atol=1e-20)
    assert los_matrix(tx, rx, LAM).shape == (9, 4)


def test_nlos_moments():
    tx = ArrayGeometry.ula(2, LAM / 2)
    rx = ArrayGeometry.ula(2, LAM / 2, (5.0, 0.0, 0.0))
    rng = np.random.default_rng(7)
    gain = 3.0
    draws = np.stack([rician_channel(tx, rx, -300.0, gain, rng, LAM) for _ in range(10_000)])
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(gain, rel=0.05)
    assert abs(draws.mean()) < 0.05 * math.sqrt(gain)


@pytest.mark.parametrize("k_db", [-10.0, 0.0, 10.0])
def test_average_power_equals_gain(k_db):
    tx, rx = _pair()
    rng = np.random.default_rng(3)
    draws = np.stack([rician_channel(tx, rx, k_db, 0.5, rng, LAM) for _ in range(10_000)])
    per_entry = np.mean(np.sum(np.abs(draws) ** 2, axis=(1, 2))) / (tx.size * rx.size)
    assert per_entry == pytest.approx(0.5, rel=0.05)


def test_rician_deterministic_and_gain_checked():
    tx, rx = _pair()
    a = rician_channel(tx, rx, 10.0, 1.0, np.random.default_rng(5), LAM)
    b = rician_channel(tx, rx, 10.0, 1.0, np.random.default_rng(5), LAM)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        rician_channel(tx, rx, 10.0, 0.0, np.random.default_rng(5), LAM)


def test_channel_set_shapes():
    cfg = desk_config(users=2, ris_nx=2, ris_nz=2, m_antennas=2)
    ch = generate_channel_set(cfg, np.random.default_rng(0))
    assert ch.G.shape == (4, 2) and ch.h.shape == (2, 4) and ch.h_d.shape == (2, 2)
    assert ch.ue_positions.shape == (2, 3)
    assert (ch.n_elements, ch.n_antennas, ch.n_users) == (4, 2, 2)


def test_channel_set_deterministic():
    cfg = desk_config()
    a = generate_channel_set(cfg, np.random.default_rng(11))
    b = generate_channel_set(cfg, np.random.default_rng(11))
    for name in ("G", "h", "h_d", "ue_positions"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_full_blockage_kills_direct_link():
    cfg = desk_config(direct_extra_loss_db=300.0)
    ch = generate_channel_set(cfg, np.random.default_rng(0))
    assert np.max(np.abs(ch.h_d)) < 1e-15
    assert np.max(np.abs(ch.h)) > 1e-6


def test_direct_link_independent_of_ris_size():
    small = generate_channel_set(desk_config(ris_nx=2, ris_nz=2), np.random.default_rng(4))
    big = generate_channel_set(desk_config(ris_nx=16, ris_nz=16), np.random.default_rng(4))
    assert np.array_equal(small.h_d, big.h_d)
    assert np.array_equal(small.ue_positions, big.ue_positions)


def test_ue_positions_inside_region():
    region = (-5, 5, 5, 15, 1.5, 1.5)
    pos = draw_ue_positions(region, 200, np.random.default_rng(2))
    assert np.all(pos[:, 0] >= -5) and np.all(pos[:, 0] <= 5)
    assert np.all(pos[:, 1] >= 5) and np.all(pos[:, 1] <= 15)
    assert np.all(pos[:, 2] == 1.5)
    with pytest.raises(ConfigError):
        draw_ue_positions((1, 0, 0, 1, 0, 1), 2, np.random.default_rng(2))


def test_channel_set_validation():
    with pytest.raises(ValueError):
        ChannelSet(G=np.ones((3, 2)), h=np.ones((2, 4)), h_d=np.ones((2, 2)))
    with pytest.raises(ValueError):
        ChannelSet(G=np.ones((3, 2)), h=np.ones((2, 3)), h_d=np.ones((2, 3)))
    with pytest.raises(ValueError):
        ChannelSet(G=np.full((1, 1), np.nan), h=np.ones((1, 1)), h_d=np.ones((1, 1)))
    ch = ChannelSet(G=np.ones((1, 1)), h=np.ones((1, 1)), h_d=np.ones((1, 1)))
    with pytest.raises(ValueError):
        ch.G[0, 0] = 2.0


@pytest.mark.parametrize("kwargs", [dict(pathloss_exponent=-1.0), dict(d0=0.0),
                                    dict(rician_bs_ris=math.inf), dict(direct_extra_loss_db=-1.0),
                                    dict(carrier_frequency=0.0)])
def test_channel_params_validation(kwargs):
    with pytest.raises(ConfigError):
        ChannelParams(**kwargs)
