import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcris.channel import ChannelSet, random_channel_set
from lcris.sinr import (
    PhaseVector,
    Precoder,
    SinrReport,
    effective_channel,
    effective_user_channels,
    reflection_vector,
    sinr_from_effective,
    sinr_per_user,
)
from oracles import sinr_scalar


def _precoder(rng, m, k, power=None):
    w = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return Precoder(w, power if power is not None else float(np.sum(np.abs(w) ** 2)))


def test_reflection_vector_values():
    assert np.allclose(reflection_vector(PhaseVector(np.zeros(3))), 1.0)
    assert reflection_vector(PhaseVector([math.pi / 2]))[0] == pytest.approx(1j)
    v = reflection_vector(PhaseVector([math.pi, math.pi / 3]))
    assert np.allclose(v, [-1.0, 0.5 + 1j * math.sqrt(3) / 2], atol=1e-15)


@pytest.mark.parametrize("theta,ceiling", [([-0.1], 2 * math.pi), ([1.0], 0.5), ([0.1], 7.0)])
def test_phase_vector_validation(theta, ceiling):
    with pytest.raises(ValueError):
        PhaseVector(theta, ceiling)


def test_phase_vector_clipping_idempotent():
    p = PhaseVector.clipped([0.2, 5.0, 6.2], 5.785)
    assert np.allclose(p.theta, [0.2, 5.0, 5.785])
    assert np.array_equal(PhaseVector.clipped(p.theta, 5.785).theta, p.theta)


def test_precoder_budget():
    with pytest.raises(ValueError):
        Precoder(np.ones((2, 2)), 3.9)
    assert Precoder(np.ones((2, 2)), 4.0).power == pytest.approx(4.0)
    with pytest.raises(ValueError):
        Precoder(np.ones(2), 4.0)


def test_report_minimum():
    r = SinrReport(np.array([4.0, 10.0]))
    assert r.min_linear == 4.0 and r.min_db == pytest.approx(10 * math.log10(4.0))


def test_effective_channel_special_cases():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    ch = ChannelSet(G=g, h=np.ones((1, 3)), h_d=np.zeros((1, 2)))
    assert np.allclose(effective_channel(ch, 0), g)
    h = rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))
    ch = ChannelSet(G=np.eye(3), h=h, h_d=np.zeros((1, 3)))
    assert np.allclose(effective_channel(ch, 0), np.diag(h[0].conj()))
    with pytest.raises(IndexError):
        effective_channel(ch, 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
def test_theta_matrix_form(seed, n, m, k):
    """v^H H_k equals h_k^H diag(exp(-1j*theta)) G under the fixed convention."""
    rng = np.random.default_rng(seed)
    ch = random_channel_set(n, m, k, rng)
    theta = rng.uniform(0, 2 * math.pi, n)
    phases = PhaseVector(theta)
    f = effective_user_channels(ch, phases)
    v = reflection_vector(phases)
    theta_mat = np.diag(np.exp(-1j * theta))
    for i in range(k):
        vh_hk = v.conj() @ effective_channel(ch, i)
        literal = ch.h[i].conj() @ theta_mat @ ch.G
        assert np.allclose(vh_hk, literal, atol=1e-12)
        # rows of f are f_k with f_k^H = v^H H_k + h_d,k^H
        assert np.allclose(f[i].conj(), vh_hk + ch.h_d[i].conj(), atol=1e-12)


def test_single_user_phase_invariant_closed_form():
    g, h, p, s2 = 0.7, 1.3, 2.0, 0.1
    ch = ChannelSet(G=np.array([[g]]), h=np.array([[h]]), h_d=np.zeros((1, 1)))
    w = Precoder(np.array([[math.sqrt(p)]]), p)
    for th in (0.0, 1.0, 4.0):
        r = sinr_per_user(ch, w, PhaseVector([th]), s2)
        assert r.per_user[0] == pytest.approx(p * g * g * h * h / s2, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0, 2 * math.pi))
def test_column_rotation_invariance(seed, phi):
    rng = np.random.default_rng(seed)
    ch = random_channel_set(3, 2, 2, rng)
    w = _precoder(rng, 2, 2)
    phases = PhaseVector(rng.uniform(0, 2 * math.pi, 3))
    base = sinr_per_user(ch, w, phases, 0.3).per_user
    w2 = np.array(w.w)
    w2[:, 1] *= np.exp(1j * phi)
    rot = sinr_per_user(ch, Precoder(w2, w.power_budget), phases, 0.3).per_user
    assert np.allclose(base, rot, rtol=1e-12)


def test_orthogonal_channels_have_no_interference():
    f = np.array([[1.0 + 0j, 0.0], [0.0, 2.0 + 0j]])
    w = np.array([[0.5 + 0.5j, 0.0], [0.0, 1.0]])
    s = sinr_from_effective(f, w, 0.25)
    assert np.allclose(s, [abs(0.5 + 0.5j) ** 2 / 0.25, 4.0 / 0.25])
    assert np.allclose(s, sinr_scalar(f, w, 0.25))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 5), st.integers(1, 3), st.integers(1, 3))
def test_matches_scalar_evaluation(seed, n, m, k):
    rng = np.random.default_rng(seed)
    ch = random_channel_set(n, m, k, rng)
    w = _precoder(rng, m, k)
    phases = PhaseVector(rng.uniform(0, 2 * math.pi, n))
    fast = sinr_per_user(ch, w, phases, 0.5).per_user
    f = effective_user_channels(ch, phases)
    assert np.allclose(fast, sinr_scalar(f.tolist(), w.w.tolist(), 0.5), rtol=1e-10)


def test_power_scaling_interference_free_and_limited():
    rng = np.random.default_rng(4)
    f = np.array([[1.0 + 0j, 0.0], [0.0, 1.0 + 0j]])
    w = rng.standard_normal((2, 2)) * np.eye(2) + 0j
    assert np.all(sinr_from_effective(f, 2 * w, 1.0) > sinr_from_effective(f, w, 1.0))
    # with interference, SINR saturates at the signal/interference ratio
    f = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    w = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    gains = np.abs(f.conj() @ w) ** 2
    limit = np.diag(gains) / (gains.sum(1) - np.diag(gains))
    big = sinr_from_effective(f, 1e6 * w, 1.0)
    assert np.all(big <= limit) and np.allclose(big, limit, rtol=1e-9)


def test_no_ris_drops_reflected_path():
    rng = np.random.default_rng(1)
    ch = random_channel_set(4, 2, 2, rng)
    assert np.array_equal(effective_user_channels(ch, None), ch.h_d)


def test_dimension_mismatch():
    rng = np.random.default_rng(1)
    ch = random_channel_set(4, 2, 2, rng)
    with pytest.raises(ValueError):
        effective_user_channels(ch, PhaseVector(np.zeros(3)))
    with pytest.raises(ValueError):
        sinr_from_effective(np.ones((2, 2)), np.ones((3, 2)), 1.0)
    with pytest.raises(ValueError):
        sinr_from_effective(np.ones((2, 2)), np.ones((2, 2)), 0.0)
