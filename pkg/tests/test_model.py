"""Propagation model tests against hand-computed and high-precision oracles."""

import cmath
import math

import numpy as np
import pytest

import passense as ps
from passense.errors import (
    CoincidentTargetError,
    ConfigurationError,
)

from conftest import reference_geometry, small_geometry


def _layout_with_first_pa_at(geometry, x0: float) -> ps.PinchingLayout:
    row = np.array([x0, 10.0, 20.0, 30.0])
    positions = np.tile(
        np.array([0.0, 10.0, 20.0, 30.0]), (geometry.n_waveguides, 1)
    )
    positions[0] = row
    return ps.PinchingLayout(positions).validate(geometry)


# ----------------------------------------------------------------------
# geometry


def test_wavelength_and_pathloss_constant():
    g = reference_geometry()
    assert g.wavelength == 0.02
    assert abs(g.pathloss_factor - 0.02 / (4.0 * math.pi)) < 1e-18


def test_slot_layout():
    g = reference_geometry()
    assert g.n_slots_per_cable == 376
    x = g.slot_x
    assert x.shape == (376,)
    assert x[0] == 0.0
    assert abs(x[1] - 0.08) < 1e-15
    assert abs(x[-1] - 30.0) < 1e-9
    assert np.all(np.diff(x) > 0)


def test_slot_spacing_must_divide_length():
    with pytest.raises(ConfigurationError):
        reference_geometry(slot_spacing=0.07)


def test_geometry_scalar_broadcast_and_validation():
    g = small_geometry(n_waveguides=3, tx_y=1.0, rx_y=2.0)
    assert np.array_equal(g.tx_y, [1.0, 1.0, 1.0])
    assert np.array_equal(g.rx_y, [2.0, 2.0, 2.0])
    with pytest.raises(ConfigurationError):
        reference_geometry(tx_y=[1.0, 2.0])
    with pytest.raises(ConfigurationError):
        reference_geometry(carrier_frequency=-1.0)
    with pytest.raises(ConfigurationError):
        reference_geometry(noise_power=-1e-12)


# ----------------------------------------------------------------------
# ranges


def test_tx_distance_hand_values():
    g = reference_geometry()
    layout = _layout_with_first_pa_at(g, 3.0)
    # dx = 0, dy = 4.5 - 7.5, dz = 3 from PA (3, 4.5, 3) to target (3, 7.5)
    scene = ps.TargetScene([[3.0, 7.5]], [1.0])
    assert ps.tx_distance(g, layout, scene, 0, 0, 0) == math.sqrt(18.0)
    # target directly below the PA
    below = ps.TargetScene([[3.0, 4.5]], [1.0])
    assert ps.tx_distance(g, layout, below, 0, 0, 0) == 3.0
    # generic case against scalar arithmetic
    generic = ps.TargetScene([[7.25, 11.0]], [1.0])
    expected = math.sqrt((10.0 - 7.25) ** 2 + (4.5 - 11.0) ** 2 + 9.0)
    assert abs(ps.tx_distance(g, layout, generic, 0, 0, 1) - expected) < 1e-12


def test_rx_distance_hand_values():
    g = reference_geometry()
    # slot 0 of cable 0 sits at (0, 5.5, 3)
    scene = ps.TargetScene([[0.0, 5.5]], [1.0])
    assert ps.rx_distance(g, scene, 0, 0, 0) == 3.0
    # slot 100 sits at x = 100 * 0.08, 2e-15 away from 8.0; the range to a
    # target at (8, 5.5) still comes out exactly 3 because the squared
    # x mismatch vanishes below double precision
    scene8 = ps.TargetScene([[8.0, 5.5]], [1.0])
    assert ps.rx_distance(g, scene8, 0, 0, 100) == 3.0
    generic = ps.TargetScene([[2.0, 9.0]], [1.0])
    expected = math.sqrt((0.08 * 25 - 2.0) ** 2 + (5.5 - 9.0) ** 2 + 9.0)
    assert abs(ps.rx_distance(g, generic, 0, 0, 25) - expected) < 1e-12


def test_index_bounds():
    g = reference_geometry()
    layout = _layout_with_first_pa_at(g, 3.0)
    scene = ps.TargetScene([[3.0, 7.5]], [1.0])
    with pytest.raises(IndexError):
        ps.tx_distance(g, layout, scene, 1, 0, 0)
    with pytest.raises(IndexError):
        ps.tx_distance(g, layout, scene, 0, 5, 0)
    with pytest.raises(IndexError):
        ps.rx_distance(g, scene, 0, 0, 376)


# ----------------------------------------------------------------------
# spherical gains


def test_spherical_gain_magnitude_and_integer_cycle_phase():
    g = reference_geometry()
    eta = g.pathloss_factor
    # r = 3 m is an exact multiple of the 0.02 m wavelength: 150 cycles
    gain = ps.spherical_gains(g.wavelength, np.array(3.0))
    assert abs(abs(gain) - eta / 3.0) < 1e-15 * eta
    assert gain.real > 0
    assert abs(gain.imag) < 1e-12 * abs(gain)
    r = math.sqrt(18.0)
    gain = ps.spherical_gains(g.wavelength, np.array(r))
    assert abs(abs(gain) - eta / r) < 1e-14 * eta


def test_spherical_gain_high_precision_oracle():
    mp = pytest.importorskip("mpmath").mp
    mp.dps = 50
    wavelength = 0.02
    for r in (1.0, math.sqrt(18.0), 7.3, 19.999, 41.25):
        lib = complex(ps.spherical_gains(wavelength, np.array(r)))
        lam = mp.mpf(wavelength)
        rr = mp.mpf(r)
        oracle = lam / (4 * mp.pi) * mp.e ** (-2j * mp.pi * rr / lam) / rr
        err = abs(mp.mpc(lib.real, lib.imag) - oracle) / abs(oracle)
        # the attainable accuracy is set by rounding the phase argument,
        # about one ulp of 2 pi r / lam
        phase = 2 * math.pi * r / wavelength
        assert err < max(1e-12, 4 * np.spacing(phase))


def test_spherical_gain_zero_range_raises():
    with pytest.raises(CoincidentTargetError):
        ps.spherical_gains(0.02, np.array([1.0, 0.0]))


def test_steering_vectors_match_elementwise_ranges():
    g = reference_geometry()
    layout = _layout_with_first_pa_at(g, 3.0)
    scene = ps.TargetScene([[7.0, 11.0], [20.0, 3.0]], [1.0, 1.0j])
    eta = g.pathloss_factor
    for k in range(2):
        for n in (0, 3):
            tx = ps.tx_steering(g, layout, scene, k, n)
            for m in range(4):
                r = ps.tx_distance(g, layout, scene, k, n, m)
                expected = eta * cmath.exp(-2j * math.pi * r / 0.02) / r
                assert abs(tx[m] - expected) < 1e-12 * abs(expected)
            rx = ps.rx_steering(g, scene, k, n)
            for m in (0, 100, 375):
                r = ps.rx_distance(g, scene, k, n, m)
                expected = eta * cmath.exp(-2j * math.pi * r / 0.02) / r
                assert abs(rx[m] - expected) < 1e-12 * abs(expected)


# ----------------------------------------------------------------------
# feed networks


def test_in_waveguide_vector_guided_phase():
    g = reference_geometry()
    power = ps.PowerModel.equal(4)
    layout = _layout_with_first_pa_at(g, 3.0)
    vec = ps.in_waveguide_vector(g, power, layout, 0)
    # n_t * x / lam = 1.4 * 3 / 0.02 = 210 full cycles: real positive
    assert abs(vec[0].real - math.sqrt(0.225)) < 1e-12
    assert abs(vec[0].imag) < 1e-11
    # generic element against scalar arithmetic
    expected = math.sqrt(0.225) * cmath.exp(-2j * math.pi * 1.4 * 10.0 / 0.02)
    assert abs(vec[1] - expected) < 1e-10 * abs(expected)
    assert np.allclose(np.abs(vec), math.sqrt(0.225), rtol=1e-12)


def test_in_waveguide_vector_size_mismatch():
    g = reference_geometry()
    layout = _layout_with_first_pa_at(g, 3.0)
    with pytest.raises(ConfigurationError):
        ps.in_waveguide_vector(g, ps.PowerModel.equal(3), layout, 0)


def test_cable_feed_vector_unit_modulus_and_increment():
    g = reference_geometry()
    v = ps.cable_feed_vector(g)
    assert v.shape == (376,)
    assert v[0] == 1.0 + 0.0j
    assert np.allclose(np.abs(v), 1.0, rtol=0, atol=1e-13)
    # per-slot phase increment: n_r * d / lam = 1.1 * 0.08 / 0.02 = 4.4 cycles
    expected = cmath.exp(-2j * math.pi * 4.4)
    ratios = v[1:6] / v[:5]
    assert np.allclose(ratios, expected, rtol=0, atol=1e-10)


# ----------------------------------------------------------------------
# power models


def test_power_model_equal():
    pm = ps.PowerModel.equal(4)
    assert pm.kind == "equal"
    assert pm.n_pas == 4
    assert np.allclose(pm.alphas, math.sqrt(0.225), rtol=1e-15)
    total = float(np.sum(pm.alphas**2))
    assert abs(total - 0.9) < 1e-12


def test_power_model_proportional():
    pm = ps.PowerModel.proportional(4)
    eps = 1.0 - 0.1 ** (1.0 / 4.0)
    shares = pm.alphas**2
    assert abs(shares[0] - eps) < 1e-12
    # constant radiation fraction of the power reaching each PA
    ratios = shares[1:] / shares[:-1]
    assert np.allclose(ratios, 1.0 - eps, rtol=1e-12)
    assert np.all(np.diff(pm.alphas) < 0)
    assert abs(float(shares.sum()) - 0.9) < 1e-12


def test_power_model_validation():
    with pytest.raises(ConfigurationError):
        ps.PowerModel("equal", [0.5, 0.5], 0.9)
    with pytest.raises(ConfigurationError):
        ps.PowerModel("bogus", [math.sqrt(0.9)], 0.9)
    with pytest.raises(ConfigurationError):
        ps.PowerModel.equal(4, radiated_fraction=0.0)
    with pytest.raises(ConfigurationError):
        ps.PowerModel.equal(4, radiated_fraction=1.5)


# ----------------------------------------------------------------------
# assembly


def test_assemble_tx_block_structure():
    g = reference_geometry()
    power = ps.PowerModel.equal(4)
    layout = _layout_with_first_pa_at(g, 3.0)
    scene = ps.TargetScene([[5.0, 7.5], [25.0, 12.5]], [1.0, 1.0j])
    tx_gain, tx_feed = ps.assemble_tx(g, power, layout, scene)
    assert tx_gain.shape == (20, 2)
    assert tx_feed.shape == (20, 5)
    for i in range(5):
        block = tx_feed[4 * i : 4 * (i + 1)]
        off = np.delete(block, i, axis=1)
        assert np.all(off == 0.0)
        assert np.array_equal(
            block[:, i], ps.in_waveguide_vector(g, power, layout, i)
        )
    for k in range(2):
        for n in range(5):
            assert np.array_equal(
                tx_gain[4 * n : 4 * (n + 1), k],
                ps.tx_steering(g, layout, scene, k, n),
            )


def test_assemble_rx_structure():
    g = reference_geometry()
    scene = ps.TargetScene([[5.0, 7.5]], [1.0])
    rx_gain, rx_feed = ps.assemble_rx(g, scene)
    m = g.n_slots_per_cable
    assert rx_gain.shape == (5 * m, 1)
    assert rx_feed.shape == (5 * m, 5)
    v = ps.cable_feed_vector(g)
    for i in range(5):
        block = rx_feed[m * i : m * (i + 1)]
        off = np.delete(block, i, axis=1)
        assert np.all(off == 0.0)
        assert np.array_equal(block[:, i], v)
        assert np.array_equal(
            rx_gain[m * i : m * (i + 1), 0], ps.rx_steering(g, scene, 0, i)
        )
    # every cable folds its own slots: the feed Gram is M_r times identity
    gram = rx_feed.conj().T @ rx_feed
    assert np.allclose(gram, m * np.eye(5), rtol=1e-12, atol=1e-9 * m)


def test_mean_channel_against_scalar_loop():
    g = small_geometry(n_waveguides=2, n_pas=2)
    power = ps.PowerModel.proportional(2)
    layout = ps.PinchingLayout([[0.4, 1.9], [1.1, 2.6]]).validate(g)
    scene = ps.TargetScene(
        [[0.9, 1.4], [2.2, 2.9]], [0.8 + 0.1j, cmath.exp(2.1j)]
    )
    lam = g.wavelength
    eta = lam / (4.0 * math.pi)
    mr = g.n_slots_per_cable
    mean = ps.mean_channel(g, power, layout, scene)
    assert mean.shape == (2, 2)

    def gain(px, py, pz, tx, ty):
        r = math.sqrt((px - tx) ** 2 + (py - ty) ** 2 + pz * pz)
        return eta * cmath.exp(-2j * math.pi * r / lam) / r

    for p in range(2):
        for q in range(2):
            total = 0.0 + 0.0j
            for k in range(scene.n_targets):
                tx, ty = scene.positions[k]
                rx_sum = sum(
                    cmath.exp(-2j * math.pi * 1.1 * (m * 0.05) / lam)
                    * gain(m * 0.05, g.rx_y[p], g.rx_z[p], tx, ty)
                    for m in range(mr)
                )
                tx_sum = sum(
                    power.alphas[m]
                    * cmath.exp(
                        -2j * math.pi * 1.4 * layout.positions[q, m] / lam
                    )
                    * gain(layout.positions[q, m], g.tx_y[q], g.tx_z[q], tx, ty)
                    for m in range(2)
                )
                total += rx_sum * scene.reflections[k] * tx_sum
            assert abs(mean[p, q] - total) < 1e-12 * abs(total)


def test_mean_channel_single_waveguide_shape():
    g = small_geometry(n_waveguides=1, n_pas=2)
    power = ps.PowerModel.equal(2)
    layout = ps.PinchingLayout([[0.5, 2.0]]).validate(g)
    scene = ps.TargetScene([[1.0, 1.5]], [1.0])
    mean = ps.mean_channel(g, power, layout, scene)
    assert mean.shape == (1, 1)
    assert np.isfinite(mean).all()


# ----------------------------------------------------------------------
# echo simulation


def test_simulate_echo_noise_free_superposition():
    g = small_geometry(noise_power=0.0)
    power = ps.PowerModel.equal(2)
    layout = ps.PinchingLayout([[0.4, 1.9], [1.1, 2.6]]).validate(g)
    scene = ps.TargetScene([[0.9, 1.4]], [0.7 - 0.2j])
    rng = np.random.default_rng(3)
    s1 = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    s2 = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    echo1 = ps.simulate_echo(g, power, layout, scene, s1)
    echo2 = ps.simulate_echo(g, power, layout, scene, s2)
    both = ps.simulate_echo(g, power, layout, scene, s1 + s2)
    mean = ps.mean_channel(g, power, layout, scene)
    assert np.allclose(echo1, mean @ s1, rtol=0, atol=1e-18)
    scale = np.abs(both).max()
    assert np.allclose(both, echo1 + echo2, rtol=0, atol=1e-10 * scale)


def test_simulate_echo_zero_reflection_is_noise_only():
    g = small_geometry()
    power = ps.PowerModel.equal(2)
    layout = ps.PinchingLayout([[0.4, 1.9], [1.1, 2.6]]).validate(g)
    scene = ps.TargetScene([[0.9, 1.4]], [0.0])
    s = np.ones((2, 4), dtype=complex)
    echo = ps.simulate_echo(g, power, layout, scene, s, noise_seed=0)
    expected = ps.simulate_echo(
        g, power, layout, scene, np.zeros_like(s), noise_seed=0
    )
    assert np.array_equal(echo, expected)


def test_simulate_echo_noise_statistics():
    g = small_geometry(noise_power=4e-9)
    power = ps.PowerModel.equal(2)
    layout = ps.PinchingLayout([[0.4, 1.9], [1.1, 2.6]]).validate(g)
    scene = ps.TargetScene([[0.9, 1.4]], [0.0])
    t = 100_000
    echo = ps.simulate_echo(
        g, power, layout, scene, np.zeros((2, t)), noise_seed=11
    )
    var = float(np.mean(np.abs(echo) ** 2))
    assert abs(var - 4e-9) < 0.02 * 4e-9
    # independent real and imaginary parts of equal power
    assert abs(np.mean(echo.real * echo.imag)) < 5e-3 * 4e-9


def test_simulate_echo_determinism_and_shape_check():
    g = small_geometry()
    power = ps.PowerModel.equal(2)
    layout = ps.PinchingLayout([[0.4, 1.9], [1.1, 2.6]]).validate(g)
    scene = ps.TargetScene([[0.9, 1.4]], [1.0])
    s = np.ones((2, 5), dtype=complex)
    a = ps.simulate_echo(g, power, layout, scene, s, noise_seed=7)
    b = ps.simulate_echo(g, power, layout, scene, s, noise_seed=7)
    c = ps.simulate_echo(g, power, layout, scene, s, noise_seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ConfigurationError):
        ps.simulate_echo(g, power, layout, scene, np.ones((3, 5)))


# ----------------------------------------------------------------------
# container validation


def test_scene_validation():
    with pytest.raises(ConfigurationError):
        ps.TargetScene([[1.0, 2.0, 3.0]], [1.0])
    with pytest.raises(ConfigurationError):
        ps.TargetScene([[1.0, 2.0]], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        ps.TargetScene([[np.nan, 2.0]], [1.0])
    scene = ps.TargetScene([1.0, 2.0], 1.0 + 0j)
    assert scene.positions.shape == (1, 2)
    assert scene.n_targets == 1


def test_layout_validation():
    g = reference_geometry()
    with pytest.raises(ConfigurationError):
        ps.PinchingLayout(np.zeros((4, 4))).validate(g)
    with pytest.raises(ConfigurationError):
        ps.PinchingLayout(np.tile([0.0, 0.1, 10.0, 20.0], (5, 1))).validate(g)
    with pytest.raises(ConfigurationError):
        ps.PinchingLayout(np.tile([0.0, 10.0, 20.0, 30.5], (5, 1))).validate(g)
    # spacing exactly on the boundary is feasible
    row = np.array([0.0, 0.3, 0.6, 0.9])
    ps.PinchingLayout(np.tile(row, (5, 1))).validate(g)
