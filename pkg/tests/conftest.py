"""Shared fixtures: reference and reduced-size geometries."""

from __future__ import annotations

import numpy as np
import pytest

import passense as ps


def reference_geometry(**overrides) -> ps.SystemGeometry:
    """Full-scale defaults: 5 waveguide/cable pairs, 4 PAs, 30 m, 376 slots."""
    params = dict(
        carrier_frequency=15e9,
        n_waveguides=5,
        n_pas_per_waveguide=4,
        waveguide_length=30.0,
        min_pa_spacing=0.3,
        slot_spacing=0.08,
        tx_y=5.0 * np.arange(1, 6) - 0.5,
        rx_y=5.0 * np.arange(1, 6) + 0.5,
        tx_z=3.0,
        rx_z=3.0,
        refractive_index_tx=1.4,
        refractive_index_rx=1.1,
        noise_power=1e-11,
    )
    params.update(overrides)
    return ps.SystemGeometry(**params)


def small_geometry(
    n_waveguides: int = 2, n_pas: int = 2, **overrides
) -> ps.SystemGeometry:
    """Reduced geometry (3 m guides, 61 slots) for oracle-heavy tests."""
    params = dict(
        carrier_frequency=15e9,
        n_waveguides=n_waveguides,
        n_pas_per_waveguide=n_pas,
        waveguide_length=3.0,
        min_pa_spacing=0.3,
        slot_spacing=0.05,
        tx_y=1.0 + 2.0 * np.arange(n_waveguides),
        rx_y=1.8 + 2.0 * np.arange(n_waveguides),
        tx_z=2.0,
        rx_z=2.0,
        refractive_index_tx=1.4,
        refractive_index_rx=1.1,
        noise_power=1e-9,
    )
    params.update(overrides)
    return ps.SystemGeometry(**params)


def random_scene(
    rng: np.random.Generator,
    n_targets: int,
    x_range=(0.5, 5.0),
    y_range=(0.5, 5.0),
) -> ps.TargetScene:
    pts = rng.uniform(
        [x_range[0], y_range[0]], [x_range[1], y_range[1]], size=(n_targets, 2)
    )
    beta = np.exp(1j * rng.uniform(0, 2 * np.pi, n_targets)) * rng.uniform(
        0.5, 1.5, n_targets
    )
    return ps.TargetScene(pts, beta)


def random_layout(
    rng: np.random.Generator, geometry: ps.SystemGeometry
) -> ps.PinchingLayout:
    from passense.optimize import project_to_feasible

    raw = rng.uniform(
        0.0,
        geometry.waveguide_length,
        size=(geometry.n_waveguides, geometry.n_pas_per_waveguide),
    )
    return project_to_feasible(raw, geometry)


@pytest.fixture
def paper_geometry() -> ps.SystemGeometry:
    return reference_geometry()


@pytest.fixture
def paper_power() -> ps.PowerModel:
    return ps.PowerModel.equal(4)


@pytest.fixture
def two_target_scene() -> ps.TargetScene:
    return ps.TargetScene(
        [[5.0, 7.5], [25.0, 12.5]], [1.0 + 0.0j, np.exp(0.7j)]
    )
