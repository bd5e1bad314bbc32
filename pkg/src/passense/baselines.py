"""Reference designs: fixed uniform PA placement and a conventional UPA.

The uniform planar array (UPA) baseline reuses the generic Fisher engine
with identity feed networks: every element is its own transmit and receive
channel, so the folded matrices are the element gains themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fim, model
from .errors import ConfigurationError
from .fim import CrbEngine, CrbReport, WaveformSpec
from .model import PinchingLayout, SystemGeometry, TargetScene


def fixed_uniform_layout(geometry: SystemGeometry) -> PinchingLayout:
    """PAs evenly spread over ``[0, L]`` on every waveguide.

    A single PA sits at the waveguide midpoint.
    """
    m = geometry.n_pas_per_waveguide
    if m == 1:
        row = np.array([geometry.waveguide_length / 2.0])
    else:
        row = np.linspace(0.0, geometry.waveguide_length, m)
    positions = np.tile(row, (geometry.n_waveguides, 1))
    return PinchingLayout(positions).validate(geometry)


@dataclass(eq=False)
class UpaConfig:
    """Square uniform planar array facing the ground.

    ``n_x * n_y`` elements span an ``aperture x aperture`` square centered
    at ``center`` (x, y, z).  Each element is an independent transmit and
    receive channel at the same carrier as the system under study.
    """

    aperture: float
    n_x: int = 10
    n_y: int = 10
    center: tuple[float, float, float] = (15.0, 15.0, 3.0)
    carrier_frequency: float = 15e9

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ConfigurationError("need at least one element per axis")
        if self.aperture < 0:
            raise ConfigurationError("aperture must be nonnegative")
        if self.carrier_frequency <= 0:
            raise ConfigurationError("carrier_frequency must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def wavelength(self) -> float:
        return model.SPEED_OF_LIGHT / self.carrier_frequency

    def element_positions(self) -> np.ndarray:
        """3D element positions, shape ``(n_x * n_y, 3)``."""
        cx, cy, cz = self.center

        def axis(count: int, center_v: float) -> np.ndarray:
            if count == 1:
                return np.array([center_v])
            step = self.aperture / (count - 1)
            return center_v + (np.arange(count) - (count - 1) / 2.0) * step

        xs, ys = axis(self.n_x, cx), axis(self.n_y, cy)
        grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
        pts = np.empty((grid.shape[0], 3))
        pts[:, :2] = grid
        pts[:, 2] = cz
        return pts


def upa_engine(
    upa: UpaConfig, scene: TargetScene, noise_power: float, snapshots: int
) -> CrbEngine:
    """Fisher engine of the UPA baseline (identity feeds, one channel per element)."""
    pts = upa.element_positions()
    gains = model.spherical_gains(
        upa.wavelength, model.point_target_distances(pts, scene.positions)
    )
    derivs = fim.spherical_gain_derivatives(upa.wavelength, pts, scene.positions)
    p, k, _ = derivs.shape
    derivs = derivs.reshape(p, 2 * k)
    return CrbEngine(
        rx=fim.rx_grams(gains, derivs, None),
        tx_plain=gains,
        tx_deriv=derivs,
        reflections=scene.reflections,
        noise_power=noise_power,
        snapshots=snapshots,
    )


def upa_crb(
    upa: UpaConfig, scene: TargetScene, waveform: WaveformSpec, noise_power: float
) -> CrbReport:
    """Position CRB report of the UPA baseline under a given waveform."""
    if waveform.covariance.shape != (upa.n_elements,) * 2:
        raise ConfigurationError("waveform covariance must be n_elements square")
    engine = upa_engine(upa, scene, noise_power, waveform.snapshots)
    return engine.report(waveform.covariance)
