"""Propagation model for pinching-antenna transmission with leaky-cable reception.

Transmit side: ``N`` dielectric waveguides run parallel to the x axis at
height ``z_t``, each feeding ``M_t`` movable pinching antennas (PAs).  The
guided wave accumulates phase at the waveguide's effective refractive index
before radiating from each PA, and every PA then acts as a spherical-wave
point source toward the ground targets.

Receive side: ``N`` leaky coaxial cables, also parallel to the x axis, each
with ``M_r`` uniformly spaced slots.  Each slot picks up the echo as a point
receiver and couples it into the cable, where it accumulates in-cable phase
toward the single feed port of that cable.

Conventions
-----------
* All quantities are SI (meters, watts, hertz); complex values rectangular.
* Targets live on the ground plane ``z = 0``; arrays of target coordinates
  have shape ``(K, 2)`` holding ``(x, y)``.
* A free-space path of length ``r`` contributes ``eta * exp(-2j*pi*r/lam) / r``
  with ``eta = lam / (4*pi)``, i.e. amplitude path loss of a spherical wave.
* A guided path of length ``x`` at refractive index ``n`` contributes
  ``exp(-2j*pi*n*x/lam)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentTargetError, ConfigurationError

# Engineering value: keeps lambda = c/f an exact 0.02 m at 15 GHz.
SPEED_OF_LIGHT = 3.0e8

# Relative slack applied when checking float equalities and orderings.
FLOAT_SLACK = 1e-12

# Relative tolerance for deciding whether the slot spacing divides the
# cable length an integer number of times.
SLOT_COUNT_TOLERANCE = 1e-9


def _as_1d(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigurationError(f"{name} must be a scalar or length-{n} vector")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    return arr


@dataclass(eq=False)
class SystemGeometry:
    """Static geometry and radio constants of one deployment.

    Parameters
    ----------
    carrier_frequency:
        Carrier in Hz.
    n_waveguides:
        Number of transmit waveguides, which equals the number of receive
        cables.
    n_pas_per_waveguide:
        Pinching antennas per waveguide.
    waveguide_length:
        Usable length of each waveguide and cable, meters.  PA positions and
        slots live in ``[0, waveguide_length]``.
    min_pa_spacing:
        Minimum center-to-center spacing between neighbouring PAs on one
        waveguide.
    slot_spacing:
        Spacing of the leaky-cable slots.  Must divide ``waveguide_length``
        (within ``SLOT_COUNT_TOLERANCE`` relative), giving
        ``round(L/d) + 1`` slots per cable.
    tx_y, rx_y:
        y coordinate of each waveguide / cable (scalar or length-N).
    tx_z, rx_z:
        Height of each waveguide / cable (scalar or length-N).
    refractive_index_tx, refractive_index_rx:
        Effective refractive indices of the guided transmit wave and of the
        in-cable receive wave.
    noise_power:
        Receiver noise power per cable port, watts.
    """

    carrier_frequency: float
    n_waveguides: int
    n_pas_per_waveguide: int
    waveguide_length: float
    min_pa_spacing: float
    slot_spacing: float
    tx_y: np.ndarray
    rx_y: np.ndarray
    tx_z: np.ndarray = 3.0
    rx_z: np.ndarray = 3.0
    refractive_index_tx: float = 1.4
    refractive_index_rx: float = 1.1
    noise_power: float = 1e-11

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise ConfigurationError("carrier_frequency must be positive")
        if self.n_waveguides < 1 or self.n_pas_per_waveguide < 1:
            raise ConfigurationError("need at least one waveguide and one PA")
        if self.waveguide_length <= 0:
            raise ConfigurationError("waveguide_length must be positive")
        if self.min_pa_spacing < 0:
            raise ConfigurationError("min_pa_spacing must be nonnegative")
        if self.slot_spacing <= 0:
            raise ConfigurationError("slot_spacing must be positive")
        if self.noise_power < 0:
            raise ConfigurationError("noise_power must be nonnegative")
        if self.refractive_index_tx <= 0 or self.refractive_index_rx <= 0:
            raise ConfigurationError("refractive indices must be positive")
        n = self.n_waveguides
        self.tx_y = _as_1d(self.tx_y, n, "tx_y")
        self.rx_y = _as_1d(self.rx_y, n, "rx_y")
        self.tx_z = _as_1d(self.tx_z, n, "tx_z")
        self.rx_z = _as_1d(self.rx_z, n, "rx_z")
        ratio = self.waveguide_length / self.slot_spacing
        if abs(ratio - round(ratio)) > SLOT_COUNT_TOLERANCE * max(1.0, ratio):
            raise ConfigurationError(
                "slot_spacing must divide waveguide_length to an integer "
                f"slot count (got L/d = {ratio!r})"
            )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def pathloss_factor(self) -> float:
        """Spherical-wave amplitude constant ``lambda / (4 pi)``."""
        return self.wavelength / (4.0 * np.pi)

    @property
    def n_slots_per_cable(self) -> int:
        return int(round(self.waveguide_length / self.slot_spacing)) + 1

    @property
    def slot_x(self) -> np.ndarray:
        """x coordinates of the slots of one cable, shape ``(M_r,)``."""
        return np.arange(self.n_slots_per_cable) * self.slot_spacing


@dataclass(eq=False)
class TargetScene:
    """Ground targets and their complex reflection coefficients.

    ``positions`` has shape ``(K, 2)`` with ``(x, y)`` on the ground plane,
    ``reflections`` shape ``(K,)`` complex.
    """

    positions: np.ndarray
    reflections: np.ndarray

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.reflections = np.atleast_1d(np.asarray(self.reflections, dtype=complex))
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ConfigurationError("positions must have shape (K, 2)")
        k = self.positions.shape[0]
        if k < 1:
            raise ConfigurationError("need at least one target")
        if self.reflections.shape != (k,):
            raise ConfigurationError("reflections must have shape (K,)")
        if not np.all(np.isfinite(self.positions)):
            raise ConfigurationError("target positions must be finite")
        if not np.all(np.isfinite(self.reflections)):
            raise ConfigurationError("reflections must be finite")

    @property
    def n_targets(self) -> int:
        return self.positions.shape[0]


@dataclass(eq=False)
class PinchingLayout:
    """PA positions along the waveguides, shape ``(N, M_t)``.

    Row ``n`` holds the x positions of the PAs on waveguide ``n`` in
    nondecreasing order.  Use :meth:`validate` against a geometry to check
    bounds and spacing; constructors in this package always do.
    """

    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.positions.ndim != 2:
            raise ConfigurationError("positions must have shape (N, M_t)")
        if not np.all(np.isfinite(self.positions)):
            raise ConfigurationError("PA positions must be finite")

    def validate(self, geometry: SystemGeometry) -> "PinchingLayout":
        """Check shape, bounds and minimum spacing against ``geometry``.

        Orderings are checked with a small relative slack because projected
        layouts sit exactly on the constraint boundary in floating point.
        """
        n, m = geometry.n_waveguides, geometry.n_pas_per_waveguide
        if self.positions.shape != (n, m):
            raise ConfigurationError(
                f"layout shape {self.positions.shape} does not match ({n}, {m})"
            )
        length = geometry.waveguide_length
        slack = FLOAT_SLACK * max(1.0, length)
        x = self.positions
        if np.any(x < -slack) or np.any(x > length + slack):
            raise ConfigurationError("PA positions must lie in [0, L]")
        if m > 1:
            gaps = np.diff(x, axis=1)
            if np.any(gaps < geometry.min_pa_spacing - slack):
                raise ConfigurationError("adjacent PAs closer than min_pa_spacing")
        return self


@dataclass(eq=False)
class PowerModel:
    """Per-PA radiation amplitudes of one waveguide.

    ``alphas[m]`` is the real amplitude radiated by the m-th PA; the squared
    amplitudes sum to ``radiated_fraction`` of the guided power, the rest is
    carried past the last PA and absorbed.

    Two constructions are provided.  ``equal``: every PA radiates the same
    power.  ``proportional``: every PA radiates the same *fraction* of the
    power still guided when the wave reaches it, which makes the radiated
    power decay geometrically along the waveguide.
    """

    kind: str
    alphas: np.ndarray
    radiated_fraction: float = 0.9

    def __post_init__(self):
        self.alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        if self.kind not in ("equal", "proportional"):
            raise ConfigurationError(f"unknown power model kind {self.kind!r}")
        if self.alphas.ndim != 1 or self.alphas.size < 1:
            raise ConfigurationError("alphas must be a nonempty vector")
        if np.any(self.alphas <= 0):
            raise ConfigurationError("alphas must be positive")
        if not (0 < self.radiated_fraction <= 1):
            raise ConfigurationError("radiated_fraction must be in (0, 1]")
        total = float(np.sum(self.alphas**2))
        if abs(total - self.radiated_fraction) > FLOAT_SLACK * max(1.0, total):
            raise ConfigurationError(
                "sum of squared alphas must equal radiated_fraction "
                f"(got {total!r})"
            )

    @classmethod
    def equal(cls, n_pas: int, radiated_fraction: float = 0.9) -> "PowerModel":
        """All PAs radiate ``radiated_fraction / M_t`` of the guided power."""
        alphas = np.full(n_pas, np.sqrt(radiated_fraction / n_pas))
        return cls("equal", alphas, radiated_fraction)

    @classmethod
    def proportional(cls, n_pas: int, radiated_fraction: float = 0.9) -> "PowerModel":
        """Each PA radiates fraction ``eps`` of the power reaching it.

        ``eps = 1 - (1 - radiated_fraction)**(1/M_t)`` makes the total
        radiated share come out to ``radiated_fraction`` after M_t PAs:
        ``alpha_m**2 = eps * (1 - eps)**(m-1)``.
        """
        eps = 1.0 - (1.0 - radiated_fraction) ** (1.0 / n_pas)
        shares = eps * (1.0 - eps) ** np.arange(n_pas)
        return cls("proportional", np.sqrt(shares), radiated_fraction)

    @property
    def n_pas(self) -> int:
        return self.alphas.size


@dataclass(eq=False)
class PropagationMatrices:
    """Assembled propagation operators of one (geometry, layout, scene).

    ``tx_gain``
        ``(N*M_t, K)`` spherical-wave gains PA -> target; column k stacks the
        per-waveguide blocks.
    ``tx_feed``
        ``(N*M_t, N)`` block-diagonal in-waveguide feed: column n holds the
        guided phases and radiation amplitudes of waveguide n's PAs.
    ``rx_gain``
        ``(N*M_r, K)`` spherical-wave gains target -> slot.
    ``rx_feed``
        ``(N*M_r, N)`` block-diagonal in-cable feed toward each cable port.
    """

    tx_gain: np.ndarray
    tx_feed: np.ndarray
    rx_gain: np.ndarray
    rx_feed: np.ndarray


# ----------------------------------------------------------------------
# element positions and ranges


def tx_points(geometry: SystemGeometry, layout: PinchingLayout) -> np.ndarray:
    """3D PA positions, shape ``(N, M_t, 3)``."""
    n, m = geometry.n_waveguides, geometry.n_pas_per_waveguide
    pts = np.empty((n, m, 3))
    pts[:, :, 0] = layout.positions
    pts[:, :, 1] = geometry.tx_y[:, None]
    pts[:, :, 2] = geometry.tx_z[:, None]
    return pts


def slot_points(geometry: SystemGeometry) -> np.ndarray:
    """3D slot positions, shape ``(N, M_r, 3)``."""
    n, m = geometry.n_waveguides, geometry.n_slots_per_cable
    pts = np.empty((n, m, 3))
    pts[:, :, 0] = geometry.slot_x[None, :]
    pts[:, :, 1] = geometry.rx_y[:, None]
    pts[:, :, 2] = geometry.rx_z[:, None]
    return pts


def point_target_distances(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Euclidean ranges from 3D ``points (..., 3)`` to ground ``targets (K, 2)``.

    Returns shape ``points.shape[:-1] + (K,)``.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    dx = points[..., 0, None] - targets[:, 0]
    dy = points[..., 1, None] - targets[:, 1]
    dz = points[..., 2, None]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def _check_index(value: int, bound: int, name: str) -> int:
    value = int(value)
    if not 0 <= value < bound:
        raise IndexError(f"{name} must be in [0, {bound}), got {value}")
    return value


def tx_distance(
    geometry: SystemGeometry,
    layout: PinchingLayout,
    scene: TargetScene,
    k: int,
    n: int,
    m: int,
) -> float:
    """Range from PA ``m`` of waveguide ``n`` to target ``k``."""
    k = _check_index(k, scene.n_targets, "k")
    n = _check_index(n, geometry.n_waveguides, "n")
    m = _check_index(m, geometry.n_pas_per_waveguide, "m")
    point = np.array(
        [layout.positions[n, m], geometry.tx_y[n], geometry.tx_z[n]]
    )
    return float(point_target_distances(point, scene.positions[k])[0])


def rx_distance(
    geometry: SystemGeometry, scene: TargetScene, k: int, n: int, m: int
) -> float:
    """Range from target ``k`` to slot ``m`` of cable ``n``."""
    k = _check_index(k, scene.n_targets, "k")
    n = _check_index(n, geometry.n_waveguides, "n")
    m = _check_index(m, geometry.n_slots_per_cable, "m")
    point = np.array([geometry.slot_x[m], geometry.rx_y[n], geometry.rx_z[n]])
    return float(point_target_distances(point, scene.positions[k])[0])


# ----------------------------------------------------------------------
# spherical-wave gains and steering vectors


def spherical_gains(wavelength: float, distances: np.ndarray) -> np.ndarray:
    """Spherical-wave gains ``eta * exp(-2j pi r / lam) / r`` elementwise.

    Raises
    ------
    CoincidentTargetError
        If any range is zero.
    """
    r = np.asarray(distances, dtype=float)
    if np.any(r == 0.0):
        raise CoincidentTargetError("target coincides with an array element")
    eta = wavelength / (4.0 * np.pi)
    return eta * np.exp(-2j * np.pi * r / wavelength) / r


def tx_steering(
    geometry: SystemGeometry, layout: PinchingLayout, scene: TargetScene, k: int, n: int
) -> np.ndarray:
    """Free-space steering vector of waveguide ``n`` toward target ``k``, ``(M_t,)``."""
    k = _check_index(k, scene.n_targets, "k")
    n = _check_index(n, geometry.n_waveguides, "n")
    pts = tx_points(geometry, layout)[n]
    r = point_target_distances(pts, scene.positions[k : k + 1])[:, 0]
    return spherical_gains(geometry.wavelength, r)


def rx_steering(
    geometry: SystemGeometry, scene: TargetScene, k: int, n: int
) -> np.ndarray:
    """Echo steering vector of cable ``n`` from target ``k``, ``(M_r,)``."""
    k = _check_index(k, scene.n_targets, "k")
    n = _check_index(n, geometry.n_waveguides, "n")
    pts = slot_points(geometry)[n]
    r = point_target_distances(pts, scene.positions[k : k + 1])[:, 0]
    return spherical_gains(geometry.wavelength, r)


def in_waveguide_vector(
    geometry: SystemGeometry, power_model: PowerModel, layout: PinchingLayout, n: int
) -> np.ndarray:
    """Guided-wave feed of waveguide ``n``: ``alpha_m * exp(-2j pi n_t x_m / lam)``."""
    n = _check_index(n, geometry.n_waveguides, "n")
    if power_model.n_pas != geometry.n_pas_per_waveguide:
        raise ConfigurationError("power model size does not match geometry")
    x = layout.positions[n]
    phase = -2j * np.pi * geometry.refractive_index_tx * x / geometry.wavelength
    return power_model.alphas * np.exp(phase)


def cable_feed_vector(geometry: SystemGeometry) -> np.ndarray:
    """In-cable propagation from each slot to the cable port, ``(M_r,)``."""
    x = geometry.slot_x
    phase = -2j * np.pi * geometry.refractive_index_rx * x / geometry.wavelength
    return np.exp(phase)


# ----------------------------------------------------------------------
# full-system assembly


def assemble_tx(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked transmit operators ``(tx_gain (N*M_t, K), tx_feed (N*M_t, N))``.

    ``tx_feed`` is block diagonal: rows of waveguide n are zero outside
    column n, so the product ``tx_feed @ s`` feeds symbol ``s[n]`` only into
    the PAs of waveguide n.
    """
    layout.validate(geometry)
    if power_model.n_pas != geometry.n_pas_per_waveguide:
        raise ConfigurationError("power model size does not match geometry")
    n, m = geometry.n_waveguides, geometry.n_pas_per_waveguide
    pts = tx_points(geometry, layout)
    r = point_target_distances(pts, scene.positions)
    tx_gain = spherical_gains(geometry.wavelength, r).reshape(n * m, -1)
    tx_feed = np.zeros((n * m, n), dtype=complex)
    for i in range(n):
        tx_feed[i * m : (i + 1) * m, i] = in_waveguide_vector(
            geometry, power_model, layout, i
        )
    return tx_gain, tx_feed


def assemble_rx(
    geometry: SystemGeometry, scene: TargetScene
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked receive operators ``(rx_gain (N*M_r, K), rx_feed (N*M_r, N))``.

    ``rx_feed`` is the Kronecker product of the identity with one cable's
    feed vector: every cable applies the same slot-to-port phases.
    """
    n = geometry.n_waveguides
    pts = slot_points(geometry)
    r = point_target_distances(pts, scene.positions)
    rx_gain = spherical_gains(geometry.wavelength, r).reshape(
        n * geometry.n_slots_per_cable, -1
    )
    rx_feed = np.kron(np.eye(n), cable_feed_vector(geometry)[:, None])
    return rx_gain, rx_feed


def propagation_matrices(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
) -> PropagationMatrices:
    """Assemble all four propagation operators."""
    tx_gain, tx_feed = assemble_tx(geometry, power_model, layout, scene)
    rx_gain, rx_feed = assemble_rx(geometry, scene)
    return PropagationMatrices(tx_gain, tx_feed, rx_gain, rx_feed)


def mean_channel(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
) -> np.ndarray:
    """Noise-free port-to-port channel, shape ``(N, N)``.

    ``rx_feed^T rx_gain diag(reflections) tx_gain^T tx_feed``: waveguide
    inputs to cable-port outputs through every target.
    """
    mats = propagation_matrices(geometry, power_model, layout, scene)
    return (
        mats.rx_feed.T
        @ mats.rx_gain
        @ np.diag(scene.reflections)
        @ mats.tx_gain.T
        @ mats.tx_feed
    )


def simulate_echo(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
    waveform_samples: np.ndarray,
    noise_seed: int | None = None,
) -> np.ndarray:
    """Simulate the received port signals for given transmit samples.

    Parameters
    ----------
    waveform_samples:
        ``(N, T)`` complex symbols fed into the waveguides.
    noise_seed:
        Seed for the circular complex Gaussian noise of power
        ``geometry.noise_power`` per port; ``None`` draws nondeterministically.

    Returns
    -------
    ``(N, T)`` complex received samples.
    """
    s = np.asarray(waveform_samples, dtype=complex)
    if s.ndim != 2 or s.shape[0] != geometry.n_waveguides:
        raise ConfigurationError(
            f"waveform_samples must have shape (N, T), got {s.shape}"
        )
    mean = mean_channel(geometry, power_model, layout, scene) @ s
    if geometry.noise_power == 0.0:
        return mean
    rng = np.random.default_rng(noise_seed)
    scale = np.sqrt(geometry.noise_power / 2.0)
    noise = scale * (
        rng.standard_normal(mean.shape) + 1j * rng.standard_normal(mean.shape)
    )
    return mean + noise
