"""Fisher information and Cramer-Rao bounds for the multistatic sensing model.

The unknown parameter vector stacks, per target, the two ground coordinates,
then all reflection real parts, then all reflection imaginary parts:
``[x_1, y_1, ..., x_K, y_K, Re b_1..K, Im b_1..K]``.

Everything reduces to Hadamard products of two kinds of Grams:

* receive-side Grams of the port-folded echo steering matrix and its
  position derivatives (independent of the PA layout and of the waveform),
* transmit-side sandwiches ``C^H R* C'`` of port-folded transmit steering
  through the conjugate waveform covariance ``R*``.

The engine below is generic over the folded matrices, so the same code path
serves the pinching-antenna system and conventional fixed arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ConfigurationError, UnidentifiableSceneError
from .model import (
    PinchingLayout,
    PowerModel,
    SystemGeometry,
    TargetScene,
)

# Condition-number ceiling beyond which a Fisher block counts as singular.
CONDITION_LIMIT = 1e12


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


# ----------------------------------------------------------------------
# steering derivatives


def spherical_gain_derivatives(
    wavelength: float, points: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Derivatives of the spherical-wave gain w.r.t. target coordinates.

    For gain ``f = eta exp(-2j pi r / lam) / r`` with range ``r`` between a
    3D point ``p`` and ground target ``t``,

    ``df/dt_x = eta (p_x - t_x) (2j pi r / lam + 1) exp(-2j pi r / lam) / r^3``

    and likewise for y.  Returns shape ``points.shape[:-1] + (K, 2)`` with
    the x derivative at ``[..., 0]`` and the y derivative at ``[..., 1]``.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    r = model.point_target_distances(points, targets)
    if np.any(r == 0.0):
        raise model.CoincidentTargetError("target coincides with an array element")
    eta = wavelength / (4.0 * np.pi)
    phase = 2.0 * np.pi * r / wavelength
    common = eta * (1j * phase + 1.0) * np.exp(-1j * phase) / r**3
    kx = points[..., 0, None] - targets[:, 0]
    ky = points[..., 1, None] - targets[:, 1]
    return np.stack([kx * common, ky * common], axis=-1)


def tx_steering_derivative(
    geometry: SystemGeometry,
    layout: PinchingLayout,
    scene: TargetScene,
    k: int,
    n: int,
    axis: str,
) -> np.ndarray:
    """d(tx steering of waveguide n toward target k)/d(coordinate), ``(M_t,)``."""
    k = model._check_index(k, scene.n_targets, "k")
    n = model._check_index(n, geometry.n_waveguides, "n")
    ax = {"x": 0, "y": 1}.get(axis)
    if ax is None:
        raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")
    pts = model.tx_points(geometry, layout)[n]
    d = spherical_gain_derivatives(geometry.wavelength, pts, scene.positions[k : k + 1])
    return d[:, 0, ax]


def rx_steering_derivative(
    geometry: SystemGeometry, scene: TargetScene, k: int, n: int, axis: str
) -> np.ndarray:
    """d(echo steering of cable n from target k)/d(coordinate), ``(M_r,)``."""
    k = model._check_index(k, scene.n_targets, "k")
    n = model._check_index(n, geometry.n_waveguides, "n")
    ax = {"x": 0, "y": 1}.get(axis)
    if ax is None:
        raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")
    pts = model.slot_points(geometry)[n]
    d = spherical_gain_derivatives(geometry.wavelength, pts, scene.positions[k : k + 1])
    return d[:, 0, ax]


def tx_derivative_columns(
    geometry: SystemGeometry, layout: PinchingLayout, scene: TargetScene
) -> np.ndarray:
    """Stacked tx steering derivatives, ``(N*M_t, 2K)``.

    Column ``2k`` is the x derivative for target k, column ``2k + 1`` the y
    derivative, matching the parameter ordering of the Fisher matrix.
    """
    pts = model.tx_points(geometry, layout)
    d = spherical_gain_derivatives(geometry.wavelength, pts, scene.positions)
    n, m, k, _ = d.shape
    return d.reshape(n * m, 2 * k)


def rx_derivative_columns(
    geometry: SystemGeometry, scene: TargetScene
) -> np.ndarray:
    """Stacked rx steering derivatives, ``(N*M_r, 2K)``, same column order."""
    pts = model.slot_points(geometry)
    d = spherical_gain_derivatives(geometry.wavelength, pts, scene.positions)
    n, m, k, _ = d.shape
    return d.reshape(n * m, 2 * k)


# ----------------------------------------------------------------------
# waveform


@dataclass(eq=False)
class WaveformSpec:
    """Second-order description of the probing waveform.

    ``covariance`` is the Hermitian PSD sample covariance of the per-channel
    transmit symbols, ``power_budget`` its required trace in watts, and
    ``snapshots`` the number of coherent samples.
    """

    covariance: np.ndarray
    power_budget: float
    snapshots: int

    def __post_init__(self):
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=complex))
        r = self.covariance
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ConfigurationError("covariance must be square")
        scale = max(1.0, float(np.abs(r).max()))
        if np.abs(r - r.conj().T).max() > 1e-12 * scale:
            raise ConfigurationError("covariance must be Hermitian")
        trace = float(np.trace(r).real)
        if self.power_budget <= 0:
            raise ConfigurationError("power_budget must be positive")
        if abs(trace - self.power_budget) > 1e-9 * self.power_budget:
            raise ConfigurationError(
                f"covariance trace {trace!r} does not meet the power budget"
            )
        eigmin = float(np.linalg.eigvalsh(_hermitize(r)).min())
        if eigmin < -1e-10 * max(trace, 1.0):
            raise ConfigurationError("covariance must be positive semidefinite")
        if int(self.snapshots) < 1:
            raise ConfigurationError("snapshots must be a positive integer")
        self.snapshots = int(self.snapshots)

    @classmethod
    def isotropic(
        cls, power_budget: float, n_channels: int, snapshots: int
    ) -> "WaveformSpec":
        """Equal uncorrelated power on every channel."""
        r = (power_budget / n_channels) * np.eye(n_channels, dtype=complex)
        return cls(r, power_budget, snapshots)


# ----------------------------------------------------------------------
# generic Fisher engine


@dataclass(eq=False)
class RxGrams:
    """Receive-side Grams of the port-folded echo matrices.

    With folded echo steering ``Rb = rx_feed^T rx_gain`` (columns per
    target), its column duplication ``Rb2`` (each column twice) and folded
    derivatives ``Rd = rx_feed^T rx_deriv``:

    ``deriv_deriv = Rd^H Rd``, ``deriv_dup = Rd^H Rb2``,
    ``dup_dup = Rb2^H Rb2``, ``deriv_plain = Rd^H Rb``,
    ``dup_plain = Rb2^H Rb``, ``plain_plain = Rb^H Rb``.
    """

    deriv_deriv: np.ndarray
    deriv_dup: np.ndarray
    dup_dup: np.ndarray
    deriv_plain: np.ndarray
    dup_plain: np.ndarray
    plain_plain: np.ndarray


def fold(matrix: np.ndarray, feed: np.ndarray | None) -> np.ndarray:
    """Collapse element rows to ports: ``feed^T matrix`` (identity if None)."""
    if feed is None:
        return matrix
    return feed.T @ matrix


def rx_grams(
    rx_gain: np.ndarray, rx_deriv: np.ndarray, rx_feed: np.ndarray | None
) -> RxGrams:
    folded_plain = fold(rx_gain, rx_feed)
    folded_deriv = fold(rx_deriv, rx_feed)
    folded_dup = np.repeat(folded_plain, 2, axis=1)
    dh = folded_deriv.conj().T
    bh = folded_dup.conj().T
    return RxGrams(
        deriv_deriv=_hermitize(dh @ folded_deriv),
        deriv_dup=dh @ folded_dup,
        dup_dup=_hermitize(bh @ folded_dup),
        deriv_plain=dh @ folded_plain,
        dup_plain=bh @ folded_plain,
        plain_plain=_hermitize(folded_plain.conj().T @ folded_plain),
    )


@dataclass(eq=False)
class CrbEngine:
    """Fisher/CRB evaluator for one fixed design point.

    Holds the receive Grams, the port-folded transmit steering
    ``tx_plain (Nc, K)`` and derivatives ``tx_deriv (Nc, 2K)``, the target
    reflections, the noise power and the snapshot count.  All public methods
    take a waveform covariance of size ``(Nc, Nc)``.
    """

    rx: RxGrams
    tx_plain: np.ndarray
    tx_deriv: np.ndarray
    reflections: np.ndarray
    noise_power: float
    snapshots: int

    def __post_init__(self):
        if self.noise_power <= 0:
            raise ConfigurationError("noise_power must be positive for Fisher analysis")
        if int(self.snapshots) < 1:
            raise ConfigurationError("snapshots must be a positive integer")

    @property
    def n_channels(self) -> int:
        return self.tx_plain.shape[0]

    @property
    def n_targets(self) -> int:
        return self.tx_plain.shape[1]

    @property
    def fisher_scale(self) -> float:
        """Multiplier ``2 T / sigma^2`` in front of every Fisher block."""
        return 2.0 * self.snapshots / self.noise_power

    def blocks(self, covariance: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unscaled Fisher blocks ``(positions 2Kx2K, cross 2KxK, reflections KxK)``.

        Each block is a sum of Hadamard products (receive Gram) * (transmit
        sandwich through the conjugate covariance).
        """
        beta2 = np.repeat(self.reflections, 2)
        ca = np.repeat(self.tx_plain, 2, axis=1) * beta2
        cd = self.tx_deriv * beta2
        rc = np.asarray(covariance, dtype=complex).conj()
        rca, rcd, rp = rc @ ca, rc @ cd, rc @ self.tx_plain
        t_aa = _hermitize(ca.conj().T @ rca)
        t_ad = ca.conj().T @ rcd
        t_dd = _hermitize(cd.conj().T @ rcd)
        cross = self.rx.deriv_dup * t_ad
        f11 = (
            _hermitize(self.rx.deriv_deriv * t_aa)
            + cross
            + cross.conj().T
            + _hermitize(self.rx.dup_dup * t_dd)
        )
        f12 = self.rx.deriv_plain * (ca.conj().T @ rp) + self.rx.dup_plain * (
            cd.conj().T @ rp
        )
        f22 = self.rx.plain_plain * _hermitize(self.tx_plain.conj().T @ rp)
        return f11, f12, f22

    def _schur(
        self, covariance: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, float]:
        """Realified reflection block, the Schur complement of the position
        block and the spectral norm of the raw position block, all unscaled."""
        f11, f12, f22 = self.blocks(covariance)
        f22t = np.block(
            [[f22.real, -f22.imag], [-f22.imag.T, f22.real]]
        )
        f12t = np.hstack([f12.real, -f12.imag])
        w, v = np.linalg.eigh(f22t)
        scale = self.fisher_scale
        if w[0] <= 0.0 or w[-1] > CONDITION_LIMIT * w[0]:
            raise UnidentifiableSceneError(
                "reflection Fisher block is singular or ill conditioned",
                min_eigenvalue=w[0] * scale,
            )
        inv22 = (v / w) @ v.T
        schur = _symmetrize(f11.real - f12t @ inv22 @ f12t.T)
        # reference magnitude: a Schur eigenvalue this far below the raw
        # position block is rounding residue, not information
        reference = float(np.linalg.norm(f11.real, 2))
        return f22t, schur, reference

    def trace_objective(self, covariance: np.ndarray) -> float:
        """Trace of the position CRB, square meters."""
        _, schur, reference = self._schur(covariance)
        w = np.linalg.eigvalsh(schur)
        if w[0] <= 0.0 or max(w[-1], reference) > CONDITION_LIMIT * w[0]:
            raise UnidentifiableSceneError(
                "position Fisher Schur complement is singular or ill conditioned",
                min_eigenvalue=w[0] * self.fisher_scale,
            )
        return float(np.sum(1.0 / w) / self.fisher_scale)

    def report(self, covariance: np.ndarray) -> "CrbReport":
        """Full position CRB report at this design point."""
        _, schur, reference = self._schur(covariance)
        w, v = np.linalg.eigh(schur)
        if w[0] <= 0.0 or max(w[-1], reference) > CONDITION_LIMIT * w[0]:
            raise UnidentifiableSceneError(
                "position Fisher Schur complement is singular or ill conditioned",
                min_eigenvalue=w[0] * self.fisher_scale,
            )
        crb = _symmetrize((v / w) @ v.T) / self.fisher_scale
        return CrbReport.from_matrix(crb)

    def trace_objective_many(self, covariances: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`trace_objective` over a batch ``(B, Nc, Nc)``.

        Unidentifiable entries come back as ``inf`` instead of raising, which
        suits audits over random covariance samples.
        """
        covs = np.asarray(covariances, dtype=complex)
        beta2 = np.repeat(self.reflections, 2)
        ca = np.repeat(self.tx_plain, 2, axis=1) * beta2
        cd = self.tx_deriv * beta2
        rc = covs.conj()
        rca = rc @ ca
        rcd = rc @ cd
        rp = rc @ self.tx_plain
        cah, cdh, ph = ca.conj().T, cd.conj().T, self.tx_plain.conj().T
        t_aa, t_ad, t_dd = cah @ rca, cah @ rcd, cdh @ rcd
        cross = self.rx.deriv_dup * t_ad
        f11 = (
            self.rx.deriv_deriv * t_aa
            + cross
            + np.conj(np.swapaxes(cross, -1, -2))
            + self.rx.dup_dup * t_dd
        )
        f12 = self.rx.deriv_plain * (cah @ rp) + self.rx.dup_plain * (cdh @ rp)
        f22 = self.rx.plain_plain * (ph @ rp)
        f22t = np.block(
            [[f22.real, -f22.imag], [-np.swapaxes(f22.imag, -1, -2), f22.real]]
        )
        f12t = np.concatenate([f12.real, -f12.imag], axis=-1)
        out = np.full(covs.shape[0], np.inf)
        for i in range(covs.shape[0]):
            try:
                w = np.linalg.eigvalsh(f22t[i])
                if w[0] <= 0.0 or w[-1] > CONDITION_LIMIT * w[0]:
                    continue
                inv22 = np.linalg.solve(f22t[i], f12t[i].T)
                schur = _symmetrize(f11[i].real - f12t[i] @ inv22)
                ws = np.linalg.eigvalsh(schur)
                reference = np.linalg.norm(f11[i].real, 2)
                if ws[0] <= 0.0 or max(ws[-1], reference) > CONDITION_LIMIT * ws[0]:
                    continue
                out[i] = np.sum(1.0 / ws) / self.fisher_scale
            except np.linalg.LinAlgError:
                continue
        return out


# ----------------------------------------------------------------------
# assembled Fisher blocks for the pinching-antenna system


@dataclass(eq=False)
class FimBlocks:
    """Fisher blocks of one (geometry, layout, scene, waveform) tuple.

    ``position_block`` (2K, 2K), ``cross_block`` (2K, K) and
    ``reflection_block`` (K, K) are the unscaled complex Hadamard-form
    blocks; multiplying their real tiling by ``fisher_scale = 2 T / sigma^2``
    gives the Fisher matrix.

    The expanded matrices used to build them are kept for structural
    inspection when assembled through :func:`assemble_fim_blocks`:
    ``tx_dup``/``rx_dup`` duplicate each steering column once per ground
    coordinate, ``reflection_dup`` repeats each reflection twice on the
    diagonal, ``tx_deriv``/``rx_deriv`` stack the coordinate derivatives.
    """

    position_block: np.ndarray
    cross_block: np.ndarray
    reflection_block: np.ndarray
    fisher_scale: float
    tx_dup: np.ndarray | None = None
    rx_dup: np.ndarray | None = None
    reflection_dup: np.ndarray | None = None
    tx_deriv: np.ndarray | None = None
    rx_deriv: np.ndarray | None = None

    @property
    def n_targets(self) -> int:
        return self.reflection_block.shape[0]


def pass_engine(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
    snapshots: int,
) -> CrbEngine:
    """Build the Fisher engine of one pinching-antenna design point."""
    tx_gain, tx_feed = model.assemble_tx(geometry, power_model, layout, scene)
    rx_gain, rx_feed = model.assemble_rx(geometry, scene)
    grams = rx_grams(rx_gain, rx_derivative_columns(geometry, scene), rx_feed)
    return CrbEngine(
        rx=grams,
        tx_plain=fold(tx_gain, tx_feed),
        tx_deriv=fold(tx_derivative_columns(geometry, layout, scene), tx_feed),
        reflections=scene.reflections,
        noise_power=geometry.noise_power,
        snapshots=snapshots,
    )


def assemble_fim_blocks(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
    waveform: WaveformSpec,
) -> FimBlocks:
    """Assemble the Fisher blocks, keeping the expanded matrices."""
    if waveform.covariance.shape != (geometry.n_waveguides,) * 2:
        raise ConfigurationError("waveform covariance must be N x N")
    engine = pass_engine(geometry, power_model, layout, scene, waveform.snapshots)
    f11, f12, f22 = engine.blocks(waveform.covariance)
    tx_gain, _ = model.assemble_tx(geometry, power_model, layout, scene)
    rx_gain, _ = model.assemble_rx(geometry, scene)
    return FimBlocks(
        position_block=f11,
        cross_block=f12,
        reflection_block=f22,
        fisher_scale=engine.fisher_scale,
        tx_dup=np.repeat(tx_gain, 2, axis=1),
        rx_dup=np.repeat(rx_gain, 2, axis=1),
        reflection_dup=np.kron(np.diag(scene.reflections), np.eye(2)),
        tx_deriv=tx_derivative_columns(geometry, layout, scene),
        rx_deriv=rx_derivative_columns(geometry, scene),
    )


def assemble_fim(blocks: FimBlocks) -> np.ndarray:
    """Real Fisher matrix, shape ``(4K, 4K)``, exactly symmetric.

    Parameter order: interleaved target coordinates, then reflection real
    parts, then reflection imaginary parts.
    """
    f11, f12, f22 = (
        blocks.position_block,
        blocks.cross_block,
        blocks.reflection_block,
    )
    return blocks.fisher_scale * np.block(
        [
            [f11.real, f12.real, -f12.imag],
            [f12.real.T, f22.real, -f22.imag],
            [-f12.imag.T, -f22.imag.T, f22.real],
        ]
    )


@dataclass(eq=False)
class CrbReport:
    """Position CRB and the scalar summaries derived from it.

    ``matrix`` is the (2K, 2K) position CRB; ``per_coordinate`` its diagonal
    in interleaved x/y order; ``trace_m2`` the diagonal sum;
    ``peb_per_target`` the per-target root position error bounds
    ``sqrt(crb_x + crb_y)``; ``peb_m`` their average.
    """

    matrix: np.ndarray
    per_coordinate: np.ndarray
    trace_m2: float
    peb_per_target: np.ndarray
    peb_m: float

    @classmethod
    def from_matrix(cls, crb: np.ndarray) -> "CrbReport":
        diag = np.diag(crb).copy()
        per_target = np.sqrt(diag.reshape(-1, 2).sum(axis=1))
        return cls(
            matrix=crb,
            per_coordinate=diag,
            trace_m2=float(diag.sum()),
            peb_per_target=per_target,
            peb_m=float(per_target.mean()),
        )


def crb_matrix(blocks: FimBlocks) -> CrbReport:
    """Position CRB from assembled Fisher blocks via the Schur complement.

    Raises :class:`UnidentifiableSceneError` when the reflection block or
    the position Schur complement is singular or has condition number above
    ``CONDITION_LIMIT``.
    """
    f11, f12, f22 = (
        blocks.position_block,
        blocks.cross_block,
        blocks.reflection_block,
    )
    f22t = np.block([[f22.real, -f22.imag], [-f22.imag.T, f22.real]])
    f12t = np.hstack([f12.real, -f12.imag])
    w, v = np.linalg.eigh(f22t)
    if w[0] <= 0.0 or w[-1] > CONDITION_LIMIT * w[0]:
        raise UnidentifiableSceneError(
            "reflection Fisher block is singular or ill conditioned",
            min_eigenvalue=w[0] * blocks.fisher_scale,
        )
    schur = _symmetrize(f11.real - f12t @ ((v / w) @ v.T) @ f12t.T)
    ws, vs = np.linalg.eigh(schur)
    if ws[0] <= 0.0 or ws[-1] > CONDITION_LIMIT * ws[0]:
        raise UnidentifiableSceneError(
            "position Fisher Schur complement is singular or ill conditioned",
            min_eigenvalue=ws[0] * blocks.fisher_scale,
        )
    crb = _symmetrize((vs / ws) @ vs.T) / blocks.fisher_scale
    return CrbReport.from_matrix(crb)


def peb(report: CrbReport) -> float:
    """Average per-target root position error bound, meters."""
    return report.peb_m


def evaluate_crb(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
    waveform: WaveformSpec,
) -> CrbReport:
    """One-call CRB report for a pinching-antenna design point."""
    engine = pass_engine(geometry, power_model, layout, scene, waveform.snapshots)
    return engine.report(waveform.covariance)


# ----------------------------------------------------------------------
# fast per-layout evaluation for searches


@dataclass(eq=False)
class PassSceneObjective:
    """Caches everything layout-independent for fast layout sweeps.

    The receive Grams depend only on scene and geometry, so a layout
    evaluation only rebuilds the port-folded transmit steering, which the
    block-diagonal feed reduces to per-waveguide contractions.
    """

    geometry: SystemGeometry
    power_model: PowerModel
    scene: TargetScene
    _rx: RxGrams = field(init=False, repr=False)

    def __post_init__(self):
        if self.power_model.n_pas != self.geometry.n_pas_per_waveguide:
            raise ConfigurationError("power model size does not match geometry")
        rx_gain, rx_feed = model.assemble_rx(self.geometry, self.scene)
        self._rx = rx_grams(
            rx_gain, rx_derivative_columns(self.geometry, self.scene), rx_feed
        )

    def engine_for(self, positions: np.ndarray, snapshots: int) -> CrbEngine:
        """Fisher engine at raw PA ``positions (N, M_t)`` without validation."""
        g = self.geometry
        pts = np.empty(positions.shape + (3,))
        pts[:, :, 0] = positions
        pts[:, :, 1] = g.tx_y[:, None]
        pts[:, :, 2] = g.tx_z[:, None]
        gains = model.spherical_gains(
            g.wavelength, model.point_target_distances(pts, self.scene.positions)
        )
        derivs = spherical_gain_derivatives(g.wavelength, pts, self.scene.positions)
        n, m, k = gains.shape
        feed = self.power_model.alphas * np.exp(
            -2j * np.pi * g.refractive_index_tx * positions / g.wavelength
        )
        tx_plain = np.einsum("nm,nmk->nk", feed, gains)
        tx_deriv = np.einsum("nm,nmq->nq", feed, derivs.reshape(n, m, 2 * k))
        return CrbEngine(
            rx=self._rx,
            tx_plain=tx_plain,
            tx_deriv=tx_deriv,
            reflections=self.scene.reflections,
            noise_power=g.noise_power,
            snapshots=snapshots,
        )

    def trace_objective(
        self, positions: np.ndarray, covariance: np.ndarray, snapshots: int
    ) -> float:
        return self.engine_for(positions, snapshots).trace_objective(covariance)
