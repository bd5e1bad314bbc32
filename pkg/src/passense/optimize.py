"""Two-stage design optimization: PA placement search, then waveform shaping.

Stage 1 minimizes the trace of the position CRB over PA positions with an
isotropic waveform, using particle swarm optimization over the feasible set

    0 <= x_{n,1},  x_{n,m+1} - x_{n,m} >= dx,  x_{n,M} <= L.

Stage 2 fixes the placement and shapes the waveform covariance by a convex
semidefinite program: with auxiliary ``U`` bounding the position-block Schur
complement from below, ``tr(U^{-1})`` is minimized subject to the Fisher
linear matrix inequality, a trace power budget and positive semidefiniteness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from . import fim
from .baselines import fixed_uniform_layout
from .errors import (
    ConfigurationError,
    NotConvergedError,
    OptimizationFailedError,
    UnidentifiableSceneError,
)
from .fim import CrbEngine, PassSceneObjective, WaveformSpec
from .model import PinchingLayout, PowerModel, SystemGeometry, TargetScene


def project_to_feasible(
    raw_positions: np.ndarray, geometry: SystemGeometry
) -> PinchingLayout:
    """Euclidean projection of arbitrary positions onto the feasible set.

    Per waveguide row, substituting ``u_m = x_m - (m-1) dx`` turns the
    ordered-minimum-spacing constraints into plain monotonicity of ``u`` on
    the box ``[0, L - (M-1) dx]``; the projection is then isotonic
    regression followed by clipping, which is exact for this box.
    """
    x = np.atleast_2d(np.asarray(raw_positions, dtype=float))
    n, m = geometry.n_waveguides, geometry.n_pas_per_waveguide
    if x.shape != (n, m):
        raise ConfigurationError(
            f"raw positions shape {x.shape} does not match ({n}, {m})"
        )
    span = geometry.waveguide_length - (m - 1) * geometry.min_pa_spacing
    if span < 0:
        raise ConfigurationError(
            "min_pa_spacing too large: M_t PAs cannot fit in the waveguide"
        )
    try:
        layout = PinchingLayout(x)
        layout.validate(geometry)
    except ConfigurationError:
        pass
    else:
        # already feasible: the projection is the identity
        return layout
    offsets = np.arange(m) * geometry.min_pa_spacing
    out = np.empty_like(x)
    for i in range(n):
        u = isotonic_regression(x[i] - offsets).x
        out[i] = np.clip(u, 0.0, span) + offsets
    return PinchingLayout(out).validate(geometry)


@dataclass
class PsoConfig:
    """Particle swarm settings (constriction-style defaults).

    ``topology`` selects the social neighborhood: ``"ring"`` steers each
    particle by the best of itself and its two index neighbors, which keeps
    competing basins alive on multimodal landscapes, while ``"global"``
    uses the swarm-wide best everywhere.
    """

    n_particles: int = 30
    max_iterations: int = 200
    inertia: float = 0.729
    cognitive_coeff: float = 1.49445
    social_coeff: float = 1.49445
    seed: int = 0
    stall_iterations: int = 30
    stall_tolerance: float = 1e-6
    velocity_clamp_fraction: float = 0.2
    feasibility_mode: str = "repair"
    topology: str = "ring"

    def __post_init__(self):
        if self.n_particles < 2:
            raise ConfigurationError("PSO needs at least two particles")
        if self.max_iterations < 1:
            raise ConfigurationError("PSO needs a positive iteration count")
        if not 0.0 < self.inertia < 1.0:
            raise ConfigurationError("inertia must be in (0, 1)")
        if self.cognitive_coeff <= 0 or self.social_coeff <= 0:
            raise ConfigurationError("velocity coefficients must be positive")
        if self.feasibility_mode not in ("repair", "indicator"):
            raise ConfigurationError("feasibility_mode must be 'repair' or 'indicator'")
        if not 0 < self.velocity_clamp_fraction <= 1:
            raise ConfigurationError("velocity_clamp_fraction must be in (0, 1]")
        if self.topology not in ("ring", "global"):
            raise ConfigurationError("topology must be 'ring' or 'global'")


@dataclass
class SdpConfig:
    """Waveform SDP settings.

    ``tolerance`` is the feasibility slack accepted when auditing the
    returned point; ``max_iterations`` caps the interior-point iterations.
    With ``strict`` a solver failure raises NotConvergedError instead of
    falling back to the isotropic covariance.
    """

    tolerance: float = 1e-8
    max_iterations: int = 200
    solver: str = "CLARABEL"
    fallback_solver: str = "SCS"
    strict: bool = False

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")


@dataclass(eq=False)
class OptimizationResult:
    """Outcome of the two-stage pipeline.

    ``stage1_trace`` is the CRB trace of the placement under the isotropic
    waveform, ``objective_trace`` the final trace with the shaped waveform;
    the latter never exceeds the former.  ``iteration_log`` records the
    swarm's best objective per iteration (nonincreasing).
    """

    layout: PinchingLayout
    waveform: WaveformSpec
    objective_trace: float
    stage1_trace: float
    iteration_log: list[tuple[int, float]]

    def __post_init__(self):
        if self.objective_trace > self.stage1_trace + 1e-9:
            raise ConfigurationError("stage 2 must not worsen the stage 1 objective")
        values = [v for _, v in self.iteration_log]
        if any(b > a * (1 + 1e-12) for a, b in zip(values, values[1:])):
            raise ConfigurationError("iteration log must be nonincreasing")


@dataclass(eq=False)
class _PsoRun:
    positions: np.ndarray
    objective: float
    iteration_log: list[tuple[int, float]]
    evaluations: int


def _pso_search(
    geometry: SystemGeometry,
    power_model: PowerModel,
    scene: TargetScene,
    config: PsoConfig,
    power_budget: float,
    snapshots: int,
) -> _PsoRun:
    """Swarm search over PA positions under the isotropic waveform."""
    objective = PassSceneObjective(geometry, power_model, scene)
    n, m = geometry.n_waveguides, geometry.n_pas_per_waveguide
    dim = n * m
    length = geometry.waveguide_length
    iso = (power_budget / n) * np.eye(n, dtype=complex)
    repair = config.feasibility_mode == "repair"

    def evaluate(flat: np.ndarray) -> tuple[float, np.ndarray]:
        pos = flat.reshape(n, m)
        if repair:
            pos = project_to_feasible(pos, geometry).positions
        else:
            try:
                PinchingLayout(pos).validate(geometry)
            except ConfigurationError:
                return math.inf, flat
        try:
            value = objective.trace_objective(pos, iso, snapshots)
        except UnidentifiableSceneError:
            return math.inf, pos.ravel()
        return value, pos.ravel()

    rng = np.random.default_rng(config.seed)
    pos = rng.uniform(0.0, length, size=(config.n_particles, dim))
    pos[0] = fixed_uniform_layout(geometry).positions.ravel()
    vmax = config.velocity_clamp_fraction * length
    vel = rng.uniform(-vmax, vmax, size=(config.n_particles, dim))

    values = np.empty(config.n_particles)
    evaluations = 0
    for i in range(config.n_particles):
        values[i], pos[i] = evaluate(pos[i])
        evaluations += 1
    best_pos = pos.copy()
    best_val = values.copy()
    g = int(np.argmin(best_val))
    g_val, g_pos = float(best_val[g]), best_pos[g].copy()
    log = [(0, g_val)]

    ring = config.topology == "ring"

    def social_targets() -> np.ndarray:
        if not ring:
            return np.broadcast_to(g_pos, pos.shape)
        stacked = np.stack(
            [np.roll(best_val, 1), best_val, np.roll(best_val, -1)]
        )
        choice = np.argmin(stacked, axis=0)
        idx = (np.arange(config.n_particles) + choice - 1) % config.n_particles
        return best_pos[idx]

    stall = 0
    for it in range(1, config.max_iterations + 1):
        rp = rng.uniform(size=(config.n_particles, dim))
        rg = rng.uniform(size=(config.n_particles, dim))
        vel = (
            config.inertia * vel
            + config.cognitive_coeff * rp * (best_pos - pos)
            + config.social_coeff * rg * (social_targets() - pos)
        )
        np.clip(vel, -vmax, vmax, out=vel)
        pos = pos + vel
        prev = g_val
        for i in range(config.n_particles):
            values[i], pos[i] = evaluate(pos[i])
            evaluations += 1
            if values[i] < best_val[i]:
                best_val[i] = values[i]
                best_pos[i] = pos[i]
                if values[i] < g_val:
                    g_val, g_pos = float(values[i]), pos[i].copy()
        log.append((it, g_val))
        if math.isfinite(g_val) and prev - g_val <= config.stall_tolerance * abs(prev):
            stall += 1
            if stall >= config.stall_iterations:
                break
        else:
            stall = 0

    if not math.isfinite(g_val):
        raise OptimizationFailedError(
            "no identifiable placement found",
            diagnostics={
                "evaluations": evaluations,
                "particles": config.n_particles,
                "iterations": len(log) - 1,
            },
        )
    return _PsoRun(g_pos.reshape(n, m), g_val, log, evaluations)


def pso_optimize_positions(
    geometry: SystemGeometry,
    power_model: PowerModel,
    scene: TargetScene,
    config: PsoConfig,
    power_budget: float,
    snapshots: int,
) -> PinchingLayout:
    """Stage 1 alone: best feasible placement under the isotropic waveform."""
    run = _pso_search(geometry, power_model, scene, config, power_budget, snapshots)
    return PinchingLayout(run.positions).validate(geometry)


# ----------------------------------------------------------------------
# stage 2: waveform covariance SDP


def optimize_covariance(
    engine: CrbEngine, power_budget: float, config: SdpConfig | None = None
) -> np.ndarray:
    """Minimize the position CRB trace over the waveform covariance.

    Solves the epigraph form of ``min tr(U^{-1})`` subject to the Fisher
    LMI, ``tr(R) = power_budget`` and ``R >= 0``.  The solve runs in the
    subspace spanned by the folded steering and derivative columns: power
    orthogonal to that span enters no Fisher block, so restricting to it
    loses nothing and keeps the SDP small for large arrays.

    Falls back to the isotropic covariance whenever the solver fails or the
    polished solution fails to improve on it, so the returned covariance
    never evaluates worse than isotropic (unless ``config.strict``, in which
    case solver failure raises :class:`NotConvergedError`).
    """
    import cvxpy as cp

    config = config or SdpConfig()
    nc = engine.n_channels
    iso = (power_budget / nc) * np.eye(nc, dtype=complex)
    if nc == 1:
        # a single channel leaves nothing to shape
        return iso
    iso_trace = engine.trace_objective(iso)

    k = engine.n_targets
    beta2 = np.repeat(engine.reflections, 2)
    ca_full = np.repeat(engine.tx_plain, 2, axis=1) * beta2
    cd_full = engine.tx_deriv * beta2
    basis_src = np.hstack([engine.tx_plain, engine.tx_deriv])
    u_svd, s_svd, _ = np.linalg.svd(basis_src, full_matrices=False)
    rank = int(np.sum(s_svd > max(1e-12 * s_svd[0], 1e-300)))
    q = u_svd[:, :rank]

    # compressed sandwich factors: C^H R* C' = (Q^T C)^H Y (Q^T C') with
    # Y = (Q^H R Q)* the conjugated compressed covariance
    ca = q.T @ ca_full
    cd = q.T @ cd_full
    dp = q.T @ engine.tx_plain

    f11_iso, f12_iso, f22_iso = engine.blocks(iso)
    norm22 = np.linalg.norm(
        np.block([[f22_iso.real, -f22_iso.imag], [-f22_iso.imag.T, f22_iso.real]]), 2
    )
    norm11 = np.linalg.norm(f11_iso.real, 2)
    gamma = 1.0 / max(norm22, 1e-300)
    # position derivatives each carry a wavenumber factor, so the raw
    # position block sits several orders above the reflection block; scaling
    # derivative coordinates by `balance` puts all LMI blocks near unit norm
    balance = float(np.sqrt(norm22 / norm11)) if norm11 > 0 else 1.0

    y = cp.Variable((rank, rank), hermitian=True)

    def sandwich(left: np.ndarray, right: np.ndarray):
        return cp.conj(left).T @ y @ right

    t_ad = cp.multiply(engine.rx.deriv_dup, sandwich(ca, cd))
    f11 = (
        cp.multiply(engine.rx.deriv_deriv, sandwich(ca, ca))
        + t_ad
        + cp.conj(t_ad).T
        + cp.multiply(engine.rx.dup_dup, sandwich(cd, cd))
    )
    f12 = cp.multiply(engine.rx.deriv_plain, sandwich(ca, dp)) + cp.multiply(
        engine.rx.dup_plain, sandwich(cd, dp)
    )
    f22 = cp.multiply(engine.rx.plain_plain, sandwich(dp, dp))
    re22, im22 = cp.real(f22), cp.imag(f22)
    f22t = cp.bmat([[re22, -im22], [-im22.T, re22]])
    f12t = cp.hstack([cp.real(f12), -cp.imag(f12)])

    u_var = cp.Variable((2 * k, 2 * k), symmetric=True)
    w_var = cp.Variable((2 * k, 2 * k), symmetric=True)
    eye2k = np.eye(2 * k)
    constraints = [
        y >> 0,
        cp.real(cp.trace(y)) == power_budget,
        cp.bmat(
            [
                [gamma * balance**2 * cp.real(f11) - u_var, gamma * balance * f12t],
                [gamma * balance * f12t.T, gamma * f22t],
            ]
        )
        >> 0,
        cp.bmat([[w_var, eye2k], [eye2k, u_var]]) >> 0,
    ]
    problem = cp.Problem(cp.Minimize(cp.trace(w_var)), constraints)

    solved = False
    for solver in (config.solver, config.fallback_solver):
        kwargs = {}
        if solver == "CLARABEL":
            kwargs["max_iter"] = config.max_iterations
            kwargs["tol_gap_abs"] = 1e-10
            kwargs["tol_gap_rel"] = 1e-10
            kwargs["tol_feas"] = 1e-9
        elif solver == "SCS":
            kwargs["max_iters"] = max(config.max_iterations, 2500)
        try:
            # inaccurate solutions are acceptable: they get polished and
            # audited against the isotropic covariance below
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                problem.solve(solver=solver, **kwargs)
        except Exception:
            continue
        if problem.status in ("optimal", "optimal_inaccurate") and y.value is not None:
            solved = True
            break
    if not solved:
        if config.strict:
            raise NotConvergedError(
                f"waveform SDP did not converge (status {problem.status!r})",
                best=iso,
            )
        return iso

    # polish: lift back, enforce Hermitian PSD and the exact power budget
    r = q @ y.value.conj() @ q.conj().T
    r = 0.5 * (r + r.conj().T)
    w_eig, v_eig = np.linalg.eigh(r)
    w_eig = np.clip(w_eig, 0.0, None)
    r = (v_eig * w_eig) @ v_eig.conj().T
    r = 0.5 * (r + r.conj().T)
    trace = float(np.trace(r).real)
    if trace <= 0:
        return iso
    r *= power_budget / trace

    try:
        achieved = engine.trace_objective(r)
    except UnidentifiableSceneError:
        return iso
    if achieved > iso_trace:
        return iso
    return r


def sdp_optimize_waveform(
    geometry: SystemGeometry,
    power_model: PowerModel,
    layout: PinchingLayout,
    scene: TargetScene,
    power_budget: float,
    snapshots: int,
    config: SdpConfig | None = None,
) -> WaveformSpec:
    """Stage 2 alone: shape the waveform covariance at a fixed placement."""
    layout.validate(geometry)
    engine = fim.pass_engine(geometry, power_model, layout, scene, snapshots)
    cov = optimize_covariance(engine, power_budget, config)
    return WaveformSpec(cov, power_budget, snapshots)


def two_stage_optimize(
    geometry: SystemGeometry,
    power_model: PowerModel,
    scene: TargetScene,
    power_budget: float,
    snapshots: int,
    pso_config: PsoConfig | None = None,
    sdp_config: SdpConfig | None = None,
    waveform_stage: bool = True,
) -> OptimizationResult:
    """Full pipeline: placement search, then waveform shaping at the result.

    With ``waveform_stage=False`` the isotropic waveform is kept and the
    final objective equals the stage 1 objective exactly.
    """
    pso_config = pso_config or PsoConfig()
    run = _pso_search(geometry, power_model, scene, pso_config, power_budget, snapshots)
    layout = PinchingLayout(run.positions).validate(geometry)
    n = geometry.n_waveguides
    if waveform_stage:
        waveform = sdp_optimize_waveform(
            geometry, power_model, layout, scene, power_budget, snapshots, sdp_config
        )
        engine = fim.pass_engine(geometry, power_model, layout, scene, snapshots)
        final = engine.trace_objective(waveform.covariance)
        final = min(final, run.objective)
    else:
        waveform = WaveformSpec.isotropic(power_budget, n, snapshots)
        final = run.objective
    return OptimizationResult(
        layout=layout,
        waveform=waveform,
        objective_trace=final,
        stage1_trace=run.objective,
        iteration_log=run.iteration_log,
    )
