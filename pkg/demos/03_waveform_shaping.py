"""Shape the transmit covariance at a fixed antenna placement.

With the antennas pinned, the remaining design freedom is the covariance
of the per-waveguide transmit signals.  Minimizing the position bound
over that covariance is a semidefinite program: the bound enters through
a linear matrix inequality, the power budget through a trace equality.
The optimizer concentrates power along a few eigendirections of the
scene, and the script audits the result two ways, against the isotropic
covariance it must never lose to, and against a cloud of random feasible
covariances none of which should beat it.
"""

import numpy as np

import passense as ps
from passense import experiments, fim

config = ps.ExperimentConfig()
geometry = experiments.build_geometry(config)
power_model = experiments.build_power_model(config)
budget = config.transmit_power_w
n = geometry.n_waveguides

layout = ps.fixed_uniform_layout(geometry)
scene = ps.TargetScene(
    positions=np.array([[5.0, 7.5], [25.0, 12.5]]),
    reflections=np.exp(1j * np.array([0.4, -1.2])),
)
engine = fim.pass_engine(geometry, power_model, layout, scene, config.snapshots)

iso = (budget / n) * np.eye(n, dtype=complex)
shaped = ps.optimize_covariance(engine, budget)

trace_iso = engine.trace_objective(iso)
trace_shaped = engine.trace_objective(shaped)
print("waveform shaping at the fixed uniform placement")
print(f"  isotropic trace   {trace_iso:.6e} m^2")
print(f"  shaped trace      {trace_shaped:.6e} m^2")
print(f"  improvement       {trace_iso / trace_shaped:.2f}x")
print(f"  power budget      {np.trace(shaped).real:.6f} W (target {budget} W)")

eigs = np.clip(np.linalg.eigvalsh(shaped)[::-1], 0.0, None)
print("  covariance eigenvalues (W), largest first")
print(f"    {np.round(eigs, 6)}")
print(f"  isotropic spreads {budget / n:.3f} W per waveguide; the shaped")
print("  design reallocates almost everything onto the informative modes")

# audit: no random feasible covariance should do better
rng = np.random.default_rng(7)


def random_covariance() -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r = a @ a.conj().T
    return r * (budget / np.trace(r).real)


samples = np.stack([random_covariance() for _ in range(500)])
values = engine.trace_objective_many(samples)
print("\naudit over 500 random feasible covariances")
print(f"  best random trace  {values.min():.6e} m^2")
print(f"  shaped trace       {trace_shaped:.6e} m^2")
print(f"  shaped wins: {trace_shaped <= values.min()}")
