"""Run the full two-stage design and compare it with both baselines.

Stage 1 moves the pinching antennas with the particle swarm under an
isotropic waveform; stage 2 shapes the transmit covariance at the chosen
placement with the semidefinite program.  The same scene is then scored
for the two reference designs: the fixed uniform placement with an
isotropic waveform, and a conventional half-wavelength planar array with
matched total power.  The per-stage traces show where the gain comes
from, and the final table compares position error bounds.
"""

import numpy as np

import passense as ps
from passense import baselines, experiments, fim

config = ps.ExperimentConfig()
geometry = experiments.build_geometry(config)
power_model = experiments.build_power_model(config)
budget = config.transmit_power_w
snapshots = config.snapshots

scene = ps.TargetScene(
    positions=np.array([[5.0, 7.5], [25.0, 12.5]]),
    reflections=np.exp(1j * np.array([0.4, -1.2])),
)

# --- two-stage design -------------------------------------------------
result = ps.two_stage_optimize(
    geometry,
    power_model,
    scene,
    budget,
    snapshots,
    pso_config=ps.PsoConfig(n_particles=30, max_iterations=60, seed=11),
)
engine = fim.pass_engine(geometry, power_model, result.layout, scene, snapshots)
report_pso = engine.report(result.waveform.covariance)

print("two-stage design")
print(f"  stage 1 trace (placement, isotropic)  {result.stage1_trace:.6e} m^2")
print(f"  stage 2 trace (shaped waveform)       {result.objective_trace:.6e} m^2")
print(f"  stage 2 / stage 1                     {result.objective_trace / result.stage1_trace:.3f}")

# --- baselines --------------------------------------------------------
uniform = ps.fixed_uniform_layout(geometry)
iso = ps.WaveformSpec.isotropic(budget, geometry.n_waveguides, snapshots)
report_fixed = ps.evaluate_crb(geometry, power_model, uniform, scene, iso)

reports = {
    "pass-pso (two-stage)": report_pso,
    "pass-fixed (uniform, isotropic)": report_fixed,
}
for aperture in (2.0, 4.0):
    upa = baselines.UpaConfig(
        aperture=aperture,
        n_x=config.upa_n_x,
        n_y=config.upa_n_y,
        center=config.upa_center_m,
        carrier_frequency=config.carrier_frequency_hz,
    )
    waveform = ps.WaveformSpec.isotropic(budget, upa.n_elements, snapshots)
    label = f"mimo-{aperture:g}x{aperture:g} ({upa.n_elements} elements)"
    reports[label] = baselines.upa_crb(upa, scene, waveform, config.noise_power_w)

print("\nposition error bound by method")
for label, report in reports.items():
    print(f"  {label:36s} {report.peb_m * 100:10.3f} cm")

ratio = reports["pass-fixed (uniform, isotropic)"].peb_m / report_pso.peb_m
print(f"\nthe reconfigurable design is {ratio:.1f}x tighter than the fixed placement on this scene")
