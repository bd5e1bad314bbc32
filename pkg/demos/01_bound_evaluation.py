"""Evaluate the position error bound for one sensing deployment.

Walks the modeling chain end to end: a deployment geometry, a fixed
pinching-antenna placement, a two-target scene, and an isotropic transmit
covariance, ending in the Cramer-Rao report that every other capability
in the package builds on.  Along the way it prints the intermediate
quantities that are worth eyeballing (wavelength, slot count, per-antenna
power split) and closes with the two exact scale laws of the bound:
doubling the snapshot count halves it, doubling the noise power doubles
it.
"""

import dataclasses

import numpy as np

import passense as ps
from passense import experiments

config = ps.ExperimentConfig()  # reference deployment defaults
geometry = experiments.build_geometry(config)
power_model = experiments.build_power_model(config)

print("deployment")
print(f"  carrier          {geometry.carrier_frequency / 1e9:.1f} GHz")
print(f"  wavelength       {geometry.wavelength * 100:.1f} cm")
print(f"  waveguides       {geometry.n_waveguides} of {geometry.waveguide_length} m")
print(f"  antennas/guide   {geometry.n_pas_per_waveguide}")
print(f"  slots/cable      {geometry.n_slots_per_cable} at {geometry.slot_spacing} m")
print(f"  transmit power   {config.transmit_power_w} W")
print(f"  noise power      {geometry.noise_power} W")
print(f"  radiated split   {np.round(power_model.alphas**2, 4)} (per PA, of guided power)")

# a fixed, evenly spread placement and a deterministic two-target scene
layout = ps.fixed_uniform_layout(geometry)
scene = ps.TargetScene(
    positions=np.array([[5.0, 7.5], [25.0, 12.5]]),
    reflections=np.exp(1j * np.array([0.4, -1.2])),
)
print("\nlayout (PA x-positions per waveguide)")
print(np.round(layout.positions, 3))

waveform = ps.WaveformSpec.isotropic(
    config.transmit_power_w, geometry.n_waveguides, config.snapshots
)
report = ps.evaluate_crb(geometry, power_model, layout, scene, waveform)

print("\nbound report (isotropic waveform)")
print(f"  CRB trace          {report.trace_m2:.6e} m^2")
for k, (target, bound) in enumerate(zip(scene.positions, report.peb_per_target)):
    print(f"  target {k} at ({target[0]:.1f}, {target[1]:.1f}) m: PEB {bound * 100:.3f} cm")
print(f"  scene PEB          {report.peb_m * 100:.3f} cm")

# exact scale laws: the bound is inversely linear in the snapshot count
# and linear in the noise power
double_t = ps.WaveformSpec.isotropic(
    config.transmit_power_w, geometry.n_waveguides, 2 * config.snapshots
)
report_2t = ps.evaluate_crb(geometry, power_model, layout, scene, double_t)

noisy = dataclasses.replace(geometry, noise_power=2.0 * geometry.noise_power)
report_2n = ps.evaluate_crb(noisy, power_model, layout, scene, waveform)

print("\nscale laws")
print(f"  trace(2T) * 2 / trace(T)        {2 * report_2t.trace_m2 / report.trace_m2:.12f}")
print(f"  trace(2 sigma^2) / 2 / trace    {report_2n.trace_m2 / 2 / report.trace_m2:.12f}")
