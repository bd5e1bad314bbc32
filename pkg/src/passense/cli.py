"""Command line front end.

Subcommands: ``crb`` (bound report for one scene), ``optimize`` (two-stage
design for one scene), ``cdf`` (random-scene experiment), ``robustness``
(target-error sweep), ``simulate`` (echo samples).  Exit codes: 0 success,
2 configuration problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines, experiments, fim, model, optimize
from .errors import (
    ConfigurationError,
    NotConvergedError,
    OptimizationFailedError,
    UnidentifiableSceneError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passense",
        description="Pinching-antenna sensing: bounds, design optimization, experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output file or directory")

    p_crb = sub.add_parser("crb", help="CRB report for one sampled scene")
    common(p_crb)

    p_opt = sub.add_parser("optimize", help="two-stage design for one sampled scene")
    common(p_opt)
    p_opt.add_argument(
        "--iterations", type=int, default=200, help="PSO iteration budget"
    )

    p_cdf = sub.add_parser("cdf", help="PEB over random scenes, one CSV row per (scene, method)")
    common(p_cdf)
    p_cdf.add_argument("--scenes", type=int, help="override the number of scenes")
    p_cdf.add_argument("--methods", help="comma-separated method ids")

    p_rob = sub.add_parser("robustness", help="target-error sweep on a fixed scene")
    common(p_rob)
    p_rob.add_argument("--methods", help="comma-separated method ids")

    p_sim = sub.add_parser("simulate", help="simulate noisy echo samples")
    common(p_sim)
    return parser


def _load_config(args) -> experiments.ExperimentConfig:
    if args.config:
        config = experiments.ExperimentConfig.from_json(args.config)
    else:
        config = experiments.ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "scenes", None) is not None:
        config = replace(config, n_scenes=args.scenes)
    if getattr(args, "methods", None):
        config = replace(
            config, methods=tuple(m.strip() for m in args.methods.split(","))
        )
    return config


def _single_scene(config) -> model.TargetScene:
    return experiments.sample_scenes(replace(config, n_scenes=1), config.seed)[0]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_crb(args) -> int:
    config = _load_config(args)
    geometry = experiments.build_geometry(config)
    power_model = experiments.build_power_model(config)
    scene = _single_scene(config)
    layout = baselines.fixed_uniform_layout(geometry)
    waveform = fim.WaveformSpec.isotropic(
        config.transmit_power_w, geometry.n_waveguides, config.snapshots
    )
    report = fim.evaluate_crb(geometry, power_model, layout, scene, waveform)
    payload = {
        "scene": {
            "targets": scene.positions.tolist(),
            "reflections_real": scene.reflections.real.tolist(),
            "reflections_imag": scene.reflections.imag.tolist(),
        },
        "layout": layout.positions.tolist(),
        "trace_m2": report.trace_m2,
        "per_coordinate_m2": report.per_coordinate.tolist(),
        "peb_per_target_m": report.peb_per_target.tolist(),
        "peb_m": report.peb_m,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    config = _load_config(args)
    geometry = experiments.build_geometry(config)
    power_model = experiments.build_power_model(config)
    scene = _single_scene(config)
    pso_config = optimize.PsoConfig(
        n_particles=config.pso_particles,
        max_iterations=args.iterations,
        seed=config.seed,
        feasibility_mode=config.pso_feasibility_mode,
    )
    result = optimize.two_stage_optimize(
        geometry,
        power_model,
        scene,
        config.transmit_power_w,
        config.snapshots,
        pso_config=pso_config,
    )
    engine = fim.pass_engine(
        geometry, power_model, result.layout, scene, config.snapshots
    )
    report = engine.report(result.waveform.covariance)
    payload = {
        "scene": {
            "targets": scene.positions.tolist(),
            "reflections_real": scene.reflections.real.tolist(),
            "reflections_imag": scene.reflections.imag.tolist(),
        },
        "layout": result.layout.positions.tolist(),
        "covariance_real": result.waveform.covariance.real.tolist(),
        "covariance_imag": result.waveform.covariance.imag.tolist(),
        "stage1_trace_m2": result.stage1_trace,
        "objective_trace_m2": result.objective_trace,
        "peb_m": report.peb_m,
        "iteration_log": [[i, v] for i, v in result.iteration_log],
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _run_experiment(args, kind: str) -> int:
    config = _load_config(args)
    out_dir = Path(args.out or "results")
    out_dir.mkdir(parents=True, exist_ok=True)
    if kind == "cdf":
        rows = experiments.run_cdf_experiment(config)
        csv_name = "cdf_results.csv"
    else:
        rows = experiments.run_robustness_experiment(config)
        csv_name = "robustness_results.csv"
    experiments.write_rows_csv(rows, str(out_dir / csv_name))
    experiments.write_manifest(
        str(out_dir / "run_manifest.json"), kind, config, csv_name, len(rows)
    )
    ok = sum(1 for r in rows if r.status == "ok")
    sys.stdout.write(
        f"{kind}: wrote {len(rows)} rows ({ok} ok) to {out_dir / csv_name}\n"
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    geometry = experiments.build_geometry(config)
    power_model = experiments.build_power_model(config)
    scene = _single_scene(config)
    layout = baselines.fixed_uniform_layout(geometry)
    n, t = geometry.n_waveguides, config.snapshots
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 5000]))
    scale = np.sqrt(config.transmit_power_w / n / 2.0)
    samples = scale * (
        rng.standard_normal((n, t)) + 1j * rng.standard_normal((n, t))
    )
    noise_seed = int(
        np.random.SeedSequence([config.seed, 5001]).generate_state(1)[0]
    )
    echo = model.simulate_echo(
        geometry, power_model, layout, scene, samples, noise_seed
    )
    lines = ["snapshot,port,real,imag"]
    for ti in range(t):
        for port in range(n):
            sample = complex(echo[port, ti])
            lines.append(f"{ti},{port},{sample.real!r},{sample.imag!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code not in (0, None) else EXIT_OK
    handlers = {
        "crb": _cmd_crb,
        "optimize": _cmd_optimize,
        "cdf": lambda a: _run_experiment(a, "cdf"),
        "robustness": lambda a: _run_experiment(a, "robustness"),
        "simulate": _cmd_simulate,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as err:
        sys.stderr.write(f"configuration error: {err}\n")
        return EXIT_CONFIG
    except (
        UnidentifiableSceneError,
        OptimizationFailedError,
        NotConvergedError,
        np.linalg.LinAlgError,
    ) as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(cli_main())
