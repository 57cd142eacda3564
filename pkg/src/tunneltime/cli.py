"""Scenario runner: ``tunneltime --scenario fig1 --out results/``.

Parameters are the dimensionless groups eps0*tau_c/hbar, eps_p0*tau_c/hbar,
V*tau_c/hbar, dz/b, z0/b, t/tau_c (p*b/hbar and kappa*b for the desk-scale
scenarios). Each run writes CSV curves, ``summary.json`` and ``manifest.json``
into ``--out``; every file carries the SHA-256 of the resolved configuration.

Exit status: 0 success, 2 invalid configuration, 3 physics/numerics error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tunneltime import __version__
from tunneltime.barrier import BarrierSpec, ParticleSpec, log_transmission, transmission_exact
from tunneltime.errors import PhysicsError
from tunneltime.numerics import UniformGrid, locate_peak, relative_l2, relative_linf
from tunneltime.traversal import (
    WWindow,
    complex_mean_time,
    eta_numeric,
    eta_semiclassical,
    oscillation_frequency,
    saddle_time,
    stationary_time,
    steepest_descent_eta,
    sum_rule_residual,
)
from tunneltime.wavepacket import (
    WavepacketSpec,
    causality_experiment,
    convolution_pulse,
    free_pulse,
    pulse_advancement,
    semiclassical_pulse,
    transmitted_pulse_spectral,
)
from tunneltime.weakmeas import WeakMeterSpec, gaussian_shift_fit, pointer_final_state, weak_value

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PHYSICS = 3

_WINDOW_DEFAULTS = {"tau_max": 128.0, "w_width_scale": 40.0, "taper": 0.1}

DEFAULTS = {
    "fig1": {
        "eps0_tauc": 6000.0,
        "eps_p_tauc": 6007.5,
        "V_tauc": 15.0,
        "dz_over_b": 0.55,
        "z0_over_b": 2.5,
        "t_over_tauc": 100.0,
        "z_min": -1.0,
        "z_max": 7.0,
        "z_count": 1601,
        "tau_max": 60.0,
        "tau_count": 5901,
    },
    "eta-scan": {
        "eps0_tauc": 50.0,
        "p_b": 30.0,
        "kappa_b": 10.0,
        "tau_min": -3.0,
        "tau_max_scan": 6.0,
        "tau_count": 1801,
        **_WINDOW_DEFAULTS,
    },
    "sumrule": {
        "eps0_tauc": 50.0,
        "p_b": 30.0,
        "kappa_b_list": [5.0, 10.0, 20.0],
        "include_free": True,
        **_WINDOW_DEFAULTS,
    },
    "causality": {
        "eps0_tauc": 50.0,
        "p_b": 30.0,
        "kappa_b": 10.0,
        "dz_over_b": 5.0,
        "z0_over_b": 25.0,
        "truncate_over_dz": 3.0,
        "t_over_tauc": 60.0,
        "z_min": -10.0,
        "z_max": 70.0,
        "z_count": 1601,
    },
    "weakdemo": {
        "alpha": 5.0,
        "pointer_width": 20.0,
        "tau_count": 2001,
    },
    "free-check": {
        "eps0_tauc": 50.0,
        "p_b": 30.0,
        "dz_over_b": 5.0,
        "z0_over_b": 25.0,
        "t_over_tauc": 100.0,
        "z_count": 801,
        **_WINDOW_DEFAULTS,
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict = field(default_factory=dict)

    @classmethod
    def resolve(cls, scenario: str, overrides: dict | None = None) -> "ScenarioConfig":
        if scenario not in DEFAULTS:
            raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(DEFAULTS)}")
        params = copy.deepcopy(DEFAULTS[scenario])
        for key, value in (overrides or {}).items():
            if key not in params:
                raise ConfigError(f"scenario {scenario!r} has no parameter {key!r}")
            params[key] = value
        config = cls(scenario, params)
        config.validate()
        return config

    def validate(self) -> None:
        positive = {"eps0_tauc", "eps_p_tauc", "dz_over_b", "z0_over_b", "t_over_tauc", "p_b",
                    "pointer_width", "tau_max", "w_width_scale"}
        for key, value in self.parameters.items():
            if key in positive and not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError(f"{key} must be a positive number, got {value!r}")
            if key.endswith("_count") and not (isinstance(value, int) and value >= 3):
                raise ConfigError(f"{key} must be an integer >= 3, got {value!r}")

    def manifest(self) -> dict:
        return {"scenario": self.scenario, "parameters": self.parameters, "version": __version__}

    def digest(self) -> str:
        canonical = json.dumps(self.manifest(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _window(params: dict, particle: ParticleSpec, barrier: BarrierSpec) -> WWindow:
    return WWindow.default(
        particle, barrier, tau_max=params["tau_max"], width_scale=params["w_width_scale"],
        taper=params["taper"] or None,
    )


def _desk_particle(params: dict) -> ParticleSpec:
    return ParticleSpec(float(params["eps0_tauc"]), float(params["p_b"]))


def _desk_barrier(params: dict, particle: ParticleSpec) -> BarrierSpec:
    kappa_b = params.get("kappa_b")
    if kappa_b in (None, 0):
        return BarrierSpec(0.0)
    return BarrierSpec.for_decay(particle, float(kappa_b))


def _complex(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _write_curve(path: Path, digest: str, axis_name: str, axis, values) -> None:
    values = np.asarray(values, dtype=complex)
    lines = [f"# config_sha256={digest}", f"{axis_name},re,im,abs"]
    for x, v in zip(np.asarray(axis, dtype=float), values):
        lines.append(f"{x:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _peak_region(values: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    mag = np.abs(values)
    return mag >= fraction * mag.max()


def _run_fig1(p: dict, out: Path, digest: str) -> dict:
    particle = ParticleSpec.from_energy(p["eps0_tauc"], p["eps_p_tauc"])
    barrier = BarrierSpec(p["V_tauc"])
    spec = WavepacketSpec(particle, p["dz_over_b"], p["z0_over_b"])
    t = p["t_over_tauc"]
    z_grid = UniformGrid.from_span(p["z_min"], p["z_max"], p["z_count"])

    free = free_pulse(spec, z_grid, t)
    tunnel = transmitted_pulse_spectral(spec, barrier, z_grid, t)
    semi = semiclassical_pulse(spec, barrier, z_grid, t)
    conv = convolution_pulse(spec, barrier, z_grid, t, eta_source="semiclassical")
    for name, field_ in (("free_pulse", free), ("tunnel_pulse", tunnel),
                         ("semiclassical_pulse", semi), ("convolution_pulse", conv)):
        _write_curve(out / f"{name}.csv", digest, "z_over_b", z_grid.points, field_.values)

    tau_grid = UniformGrid.from_span(barrier.tau_c * 1.001, p["tau_max"], p["tau_count"])
    eta_free = eta_semiclassical(particle, barrier.with_height(0.0), tau_grid.points, free_phase=True)
    eta_tunnel = eta_semiclassical(particle, barrier, tau_grid.points, free_phase=True)
    _write_curve(out / "eta_free.csv", digest, "tau_over_tauc", tau_grid.points, eta_free)
    _write_curve(out / "eta_tunnel.csv", digest, "tau_over_tauc", tau_grid.points, eta_tunnel)

    tau_v = saddle_time(particle, barrier)
    tau_bar = complex_mean_time(steepest_descent_eta(particle, barrier))
    T0 = complex(transmission_exact(particle, barrier.height, barrier))
    log_t, arg_t = log_transmission(particle, barrier.height, barrier)
    region = _peak_region(tunnel.values)
    v0 = particle.group_velocity
    return {
        "p0_b": particle.momentum,
        "v0_over_c": v0,
        "advancement_over_b": pulse_advancement(tunnel, free),
        "semiclassical_advancement_over_b": pulse_advancement(semi, free),
        "semiclassical_linf_mismatch": relative_linf(semi.values[region], tunnel.values[region]),
        "convolution_linf_mismatch": relative_linf(conv.values[region], tunnel.values[region]),
        "T_p0_V": _complex(T0),
        "log_abs_T": log_t,
        "arg_T": arg_t,
        "tau_V_over_tauc": _complex(tau_v),
        "tau_bar_over_tauc": _complex(tau_bar),
        "classical_crossing_time_over_tauc": barrier.width / v0,
        "magnification_measured": float(np.abs(tunnel.values).max() / (abs(T0) * np.abs(free.values).max())),
        "magnification_predicted": math.exp((v0 * abs(tau_v)) ** 2 / spec.width**2),
    }


def _run_eta_scan(p: dict, out: Path, digest: str) -> dict:
    particle = _desk_particle(p)
    barrier = _desk_barrier(p, particle)
    window = _window(p, particle, barrier)
    grid = UniformGrid.from_span(p["tau_min"], p["tau_max_scan"], p["tau_count"])
    eta = eta_numeric(particle, barrier, window=window, tau_grid=grid)
    _write_curve(out / "eta_numeric.csv", digest, "tau_over_tauc", grid.points, eta.values)
    above = grid.points > barrier.tau_c * 1.001
    semi = eta_semiclassical(particle, barrier, grid.points[above], free_phase=True)
    _write_curve(out / "eta_semiclassical.csv", digest, "tau_over_tauc", grid.points[above], semi)

    compare = UniformGrid.from_span(1.5 * barrier.tau_c, 4.0 * barrier.tau_c, 501)
    eta_cmp = eta_numeric(particle, barrier, window=window, tau_grid=compare)
    semi_cmp = eta_semiclassical(particle, barrier, compare.points, free_phase=True)
    free = eta_numeric(particle, barrier.with_height(0.0), window=_window(p, particle, barrier.with_height(0.0)), tau_grid=grid)
    inside = np.abs(grid.points) < 0.9 * barrier.tau_c
    summary = {
        "V_tauc": barrier.height,
        "semiclassical_l2_mismatch_1p5_to_4": relative_l2(eta_cmp.values, semi_cmp),
        "free_stationary_time_over_tauc": stationary_time(free),
        "classical_crossing_time_over_tauc": barrier.width / particle.group_velocity,
        "subluminal_suppression_ratio": float(np.abs(free.values[inside]).max() / np.abs(free.values).max()),
        "window": window.describe(),
    }
    if grid.start < -1.5 * barrier.tau_c:
        summary["pair_oscillation_frequency"] = oscillation_frequency(eta, grid.start, -1.05 * barrier.tau_c)
    return summary


def _run_sumrule(p: dict, out: Path, digest: str) -> dict:
    particle = _desk_particle(p)
    cases = [("kappa_b=%g" % k, BarrierSpec.for_decay(particle, float(k))) for k in p["kappa_b_list"]]
    if p["include_free"]:
        cases.append(("free", BarrierSpec(0.0)))
    rows = ["# config_sha256=" + digest, "case,V_tauc,residual,W_min,W_max,W_step"]
    residuals = {}
    for label, barrier in cases:
        eta = eta_numeric(particle, barrier, window=_window(p, particle, barrier))
        r = sum_rule_residual(eta)
        residuals[label] = r
        w = eta.window.describe()
        rows.append(f"{label},{barrier.height:.17g},{r:.17g},{w['W_min']:.17g},{w['W_max']:.17g},{w['W_step']:.17g}")
    (out / "sumrule.csv").write_text("\n".join(rows) + "\n")
    return {"residuals": residuals, "max_residual": max(residuals.values()), "passed": max(residuals.values()) < 1e-3}


def _run_causality(p: dict, out: Path, digest: str) -> dict:
    particle = _desk_particle(p)
    barrier = _desk_barrier(p, particle)
    dz = p["dz_over_b"]
    spec = WavepacketSpec(particle, dz, p["z0_over_b"], truncate_at=p["truncate_over_dz"] * dz)
    z_grid = UniformGrid.from_span(p["z_min"], p["z_max"], p["z_count"])
    report = causality_experiment(spec, barrier, z_grid, p["t_over_tauc"])
    _write_curve(out / "tunnel_pulse.csv", digest, "z_over_b", z_grid.points, report.pop("pulse").values)
    reference = causality_experiment(WavepacketSpec(particle, dz, p["z0_over_b"]), barrier, z_grid, p["t_over_tauc"],
                                     margin=report["margin"])
    reference.pop("pulse")
    report["untruncated_leakage_ratio"] = reference["leakage_ratio"]
    report["V_tauc"] = barrier.height
    return report


def _run_weakdemo(p: dict, out: Path, digest: str) -> dict:
    meter = WeakMeterSpec.two_level(float(p["alpha"]), float(p["pointer_width"]))
    alpha = weak_value(meter)
    margin = 5.0 * meter.pointer_width
    grid = UniformGrid.from_span(min(0.0, alpha.real) - margin, max(1.0, alpha.real) + margin, p["tau_count"])
    state = pointer_final_state(meter, grid)
    _write_curve(out / "pointer_state.csv", digest, "tau", grid.points, state.values)
    alpha_fit, residual = gaussian_shift_fit(state, meter.pointer_width)
    return {
        "weak_value": _complex(alpha),
        "alpha_fit": _complex(alpha_fit),
        "fit_residual": residual,
        "postselection_probability": abs(meter.overlap) ** 2,
        "pointer_width": meter.pointer_width,
    }


def _run_free_check(p: dict, out: Path, digest: str) -> dict:
    particle = _desk_particle(p)
    barrier = BarrierSpec(0.0)
    spec = WavepacketSpec(particle, p["dz_over_b"], p["z0_over_b"])
    t = p["t_over_tauc"]
    center = particle.group_velocity * t - spec.offset
    z_grid = UniformGrid.from_span(center - 4 * spec.width, center + 4 * spec.width, p["z_count"])
    free = free_pulse(spec, z_grid, t)
    transmitted = transmitted_pulse_spectral(spec, barrier, z_grid, t)
    conv = convolution_pulse(spec, barrier, z_grid, t, window=_window(p, particle, barrier))
    _write_curve(out / "free_pulse.csv", digest, "z_over_b", z_grid.points, free.values)
    _write_curve(out / "convolution_pulse.csv", digest, "z_over_b", z_grid.points, conv.values)
    return {
        "max_free_vs_transmitted": float(np.abs(free.values - transmitted.values).max()),
        "classical_peak_z_over_b": center,
        "free_peak_offset_over_b": locate_peak(free.samples()) - center,
        "convolution_peak_offset_over_b": locate_peak(conv.samples()) - center,
        "convolution_l2_mismatch": relative_l2(conv.values, free.values),
    }


RUNNERS = {
    "fig1": _run_fig1,
    "eta-scan": _run_eta_scan,
    "sumrule": _run_sumrule,
    "causality": _run_causality,
    "weakdemo": _run_weakdemo,
    "free-check": _run_free_check,
}


def run_scenario(config: ScenarioConfig, out_dir: str | Path) -> dict:
    """Run one scenario, writing CSVs, summary.json and manifest.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    summary = RUNNERS[config.scenario](config.parameters, out, digest)
    summary = {"scenario": config.scenario, "config_sha256": digest, **summary}
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json", {"config_sha256": digest, **config.manifest()})
    return summary


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tunneltime", description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", choices=sorted(DEFAULTS), help="scenario to run (overrides the config file)")
    parser.add_argument("--config", type=Path, help="JSON file with 'scenario' and parameter overrides")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable; VALUE parsed as JSON when possible)")
    parser.add_argument("--quiet", action="store_true", help="do not print the summary")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {}
        scenario = args.scenario
        if args.config is not None:
            try:
                loaded = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a JSON object")
            scenario = scenario or loaded.pop("scenario", None)
            loaded.pop("scenario", None)
            overrides.update(loaded.get("parameters", loaded))
        for item in args.overrides:
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = _parse_value(value.strip())
        if scenario is None:
            raise ConfigError("no scenario given (use --scenario or a 'scenario' key in --config)")
        config = ScenarioConfig.resolve(scenario, overrides)
    except ConfigError as exc:
        print(f"tunneltime: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = run_scenario(config, args.out)
    except PhysicsError as exc:
        print(f"tunneltime: {type(exc).__name__} in scenario {config.scenario!r}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    if not args.quiet:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
