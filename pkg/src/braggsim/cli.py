"""Batch front-end: parse an experiment configuration, run one pipeline and
emit plot-ready CSV tables plus a deterministic JSON summary.

Subcommands: pulse, bvs, fringe, revivals, gradiometer, gravity-run, allan,
class-oracle, calibrate. Exit codes: 0 ok, 1 configuration error,
2 numerical error. Execution is serial; --threads is accepted as a maximum
parallel-work-units hint and recorded, so outputs never depend on it.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, bloch, sequence
from .constants import HBAR
from .config import ConfigError, ExperimentConfig, echo_config, load_config, resolved_dict
from .ladder import calibrate_pulse_amplitude, plane_wave_state, apply_pulse, PulseSpec
from .physics import resonant_sweep_rate, revival_period
from .report import versions, write_run_meta, write_summary, write_table


def _resolve_sequence(cfg: ExperimentConfig, species, evolution,
                      order: int | None = None):
    blk = cfg.sequence
    sweep = blk.sweep_rate_hz_per_s
    if isinstance(sweep, str):
        if sweep != "resonant":
            raise ConfigError("sequence.sweep_rate_hz_per_s",
                              f"expected a number or 'resonant', got {sweep!r}")
        sweep_rate = None
    else:
        sweep_rate = float(sweep)
    return sequence.prepare_sequence(
        species,
        order=blk.order if order is None else order,
        interrogation_time=blk.interrogation_time_s,
        pulse_sigma=blk.pulse_sigma_s,
        mirror_sigma=blk.mirror_sigma_s,
        sweep_rate=sweep_rate,
        phase_offset=blk.phase_offset_rad,
        cfg=evolution,
    )


def _require_scan(cfg: ExperimentConfig, target: str):
    if cfg.scan.target != target:
        raise ConfigError("scan.target",
                          f"subcommand requires target {target!r}, "
                          f"got {cfg.scan.target!r}")
    grid = cfg.scan.grid()
    if len(grid) == 0:
        raise ConfigError("scan.points", "empty scan grid")
    return grid


def _fit_summary(fit):
    return {
        "offset": fit.offset,
        "amplitudes": list(fit.amplitudes),
        "phases": list(fit.phases),
        "residual_rms": fit.residual_rms,
        "dominant_harmonic": fit.dominant_harmonic,
        "contrast": analysis.fringe_contrast(fit),
    }


def cmd_calibrate(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    blk = cfg.pulse
    omega0 = calibrate_pulse_amplitude(
        species, blk.transfer_target, blk.order, blk.sigma_s, cfg=evolution)
    return {
        "omega0_rad_s": omega0,
        "order": blk.order,
        "sigma_s": blk.sigma_s,
        "transfer_target": blk.transfer_target,
    }


def cmd_pulse(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    blk = cfg.pulse
    if isinstance(blk.rabi_peak_rad_s, str):
        if blk.rabi_peak_rad_s != "calibrated":
            raise ConfigError("pulse.rabi_peak_rad_s",
                              "expected a number or 'calibrated'")
        omega0 = calibrate_pulse_amplitude(
            species, blk.transfer_target, blk.order, blk.sigma_s, cfg=evolution)
    else:
        omega0 = float(blk.rabi_peak_rad_s)
    pulse = PulseSpec(rabi_peak=omega0, sigma=blk.sigma_s,
                      resonant_order=blk.order)
    hk = HBAR * species.wavevector
    psi = plane_wave_state(species, quasimomentum=blk.quasimomentum_hk * hk,
                           guard=blk.order + evolution.ladder_guard_sites)
    final = apply_pulse(psi, pulse, evolution)
    rows = [(int(n), float(p)) for n, p in sorted(final.populations().items())]
    write_table(out, "pulse_populations", ["site", "population"], rows)
    return {
        "omega0_rad_s": omega0,
        "norm": final.norm,
        "transfer": final.population(blk.order),
    }


def cmd_bvs(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    ramp = cfg.bvs.resolve()
    hk = species.mass * species.recoil_velocity
    momenta_hk = np.linspace(cfg.bvs.profile_min_hk, cfg.bvs.profile_max_hk,
                             cfg.bvs.profile_points)
    eff = bloch.selection_profile(species, ramp, momenta_hk * hk, evolution)
    write_table(out, "bvs_profile", ["momentum_hk", "transfer"],
                [(float(p), float(e)) for p, e in zip(momenta_hk, eff)])
    center = float(eff[np.argmin(np.abs(momenta_hk))])
    half = eff.max() / 2.0
    above = momenta_hk[eff >= half]
    return {
        "center_transfer": center,
        "profile_fwhm_hk": float(above.max() - above.min()) if len(above) else 0.0,
        "sweep_duration_s": ramp.resolved_sweep_duration(species),
    }


def cmd_fringe(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    geometry = cfg.geometry.resolve(species)
    ens = cfg.ensemble.resolve()
    noise = cfg.noise.resolve()
    seq = _resolve_sequence(cfg, species, evolution)

    if cfg.scan.target == "phase":
        grid = _require_scan(cfg, "phase")
        scan = sequence.scan_fringe(species, ens, seq, cfg.gravity_m_s2, noise,
                                    grid, cfg.seed, geometry, evolution)
        x_name = "phase_rad"
    elif cfg.scan.target == "sweep_rate":
        # scan values are offsets (Hz/s) from the resonant sweep rate
        offsets = _require_scan(cfg, "sweep_rate")
        a0 = resonant_sweep_rate(cfg.gravity_m_s2, geometry)
        p0 = np.empty(len(offsets))
        pn = np.empty(len(offsets))
        norm = np.empty(len(offsets))
        for i, da in enumerate(offsets):
            seq_i = dataclasses.replace(seq, sweep_rate=a0 + float(da))
            shot = sequence.run_shot(species, ens, seq_i, cfg.gravity_m_s2,
                                     noise, cfg.seed, i, geometry, evolution)
            p0[i] = shot.measured_ports[0]
            pn[i] = shot.measured_ports[seq.order]
            norm[i] = shot.normalized_population
        scan = analysis.FringeScan(
            phase_grid=np.asarray(offsets, dtype=float),
            port_populations={0: p0, seq.order: pn}, normalized=norm,
            metadata={"x": "sweep_rate_offset_hz_per_s"})
        x_name = "sweep_rate_offset_hz_per_s"
    else:
        raise ConfigError("scan.target",
                          "fringe supports phase or sweep_rate scans")

    rows = list(zip(scan.phase_grid.tolist(),
                    scan.port_populations[0].tolist(),
                    scan.port_populations[seq.order].tolist(),
                    scan.normalized.tolist()))
    write_table(out, "fringe", [x_name, "port0", f"port{seq.order}",
                                "normalized"], rows)
    summary = {"beamsplitter_omega0": seq.beamsplitter.rabi_peak,
               "mirror_omega0": seq.mirror.rabi_peak}
    if cfg.scan.target == "phase":
        fit = analysis.fit_harmonics(scan, n_harmonics=3)
        summary["fit"] = _fit_summary(fit)
    return summary


def cmd_revivals(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    geometry = cfg.geometry.resolve(species)
    ens = cfg.ensemble.resolve()
    noise = cfg.noise.resolve()
    seq = _resolve_sequence(cfg, species, evolution)
    times = _require_scan(cfg, "interrogation_time")
    curve = sequence.scan_contrast_vs_T(species, ens, seq, times,
                                        cfg.gravity_m_s2, noise, cfg.seed,
                                        geometry=geometry, cfg=evolution)
    write_table(out, "revivals", ["interrogation_time_s", "contrast"],
                [(float(t), float(c)) for t, c in curve])
    dT = revival_period(species)
    period, t_peak = analysis.fit_revival_period(
        [t for t, _ in curve], [c for _, c in curve], 0.7 * dT, 1.3 * dT)
    return {
        "revival_period_s": dT,
        "fitted_period_s": period,
        "fitted_first_maximum_s": t_peak,
        "period_ratio": period / dT,
    }


def cmd_gradiometer(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    ens = cfg.ensemble.resolve()
    noise = cfg.noise.resolve()
    gspec = cfg.gradiometer.resolve()
    seq = _resolve_sequence(cfg, species, evolution, order=gspec.order)
    grid = _require_scan(cfg, "phase")
    res = sequence.run_gradiometer(species, gspec, ens, seq, cfg.gravity_m_s2,
                                   cfg.gradiometer.gradient_per_s2, noise,
                                   grid, cfg.seed, evolution)
    rows = list(zip(grid.tolist(), res.lower.normalized.tolist(),
                    res.upper.normalized.tolist()))
    write_table(out, "gradiometer", ["phase_rad", "p_lower", "p_upper"], rows)
    fit_lo = analysis.fit_harmonics(res.lower, 3)
    fit_up = analysis.fit_harmonics(res.upper, 3)
    d_lo, m_lo = analysis.extract_shot_phases(res.lower, fit_lo)
    d_up, m_up = analysis.extract_shot_phases(res.upper, fit_up)
    keep = m_lo & m_up
    summary = {
        "baseline_m": res.baseline,
        "gravity_lower": res.gravity_lower,
        "gravity_upper": res.gravity_upper,
        "fit_lower": _fit_summary(fit_lo),
        "fit_upper": _fit_summary(fit_up),
        "retained_shots": int(keep.sum()),
    }
    if keep.sum() >= 10:
        _, _, r = analysis.gradiometer_correlation(d_lo[keep], d_up[keep])
        summary["pearson_r"] = r
        summary["differential_phase_std"] = float(np.std(d_lo[keep] - d_up[keep]))
    return summary


def _gravity_series(cfg: ExperimentConfig):
    species = cfg.species.resolve()
    evolution = cfg.evolution.resolve()
    geometry = cfg.geometry.resolve(species)
    ens = cfg.ensemble.resolve()
    noise = cfg.noise.resolve()
    tide = cfg.tide.resolve()
    seq = _resolve_sequence(cfg, species, evolution)
    series = sequence.run_gravity_series(
        species, ens, seq, tide, noise, cfg.gravity_run.shots,
        cfg.gravity_run.shot_period_s, cfg.seed, geometry, evolution)
    return species, tide, series


def cmd_gravity_run(cfg: ExperimentConfig, out: Path) -> dict:
    species, tide, series = _gravity_series(cfg)
    rows = list(zip(series.times.tolist(), series.true_gravity.tolist(),
                    series.normalized_population.tolist(),
                    series.recovered_gravity.tolist()))
    write_table(out, "gravity_series",
                ["time_s", "gravity_true", "normalized_population",
                 "gravity_recovered"], rows)
    bin_size = cfg.gravity_run.bin_size
    means, errs = analysis.bin_timeseries(series.recovered_gravity, bin_size)
    t_bins, _ = analysis.bin_timeseries(series.times, bin_size)
    write_table(out, "gravity_binned",
                ["time_s", "gravity_mean", "gravity_stderr"],
                list(zip(t_bins.tolist(), means.tolist(), errs.tolist())))
    summary = {
        "bias_phase_rad": series.bias_phase,
        "calibration": _fit_summary(series.calibration),
        "mean_gravity": series.mean_gravity,
        "components": [],
    }
    freqs = [c.angular_frequency for c in tide.components]
    if freqs and len(means) > 2 * len(freqs) + 2:
        sigmas = None
        if bin_size > 1 and np.all(np.isfinite(errs)) and np.all(errs > 0):
            sigmas = errs
        _, comps = analysis.fit_harmonic_components(t_bins, means, freqs,
                                                    weights=sigmas)
        for comp, (amp, phase, se) in zip(tide.components, comps):
            summary["components"].append({
                "angular_frequency_rad_s": comp.angular_frequency,
                "amplitude_injected": comp.amplitude,
                "amplitude_recovered": amp,
                "amplitude_stderr": se,
                "phase_recovered": phase,
            })
    return summary


def cmd_allan(cfg: ExperimentConfig, out: Path) -> dict:
    species, tide, series = _gravity_series(cfg)
    frac = (series.recovered_gravity - series.mean_gravity) / series.mean_gravity
    curve = analysis.allan_deviation(frac, cfg.gravity_run.shot_period_s)
    write_table(out, "allan", ["tau_s", "allan_deviation"],
                list(zip(curve.taus.tolist(), curve.values.tolist())))
    slope = None
    if len(curve.taus) >= 3:
        slope = float(np.polyfit(np.log(curve.taus), np.log(curve.values), 1)[0])
    return {
        "points": len(curve.taus),
        "loglog_slope": slope,
        "notices": list(curve.notices),
        "last_tau_s": float(curve.taus[-1]),
        "last_value": float(curve.values[-1]),
    }


def cmd_class_oracle(cfg: ExperimentConfig, out: Path) -> dict:
    species = cfg.species.resolve()
    blk = cfg.class_oracle
    if blk.a_max < blk.a_min:
        raise ConfigError("class_oracle.a_max", "must be >= a_min")
    times = np.linspace(blk.time_min_s, blk.time_max_s, blk.time_points)
    rows = []
    for t in times:
        enum = analysis.enumerate_interferometer_class(
            blk.class_index, range(blk.a_min, blk.a_max + 1), float(t), species)
        rows.append((float(t), enum.contrast_proxy))
    write_table(out, "class_oracle", ["interrogation_time_s", "contrast_proxy"],
                rows)
    return {
        "class_index": blk.class_index,
        "revival_period_s": revival_period(species),
        "trajectories": blk.a_max - blk.a_min + 1,
    }


_COMMANDS = {
    "pulse": cmd_pulse,
    "bvs": cmd_bvs,
    "fringe": cmd_fringe,
    "revivals": cmd_revivals,
    "gradiometer": cmd_gradiometer,
    "gravity-run": cmd_gravity_run,
    "allan": cmd_allan,
    "class-oracle": cmd_class_oracle,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="braggsim",
        description="Bragg-diffraction atom gravimeter simulator")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="experiment configuration (YAML)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    parser.add_argument("--out-dir", default=None,
                        help="override the output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="maximum parallel work units (hint; execution "
                             "is serial and outputs do not depend on it)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out_dir is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out_dir)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads", "must be >= 1")
            cfg = dataclasses.replace(cfg, threads=args.threads)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    started = time.perf_counter()
    try:
        results = _COMMANDS[args.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    (out / "resolved_config.yaml").write_text(echo_config(cfg))
    # out_dir and threads are execution context, not physics inputs: they
    # live in run_meta so the summary stays byte-stable across runs
    summary_config = {k: v for k, v in resolved_dict(cfg).items()
                      if k not in ("out_dir", "threads")}
    write_summary(out, {
        "subcommand": args.subcommand,
        "config": summary_config,
        "results": results,
        "versions": versions(),
    })
    write_run_meta(out, time.perf_counter() - started,
                   output_directory=str(out), threads=cfg.threads)
    return 0


if __name__ == "__main__":
    sys.exit(main())
