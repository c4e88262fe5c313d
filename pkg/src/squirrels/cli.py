"""Command-line pipeline.

Subcommands
-----------
simulate            config -> spectrogram CSV (+ true state JSON)
reconstruct         spectrogram CSV -> density JSON + report JSON + refit CSV
rabbitt             spectrogram CSV -> retrieved phases (JSON + CSV)
wigner              density JSON -> Wigner grid CSV
pulse-metrics       density JSON -> temporal density CSV + metrics JSON
fit-g               populations CSV -> coupling magnitude JSON
extract-sidebands   raw spectrum CSV -> populations CSV
benchmark-noise     config -> ratio/error table CSV

Common flags: --config, --seed, --out, --format, --plot.  Exit codes:
0 success, 1 validation error, 2 numerical failure.  With --plot each
command also renders matplotlib figures next to its data files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, dataio, plots
from .benchmark import NoiseBenchmarkConfig, benchmark_noise
from .dataio import ConfigError, fmt
from .forward import (
    DispersionParams,
    add_poisson_noise,
    apply_dispersion,
    measurement_window,
    modulate,
    phase_jitter_ensemble,
    simulate_spectrogram,
)
from .ladder import Coupling, SidebandState, SidebandWindow, minimal_halfwidth
from .preprocess import extract_sidebands
from .rabbitt import rabbitt_retrieve
from .reconstruction import (
    ReconstructionConfig,
    SolverError,
    fit_g_single_color,
    squirrels_reconstruct,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="squirrels",
                                description="Phase-modulated free-electron states: "
                                            "simulation, tomography, analysis")
    p.add_argument("--config", type=Path, help="run configuration (JSON)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="preferred tabular output format")
    p.add_argument("--plot", action="store_true", help="render figures next to outputs")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="simulate a spectrogram from a config")

    pr = sub.add_parser("reconstruct", help="reconstruct a density matrix")
    pr.add_argument("spectrogram", type=Path)

    pb = sub.add_parser("rabbitt", help="weak-probe phase retrieval")
    pb.add_argument("spectrogram", type=Path)

    pw = sub.add_parser("wigner", help="Wigner function of a stored state")
    pw.add_argument("density", type=Path)
    pw.add_argument("--n-time", type=int, default=512)

    pm = sub.add_parser("pulse-metrics", help="temporal density and pulse metrics")
    pm.add_argument("density", type=Path)
    pm.add_argument("--n-time", type=int, default=8192)

    pg = sub.add_parser("fit-g", help="coupling magnitude from single-color populations")
    pg.add_argument("populations", type=Path)

    pe = sub.add_parser("extract-sidebands", help="comb fit of a raw energy spectrum")
    pe.add_argument("spectrum", type=Path)

    sub.add_parser("benchmark-noise", help="reconstruction error vs probe/pump ratio")
    return p


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    if not args.config.exists():
        raise ConfigError(f"config file not found: {args.config}")
    return dataio.load_config(args.config)


def _seed(args, cfg) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


def _coupling(cfg: dict, key: str, default=None) -> Coupling:
    c = cfg.get("couplings", {}).get(key)
    if c is None:
        if default is None:
            raise ConfigError(f"config needs couplings.{key}")
        return default
    return Coupling(float(c["magnitude"]), float(c.get("phase", 0.0)),
                    int(c.get("harmonic", 1)))


def _theta_grid(cfg: dict, prep: Coupling) -> np.ndarray:
    t = cfg.get("theta", {})
    count = int(t.get("count", 24))
    start = float(t.get("start", 0.0))
    default_stop = np.pi if prep.harmonic == 2 else 2.0 * np.pi
    stop = float(t.get("stop", default_stop))
    if count < 1:
        raise ConfigError("theta.count must be >= 1")
    return np.linspace(start, stop, count, endpoint=False)


def _chi(cfg: dict) -> float:
    d = cfg.get("dispersion")
    if not d:
        return 0.0
    return DispersionParams(**d).resolve()


def _recon_config(cfg: dict) -> ReconstructionConfig:
    rc = dict(cfg.get("reconstruction", {}))
    window = cfg.get("window")
    state_window = dataio.window_from_dict(window) if window else None
    return ReconstructionConfig(state_window=state_window, **rc)


def _write_table(out_dir: Path, stem: str, header: list, rows: list,
                 fmt_kind: str) -> Path:
    """Write a table as CSV or as a JSON list of row objects."""
    if fmt_kind == "json":
        path = out_dir / f"{stem}.json"
        payload = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(payload, indent=1))
    else:
        path = out_dir / f"{stem}.csv"
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(str(v) for v in row))
        path.write_text("\n".join(lines) + "\n")
    return path


def _write_populations_csv(path, orders, populations) -> None:
    lines = ["order,population"]
    for n, v in zip(orders, populations):
        lines.append(f"{int(n)},{fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_populations_csv(path):
    orders, pops = [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("order"):
            continue
        n, v = line.split(",")
        orders.append(int(n))
        pops.append(float(v))
    return np.array(orders), np.array(pops)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_simulate(args, cfg) -> int:
    prep = _coupling(cfg, "prep")
    probe = _coupling(cfg, "probe")
    chi = _chi(cfg)
    jitter = cfg.get("jitter", {})
    sigma = float(jitter.get("sigma_phase", 0.0))
    if sigma > 0:
        rho = phase_jitter_ensemble(prep, chi, sigma,
                                    n_samples=int(jitter.get("n_samples", 21)))
    else:
        half = minimal_halfwidth(prep, tol=1e-14)
        stride = 2 if prep.harmonic == 2 else 1
        state_window = SidebandWindow(-half, half, stride)
        state = modulate(SidebandState.zero_loss(state_window), prep)
        rho = apply_dispersion(state.density_matrix(), chi)
    theta = _theta_grid(cfg, prep)
    if "window" in cfg:
        meas = dataio.window_from_dict(cfg["window"])
    else:
        meas = measurement_window(rho.window, probe)
    spec = simulate_spectrogram(rho, probe, theta, meas)
    noise = cfg.get("noise", {})
    if noise.get("counts_per_spectrum"):
        spec = add_poisson_noise(spec, float(noise["counts_per_spectrum"]), _seed(args, cfg))

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "spectrogram.csv").write_text(dataio.spectrogram_to_csv(spec))
    dataio.save_density(rho, out / "state.json")
    print(f"wrote {out / 'spectrogram.csv'} and {out / 'state.json'}")
    if args.plot:
        plots.save_spectrogram_plot(spec, out / "spectrogram.png")
        plots.save_density_matrix_plot(rho, out / "state.png")
    return EXIT_OK


def _cmd_reconstruct(args, cfg) -> int:
    probe = None
    if cfg.get("couplings", {}).get("probe"):
        probe = _coupling(cfg, "probe")
    spec = dataio.spectrogram_from_csv(args.spectrogram.read_text(), probe=probe)
    rcfg = _recon_config(cfg)
    report = squirrels_reconstruct(spec, spec.probe, rcfg)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    dataio.save_density(report.rho_hat, out / "density.json")
    (out / "refit_spectrogram.csv").write_text(dataio.spectrogram_to_csv(report.refit_spectrogram))
    payload = {
        "alpha_selected": fmt(report.alpha_selected),
        "delta": fmt(report.delta),
        "snr": fmt(report.snr),
        "converged": report.converged,
        "warnings": report.warnings,
        "purity": fmt(report.rho_hat.purity()),
        "alpha_grid": [fmt(a) for a in report.alpha_grid],
        "residual_curve": [fmt(r) for r in report.residual_curve],
        "residual_history": [fmt(r) for r in report.residual_history],
    }
    (out / "report.json").write_text(json.dumps(payload, indent=1))
    print(f"wrote {out / 'density.json'} and {out / 'report.json'} "
          f"(alpha={report.alpha_selected:.3e}, delta={report.delta:.3e})")
    if args.plot:
        plots.save_density_matrix_plot(report.rho_hat, out / "density.png")
        plots.save_spectrogram_plot(report.refit_spectrogram, out / "refit_spectrogram.png")
    return EXIT_OK


def _cmd_rabbitt(args, cfg) -> int:
    probe = None
    if cfg.get("couplings", {}).get("probe"):
        probe = _coupling(cfg, "probe")
    spec = dataio.spectrogram_from_csv(args.spectrogram.read_text(), probe=probe)
    result = rabbitt_retrieve(spec, spec.probe)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "phase_diffs": {str(k): fmt(v) for k, v in result.phase_diffs.items()},
        "cumulative_phases": {str(k): fmt(v) for k, v in result.cumulative_phases.items()},
        "magnitudes": {str(k): fmt(v) for k, v in result.magnitudes.items()},
        "unreliable": result.unreliable,
    }
    (out / "rabbitt.json").write_text(json.dumps(payload, indent=1))
    rows = [[n, fmt(result.cumulative_phases[n]), fmt(result.magnitudes.get(n, 0.0))]
            for n in sorted(result.cumulative_phases)]
    table = _write_table(out, "rabbitt_phases", ["order", "cumulative_phase", "magnitude"],
                         rows, args.format)
    print(f"wrote {out / 'rabbitt.json'} and {table}")
    if args.plot:
        plots.save_rabbitt_plot(result, out / "rabbitt.png")
    return EXIT_OK


def _cmd_wigner(args, cfg) -> int:
    rho = dataio.load_density(args.density)
    grid = analysis.wigner_from_density(rho, n_time=args.n_time)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        payload = {"energies": [fmt(j) for j in grid.energies],
                   "times": [fmt(t) for t in grid.times],
                   "values": [[fmt(v) for v in row] for row in grid.values]}
        target = out / "wigner.json"
        target.write_text(json.dumps(payload, indent=1))
    else:
        lines = ["energy," + ",".join(fmt(t) for t in grid.times)]
        for j, row in zip(grid.energies, grid.values):
            lines.append(fmt(j) + "," + ",".join(fmt(v) for v in row))
        target = out / "wigner.csv"
        target.write_text("\n".join(lines) + "\n")
    print(f"wrote {target}")
    if args.plot:
        plots.save_wigner_plot(grid, out / "wigner.png")
    return EXIT_OK


def _cmd_pulse_metrics(args, cfg) -> int:
    rho = dataio.load_density(args.density)
    period = analysis.density_period(rho)
    n_time = max(int(args.n_time), 4096)
    times = np.arange(n_time) / n_time * period
    dens = analysis.temporal_density(rho, times)
    metrics = analysis.pulse_metrics(dens, times)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out, "temporal_density", ["time_s", "density"],
                 [[fmt(t), fmt(v)] for t, v in zip(times, dens)], args.format)
    payload = {
        "baseline_fraction": fmt(metrics.baseline_fraction),
        "rms_width_s": fmt(metrics.rms_width),
        "fwhm_s": fmt(metrics.fwhm),
        "peak_time_s": fmt(metrics.peak_time),
        "multi_peak": metrics.multi_peak,
        "period_s": fmt(period),
    }
    (out / "pulse_metrics.json").write_text(json.dumps(payload, indent=1))
    print(f"rms = {metrics.rms_width * 1e18:.1f} as, fwhm = {metrics.fwhm * 1e18:.1f} as, "
          f"baseline = {metrics.baseline_fraction:.3f}")
    if args.plot:
        plots.save_temporal_density_plot(times, dens, out / "temporal_density.png")
    return EXIT_OK


def _cmd_fit_g(args, cfg) -> int:
    orders, pops = _read_populations_csv(args.populations)
    lo, hi = int(orders.min()), int(orders.max())
    window = SidebandWindow(min(lo, 0), max(hi, 0))
    if not np.array_equal(orders, window.indices()):
        raise ConfigError("populations file must cover a contiguous order range")
    g = fit_g_single_color(pops, window=window)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "fit_g.json").write_text(json.dumps({"g_magnitude": fmt(g)}, indent=1))
    print(f"|g| = {g:.4f}")
    return EXIT_OK


def _cmd_extract(args, cfg) -> int:
    raw = dataio.load_raw_spectrum(args.spectrum)
    result = extract_sidebands(raw)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_populations_csv(out / "populations.csv", result.orders, result.populations)
    payload = {
        "width": fmt(result.width),
        "eta": fmt(result.eta),
        "comb_offset": fmt(result.comb_offset),
        "background": {k: fmt(v) for k, v in result.background.items()},
        "rel_residual": fmt(result.rel_residual),
        "warnings": result.warnings,
    }
    (out / "extraction.json").write_text(json.dumps(payload, indent=1))
    print(f"wrote {out / 'populations.csv'} (relative residual {result.rel_residual:.2e})")
    return EXIT_OK


def _cmd_benchmark(args, cfg) -> int:
    b = cfg.get("benchmark", {})
    kwargs = {}
    if "ratios" in b:
        kwargs["ratios"] = tuple(float(r) for r in b["ratios"])
    if "prep_strengths" in b:
        kwargs["prep_strengths"] = tuple(float(g) for g in b["prep_strengths"])
    if "counts_per_spectrum" in b:
        kwargs["counts_per_spectrum"] = float(b["counts_per_spectrum"])
    if "repeats" in b:
        kwargs["repeats"] = int(b["repeats"])
    if "theta_count" in b:
        kwargs["theta_count"] = int(b["theta_count"])
    if "alpha_points" in b:
        kwargs["alpha_points"] = int(b["alpha_points"])
    bench_cfg = NoiseBenchmarkConfig(seed=_seed(args, cfg), **kwargs)
    rows = benchmark_noise(bench_cfg)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    table = _write_table(out, "benchmark_noise", ["ratio", "mean_error", "std_error"],
                         [[fmt(r.ratio), fmt(r.mean_error), fmt(r.std_error)] for r in rows],
                         args.format)
    print(f"wrote {table}")
    if args.plot:
        plots.save_benchmark_plot(rows, out / "benchmark_noise.png")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "rabbitt": _cmd_rabbitt,
    "wigner": _cmd_wigner,
    "pulse-metrics": _cmd_pulse_metrics,
    "fit-g": _cmd_fit_g,
    "extract-sidebands": _cmd_extract,
    "benchmark-noise": _cmd_benchmark,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
