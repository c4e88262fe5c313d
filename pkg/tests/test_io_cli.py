import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_density
from squirrels import Coupling, SidebandWindow, bessel_j
from squirrels.cli import main as cli_main
from squirrels.dataio import (
    ConfigError,
    RawSpectrum,
    density_from_json,
    density_to_json,
    load_raw_spectrum,
    save_raw_spectrum,
    spectrogram_from_csv,
    spectrogram_to_csv,
    validate_config,
)
from squirrels.preprocess import extract_sidebands


class TestSerialization:
    def test_density_json_round_trip_is_exact(self, rng):
        rho = random_density(SidebandWindow(-6, 6, 2), rng)
        back = density_from_json(density_to_json(rho))
        assert np.array_equal(back.entries, rho.entries)
        assert back.window == rho.window

    def test_spectrogram_csv_round_trip_is_exact(self, rng):
        w = SidebandWindow(-5, 5)
        pops = rng.random((w.size, 7))
        pops /= pops.sum(axis=0)
        from squirrels.forward import Spectrogram
        spec = Spectrogram(pops, np.linspace(0, 2 * np.pi, 7, endpoint=False),
                           Coupling(1.3, 0.2), w, counts_per_spectrum=1e4)
        back = spectrogram_from_csv(spectrogram_to_csv(spec))
        assert np.array_equal(back.populations, spec.populations)
        assert np.array_equal(back.theta_grid, spec.theta_grid)
        assert back.probe == spec.probe
        assert back.window == spec.window
        assert back.counts_per_spectrum == spec.counts_per_spectrum

    def test_raw_spectrum_round_trip(self, tmp_path, rng):
        e = np.linspace(-8, 8, 321)
        raw = RawSpectrum(e, rng.random(321) * 100, photon_energy=1.55)
        path = tmp_path / "raw.csv"
        save_raw_spectrum(raw, path)
        back = load_raw_spectrum(path)
        assert np.array_equal(back.energy_axis, raw.energy_axis)
        assert np.array_equal(back.counts, raw.counts)
        assert back.photon_energy == raw.photon_energy


class TestConfigValidation:
    def test_valid_config_passes(self):
        cfg = {
            "kind": "two-color",
            "seed": 7,
            "couplings": {"prep": {"magnitude": 0.63, "harmonic": 2},
                          "probe": {"magnitude": 2.16, "harmonic": 1}},
            "theta": {"count": 24},
            "reconstruction": {"tau": 1.01},
        }
        assert validate_config(cfg) is cfg

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError, match="couplings.prep.magnitud"):
            validate_config({"couplings": {"prep": {"magnitud": 1.0}}})

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key: spam"):
            validate_config({"spam": 1})

    def test_wrong_type_is_reported(self):
        with pytest.raises(ConfigError, match="seed"):
            validate_config({"seed": "twelve"})
        with pytest.raises(ConfigError, match="kind"):
            validate_config({"kind": "three-color"})


class TestExtractSidebands:
    def _synthetic(self, amps, orders, width=0.3, eta=0.4, photon=1.55,
                   background=None, npts=1801):
        e = np.linspace(-14, 14, npts)
        y = np.zeros_like(e)
        for a, n in zip(amps, orders):
            x = (e - n * photon) / width
            y += a * (eta / (1 + 4 * x * x) + (1 - eta) * np.exp(-4 * np.log(2) * x * x))
        if background is not None:
            b, mu, sl, sh = background
            d = e - mu
            sig = np.where(d < 0, sl, sh)
            y += b * np.exp(-0.5 * (d / sig) ** 2)
        return RawSpectrum(e, y, photon_energy=photon)

    def test_clean_comb_recovered(self):
        orders = np.arange(-7, 8)
        amps = np.array([bessel_j(n, 4.4) ** 2 for n in orders])
        raw = self._synthetic(amps, orders)
        res = extract_sidebands(raw, fit_background=False)
        truth = amps / amps.sum()
        lookup = dict(zip(res.orders, res.populations))
        for n, t in zip(orders, truth):
            assert abs(lookup[n] - t) < 1e-6
        assert res.width == pytest.approx(0.3, abs=1e-3)
        assert res.eta == pytest.approx(0.4, abs=1e-2)

    def test_zero_counts_rejected(self):
        raw = RawSpectrum(np.linspace(-5, 5, 100), np.zeros(100))
        with pytest.raises(ValueError):
            extract_sidebands(raw)

    def test_background_does_not_corrupt_amplitudes(self):
        orders = np.arange(-7, 8)
        amps = np.array([bessel_j(n, 4.4) ** 2 for n in orders])
        raw = self._synthetic(amps, orders, background=(0.1 * amps.max(), -3.0, 4.0, 2.0))
        res = extract_sidebands(raw)
        truth = amps / amps.sum()
        lookup = dict(zip(res.orders, res.populations))
        for n, t in zip(orders, truth):
            assert abs(lookup[n] - t) < 0.01 * max(truth.max(), 1e-12)


@pytest.fixture
def sim_config(tmp_path):
    cfg = {
        "kind": "two-color",
        "seed": 11,
        "couplings": {"prep": {"magnitude": 0.63, "phase": 0.0, "harmonic": 2},
                      "probe": {"magnitude": 2.16, "harmonic": 1}},
        "theta": {"count": 12},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestCli:
    def test_simulate_then_reconstruct(self, tmp_path, sim_config):
        out = tmp_path / "run"
        rc = cli_main(["--config", str(sim_config), "--out", str(out), "simulate"])
        assert rc == 0
        spec_csv = out / "spectrogram.csv"
        assert spec_csv.exists()
        spec = spectrogram_from_csv(spec_csv.read_text())
        assert np.max(np.abs(spec.populations.sum(axis=0) - 1.0)) < 1e-9

        rc = cli_main(["--out", str(out), "reconstruct", str(spec_csv)])
        assert rc == 0
        rho = density_from_json((out / "density.json").read_text())
        rho.validate()
        report = json.loads((out / "report.json").read_text())
        # noiseless data: delta is limited only by the inferred-window cut
        assert float(report["delta"]) < 1e-3
        truth = density_from_json((out / "state.json").read_text())
        sl = truth.window.crop_slice(rho.window)
        block = truth.entries[sl, sl]
        assert np.linalg.norm(rho.entries - block) < 0.05

    def test_byte_identical_reruns(self, tmp_path, sim_config):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert cli_main(["--config", str(sim_config), "--seed", "5",
                             "--out", str(out), "simulate"]) == 0
            outs.append((out / "spectrogram.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_bad_config_exits_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"speed": 3}))
        assert cli_main(["--config", str(bad), "--out", str(tmp_path), "simulate"]) == 1

    def test_missing_config_exits_one(self, tmp_path):
        assert cli_main(["--config", str(tmp_path / "none.json"),
                         "--out", str(tmp_path), "simulate"]) == 1

    def test_wigner_and_pulse_metrics(self, tmp_path, sim_config):
        out = tmp_path / "run"
        cli_main(["--config", str(sim_config), "--out", str(out), "simulate"])
        rc = cli_main(["--out", str(out), "wigner", str(out / "state.json"),
                       "--n-time", "128"])
        assert rc == 0
        assert (out / "wigner.csv").exists()
        rc = cli_main(["--out", str(out), "pulse-metrics", str(out / "state.json")])
        assert rc == 0
        metrics = json.loads((out / "pulse_metrics.json").read_text())
        assert float(metrics["rms_width_s"]) > 0

    def test_rabbitt_command(self, tmp_path):
        cfg = {
            "kind": "two-color",
            "couplings": {"prep": {"magnitude": 1.85, "harmonic": 2},
                          "probe": {"magnitude": 0.13, "harmonic": 1}},
            "theta": {"count": 24},
        }
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        assert cli_main(["--config", str(cfg_path), "--out", str(out), "simulate"]) == 0
        rc = cli_main(["--out", str(out), "rabbitt", str(out / "spectrogram.csv")])
        assert rc == 0
        data = json.loads((out / "rabbitt.json").read_text())
        assert "0" in data["cumulative_phases"]

    def test_fit_g_command(self, tmp_path):
        raw = np.array([bessel_j(n, 4.4) ** 2 for n in range(-10, 11)])
        raw /= raw.sum()
        lines = ["order,population"]
        for n, v in zip(range(-10, 11), raw):
            lines.append(f"{n},{float(v)!r}")
        pop_csv = tmp_path / "pops.csv"
        pop_csv.write_text("\n".join(lines) + "\n")
        assert cli_main(["--out", str(tmp_path), "fit-g", str(pop_csv)]) == 0
        assert json.loads((tmp_path / "fit_g.json").read_text())[
            "g_magnitude"].startswith("2.19") or json.loads(
            (tmp_path / "fit_g.json").read_text())["g_magnitude"].startswith("2.20")

    def test_extract_sidebands_command(self, tmp_path):
        orders = np.arange(-5, 6)
        amps = np.array([bessel_j(n, 2.0) ** 2 for n in orders])
        e = np.linspace(-10, 10, 1201)
        y = np.zeros_like(e)
        for a, n in zip(amps, orders):
            x = (e - n * 1.55) / 0.3
            y += a * (0.4 / (1 + 4 * x * x) + 0.6 * np.exp(-4 * np.log(2) * x * x))
        raw_path = tmp_path / "raw.csv"
        save_raw_spectrum(RawSpectrum(e, y, 1.55), raw_path)
        assert cli_main(["--out", str(tmp_path), "extract-sidebands", str(raw_path)]) == 0
        assert (tmp_path / "populations.csv").exists()

    def test_benchmark_noise_smoke(self, tmp_path):
        cfg = {"seed": 3,
               "benchmark": {"ratios": [2.0], "prep_strengths": [0.6],
                             "repeats": 1, "theta_count": 12, "alpha_points": 12}}
        cfg_path = tmp_path / "b.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = cli_main(["--config", str(cfg_path), "--out", str(tmp_path),
                       "benchmark-noise"])
        assert rc == 0
        lines = (tmp_path / "benchmark_noise.csv").read_text().strip().splitlines()
        assert lines[0] == "ratio,mean_error,std_error"
        assert len(lines) == 2

    def test_plot_flag_writes_figures(self, tmp_path, sim_config):
        out = tmp_path / "run"
        assert cli_main(["--config", str(sim_config), "--out", str(out),
                         "--plot", "simulate"]) == 0
        assert (out / "spectrogram.png").exists()
        assert (out / "state.png").exists()

    def test_entry_point_runs(self):
        proc = subprocess.run([sys.executable, "-m", "squirrels.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "simulate" in proc.stdout
