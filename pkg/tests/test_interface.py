import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fcsim import default_config
from fcsim.cli import main
from fcsim.config import DEFAULT_ANGLES, DEFAULT_MASTER_SEED
from fcsim.errors import ConfigError
from fcsim.io import (
    CSV_COLUMNS,
    build_result_rows,
    config_to_text,
    parse_config,
    read_results_csv,
    write_results_csv,
)
from fcsim.models import ModelKind
from fcsim.physics import qm_coincidence_ratio
from fcsim.plotting import emit_plot
from fcsim.runner import run_batch

DATA = Path(__file__).parent / "data"

MINI_DOC = {
    "angles": [0.0, math.pi / 8],
    "experiments": 3,
    "pairs_per_experiment": 1000,
    "master_seed": 20121972,
}


class TestParseConfig:
    def test_empty_document_gives_defaults(self):
        cfg = parse_config("{}")
        assert cfg == default_config()
        assert cfg.angles == DEFAULT_ANGLES
        assert cfg.master_seed == DEFAULT_MASTER_SEED
        assert cfg.experiments == 500 and cfg.pairs_per_experiment == 100_000

    def test_blank_text_gives_defaults(self):
        assert parse_config("") == default_config()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config('{"e1_parr": 0.9}')
        assert "e1_parr" in str(err.value)

    def test_inverted_efficiencies_name_both_keys(self):
        with pytest.raises(ConfigError) as err:
            parse_config('{"e1_par": 0.5, "e1_perp": 0.6}')
        assert "e1_par" in err.value.keys and "e1_perp" in err.value.keys

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            parse_config("{nope")

    def test_validation_catalogue(self):
        for doc, key in [
            ({"f1": 0.0}, "f1"),
            ({"f2": 1.5}, "f2"),
            ({"sigma": -0.1}, "sigma"),
            ({"angles": []}, "angles"),
            ({"angles": [0.2, 0.1]}, "angles"),
            ({"angles": [0.0, 2.0]}, "angles"),
            ({"pairs_per_experiment": 0}, "pairs_per_experiment"),
            ({"experiments": 0}, "experiments"),
            ({"master_seed": -1}, "master_seed"),
            ({"normalization": "weird"}, "normalization"),
            ({"wavelength1_cm": 0.0}, "wavelength1_cm"),
            ({"pairs_per_experiment": True}, "pairs_per_experiment"),
        ]:
            with pytest.raises(ConfigError) as err:
                parse_config(json.dumps(doc))
            assert key in err.value.keys, doc

    def test_round_trip_is_bit_exact(self):
        cfg = parse_config(json.dumps({
            "angles": [0.0, 0.19635, 0.5, math.pi / 2],
            "f2": 0.9222,
            "sigma": 0.2131,
            "master_seed": 123456789,
        }))
        again = parse_config(config_to_text(cfg))
        assert again == cfg
        assert all(a == b for a, b in zip(again.angles, cfg.angles))

    @given(st.lists(st.floats(min_value=0.0, max_value=math.pi / 2,
                              allow_nan=False), min_size=1, max_size=9, unique=True))
    def test_any_valid_angle_grid_round_trips(self, angles):
        doc = {"angles": sorted(angles)}
        cfg = parse_config(json.dumps(doc))
        assert parse_config(config_to_text(cfg)) == cfg


@pytest.fixture(scope="module")
def small_batches():
    cfg = default_config().replace(experiments=2, pairs_per_experiment=1000)
    return cfg, [
        run_batch(ModelKind.COLLAPSE, cfg, f2=0.9222, workers=1),
        run_batch(ModelKind.LOCAL_REALISTIC, cfg, f2=0.9222, workers=1),
    ]


class TestResultsCsv:

    def test_round_trip(self, small_batches, tmp_path):
        cfg, batches = small_batches
        rows = build_result_rows(batches, cfg)
        path = tmp_path / "results.csv"
        write_results_csv(path, rows)
        back = read_results_csv(path)
        assert back == rows

    def test_row_count_is_angles_times_models(self, small_batches, tmp_path):
        cfg, batches = small_batches
        rows = build_result_rows(batches, cfg)
        assert len(rows) == len(cfg.angles) * len(batches)

    def test_header_and_line_endings(self, small_batches, tmp_path):
        cfg, batches = small_batches
        path = tmp_path / "results.csv"
        write_results_csv(path, build_result_rows(batches, cfg))
        raw = path.read_bytes()
        assert raw.startswith((",".join(CSV_COLUMNS)).encode())
        assert b"\r\n" not in raw

    def test_none_se_round_trips_as_empty(self, tmp_path):
        cfg = default_config().replace(experiments=1, pairs_per_experiment=1000)
        batch = run_batch(ModelKind.COLLAPSE, cfg, workers=1)
        rows = build_result_rows([batch], cfg)
        assert all(r["ratio_se"] is None for r in rows)
        path = tmp_path / "single.csv"
        write_results_csv(path, rows)
        assert read_results_csv(path) == rows

    def test_golden_mini_run(self, tmp_path, monkeypatch):
        # Frozen miniature run: 2 angles x 3 experiments x 1000 pairs. Both
        # kernel backends must reproduce the stored bytes exactly.
        golden = (DATA / "golden_mini.csv").read_bytes()
        cfg_path = tmp_path / "mini.json"
        cfg_path.write_text(json.dumps(MINI_DOC))
        for backend in ("numba", "numpy"):
            monkeypatch.setenv("FCSIM_BACKEND", backend)
            out = tmp_path / f"out_{backend}"
            assert main(["run", "--model", "collapse", "--config", str(cfg_path),
                         "--out", str(out)]) == 0
            assert (out / "results.csv").read_bytes() == golden


class TestEmitPlot:
    def test_curves_only(self, tmp_path):
        cfg = default_config()
        path = emit_plot(
            tmp_path / "curves.svg",
            curves=[("qm", lambda phi: qm_coincidence_ratio(phi, cfg))],
        )
        text = path.read_text()
        assert text.lstrip().startswith("<?xml") and "</svg>" in text

    def test_batch_with_degenerate_error_bars(self, tmp_path):
        cfg = default_config().replace(experiments=1, pairs_per_experiment=500)
        batch = run_batch(ModelKind.COLLAPSE, cfg, workers=1)
        assert all(s.ratio_se is None for s in batch.angle_stats())
        path = emit_plot(tmp_path / "bars.svg", batches=[batch])
        assert path.exists()

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_plot(tmp_path / "x.svg")


class TestCli:
    def test_predict_reference_value(self, capsys):
        assert main(["predict", "--phi", "0.7853981634"]) == 0
        out = capsys.readouterr().out
        assert "0.2512" in out

    def test_predict_full_grid(self, capsys):
        assert main(["predict"]) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 1 + 9

    def test_run_twice_identical_csv(self, tmp_path):
        args = ["run", "--model", "collapse", "--pairs", "1000",
                "--experiments", "2", "--seed", "7"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        csv_a = (tmp_path / "a" / "results.csv").read_bytes()
        csv_b = (tmp_path / "b" / "results.csv").read_bytes()
        assert csv_a == csv_b
        man_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
        man_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
        for volatile in ("created_utc", "argv"):  # timestamps and --out differ
            man_a.pop(volatile), man_b.pop(volatile)
        assert man_a == man_b

    def test_manifest_alone_reproduces_results(self, tmp_path):
        # A results file plus its manifest must suffice to regenerate the
        # results bit-exactly: the manifest's config snapshot carries every
        # effective setting, including CLI overrides.
        first = tmp_path / "first"
        assert main(["run", "--model", "smeared", "--sigma", "0.2131", "--pairs", "2000",
                     "--experiments", "3", "--seed", "31", "--out", str(first)]) == 0
        manifest = json.loads((first / "manifest.json").read_text())

        cfg_path = tmp_path / "from_manifest.json"
        cfg_path.write_text(json.dumps(manifest["config"]))
        second = tmp_path / "second"
        assert main(["run", "--model", manifest["notes"]["model"],
                     "--sigma", str(manifest["notes"]["sigma"]),
                     "--f2", str(manifest["notes"]["f2"]),
                     "--config", str(cfg_path), "--out", str(second)]) == 0
        assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()

    def test_manifest_records_provenance(self, tmp_path):
        out = tmp_path / "m"
        assert main(["run", "--model", "smeared", "--sigma", "0.2131", "--pairs", "500",
                     "--experiments", "2", "--seed", "9", "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "fcsim"
        assert manifest["master_seed"] == 9
        assert manifest["config"]["pairs_per_experiment"] == 500
        assert "philox" in manifest["rng_algorithm"].lower()
        assert manifest["backend"] in ("numba", "numpy")
        assert "results.csv" in manifest["outputs"]

    def test_replicate_smoke_emits_all_artifacts(self, tmp_path):
        out = tmp_path / "rep"
        assert main(["replicate", "--scale", "0.02", "--out", str(out)]) == 0
        for name in ["results.csv", "fit_f2.json", "fit_sigma.json", "deviations.json",
                     "correlation_length.json", "fig_collapse_local.svg",
                     "fig_smeared.svg", "manifest.json"]:
            assert (out / name).exists(), name
        rows = read_results_csv(out / "results.csv")
        assert len(rows) == 27  # 3 models x 9 angles
        fit = json.loads((out / "fit_f2.json").read_text())
        assert 0.89 < fit["value"] < 0.95

    def test_report_reads_stored_results(self, tmp_path, capsys):
        out = tmp_path / "rep"
        assert main(["run", "--model", "collapse", "--pairs", "800",
                     "--experiments", "3", "--out", str(out)]) == 0
        capsys.readouterr()
        assert main(["report", "--results", str(out)]) == 0
        text = capsys.readouterr().out
        assert "model collapse" in text and "phi<=pi/8" in text

    def test_bench_runs(self, capsys):
        assert main(["bench", "--pairs", "20000", "--repeats", "2"]) == 0
        assert "agree: True" in capsys.readouterr().out

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["--bogus"]) == 1
        assert main(["run", "--model", "collapse", "--bogus"]) == 1

    def test_no_command_exits_1(self):
        assert main([]) == 1

    def test_invalid_config_exits_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"e1_par": 0.5, "e1_perp": 0.6}')
        assert main(["predict", "--config", str(bad)]) == 1

    def test_infeasible_fit_exits_2(self, tmp_path):
        assert main(["fit", "sigma", "--f2", "0.5", "--out", str(tmp_path)]) == 2

    def test_fit_without_parameter_exits_1(self):
        assert main(["fit"]) == 1

    def test_fit_sigma_closed_form(self, tmp_path, capsys):
        out = tmp_path / "fs"
        assert main(["fit", "sigma", "--f2", "0.93111", "--out", str(out)]) == 0
        fit = json.loads((out / "fit_sigma.json").read_text())
        assert abs(fit["value"] - 0.2131) < 1e-3

    def test_precedence_flags_over_config_over_defaults(self, tmp_path):
        # Three representative keys: master_seed, pairs_per_experiment, experiments.
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "master_seed": 11, "pairs_per_experiment": 700, "experiments": 4,
            "angles": [0.0],
        }))
        out1 = tmp_path / "o1"
        assert main(["run", "--model", "collapse", "--config", str(cfg_path),
                     "--out", str(out1)]) == 0
        man1 = json.loads((out1 / "manifest.json").read_text())["config"]
        assert (man1["master_seed"], man1["pairs_per_experiment"], man1["experiments"]) == (11, 700, 4)

        out2 = tmp_path / "o2"
        assert main(["run", "--model", "collapse", "--config", str(cfg_path),
                     "--seed", "22", "--pairs", "900", "--experiments", "5",
                     "--out", str(out2)]) == 0
        man2 = json.loads((out2 / "manifest.json").read_text())["config"]
        assert (man2["master_seed"], man2["pairs_per_experiment"], man2["experiments"]) == (22, 900, 5)

        out3 = tmp_path / "o3"
        assert main(["run", "--model", "collapse", "--pairs", "600",
                     "--experiments", "2", "--out", str(out3)]) == 0
        man3 = json.loads((out3 / "manifest.json").read_text())["config"]
        assert man3["master_seed"] == DEFAULT_MASTER_SEED  # default when no config/flag
        assert man3["pairs_per_experiment"] == 600

    def test_scale_multiplies_experiments_only(self, tmp_path):
        out = tmp_path / "sc"
        assert main(["run", "--model", "collapse", "--pairs", "500",
                     "--scale", "0.01", "--out", str(out)]) == 0
        man = json.loads((out / "manifest.json").read_text())["config"]
        assert man["experiments"] == 5  # round(500 * 0.01)
        assert man["pairs_per_experiment"] == 500
