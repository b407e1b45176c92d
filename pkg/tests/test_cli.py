"""CLI contract: documents, exit codes, determinism."""

import json

import numpy as np
import pytest

from sdwtc.cli import main
from sdwtc.gallery import build_msaf_example
from sdwtc.prob import Auxiliary, CondKernel
from sdwtc.specio import emit_aux_spec, emit_channel_spec


@pytest.fixture
def msaf_files(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1754870400")
    rc = main(["example", "msaf", "--sigma", "0.25", "--out-dir", str(tmp_path)])
    assert rc == 0
    return tmp_path / "msaf_channel.json", tmp_path / "msaf_aux.json"


def run_json(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, (json.loads(out) if out.strip().startswith("{") else out)


class TestRegionCommand:
    def test_reference_aux_sum_intercept(self, msaf_files, capsys):
        ch, aux = msaf_files
        rc, doc = run_json(capsys, ["region", "--channel", str(ch), "--aux", str(aux)])
        assert rc == 0
        assert doc["intercepts"]["sum"] == pytest.approx(0.603218, abs=1e-6)
        assert doc["manifest"]["command"] == "region"
        assert len(doc["polygon"]) >= 3

    def test_malformed_file_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        rc = main(["region", "--channel", str(bad), "--search"])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file_is_validation_error(self, tmp_path):
        rc = main(["region", "--channel", str(tmp_path / "nope.json"), "--search"])
        assert rc == 1

    def test_per_scheme_precondition_surfaced(self, msaf_files, tmp_path, capsys):
        ch, _ = msaf_files
        # Inner letter copies the composite state: maximally correlated.
        table = np.zeros((6, 6, 1, 2))
        for s in range(6):
            table[s, s, 0, :] = 0.5
        aux = Auxiliary(6, 1, CondKernel((6,), 12, table.reshape(6, 12)))
        aux_path = tmp_path / "corr.json"
        aux_path.write_text(emit_aux_spec(aux), encoding="utf-8")
        rc = main(
            ["region", "--channel", str(ch), "--aux", str(aux_path), "--scheme", "per"]
        )
        assert rc == 1
        assert "depends on the state" in capsys.readouterr().err

    def test_search_emits_frontier(self, msaf_files, capsys):
        ch, _ = msaf_files
        rc, doc = run_json(
            capsys,
            ["region", "--channel", str(ch), "--search", "--card-u", "2",
             "--card-v", "4", "--restarts", "6", "--steps", "60"],
        )
        assert rc == 0
        assert len(doc["search"]["sweep"]) == 11
        assert doc["aux"]["alphabets"] == {"U": 2, "V": 4}

    def test_budget_exit_code(self, msaf_files, monkeypatch):
        ch, aux = msaf_files
        monkeypatch.setenv("SDWTC_CELL_BUDGET", "10")
        rc = main(["region", "--channel", str(ch), "--aux", str(aux)])
        assert rc == 2


class TestCompareCommand:
    def test_single_scheme_one_row(self, msaf_files, capsys):
        ch, _ = msaf_files
        rc, doc = run_json(
            capsys,
            ["compare", "--channel", str(ch), "--schemes", "GCP", "--card-u", "2",
             "--card-v", "4", "--restarts", "6", "--steps", "40"],
        )
        assert rc == 0
        assert len(doc["rows"]) == 1
        assert doc["rows"][0]["scheme"] == "GCP"
        assert doc["rows"][0]["rm_intercept"] == doc["rows"][0]["sum_intercept"]

    def test_unknown_scheme_rejected(self, msaf_files, capsys):
        ch, _ = msaf_files
        rc = main(["compare", "--channel", str(ch), "--schemes", "A,WAT"])
        assert rc == 1

    def test_identical_outputs_channel_zero_secrecy(self, tmp_path, capsys, rng):
        # z = y with probability one: every scheme reports zero secrecy sum.
        from sdwtc.prob import FinitePmf, SdWtc

        s, x, y = 2, 2, 2
        base = rng.dirichlet(np.ones(y), size=s * x)
        rows = np.zeros((s * x, y * y))
        for i in range(s * x):
            for yy in range(y):
                rows[i, yy * y + yy] = base[i, yy]
        wtc = SdWtc(FinitePmf([0.6, 0.4]), CondKernel((s, x), y * y, rows),
                    card_Y=y, card_Z=y)
        path = tmp_path / "mirror.json"
        path.write_text(emit_channel_spec(wtc), encoding="utf-8")
        rc, doc = run_json(
            capsys,
            ["compare", "--channel", str(path), "--schemes", "A,PER,GCP",
             "--card-u", "2", "--card-v", "2", "--restarts", "6", "--steps", "60"],
        )
        assert rc == 0
        for row in doc["rows"]:
            assert row["sum_intercept"] == pytest.approx(0.0, abs=1e-9)

    def test_layered_scheme_beats_independent_inner_by_wide_margin(
        self, msaf_files, capsys
    ):
        # Default search budget on the stuck-at example: the state-correlated
        # inner layer buys well over 0.1 bit of message rate.
        ch, _ = msaf_files
        rc, doc = run_json(
            capsys,
            ["compare", "--channel", str(ch), "--schemes", "A,PER", "--card-v", "6"],
        )
        assert rc == 0
        rows = {r["scheme"]: r for r in doc["rows"]}
        gap = rows["A"]["rm_intercept"] - rows["PER"]["rm_intercept"]
        assert gap > 0.1

    def test_csv_rows(self, msaf_files, capsys):
        ch, _ = msaf_files
        rc = main(
            ["compare", "--channel", str(ch), "--schemes", "GCP", "--card-u", "2",
             "--card-v", "2", "--restarts", "4", "--steps", "30", "--format", "csv"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("scheme,")
        assert len(lines) == 2


class TestExampleCommand:
    def test_sigma_out_of_range(self, tmp_path):
        rc = main(["example", "msaf", "--sigma", "0.7", "--out-dir", str(tmp_path)])
        assert rc == 1

    def test_coin_values(self, tmp_path, capsys):
        rc, doc = run_json(capsys, ["example", "coin", "--out-dir", str(tmp_path)])
        assert rc == 0
        assert doc["analytics"]["r_zib"] == pytest.approx(2.0, abs=1e-12)
        assert doc["analytics"]["cr_upper_bound"] == pytest.approx(2.0, abs=1e-12)
        assert (tmp_path / "coin_channel.json").exists()

    def test_emitted_files_parse_back(self, msaf_files):
        ch, aux = msaf_files
        from sdwtc.specio import parse_aux_spec, parse_channel_spec

        wtc = parse_channel_spec(ch.read_text(encoding="utf-8"))
        parsed = parse_aux_spec(aux.read_text(encoding="utf-8"))
        built, params, _ = build_msaf_example(0.25)
        assert wtc == built
        assert parsed.card_U == 2 and parsed.card_V == 4


class TestSimulateCommand:
    def test_exact_flag_reports_leakage(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1754870400")
        from sdwtc.prob import FinitePmf, SdWtc

        rows = np.zeros((4, 4))
        for s in range(2):
            for x in range(2):
                rows[s * 2 + x, x * 2 + x] += 0.75
                rows[s * 2 + x, x * 2 + (1 - x)] += 0.25
        wtc = SdWtc(FinitePmf([0.5, 0.5]), CondKernel((2, 2), 4, rows), card_Y=2, card_Z=2)
        table = np.zeros((2, 1, 2, 2))
        for s in range(2):
            for v in range(2):
                table[s, 0, v, v] = 0.8 if v == s else 0.2
        aux = Auxiliary(1, 2, CondKernel((2,), 4, table.reshape(2, 4)))
        ch = tmp_path / "micro.json"
        au = tmp_path / "aux.json"
        ch.write_text(emit_channel_spec(wtc), encoding="utf-8")
        au.write_text(emit_aux_spec(aux), encoding="utf-8")

        argv = ["simulate", "--channel", str(ch), "--aux", str(au), "--n", "4",
                "--eps-typ", "0.5", "--trials", "24", "--exact", "--seed", "3"]
        rc, doc = run_json(capsys, argv)
        assert rc == 0
        rep = doc["reports"][0]
        assert rep["leakage_bits"] is not None and rep["leakage_bits"] >= 0

        # Determinism: identical documents for a fixed seed.
        rc2 = main(argv)
        assert rc2 == 0
        text2 = capsys.readouterr().out
        rc3 = main(argv)
        text3 = capsys.readouterr().out
        assert rc3 == 0 and text2 == text3

        # Sweep: one row per (n, scale) grid point.
        rc4, doc4 = run_json(
            capsys,
            ["simulate", "--channel", str(ch), "--aux", str(au), "--eps-typ", "0.5",
             "--trials", "12", "--sweep-n", "4,6", "--rate-scale", "1.0,0.5"],
        )
        assert rc4 == 0
        assert len(doc4["reports"]) == 4
        scales = {r["rate_scale"] for r in doc4["reports"]}
        assert scales == {1.0, 0.5}
