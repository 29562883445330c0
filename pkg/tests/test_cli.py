import json

import pytest

from perronlab.cli import main


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


class TestCorrectFactors:
    def test_nested_verdict(self, tmp_path):
        code, out = run(["correct-factors"], tmp_path)
        assert code == 0
        data = json.loads((out / "correct_factors.json").read_text())
        assert data["verdict"]["kind"] == "LINEAR"
        assert abs(data["verdict"]["constant"] - 4.0) < 1e-9
        assert abs(data["alpha_star"] - 2.0) < 1e-9
        header = (out / "correct_factors.csv").read_text().splitlines()[0]
        assert header.split(",")[:4] == ["k", "area", "q_lo", "q_hi"]

    def test_lpgood_unbounded(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("family = lpgood\nlpgood_blocks = 8\ngrowth_cap = 50\nhorizon = auto\n")
        code, out = run(["correct-factors", "--config", str(conf)], tmp_path)
        assert code == 0
        data = json.loads((out / "correct_factors.json").read_text())
        assert data["verdict"]["kind"] == "UNBOUNDED"
        assert data["verdict"]["witness_ratio"] > 50.0

    def test_empty_sequence_usage_error(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("family = nobody\n")
        code, _ = run(["correct-factors", "--config", str(conf)], tmp_path)
        assert code == 2


class TestPerron:
    def test_forced_alpha_block_one(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("alpha = 0.5\n")
        code, out = run(["perron", "--config", str(conf), "--blocks", "1..1"], tmp_path)
        assert code == 0
        rows = (out / "perron.csv").read_text().splitlines()
        assert rows[1].split(",")[0] == "1"
        assert abs(float(rows[1].split(",")[1]) - 0.75) < 1e-9
        assert (out / "block_1.svg").exists()

    def test_block_zero(self, tmp_path):
        code, out = run(["perron", "--blocks", "0..0"], tmp_path)
        assert code == 0
        assert float((out / "perron.csv").read_text().splitlines()[1].split(",")[1]) == 1.0

    def test_missing_slopes_exit_2(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("slope_count = 8\n")
        code, _ = run(["perron", "--config", str(conf), "--blocks", "4..5"], tmp_path)
        assert code == 2


class TestThm2:
    def test_default_run(self, tmp_path):
        code, out = run(["thm2", "--blocks", "2..3", "--resolution", "256"], tmp_path)
        assert code == 0
        data = json.loads((out / "thm2.json").read_text())
        floors = [r["ratio_floor"] for r in data["rows"]]
        assert floors == sorted(floors)
        assert data["admissible"] is True

    def test_geometric_refusal_exit_3(self, tmp_path):
        conf = tmp_path / "c.conf"
        vals = ",".join(str(2.0**k - 1.0) for k in range(40))
        conf.write_text(f"slopes = explicit:{vals}\n")
        code, _ = run(["thm2", "--config", str(conf), "--blocks", "2..2"], tmp_path)
        assert code == 3

    def test_non_admissible_warning(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("delta_rule = const:1.0\n")
        code, out = run(
            ["thm2", "--config", str(conf), "--blocks", "2..3", "--resolution", "256"],
            tmp_path,
        )
        assert code == 0
        data = json.loads((out / "thm2.json").read_text())
        assert data["admissible"] is False
        assert "not admissible" in data["warning"]


class TestWeaktypeAndLemma72:
    def test_weaktype_small(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("trials = 2\nresolution = 256\nhorizon = 6\n")
        code, out = run(["weaktype", "--config", str(conf)], tmp_path)
        assert code == 0
        data = json.loads((out / "weaktype.json").read_text())
        assert data["all_passed"] is True
        assert len(data["rows"]) == 2 * 3 * 3

    def test_lemma72_small(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("samples = 200\nb_list = 0,1\nc_offsets = 1\n")
        code, out = run(["lemma72", "--config", str(conf)], tmp_path)
        assert code == 0
        data = json.loads((out / "lemma72.json").read_text())
        assert len(data["kits"]) == 2
        for kit in data["kits"]:
            assert kit["min_ratio"] >= kit["bound"] - 1e-9
            assert abs(kit["c_prime_ratio"] - 1.0 / 72.0) < 1e-9


class TestLpgoodCommand:
    def test_outputs(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("lpgood_blocks = 6\ngrowth_cap = 30\n")
        code, out = run(["lpgood", "--config", str(conf)], tmp_path)
        assert code == 0
        data = json.loads((out / "lpgood.json").read_text())
        assert data["verdict"]["kind"] == "UNBOUNDED"
        assert data["max_formula_error"] < 1e-9
        assert data["chain_count"] >= 2


class TestCliHygiene:
    def test_deterministic_outputs(self, tmp_path):
        _, out1 = run(["perron", "--blocks", "1..2"], tmp_path, "a")
        _, out2 = run(["perron", "--blocks", "1..2"], tmp_path, "b")
        for name in ("perron.csv", "block_1.svg", "block_2.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_csv_crlf(self, tmp_path):
        _, out = run(["perron", "--blocks", "1..1"], tmp_path)
        assert b"\r\n" in (out / "perron.csv").read_bytes()

    def test_bad_config_key(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("no_such_key = 1\n")
        code, _ = run(["perron", "--config", str(conf)], tmp_path)
        assert code == 2

    def test_flag_overrides_config(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("blocks = 4..5\nslope_count = 200\n")
        code, out = run(["perron", "--config", str(conf), "--blocks", "1..1"], tmp_path)
        assert code == 0
        rows = (out / "perron.csv").read_text().splitlines()
        assert len(rows) == 2 and rows[1].startswith("1,")

    def test_json_seventeen_digits(self, tmp_path):
        _, out = run(["thm2", "--blocks", "2..2", "--resolution", "256"], tmp_path)
        text = (out / "thm2.json").read_text()
        assert "0.013888888888888888" in text  # 1/72 at 17 significant digits
