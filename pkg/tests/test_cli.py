import json
import math

from wavedisk.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--out", str(out)]), out


def load(out, name):
    with open(out / name, encoding="utf-8") as fh:
        return json.load(fh)


class TestAnalyze:
    def test_supercritical_report(self, tmp_path):
        code, out = run(tmp_path, "analyze", "--s", "1", "--c", "3")
        assert code == EXIT_OK
        doc = load(out, "analyze.json")
        assert doc["schema"] == "1"
        assert doc["regime"]["tag"] == "supercritical"
        assert doc["odd_symmetric"] is True
        assert [e["label"] for e in doc["finite_equilibria"]] == ["E0"]
        u1 = doc["boundary_equilibria"]["U1"]["equilibria"]
        u2 = doc["boundary_equilibria"]["U2"]["equilibria"]
        assert [e["label"] for e in u1] == ["E1", "E2"]
        assert [e["stability"] for e in u1] == ["source", "saddle"]
        assert {e["label"] for e in u2} == {"E4", "E5", "E6"}
        assert "E6" in doc["blowups"]
        assert doc["blowups"]["E6"]["summary"] == ["none", "saddle", "saddle"]

    def test_critical_report(self, tmp_path):
        code, out = run(tmp_path, "analyze", "--s", "1", "--c", "2")
        assert code == EXIT_OK
        doc = load(out, "analyze.json")
        u1 = doc["boundary_equilibria"]["U1"]["equilibria"]
        assert [e["label"] for e in u1] == ["E3"]
        assert u1[0]["stability"] == "nonhyperbolic_one_zero"
        assert {e["label"] for e in doc["boundary_equilibria"]["U2"]["equilibria"]} == {"E6", "E7"}
        # boundary reduction: the center flow collapses to -(x)^2 in the
        # shifted coordinate
        assert doc["center_manifolds"]["E3"]["reduced"] == {"2": -1}
        assert doc["center_manifolds"]["E0"]["series"]["3"] == 0.25

    def test_subcritical_report(self, tmp_path):
        code, out = run(tmp_path, "analyze", "--s", "1", "--c", "1")
        doc = load(out, "analyze.json")
        assert doc["boundary_equilibria"]["U1"]["equilibria"] == []
        assert code == EXIT_OK

    def test_determinism_byte_identical(self, tmp_path):
        code1, out1 = main(["analyze", "--s", "1", "--c", "3", "--out", str(tmp_path / "a")]), tmp_path / "a"
        code2, out2 = main(["analyze", "--s", "1", "--c", "3", "--out", str(tmp_path / "b")]), tmp_path / "b"
        assert code1 == code2 == EXIT_OK
        a = (out1 / "analyze.json").read_bytes()
        b = (out2 / "analyze.json").read_bytes()
        assert a == b


class TestMinspeed:
    def test_values_and_gap(self, tmp_path):
        code, out = run(tmp_path, "minspeed", "--s", "1")
        assert code == EXIT_OK
        doc = load(out, "minspeed.json")
        assert doc["spectral"] == 2.0
        assert abs(doc["shooting"] - 2.0) <= 1e-2
        assert doc["gap"] <= 1e-2

    def test_invalid_parameter_exits_2(self, tmp_path):
        code, _ = run(tmp_path, "minspeed", "--s", "-1")
        assert code == EXIT_CONFIG

    def test_bracket_failure_exits_3(self, tmp_path):
        code, _ = run(tmp_path, "minspeed", "--s", "1", "--c-lo", "3", "--c-hi", "4")
        assert code == EXIT_NUMERIC


class TestProfile:
    def test_writes_csv_and_report(self, tmp_path):
        code, out = run(tmp_path, "profile", "--s", "1", "--c", "3", "--family", "E2")
        assert code == EXIT_OK
        doc = load(out, "profile.json")
        assert doc["orbit_class"] == "positive_monotone_to_E0"
        assert abs(doc["asymptotic_rate"] - (-3 + math.sqrt(5)) / 2) <= 1e-2
        lines = (out / "profile.csv").read_text().splitlines()
        assert lines[0] == "xi,phi,psi"
        assert len(lines) == 2002

    def test_refuses_unavailable_family(self, tmp_path):
        code, _ = run(tmp_path, "profile", "--s", "1", "--c", "1", "--family", "E1")
        assert code == EXIT_CONFIG

    def test_sign_changing_family(self, tmp_path):
        code, out = run(tmp_path, "profile", "--s", "1", "--c", "2", "--family", "sign_changing")
        assert code == EXIT_OK
        doc = load(out, "profile.json")
        assert doc["orbit_class"] == "sign_changing_single_dip"

    def test_profile_determinism(self, tmp_path):
        main(["profile", "--s", "1", "--c", "3", "--family", "E2", "--out", str(tmp_path / "a")])
        main(["profile", "--s", "1", "--c", "3", "--family", "E2", "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "profile.csv").read_bytes() == (tmp_path / "b" / "profile.csv").read_bytes()
        assert (tmp_path / "a" / "profile.json").read_bytes() == (tmp_path / "b" / "profile.json").read_bytes()


class TestPortrait:
    def test_document_and_svg(self, tmp_path):
        code, out = run(tmp_path, "portrait", "--s", "1", "--c", "3", "--n-seeds", "4")
        assert code == EXIT_OK
        doc = load(out, "portrait.json")
        assert doc["regime"] == "supercritical"
        labels = {e["label"] for e in doc["boundary_equilibria"] if e["label"]}
        assert {"E1", "E2", "E4", "E5", "E6"} <= labels
        # every emitted point lies on the closed disk
        for p in doc["disk_outline"]:
            assert abs(math.hypot(p[0], p[1]) - 1.0) <= 1e-9
        for traj in doc["trajectories"]:
            for y in traj["points"]:
                assert y[0] ** 2 + y[1] ** 2 + y[2] ** 2 <= 1.0 + 1e-9
        svg = (out / "portrait.svg").read_text()
        assert svg.startswith("<?xml")
        assert "<svg" in svg

    def test_zero_seeds_exits_2(self, tmp_path):
        code, _ = run(tmp_path, "portrait", "--s", "1", "--c", "3", "--n-seeds", "0")
        assert code == EXIT_CONFIG

    def test_format_filtering(self, tmp_path):
        code, out = run(tmp_path, "portrait", "--s", "1", "--c", "1", "--n-seeds", "2",
                        "--format", "json")
        assert code == EXIT_OK
        assert (out / "portrait.json").exists()
        assert not (out / "portrait.svg").exists()

    def test_portrait_outputs_reproduce(self, tmp_path):
        main(["portrait", "--s", "1", "--c", "2", "--n-seeds", "3", "--out", str(tmp_path / "a")])
        main(["portrait", "--s", "1", "--c", "2", "--n-seeds", "3", "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "portrait.json").read_bytes() == (tmp_path / "b" / "portrait.json").read_bytes()
        assert (tmp_path / "a" / "portrait.svg").read_bytes() == (tmp_path / "b" / "portrait.svg").read_bytes()


class TestSweep:
    def test_grid_rows_and_regime_flip(self, tmp_path):
        # 3x3 grid around (s, c) = (1, 2); the s=1 row flips regime at c=2
        code, out = run(tmp_path, "sweep", "--s-list", "0.5,1,2", "--c-list", "1.5,2,2.5")
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 10
        header = lines[0].split(",")
        rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
        s1 = [r for r in rows if r["s"] == "1"]
        assert [r["regime"] for r in s1] == ["subcritical", "critical", "supercritical"]
        assert s1[0]["class_E1"] == "-"
        assert s1[1]["class_E3"] == "positive_monotone_to_E0"
        assert s1[2]["class_E1"] == "positive_monotone_to_E0"
        assert all(r["regime"] == "subcritical" for r in rows if r["s"] == "0.5")
        assert all(r["regime"] == "supercritical" for r in rows if r["s"] == "2")
        # gap column tracks c - c*
        for r in rows:
            assert abs(float(r["speed_gap"]) - (float(r["c"]) - float(r["c_star_spectral"]))) < 1e-12

    def test_empty_list_exits_2(self, tmp_path):
        code, _ = run(tmp_path, "sweep", "--s-list", "1", "--c-list", "")
        assert code == EXIT_CONFIG

    def test_duplicates_deduplicated(self, tmp_path, capsys):
        code, out = run(tmp_path, "sweep", "--s-list", "1,1", "--c-list", "1.5")
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 2
        assert "duplicate" in capsys.readouterr().err


class TestConfigPrecedence:
    def test_file_then_flags(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("s = 2\nc = 9\ntol = 1e-3\n")
        out = tmp_path / "o"
        code = main(["analyze", "--config", str(cfgfile), "--c", "1", "--out", str(out)])
        assert code == EXIT_OK
        doc = load(out, "analyze.json")
        assert doc["s"] == 2.0   # from the file
        assert doc["c"] == 1.0   # flag wins over the file

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("wavelength = 7\n")
        code = main(["analyze", "--config", str(cfgfile), "--s", "1", "--c", "1",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_tolerance_window_enforced(self, tmp_path):
        code, _ = run(tmp_path, "minspeed", "--s", "1", "--tol", "0.5")
        assert code == EXIT_CONFIG

    def test_reaction_parameter_binding(self, tmp_path):
        code, out = run(tmp_path, "analyze", "--s", "1", "--c", "2",
                        "--reaction", "a*u*(1 - u/K)", "--param", "a=1", "--param", "K=1")
        assert code == EXIT_OK
        doc = load(out, "analyze.json")
        assert doc["odd_symmetric"] is False
        coords = sorted(tuple(e["coords"]) for e in doc["finite_equilibria"])
        assert coords == [[0.0, 0.0], [1.0, 0.0]] or coords == [(0.0, 0.0), (1.0, 0.0)]
