import json
import math

import numpy as np
import pytest

from coronakit import cli, exprgraph


def write_eq8_csv(path):
    E, n, d = np.meshgrid(np.arange(12.0, 31.0, 2.0), [4.0, 6.0, 8.0],
                          [2.0, 2.4, 3.0])
    E, n, d = E.ravel(), n.ravel(), d.ravel()
    y = 1.022 * n + 10.4 * d + 30.839 - 933.633 / E
    lines = ["E,n,d,y"]
    lines += [f"{float(a)!r},{float(b)!r},{float(c)!r},{float(t)!r}"
              for a, b, c, t in zip(E, n, d, y)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_eq5_csv(path):
    rows = ["E,n,d,y"]
    for E in np.arange(12.0, 31.0, 2.0):
        for n in (4.0, 6.0, 8.0):
            for d in (2.0, 2.4, 3.0):
                y = 0.0878 * E * n + 72.3 * math.log10(d) \
                    - 648.7 / (E * math.log10(E))
                rows.append(f"{float(E)!r},{n!r},{d!r},{float(y)!r}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def write_config(path, **overrides):
    cfg = {"variables": ["E", "n", "d"], "target": "y",
           "population_size": 24, "generations": 6, "max_terms": 3, "seed": 5}
    cfg.update(overrides)
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def write_geometry(path, phases, mic_x=0.0, mic_h=1.5, **extra):
    payload = {"phases": phases, "mic": {"x": mic_x, "h": mic_h}}
    payload.update(extra)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


THREE_PHASES = [
    {"x": -6.0, "h": 9.5, "E": 20.0, "n": 8, "d": 2.4},
    {"x": 0.0, "h": 11.5, "E": 20.0, "n": 8, "d": 2.4},
    {"x": 6.0, "h": 9.5, "E": 20.0, "n": 8, "d": 2.4},
]


class TestDiscover:
    def test_writes_reports_and_recovers_structure(self, tmp_path, capsys):
        data = write_eq8_csv(tmp_path / "data.csv")
        config = write_config(tmp_path / "config.json", population_size=80,
                              generations=40, max_terms=4, seed=0)
        out = tmp_path / "run"
        code = cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["equations"][0]["r2"] >= 0.999
        assert (out / "leaderboard.txt").exists()
        trace = (out / "loss_trace.csv").read_text().strip().splitlines()
        assert trace[0].startswith("generation,rank1")
        assert len(trace) == 41
        assert "best:" in capsys.readouterr().out

    def test_byte_identical_reruns(self, tmp_path):
        data = write_eq8_csv(tmp_path / "data.csv")
        config = write_config(tmp_path / "config.json",
                              monotonicity=[{"var": "E", "sign": "+1"}])
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out_a)]) == 0
        assert cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out_b)]) == 0
        assert (out_a / "report.json").read_bytes() \
            == (out_b / "report.json").read_bytes()

    def test_parallel_matches_serial_bytes(self, tmp_path):
        data = write_eq8_csv(tmp_path / "data.csv")
        config = write_config(tmp_path / "config.json")
        out_s, out_p = tmp_path / "serial", tmp_path / "parallel"
        assert cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out_s)]) == 0
        assert cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out_p),
                         "--workers", "2"]) == 0
        assert (out_s / "report.json").read_bytes() \
            == (out_p / "report.json").read_bytes()

    def test_malformed_csv_cites_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("E,n,d,y\n12,4,2.0,31\n12,four,2.0,31\n", encoding="utf-8")
        config = write_config(tmp_path / "config.json")
        code = cli.main(["discover", "--data", str(bad), "--config",
                         str(config), "--out", str(tmp_path / "out")])
        assert code == 2
        assert "line 3" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        data = write_eq8_csv(tmp_path / "data.csv")
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"variables": ["E", "n", "d"],
                                      "target": "y", "sparsity": 3}),
                          encoding="utf-8")
        code = cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(tmp_path / "out")])
        assert code == 2
        assert "sparsity" in capsys.readouterr().err


class TestEval:
    def test_ri_model_spot(self, capsys):
        assert cli.main(["eval", "--model", "ri-cispr", "--E", "20",
                         "--n", "8", "--d", "2.4"]) == 0
        assert capsys.readouterr().out.strip() == "45.276 dB"

    def test_an_model_spot(self, capsys):
        assert cli.main(["eval", "--model", "an-discovered-3", "--E", "20",
                         "--n", "8", "--d", "2.4"]) == 0
        assert capsys.readouterr().out.strip() == "16.607 dB(µW/m)"

    def test_unknown_model_lists_catalog(self, capsys):
        code = cli.main(["eval", "--model", "bogus", "--E", "20", "--n", "8",
                         "--d", "2.4"])
        assert code == 2
        err = capsys.readouterr().err
        assert "known models" in err and "an-discovered-3" in err

    def test_model_and_formula_mutually_exclusive(self, tmp_path, capsys):
        assert cli.main(["eval", "--E", "20", "--n", "8", "--d", "2.4"]) == 2
        graph_file = tmp_path / "g.json"
        graph_file.write_text("{}", encoding="utf-8")
        assert cli.main(["eval", "--model", "ri-cispr", "--formula",
                         str(graph_file), "--E", "20", "--n", "8",
                         "--d", "2.4"]) == 2

    def test_formula_reingestion_reproduces_predictions(self, tmp_path, capsys):
        data = write_eq8_csv(tmp_path / "data.csv")
        config = write_config(tmp_path / "config.json", population_size=40,
                              generations=15, max_terms=4, seed=0)
        out = tmp_path / "run"
        assert cli.main(["discover", "--data", str(data), "--config",
                         str(config), "--out", str(out)]) == 0
        capsys.readouterr()
        report = json.loads((out / "report.json").read_text())
        graph = cli.load_formula(out / "report.json")
        E, n, d = np.meshgrid(np.arange(12.0, 31.0, 2.0), [4.0, 6.0, 8.0],
                              [2.0, 2.4, 3.0])
        rows = list(zip(E.ravel(), n.ravel(), d.ravel()))
        assert len(report["predictions"]) == len(rows)
        for (e_val, n_val, d_val), stored in zip(rows, report["predictions"]):
            got = exprgraph.evaluate(graph, {"E": e_val, "n": n_val, "d": d_val})
            assert abs(got - stored) <= 1e-12 * max(1.0, abs(stored))
        # and the CLI prints the same value at a chosen point
        assert cli.main(["eval", "--formula", str(out / "report.json"),
                         "--E", "20", "--n", "8", "--d", "2.4"]) == 0
        printed = capsys.readouterr().out.strip()
        want = exprgraph.evaluate(graph, {"E": 20.0, "n": 8.0, "d": 2.4})
        assert printed == f"{want:.3f} dB"


class TestPredict:
    def test_an_three_phase_energy_sum(self, tmp_path, capsys):
        geometry = write_geometry(tmp_path / "geom.json", THREE_PHASES)
        assert cli.main(["predict", "--kind", "an", "--geometry",
                         str(geometry), "--model", "an-discovered-3"]) == 0
        out = capsys.readouterr().out
        total = float(out.strip().splitlines()[-1].split()[-2])
        from coronakit import models, propagation

        per = models.an_level("an-discovered-3",
                              models.BundleConfig(20.0, 8.0, 2.4)).value \
            - 11.4 - 5.8  # log10(10 m) = 1
        want = per + 10.0 * math.log10(3.0)
        assert total == pytest.approx(want, abs=5e-4)

    def test_ri_distance_decay(self, tmp_path, capsys):
        near = write_geometry(tmp_path / "near.json", THREE_PHASES, mic_x=20.0)
        far = write_geometry(tmp_path / "far.json", THREE_PHASES, mic_x=40.0)
        assert cli.main(["predict", "--kind", "ri", "--geometry", str(near),
                         "--model", "ri-discovered-4"]) == 0
        near_out = capsys.readouterr().out
        assert cli.main(["predict", "--kind", "ri", "--geometry", str(far),
                         "--model", "ri-discovered-4"]) == 0
        far_out = capsys.readouterr().out
        near_level = float(near_out.strip().splitlines()[-1].split()[-2])
        far_level = float(far_out.strip().splitlines()[-1].split()[-2])
        assert far_level < near_level

    def test_geometry_schema_error(self, tmp_path, capsys):
        geometry = write_geometry(tmp_path / "geom.json", THREE_PHASES,
                                  towers=3)
        code = cli.main(["predict", "--kind", "an", "--geometry",
                         str(geometry), "--model", "an-bpa"])
        assert code == 2
        assert "towers" in capsys.readouterr().err

    def test_kind_model_mismatch(self, tmp_path, capsys):
        geometry = write_geometry(tmp_path / "geom.json", THREE_PHASES)
        assert cli.main(["predict", "--kind", "ri", "--geometry",
                         str(geometry), "--model", "an-bpa"]) == 2


class TestBenchmark:
    def test_self_consistency_and_ordering(self, tmp_path, capsys):
        data = write_eq5_csv(tmp_path / "cage.csv")
        out = tmp_path / "bench.csv"
        assert cli.main(["benchmark", "--data", str(data), "--models",
                         "an-bpa,an-discovered-3,an-enel", "--out",
                         str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "model,rmse,mre,rows,skipped"
        table = [line.split(",") for line in lines[1:]]
        assert table[0][0] == "an-discovered-3"
        assert float(table[0][1]) <= 1e-9
        rmses = [float(row[1]) for row in table]
        assert rmses == sorted(rmses)

    def test_domain_error_rows_excluded_with_count(self, tmp_path, capsys):
        path = tmp_path / "mixed.csv"
        path.write_text("E,n,d,y\n20,8,2.4,45\n20,1,2.4,40\n20,6,2.4,44\n",
                        encoding="utf-8")
        assert cli.main(["benchmark", "--data", str(path), "--models",
                         "ri-discovered-4"]) == 0
        out = capsys.readouterr().out
        row = [t for t in out.splitlines() if t.startswith("ri-discovered-4 ")][0]
        assert row.split()[-1] == "1"  # one skipped row (n = 1)
        assert row.split()[-2] == "2"
        assert "row 2 (file line 3) excluded" in out

    def test_unknown_model(self, tmp_path, capsys):
        data = write_eq5_csv(tmp_path / "cage.csv")
        assert cli.main(["benchmark", "--data", str(data), "--models",
                         "nope"]) == 2


class TestCurves:
    def test_monotone_gradient_sweep(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert cli.main(["curves", "--model", "an-discovered-3", "--sweep",
                         "E=12:32:50", "--fixed", "n=8", "--fixed", "d=2.4",
                         "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "E,an-discovered-3"
        assert len(lines) == 52  # header + steps + 1 rows
        ys = [float(line.split(",")[1]) for line in lines[1:]]
        assert all(b - a >= -1e-9 for a, b in zip(ys, ys[1:]))

    def test_ri_gradient_sweep_monotone(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert cli.main(["curves", "--model", "ri-discovered-4", "--sweep",
                         "E=12:32:24", "--fixed", "n=8", "--fixed", "d=2.4",
                         "--out", str(out)]) == 0
        ys = [float(line.split(",")[1])
              for line in out.read_text().strip().splitlines()[1:]]
        assert len(ys) == 25
        assert all(b - a >= -1e-9 for a, b in zip(ys, ys[1:]))

    def test_zero_steps_single_row(self, capsys):
        assert cli.main(["curves", "--model", "an-bpa", "--sweep",
                         "E=15:30:0", "--fixed", "n=8", "--fixed",
                         "d=2.4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("15")

    def test_swept_variable_cannot_be_fixed(self, capsys):
        assert cli.main(["curves", "--model", "an-bpa", "--sweep",
                         "E=15:30:5", "--fixed", "E=20", "--fixed", "n=8",
                         "--fixed", "d=2.4"]) == 2

    def test_domain_error_lists_offending_points(self, capsys):
        code = cli.main(["curves", "--model", "an-discovered-3", "--sweep",
                         "E=0.5:1.5:2", "--fixed", "n=8", "--fixed", "d=2.4"])
        assert code == 1
        assert "E = 1" in capsys.readouterr().err
