import pytest

from h2sync.cases import case1_graph, triple_integrator
from h2sync.cli import main
from h2sync.conditions import model_to_text
from h2sync.graph import graph_to_text
from h2sync.protocol import parse_realization


@pytest.fixture
def ref_files(tmp_path):
    model = tmp_path / "model.txt"
    model.write_text(model_to_text(triple_integrator()))
    graph = tmp_path / "graph.txt"
    graph.write_text(graph_to_text(case1_graph()))
    return str(model), str(graph), tmp_path


class TestCheck:
    def test_reference_passes(self, ref_files, capsys):
        model, graph, tmp = ref_files
        code = main(["check", "--model", model, "--graph", graph,
                     "--out", str(tmp / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "overall=true" in out
        assert (tmp / "out" / "report.txt").read_text() == out

    def test_unstable_model_names_condition_b(self, tmp_path, capsys):
        model = tmp_path / "m.txt"
        model.write_text("1 1 1 1\n1\n1\n1\n1\n")
        graph = tmp_path / "g.txt"
        graph.write_text("2\n2 1 1\n")
        code = main(["check", "--model", str(model), "--graph", str(graph),
                     "--out", str(tmp_path)])
        assert code == 1
        captured = capsys.readouterr()
        assert "clhp_eigs=false" in captured.out
        assert "(b)" in captured.err

    def test_malformed_graph_exits_2(self, tmp_path, ref_files):
        model, _, _ = ref_files
        bad = tmp_path / "bad.txt"
        bad.write_text("3\n1 2\n")
        assert main(["check", "--model", model, "--graph", str(bad),
                     "--out", str(tmp_path)]) == 2

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["check", "--model", str(tmp_path / "nope.txt"),
                     "--graph", str(tmp_path / "also_nope.txt"),
                     "--out", str(tmp_path)]) == 2


class TestSynth:
    def test_writes_realization(self, ref_files):
        model, _, tmp = ref_files
        out = tmp / "synth"
        code = main(["synth", "--model", model, "--protocol", "p2",
                     "--rho", "4,6", "--delta", "0.0004", "--out", str(out)])
        assert code == 0
        real = parse_realization((out / "protocol_p2_rho4.txt").read_text())
        assert real.rho == 4.0 and real.delta == 0.0004
        assert (out / "protocol_p2_rho6.txt").exists()
        assert (out / "run_config.txt").exists()

    def test_infeasible_delta_exits_3(self, ref_files):
        model, _, tmp = ref_files
        assert main(["synth", "--model", model, "--protocol", "p2",
                     "--rho", "4", "--delta", "0.5", "--out", str(tmp)]) == 3

    def test_rho_below_one_rejected_by_parser(self, ref_files):
        model, _, tmp = ref_files
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--model", model, "--protocol", "p2",
                  "--rho", "0.5", "--out", str(tmp)])
        assert exc.value.code == 2

    def test_p1_requires_identity_c(self, ref_files):
        # the reference model has C = [1 0 0], so forcing p1 is an input error
        model, _, tmp = ref_files
        assert main(["synth", "--model", model, "--protocol", "p1",
                     "--rho", "4", "--out", str(tmp)]) == 2

    def test_p1_round_trip(self, tmp_path):
        from h2sync.cases import triple_integrator_full_state
        model = tmp_path / "fs.txt"
        model.write_text(model_to_text(triple_integrator_full_state()))
        out = tmp_path / "p1"
        assert main(["synth", "--model", str(model), "--protocol", "p1",
                     "--rho", "4", "--out", str(out)]) == 0
        real = parse_realization((out / "protocol_p1_rho4.txt").read_text())
        assert real.kind == "p1" and real.delta is None and real.Q_rho is None


class TestAnalyze:
    def test_case1_decreasing_h2(self, ref_files, capsys):
        model, graph, tmp = ref_files
        out = tmp / "an"
        code = main(["analyze", "--model", model, "--graph", graph,
                     "--protocol", "p2", "--rho", "4,6,10",
                     "--delta", "0.0004", "--out", str(out)])
        assert code == 0
        lines = (out / "analysis.csv").read_text().strip().splitlines()
        assert lines[0] == "rho,h2,rho_times_h2,spectral_abscissa"
        h2s = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert len(h2s) == 3
        assert h2s[0] > h2s[1] > h2s[2]

    def test_non_spanning_tree_refused(self, tmp_path, ref_files, capsys):
        model, _, _ = ref_files
        graph = tmp_path / "disc.txt"
        graph.write_text("4\n2 1 1\n4 3 1\n")
        code = main(["analyze", "--model", model, "--graph", str(graph),
                     "--protocol", "p2", "--rho", "4", "--out", str(tmp_path)])
        assert code == 1
        assert "(d)" in capsys.readouterr().err


class TestSimulate:
    def test_writes_trajectories_and_summary(self, ref_files):
        model, graph, tmp = ref_files
        out = tmp / "sim"
        code = main(["simulate", "--model", model, "--graph", graph,
                     "--protocol", "p2", "--rho", "4", "--delta", "0.0004",
                     "--t-final", "1.0", "--dt", "0.01", "--seed", "5",
                     "--out", str(out)])
        assert code == 0
        traj = (out / "trajectory_custom_rho4.csv").read_text().splitlines()
        header = traj[0].split(",")
        assert header[0] == "t" and header[-1] == "sync_error"
        assert len(header) == 1 + 3 * 3 + 1
        assert len(traj) == 1 + 101
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0] == "case,rho,delta,seed,rms_sync_error"
        assert summary[1].startswith("custom,4,0.0004,5,")


class TestReproduce:
    def test_case1_bundle(self, tmp_path, capsys):
        out = tmp_path / "case1"
        # rho=10 with the reference delta has a filter pole near -600, so a
        # coarse step needs the exact integrator
        code = main(["reproduce-case1", "--t-final", "1.0", "--dt", "0.01",
                     "--integrator", "zoh", "--out", str(out)])
        assert code == 0
        for rho in (4, 6, 10):
            assert (out / f"trajectory_case1_rho{rho}.csv").exists()
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 4
        assert all(ln.startswith("case1,") for ln in summary[1:])

    def test_case2_bundle(self, tmp_path):
        out = tmp_path / "case2"
        code = main(["reproduce-case2", "--t-final", "1.0", "--dt", "0.01",
                     "--integrator", "zoh", "--out", str(out)])
        assert code == 0
        traj = (out / "trajectory_case2_rho4.csv").read_text().splitlines()
        assert len(traj[0].split(",")) == 1 + 20 * 3 + 1
