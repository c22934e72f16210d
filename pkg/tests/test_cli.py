import json

import pytest

from edgemod.cli import main
from edgemod.graph_model import build_network, erdos_renyi, write_json


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.json"
    write_json(build_network(2, [(0, 1, 0.5)], [0], [1]), path)
    return path


@pytest.fixture
def path20(tmp_path, capsys):
    path = tmp_path / "p20.json"
    assert run(capsys, "generate", "path", "--n", 20, "--w", 0.2, "--out", path)[0] == 0
    return path


class TestValidate:
    def test_path20(self, capsys, path20):
        code, out, _ = run(capsys, "validate", "--net", path20)
        assert code == 0
        fields = dict(line.split(": ") for line in out.splitlines())
        assert float(fields["rho_L"]) < 1 and fields["rho_L_below_1"] == "true"
        assert fields["edges"] == "19" and fields["connected"] == "true"

    def test_negative_weight_is_parse_error(self, capsys, tmp_path):
        path = tmp_path / "neg.json"
        path.write_text(json.dumps({"n": 2, "kind": "direct", "edges": [[0, 1, -1]],
                                    "inputs": [0], "outputs": [1]}))
        assert run(capsys, "validate", "--net", path)[0] == 2

    def test_unstable_is_invariant_error(self, capsys, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({"n": 2, "kind": "direct",
                                    "edges": [[0, 1, 1.5], [1, 0, 1.5]],
                                    "inputs": [0], "outputs": [1]}))
        code, out, err = run(capsys, "validate", "--net", path)
        assert code == 3 and "rho_A: 1.5" in out and "UnstableNetwork" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "validate", "--net", tmp_path / "nope.json")[0] == 2


class TestScan:
    def test_chain(self, capsys, chain_file):
        code, out, _ = run(capsys, "scan", "--net", chain_file, "--w", 1)
        lines = out.splitlines()
        assert code == 0 and len(lines) == 3
        assert lines[0] == "s,t,margin,destabilizing,hinf,h2_lower_bound"
        assert lines[1] == "1,0,2,false,0.5,0.0833333333333"
        assert lines[2].split(",")[:3] == ["0", "1", "inf"]

    def test_verify_does_not_change_output(self, capsys, tmp_path):
        net = erdos_renyi(25, 0.15, 0.9, seed=2).with_io([0, 1, 2], [5, 6])
        path = tmp_path / "er.json"
        write_json(net, path)
        _, plain, _ = run(capsys, "scan", "--net", path, "--w", 0.5)
        code, checked, err = run(capsys, "scan", "--net", path, "--w", 0.5,
                                 "--verify", "--seed", 1, "--samples", 5)
        assert code == 0 and plain == checked
        assert "verify: ok" in err

    def test_jobs_and_json(self, capsys, tmp_path):
        path = tmp_path / "er.json"
        write_json(erdos_renyi(30, 0.1, 0.9, seed=4), path)
        a = run(capsys, "scan", "--net", path, "--w", 2, "--sort", "hinf")[1]
        b = run(capsys, "scan", "--net", path, "--w", 2, "--sort", "hinf",
                "--jobs", 3)[1]
        assert a == b
        code, out, _ = run(capsys, "scan", "--net", path, "--w", 2, "--top", 4,
                           "--format", "json")
        rows = json.loads(out)
        assert code == 0 and len(rows) == 4 and set(rows[0]) == {
            "s", "t", "margin", "destabilizing", "hinf", "h2_lower_bound"}

    def test_laplacian(self, capsys, tmp_path):
        path = tmp_path / "p3.json"
        run(capsys, "generate", "path", "--n", 3, "--w", 0.2, "--out", path)
        code, out, err = run(capsys, "scan", "--net", path, "--w", 0.2, "--verify",
                             "--seed", 0)
        assert code == 0
        assert out.splitlines()[1] == "0,2,0.2,-1.5873015873,true"
        assert "verify: ok" in err

    def test_out_file(self, capsys, chain_file, tmp_path):
        target = tmp_path / "scan.csv"
        code, out, _ = run(capsys, "scan", "--net", chain_file, "--w", 1,
                           "--out", target)
        assert code == 0 and out == ""
        assert target.read_text().startswith("s,t,margin")

    def test_needs_w(self, capsys, chain_file):
        with pytest.raises(SystemExit) as exc:
            main(["scan", "--net", str(chain_file)])
        assert exc.value.code == 2


class TestGrow:
    def test_budget_zero(self, capsys, path20):
        code, out, _ = run(capsys, "grow", "--net", path20, "--w", 0.2,
                           "--budget", 0, "--format", "json")
        data = json.loads(out)
        assert code == 0 and len(data["trajectory"]) == 1

    def test_gramian_chain(self, capsys, chain_file):
        code, out, err = run(capsys, "grow", "--net", chain_file, "--mode",
                             "gramian", "--w", 1, "--budget", 1, "--format", "json",
                             "--verify")
        data = json.loads(out)
        assert code == 0 and data["edges"] == [[1, 0]]
        assert "verify: ok" in err

    def test_path20(self, capsys, path20):
        code, out, _ = run(capsys, "grow", "--net", path20, "--w", 0.2,
                           "--budget", 10, "--format", "json")
        data = json.loads(out)
        assert 29.3 <= data["summary"]["coherence_after"] <= 31.3
        assert data["summary"]["diameter_after"] <= 5

    def test_mode_mismatch(self, capsys, chain_file):
        assert run(capsys, "grow", "--net", chain_file, "--w", 0.1,
                   "--budget", 1)[0] == 3


class TestGenerate:
    def test_er_rho(self, capsys, tmp_path):
        path = tmp_path / "er.json"
        assert run(capsys, "generate", "er", "--n", 500, "--p", 0.02, "--rho", 0.9,
                   "--seed", 5, "--out", path)[0] == 0
        out = run(capsys, "validate", "--net", path)[1]
        rho = float(dict(line.split(": ") for line in out.splitlines())["rho_A"])
        assert abs(rho - 0.9) <= 1e-9

    def test_fig2_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "generate", "fig2", "--seed", 3, "--out", a)
        run(capsys, "generate", "fig2", "--seed", 3, "--out", b)
        assert a.read_bytes() == b.read_bytes()
        data = json.loads(a.read_text())
        assert len(data["inputs"]) == 50 and len(data["outputs"]) == 100

    def test_bad_parameter_is_usage_error(self, capsys):
        code, _, err = run(capsys, "generate", "er", "--n", 5, "--p", 1.5,
                           "--seed", 1)
        assert code == 2 and "probability" in err

    def test_seed_required(self, capsys):
        assert run(capsys, "generate", "er", "--n", 10)[0] == 2

    def test_stdout(self, capsys):
        code, out, _ = run(capsys, "generate", "complete", "--n", 4, "--w", 0.1)
        assert code == 0 and json.loads(out)["kind"] == "laplacian"


class TestMisc:
    def test_coherence(self, capsys, path20):
        code, out, err = run(capsys, "coherence", "--net", path20, "--verify")
        fields = dict(line.split(": ") for line in out.splitlines())
        assert code == 0 and abs(float(fields["coherence"]) - 172.37) < 0.01
        assert abs(float(fields["coherence_plus_one"]) - 173.37) < 0.01

    def test_margin_direct(self, capsys, chain_file):
        code, out, err = run(capsys, "margin", "--net", chain_file, "--s", 1,
                             "--t", 0, "--w", 1, "--verify")
        assert code == 0
        assert out.splitlines() == ["margin: 2", "hinf: 0.5",
                                    "h2_lower_bound: 0.0833333333333"]

    def test_margin_laplacian(self, capsys, tmp_path):
        path = tmp_path / "p3.json"
        run(capsys, "generate", "path", "--n", 3, "--w", 0.2, "--out", path)
        code, out, _ = run(capsys, "margin", "--net", path, "--s", 0, "--t", 2,
                           "--w", 0.2, "--verify")
        assert code == 0 and "coherence_delta: -1.5873015873" in out

    def test_verify_all_fixtures(self, capsys):
        code, out, _ = run(capsys, "verify-all")
        assert code == 0 and out.count("PASS") == 5 and "FAIL" not in out

    def test_verify_all_network(self, capsys, tmp_path):
        path = tmp_path / "er.json"
        write_json(erdos_renyi(15, 0.2, 0.8, seed=8), path)
        code, out, _ = run(capsys, "verify-all", "--net", path, "--w", 0.3,
                           "--samples", 4)
        assert code == 0 and out.startswith("PASS")

    def test_verify_mismatch_exit_code(self, capsys, chain_file, monkeypatch):
        import edgemod.cli as cli
        monkeypatch.setattr(cli, "delta_hinf", lambda k, m: 123.0)
        code, _, err = run(capsys, "margin", "--net", chain_file, "--s", 1,
                           "--t", 0, "--w", 1, "--verify")
        assert code == 4 and "MISMATCH" in err
