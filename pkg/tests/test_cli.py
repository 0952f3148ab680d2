import json
import subprocess
import sys

import pytest

from irregular_lab.cli import (
    ConfigError,
    config_hash,
    main,
    resolve_seed,
    run_experiment,
    validate_config,
)

FILES = {
    "full": {"type": "full", "k": 2},
    "golden": {"type": "sft", "transition": [[1, 1], [1, 0]]},
    "d0": {"type": "periodic", "cycle": "0"},
    "d1": {"type": "periodic", "cycle": "1"},
    "d01": {"type": "periodic", "cycle": "01"},
    "bern": {"type": "bernoulli", "weights": [0.5, 0.5]},
    "parry": {"type": "parry"},
    "phi": {"type": "locally_constant", "range": 1, "table": {"0": 0, "1": 1}},
    "psi": {"type": "locally_constant", "range": 2, "table": {"00": 1, "01": 0, "10": 0, "11": 1}},
}


@pytest.fixture
def files(tmp_path, monkeypatch):
    # some subcommands write default outputs into the working directory
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("LAB_SEED", raising=False)
    out = {}
    for name, d in FILES.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(d))
        out[name] = str(p)
    return out


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestExitCodes:
    def test_space_info(self, files, capsys):
        code, out, _ = run(["space", "info", "--space", files["golden"]], capsys)
        assert code == 0
        assert json.loads(out)["results"]["space"]["mixing_gap"] == 2

    def test_integer_beta(self, capsys):
        code, _, err = run(["beta", "kneading", "--beta", "2", "--digits", "10"], capsys)
        assert code == 2 and "config" in err

    def test_kneading(self, capsys):
        code, out, _ = run(["beta", "kneading", "--beta", "golden", "--digits", "6"], capsys)
        assert code == 0
        assert json.loads(out)["results"]["digits"] == [1, 1, 0, 0, 0, 0]

    def test_missing_seed(self, files, capsys):
        code, _, err = run(
            ["synth", "irregular", "--space", files["full"], "--measures", files["d0"], files["d1"],
             "--observables", files["phi"], "--horizon", "1e5"],
            capsys,
        )
        assert code == 2 and "seed" in err

    def test_bad_schema_field(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"type": "full", "k": "two"}))
        code, _, err = run(["space", "info", "--space", str(p)], capsys)
        assert code == 2 and "config.space.k" in err

    def test_missing_file(self, capsys):
        code, _, err = run(["space", "info", "--space", "/nonexistent/x.json"], capsys)
        assert code == 2 and "no such file" in err

    def test_numeric_failure(self, files, tmp_path, capsys):
        p = tmp_path / "neg.json"
        p.write_text(json.dumps({"type": "locally_constant", "range": 1, "table": {"0": -1, "1": 1}}))
        code, _, err = run(["pressure", "bsdim", "--space", files["full"], "--observables", str(p)], capsys)
        assert code == 3 and err

    def test_integrate(self, files, capsys):
        code, out, _ = run(
            ["measure", "integrate", "--space", files["full"], "--measures", files["bern"], "--observables", files["phi"]],
            capsys,
        )
        assert code == 0
        assert "0.5" in out

    def test_pressure_transfer(self, files, capsys):
        code, out, _ = run(["pressure", "transfer", "--space", files["full"], "--observables", files["phi"]], capsys)
        assert code == 0
        assert abs(json.loads(out)["results"]["value"] - 1.3132616875182226) < 1e-12


class TestConfig:
    def test_seed_precedence(self):
        base = {"operation": "synth.irregular", "seed": 1}
        assert resolve_seed(base, None, {})["seed"] == 1
        assert resolve_seed(base, None, {"LAB_SEED": "5"})["seed"] == 5
        assert resolve_seed(base, 9, {"LAB_SEED": "5"})["seed"] == 9
        with pytest.raises(ConfigError):
            resolve_seed(base, None, {"LAB_SEED": "x"})

    def test_diagnostics_sorted(self):
        with pytest.raises(ConfigError) as exc:
            validate_config({"operation": "synth.irregular", "space": {"type": "full", "k": "a"}, "horizon": -1})
        diags = exc.value.diagnostics
        paths = [d.split(":")[0] for d in diags]
        assert paths == sorted(paths)
        assert paths == ["config", "config.horizon", "config.space.k"]

    def test_hash_ignores_out(self):
        c = {"operation": "space.info", "space": FILES["full"]}
        assert config_hash(c) == config_hash({**c, "out": ["a.json"]})
        assert config_hash(c) != config_hash({**c, "tol": 0.1})

    def test_provenance(self):
        b = run_experiment({"operation": "space.info", "space": FILES["golden"]}, now="2020-01-01T00:00:00+00:00")
        prov = json.loads(b.to_json())["provenance"]
        assert prov["timestamp"] == "2020-01-01T00:00:00+00:00"
        assert prov["operation"] == "space.info"


class TestOutputs:
    def _jointly(self, files, out_dir, capsys, seed="42"):
        argv = [
            "synth", "jointly", "--space", files["full"],
            "--measures", files["d0"], files["d1"], files["d01"], files["d0"],
            "--observables", files["phi"], files["psi"],
            "--seed", seed, "--horizon", "2e5",
            "--out", f"{out_dir}/plan.json,{out_dir}/trace.csv",
        ]
        return run(argv, capsys)

    def test_files_and_determinism(self, files, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert self._jointly(files, a, capsys)[0] == 0
        assert self._jointly(files, b, capsys)[0] == 0
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert {"plan.json", "trace.csv", "trace.svg", "trace.png"} <= set(names)
        for name in names:
            if name.endswith(".json"):
                ja, jb = json.loads((a / name).read_text()), json.loads((b / name).read_text())
                ja["provenance"].pop("timestamp")
                jb["provenance"].pop("timestamp")
                assert ja == jb
            else:
                assert (a / name).read_bytes() == (b / name).read_bytes(), name
        header = (a / "trace.csv").read_text().splitlines()[0]
        assert header == "checkpoint,observable_id,average"

    def test_seed_changes_output(self, files, tmp_path, capsys):
        self._jointly(files, tmp_path / "a", capsys, seed="1")
        self._jointly(files, tmp_path / "b", capsys, seed="2")
        ja = json.loads((tmp_path / "a" / "plan.json").read_text())
        jb = json.loads((tmp_path / "b" / "plan.json").read_text())
        assert ja["provenance"]["seed"] != jb["provenance"]["seed"]

    def test_env_seed(self, files, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("LAB_SEED", "42")
        code, _, _ = run(
            ["synth", "irregular", "--space", files["full"], "--measures", files["bern"], files["d0"],
             "--observables", files["phi"], "--horizon", "2e5", "--out", f"{tmp_path}/p.json"],
            capsys,
        )
        assert code == 0
        assert json.loads((tmp_path / "p.json").read_text())["provenance"]["seed"] == 42

    def test_section4(self, tmp_path, capsys):
        code, out, _ = run(["demo", "section4", "--seed", "42", "--out", f"{tmp_path}/r.json,{tmp_path}/t.csv"], capsys)
        assert code == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        assert len(rep["results"]["certificates"]) == 2
        assert (tmp_path / "t.svg").exists()

    def test_family(self, files, tmp_path, capsys):
        code, out, _ = run(
            ["synth", "family", "--space", files["golden"], "--measures", files["parry"], files["d01"],
             "--observables", files["phi"], "--seed", "1", "--n", "2000", "--free-fraction", "0.8"],
            capsys,
        )
        assert code == 0
        fam = json.loads((tmp_path / "plan.json").read_text())["results"]["family"]
        assert fam["rate"] >= 0.8 * 0.4812118 - 0.03


def test_verify_subset(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code, out, _ = run(["verify", "all", "--only", "5", "6"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("[")]
    assert len(lines) == 2 and all(l.startswith("[PASS]") for l in lines)


def test_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "irregular_lab.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for group in ("space", "beta", "measure", "trace", "synth", "pressure", "demo", "verify"):
        assert group in proc.stdout
