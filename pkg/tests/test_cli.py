import json

import numpy as np
import pytest

from npdt import build_counterexample, model_to_dict, save_model
from npdt.cli import run
from _factories import make_gas1_model


@pytest.fixture
def stable_model_file(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "gas1.json"
    save_model(make_gas1_model(3, rng), path)
    return str(path)


@pytest.fixture
def unstable_model_file(tmp_path):
    path = tmp_path / "ce1.json"
    save_model(build_counterexample("one"), path)
    return str(path)


@pytest.fixture
def reducible_model_file(tmp_path):
    obj = {
        "n": 2,
        "M": [-1.0, 1.0, 0.0, 0.0],
        "r": [1.0, 1.0],
        "b": [1.0, 1.0],
        "c": [1.0, 1.0],
        "p": 1.0,
    }
    path = tmp_path / "reducible.json"
    path.write_text(json.dumps(obj))
    return str(path)


class TestValidate:
    def test_good_model(self, stable_model_file):
        assert run(["validate", stable_model_file]).exit_code == 0

    def test_reducible_model_negative(self, reducible_model_file, capsys):
        result = run(["validate", reducible_model_file])
        assert result.exit_code == 1
        out = capsys.readouterr().out
        assert "irreducible: False" in out

    def test_json_mode(self, stable_model_file, tmp_path):
        out = tmp_path / "report.json"
        result = run(["validate", stable_model_file, "--json", str(out)])
        assert result.exit_code == 0
        assert str(out) in result.artifacts
        data = json.loads(out.read_text())
        assert data["passed"] is True


class TestStationaryCmd:
    def test_json_payload(self, stable_model_file, tmp_path):
        out = tmp_path / "st.json"
        result = run(["stationary", stable_model_file, "--json", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["lambda1"] < 0
        assert all(x > 0 for x in data["u_star"])


class TestStabilityCmd:
    def test_stable_exit_zero(self, stable_model_file, tmp_path):
        out = tmp_path / "rep.json"
        result = run(["stability", stable_model_file, "--json", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["verdict"] == "certified-GAS"
        ids = [c["id"] for c in data["checks"]]
        assert ids == ["LAS1", "LAS2", "SIGMA", "ANGLE", "LAS3", "GAS1", "GAS2", "GAS3", "GAS4"]

    def test_unstable_exit_one(self, unstable_model_file, tmp_path):
        out = tmp_path / "rep.json"
        result = run(["stability", unstable_model_file, "--json", str(out)])
        assert result.exit_code == 1
        assert json.loads(out.read_text())["verdict"] == "unstable"

    def test_plot_artifact(self, unstable_model_file, tmp_path):
        png = tmp_path / "spec.png"
        result = run(["stability", unstable_model_file, "--plot", str(png)])
        assert png.exists() and png.stat().st_size > 0
        assert str(png) in result.artifacts


class TestSimulateCmd:
    def test_star_initial_state(self, stable_model_file, tmp_path):
        csv = tmp_path / "traj.csv"
        result = run(
            ["simulate", stable_model_file, "--u0", "star", "--t-end", "5",
             "--samples", "10", "--csv", str(csv)]
        )
        assert result.exit_code == 0
        lines = csv.read_text().strip().split("\n")
        assert lines[0] == "t,u_1,u_2,u_3"
        assert len(lines) == 12  # header + 11 samples

    def test_traj_csv_precision_and_determinism(self, stable_model_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(
                ["simulate", stable_model_file, "--u0", "perturbed:0.1", "--t-end", "3",
                 "--samples", "6", "--csv", str(path), "--seed", "7"]
            )
        assert a.read_bytes() == b.read_bytes()
        cell = a.read_text().strip().split("\n")[1].split(",")[1]
        assert len(cell.replace("-", "").replace(".", "").replace("e", "").lstrip("0")) >= 15

    def test_diagnostics_csv_empty_energy_for_p1(self, stable_model_file, tmp_path):
        diag = tmp_path / "diag.csv"
        run(
            ["simulate", stable_model_file, "--u0", "star", "--t-end", "2",
             "--samples", "4", "--diagnostics", str(diag)]
        )
        lines = diag.read_text().strip().split("\n")
        assert lines[0] == "t,l1,competition,lyapunov_h,energy_f,adjoint_mass"
        # p = 1: energy column empty
        assert lines[1].split(",")[4] == ""

    def test_u0_file(self, stable_model_file, tmp_path):
        u0 = tmp_path / "u0.json"
        u0.write_text("[0.5, 0.5, 0.5]")
        result = run(["simulate", stable_model_file, "--u0", str(u0), "--t-end", "1"])
        assert result.exit_code == 0

    def test_plot_artifact(self, stable_model_file, tmp_path):
        png = tmp_path / "traj.png"
        result = run(
            ["simulate", stable_model_file, "--u0", "star", "--t-end", "1",
             "--samples", "5", "--plot", str(png)]
        )
        assert png.exists()
        assert str(png) in result.artifacts

    def test_json_summary(self, stable_model_file, tmp_path):
        out = tmp_path / "sim.json"
        run(
            ["simulate", stable_model_file, "--u0", "star", "--t-end", "1",
             "--samples", "4", "--json", str(out)]
        )
        data = json.loads(out.read_text())
        assert data["blow_up"] is False
        assert len(data["final_state"]) == 3


class TestKreinCmd:
    def test_json_payload(self, unstable_model_file, tmp_path):
        out = tmp_path / "krein.json"
        result = run(["krein", unstable_model_file, "--json", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert len(data["direct"]) == 3
        scale = max(abs(complex(re, im)) for re, im in data["direct"])
        assert data["max_mismatch"] <= 1e-6 * scale


class TestCounterexampleCmd:
    def test_one_prints_published_spectrum(self, tmp_path, capsys):
        result = run(["counterexample", "one"])
        assert result.exit_code == 0
        out = capsys.readouterr().out
        assert "-0.039215" in out
        assert "3.080430" in out

    def test_one_json(self, tmp_path):
        out = tmp_path / "ce.json"
        run(["counterexample", "one", "--json", str(out)])
        data = json.loads(out.read_text())
        ev = sorted(data["linearization_spectrum"], key=lambda z: z[0])
        assert ev[0][0] == pytest.approx(-0.039215, abs=5e-4)
        assert abs(ev[0][1]) == pytest.approx(1.80168, abs=5e-4)
        assert data["angle_condition"]["margin"] == pytest.approx(-3.3287, abs=5e-3)

    def test_nonexistence_valid(self, capsys):
        result = run(["counterexample", "nonexistence", "--D", "0.01"])
        assert result.exit_code == 0
        out = capsys.readouterr().out
        assert "valid: True" in out

    def test_nonexistence_invalid_rate(self):
        assert run(["counterexample", "nonexistence", "--D", "0.2"]).exit_code == 1


class TestScanCmd:
    @pytest.fixture
    def family_file(self, tmp_path):
        base = build_counterexample("one")
        base_dict = model_to_dict(
            type(base)(
                n=3,
                generator=base.generator,
                r=np.ones(3),
                b=np.ones(3),
                c=base.c,
                p=1.0,
                name="interp",
            )
        )
        fam = {
            "name": "b-interpolation",
            "base": base_dict,
            "targets": {"r": base.b.tolist(), "b": base.b.tolist()},
            "theta_lo": 0.0,
            "theta_hi": 1.0,
        }
        path = tmp_path / "family.json"
        path.write_text(json.dumps(fam))
        return str(path)

    def test_scan_finds_hopf(self, family_file, tmp_path):
        out = tmp_path / "scan.json"
        png = tmp_path / "scan.png"
        result = run(["scan", family_file, "--steps", "20", "--json", str(out), "--plot", str(png)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        kinds = [c["kind"] for c in data["crossings"]]
        assert "hopf" in kinds
        assert png.exists()

    def test_scan_determinism(self, family_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["scan", family_file, "--steps", "12", "--json", str(a)])
        run(["scan", family_file, "--steps", "12", "--json", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_scan_parallelism_does_not_change_output(self, family_file, tmp_path, monkeypatch):
        serial, parallel = tmp_path / "serial.json", tmp_path / "par.json"
        monkeypatch.setenv("NPDT_THREADS", "1")
        run(["scan", family_file, "--steps", "10", "--json", str(serial)])
        monkeypatch.setenv("NPDT_THREADS", "4")
        run(["scan", family_file, "--steps", "10", "--json", str(parallel)])
        assert serial.read_bytes() == parallel.read_bytes()


class TestReportSerialization:
    def test_scalar_model_reports_infinite_gap(self, tmp_path):
        obj = {"n": 1, "M": [0.0], "r": [2.0], "b": [1.0], "c": [1.0], "p": 1.0}
        path = tmp_path / "scalar.json"
        path.write_text(json.dumps(obj))
        out = tmp_path / "rep.json"
        result = run(["stability", str(path), "--json", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["sigma2"] == "inf"
        assert data["verdict"] == "certified-GAS"

    def test_witness_vector_serializes(self, tmp_path):
        # entropy-structured generator with a tiny gap: the alignment
        # estimator finds a violating direction, carried as a witness
        import numpy as np
        from npdt import FellerMatrix, Measure, ModelSpec, save_model

        n = 3
        K = np.array([[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]])
        b = np.full(n, 1e4)
        c = np.full(n, 1.0)
        M = np.diag(b / c) @ K * 1e-4
        spec = ModelSpec(
            n=n,
            generator=FellerMatrix(M, Measure.uniform(n)),
            r=b * 3.0,
            b=b,
            c=c,
            p=1.0,
            name="tiny-gap",
        )
        path = tmp_path / "tiny.json"
        save_model(spec, path)
        out = tmp_path / "rep.json"
        assert run(["stability", str(path), "--json", str(out)]).exit_code in (0, 1)
        data = json.loads(out.read_text())
        gas2 = next(ch for ch in data["checks"] if ch["id"] == "GAS2")
        assert gas2["holds"] == "false"
        assert gas2["witness"] is not None and len(gas2["witness"]) == n


class TestErrorPaths:
    def test_unknown_flag(self, stable_model_file):
        assert run(["validate", stable_model_file, "--bogus"]).exit_code == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(["validate", str(path)]).exit_code == 2

    def test_unknown_model_field(self, tmp_path):
        path = tmp_path / "extra.json"
        obj = {
            "n": 1, "M": [0.0], "r": [1.0], "b": [1.0], "c": [1.0], "p": 1.0,
            "surprise": True,
        }
        path.write_text(json.dumps(obj))
        assert run(["validate", str(path)]).exit_code == 2

    def test_missing_file(self, tmp_path):
        assert run(["validate", str(tmp_path / "absent.json")]).exit_code == 2

    def test_bad_u0_spec(self, stable_model_file):
        assert run(
            ["simulate", stable_model_file, "--u0", "perturbed:zap", "--t-end", "1"]
        ).exit_code == 2
