import dataclasses
import json
import math

import numpy as np
import pytest

from measengine import cli, config
from measengine.config import ConfigError, ValidationError
from measengine.errors import NumericalError
from measengine.oracle import convergence_study
from measengine.report import RUN_COLUMNS, SWEEP_COLUMNS, ReportBundle

W_EXT = math.log2(3) - 1.5
DW_LOST = 5 / 3 - math.log2(3)


def write_cfg(tmp_path, **over):
    raw = json.loads(config.bundled_text("qubit_x_measure"))
    raw.update(over)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(raw))
    return p


# -- config --------------------------------------------------------------------

@pytest.mark.parametrize("name", config.bundled_names())
def test_bundled_round_trip(name):
    cfg = config.loads(config.bundled_text(name))
    again = config.loads(cfg.dumps())
    assert again == cfg
    config.build(cfg)


def test_bundled_coverage():
    cfgs = [config.load(n) for n in config.bundled_names()]
    assert {c.mode for c in cfgs} == {"selective", "nonselective"}
    assert {c.gauge for c in cfgs} == {"raw", "match_energy", "ground_zero"}
    assert {c.permutation for c in cfgs} == {True, False}
    assert {2, 3, 4} <= {c.dim for c in cfgs}


def test_parse_errors_carry_position():
    with pytest.raises(ConfigError, match="line 2"):
        config.loads('{"name": "x",\n "dim": }')


@pytest.mark.parametrize("raw, msg", [
    ({"name": "x", "dim": 2, "hamiltonian": {"energies": [0, 1]}}, "temperature"),
    ({"name": "x", "dim": True, "temperature": 1, "hamiltonian": {}}, "dim"),
    ({"name": "x", "dim": 2, "temperature": 1, "hamiltonian": {}, "colour": 1}, "colour"),
    ({"name": "x", "dim": 2, "temperature": "hot", "hamiltonian": {}}, "temperature"),
    ([1, 2], "object"),
])
def test_config_field_errors(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        config.from_dict(raw)


@pytest.mark.parametrize("over, msg", [
    ({"temperature": -1}, "temperature"),
    ({"dim": 3}, "energies"),
    ({"mode": "weak"}, "mode"),
    ({"gauge": "odd"}, "gauge"),
    ({"basis": {"kind": "angle"}}, "theta"),
    ({"basis": {"kind": "vectors", "vectors": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}}, "basis"),
    ({"hamiltonian": {"matrix": [[[0, 0], [1, 0]], [[0, 0], [1, 0]]]}}, "Hermitian"),
])
def test_validation_errors(tmp_path, over, msg):
    cfg = config.load(str(write_cfg(tmp_path, **over)))
    with pytest.raises(ValidationError, match=msg):
        config.build(cfg)


def test_explicit_matrix_scenario():
    scn = config.build(config.load("qubit_explicit"))
    np.testing.assert_allclose(scn.h.matrix, [[0, 0.3 - 0.2j], [0.3 + 0.2j, 1]])
    np.testing.assert_allclose(np.abs(scn.basis.vectors[0]), [0.6, 0.8])


def test_seed_controls_random_scenarios():
    cfg = config.load("qutrit_random")
    a, b = config.build(cfg), config.build(cfg)
    np.testing.assert_array_equal(a.basis.unitary, b.basis.unitary)
    c = config.build(dataclasses.replace(cfg, seed=cfg.seed + 1))
    assert not np.allclose(a.basis.unitary, c.basis.unitary)


# -- cli -------------------------------------------------------------------------

def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_qubit_x_reproduces_closed_form(capsys):
    code, out, _ = run_cli(capsys, "run", "--config", "qubit_x_measure", "--format", "json", "--steps", "1000")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == 1
    assert rep["summary"]["W_extracted"] == pytest.approx(W_EXT, abs=1e-12)
    assert rep["summary"]["dW_lost"] == pytest.approx(DW_LOST, abs=1e-12)
    assert rep["oracle"][0]["steps"] == 1000
    assert rep["oracle"][0]["error"] < 1e-3


def test_run_qubit_z_is_all_zero(capsys):
    code, out, _ = run_cli(capsys, "run", "--config", "qubit_z_measure", "--format", "json", "--steps", "10")
    assert code == 0
    rep = json.loads(out)
    for row in rep["ledger"]:
        assert all(abs(row[q]) < 1e-14 for q in ("dE", "dS", "W_by_system", "Q_from_bath"))


@pytest.mark.parametrize("name", config.bundled_names())
def test_run_every_bundled_scenario(capsys, name):
    code, out, err = run_cli(capsys, "run", "--config", name, "--steps", "200", "--quiet")
    assert code == 0, err
    assert out == ""


def test_run_csv_is_deterministic_and_typed(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert cli.main(["run", "--config", "qutrit_random", "--format", "csv", "--out", str(p), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].split(",") == RUN_COLUMNS
    units = {line.split(",")[4]: line.split(",")[6] for line in lines[1:]}
    assert units["dS"] == "nats" and units["W_extracted"] == "E"


def test_negative_temperature_exit_code(tmp_path, capsys, caplog):
    code, _, _ = run_cli(capsys, "run", "--config", str(write_cfg(tmp_path, temperature=-1)))
    assert code == cli.EXIT_VALIDATION
    assert "temperature" in caplog.text


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run_cli(capsys, "run", "--config", str(p))[0] == cli.EXIT_CONFIG
    assert run_cli(capsys, "run", "--config", "missing_scenario")[0] == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericalError("Jacobi did not converge")

    monkeypatch.setattr(cli, "run_cycle", boom)
    assert run_cli(capsys, "run", "--config", "qubit_x_measure")[0] == cli.EXIT_NUMERICAL


def test_invariant_violation_exit_code(monkeypatch, capsys, caplog):
    real = cli.run_cycle

    def tampered(*a, **k):
        led = real(*a, **k)
        return dataclasses.replace(led, W_extracted=led.W_extracted + 1e-3)

    monkeypatch.setattr(cli, "run_cycle", tampered)
    code, _, _ = run_cli(capsys, "run", "--config", "qubit_x_measure", "--steps", "10")
    assert code == cli.EXIT_INVARIANT
    assert "W_extracted" in caplog.text


def test_nonfinite_fields_are_flagged():
    b = ReportBundle("x", summary={"W_extracted": math.nan}, sweep_rows=[{"value": 1.0, "W_sim": math.inf}])
    assert b.nonfinite_fields() == ["summary.W_extracted", "sweep_rows[0].W_sim"]


def test_parse_value():
    assert cli.parse_value("pi/8") == pytest.approx(math.pi / 8)
    assert cli.parse_value("3*pi/8") == pytest.approx(3 * math.pi / 8)
    assert cli.parse_value("2pi") == pytest.approx(2 * math.pi)
    assert cli.parse_value("0.25") == 0.25
    with pytest.raises(ValidationError):
        cli.parse_grid("1,banana")


def test_sweep_basis_angle(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--config", "qubit_x_measure", "--param", "basis_angle",
                           "--grid", "0,pi/8,pi/4,3*pi/8,pi/2", "--format", "json")
    assert code == 0
    rows = json.loads(out)["sweep"]["rows"]
    w = [r["W_extracted"] for r in rows]
    assert abs(w[0]) < 1e-14
    assert max(range(5), key=lambda i: abs(w[i])) == 4
    assert w[4] == pytest.approx(W_EXT, abs=1e-12)


def test_sweep_temperature_deficit_column(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--config", "qubit_x_selective", "--param", "temperature",
                           "--points", "4", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    head = lines[0].split(",")
    assert head == SWEEP_COLUMNS
    for line in lines[1:]:
        row = dict(zip(head, line.split(",")))
        t, ds, lost = float(row["temperature"]), float(row["dS_meas"]), float(row["dW_lost"])
        assert lost == pytest.approx(t * ds, abs=1e-14)


def test_sweep_oracle_steps_matches_convergence_study(capsys):
    grid = [100, 1000, 10000]
    code, out, _ = run_cli(capsys, "sweep", "--config", "qubit_x_measure", "--param", "oracle_steps",
                           "--grid", ",".join(map(str, grid)), "--format", "json")
    assert code == 0
    rows = json.loads(out)["sweep"]["rows"]
    scn = config.build(config.load("qubit_x_measure"))
    from measengine.states import gibbs_dual_hamiltonian, maximally_mixed, GibbsGauge

    h_dual = gibbs_dual_hamiltonian(maximally_mixed(2), scn.bath, GibbsGauge.match_energy(scn.h))
    table = convergence_study(h_dual, scn.h, scn.bath, grid)
    for row, ref in zip(rows, table.rows):
        assert row["oracle_steps"] == ref.steps
        # the quench leg is exact, so errors agree with the bare ramp study
        assert row["oracle_error"] == pytest.approx(ref.error, rel=1e-6)


def test_sweep_rejects_bad_grids(capsys):
    assert run_cli(capsys, "sweep", "--config", "qubit_x_measure", "--param", "oracle_steps",
                   "--grid", "1000,100")[0] == cli.EXIT_VALIDATION
    assert run_cli(capsys, "sweep", "--config", "qutrit_random", "--param", "basis_angle")[0] == cli.EXIT_VALIDATION


def test_plot_written_next_to_output(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = cli.main(["sweep", "--config", "qubit_x_measure", "--param", "basis_angle", "--format", "csv",
                     "--out", str(out), "--plot", "--quiet"])
    assert code == 0
    png = tmp_path / "sweep.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    run = tmp_path / "run.json"
    assert cli.main(["run", "--config", "qubit_x_selective", "--format", "json", "--out", str(run),
                     "--plot", "--quiet"]) == 0
    assert (tmp_path / "run.png").exists()


def test_plot_requires_out(capsys):
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", "qubit_x_measure", "--plot"])


def test_verify_quick_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "--depth", "quick")
    assert code == 0
    assert out.strip().endswith("invariant suites passed")
    assert "FAIL" not in out


def test_bad_apple_cli_examples(capsys):
    code, out, _ = run_cli(capsys, "bad-apple", "--n", "1", "--register", "zero", "--format", "json")
    assert code == 0
    rows = json.loads(out)["qubits"]
    assert rows[0]["channel_residual"] < 1e-10

    code, out, _ = run_cli(capsys, "bad-apple", "--n", "10", "--register", "mixed", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split(",") == cli.BAD_APPLE_COLUMNS
    assert len(lines) == 11
    for line in lines[1:]:
        row = dict(zip(cli.BAD_APPLE_COLUMNS, line.split(",")))
        assert float(row["register_coherence"]) <= 1e-12
        assert float(row["readout_correlation"]) <= 1e-12

    code, _, err = run_cli(capsys, "bad-apple", "--register", "plus")
    assert code == cli.EXIT_VALIDATION
    assert run_cli(capsys, "bad-apple", "--register", "sideways")[0] == cli.EXIT_CONFIG
    assert run_cli(capsys, "bad-apple", "--n", "0")[0] == cli.EXIT_VALIDATION
