import csv
import io
import json
from math import pi

import pytest

from mbqed.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from mbqed.code import ErrorTarget, Location
from mbqed.scenario import (
    ConfigError,
    ResourceSpec,
    emit_bloch_data,
    emit_table_reproduction,
    grid_configs,
    parse_angle,
    parse_config,
    run_scenario,
    with_overrides,
)

BASIC = """\
input_state: N
error: Z3
error_angle: pi/2 rad
shots: 2000
seed: 11
"""


@pytest.mark.parametrize(
    "text, rad",
    [("45deg", pi / 4), ("pi/4 rad", pi / 4), ("-0.5 rad", -0.5), ("2pi/3 rad", 2 * pi / 3),
     ("pi rad", pi), ("-pi/2 rad", -pi / 2), ("90 deg", pi / 2), ("1e-3 rad", 1e-3)],
)
def test_parse_angle(text, rad):
    assert parse_angle(text) == pytest.approx(rad)


@pytest.mark.parametrize("text", ["45", "pi/4", "45 grad", "", "pi/x rad"])
def test_parse_angle_requires_unit(text):
    with pytest.raises(ValueError):
        parse_angle(text)


def test_parse_config_defaults():
    cfg = parse_config("input_state: '+'\n")
    assert cfg.input.name == "+"
    assert cfg.error is ErrorTarget.NONE and cfg.location is Location.KNOWN
    assert cfg.resource == ResourceSpec() and cfg.mc_cycles == 100
    assert cfg.seed_generated and 0 <= cfg.seed < 2**64


def test_parse_config_input_forms():
    a = parse_config("input_amplitudes: [1, 0, 0, 1]\n").input
    assert a.alpha == pytest.approx(2**-0.5) and a.beta == pytest.approx(1j * 2**-0.5)
    b = parse_config("input_angles: [45deg, 180deg]\n").input
    assert b.theta_deg == pytest.approx(45) and b.phi_deg == pytest.approx(180)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("error: Z2\n", "missing input state"),
        ("input_state: N\ninput_angles: [1deg, 2deg]\n", "line 2"),
        ("input_state: N\nbogus: 1\n", "line 2: unknown key 'bogus'"),
        ("input_state: X\n", "line 1: input_state"),
        ("input_state: N\nerror: Z4\n", "line 2: error"),
        ("input_state: N\n\nerror_angle: 45\n", "line 3: error_angle"),
        ("input_state: N\nresource: white_noise(1.5)\n", "resource"),
        ("input_state: N\nresource: white_noise_fidelity(0.01)\n", "resource"),
        ("input_state: N\nshots: -4\n", "shots"),
        ("input_state: N\nshots: ten\n", "shots"),
        ("input_state: N\nseed: -1\n", "seed"),
        ("input_state: N\nformat: xml\n", "format"),
        ("input_state: N\ntomography: maybe\n", "tomography"),
        ("input_amplitudes: [1, 0]\n", "input_amplitudes"),
        ("- a\n- b\n", "mapping"),
        ("input_state: [N\n", "malformed"),
    ],
)
def test_parse_config_diagnostics(text, needle):
    with pytest.raises(ConfigError, match=needle.replace("(", r"\(").replace(")", r"\)")):
        parse_config(text)


def test_resource_spec():
    assert ResourceSpec.parse("white_noise_fidelity(0.656)").mixing() == pytest.approx(0.63306666)
    assert str(ResourceSpec.parse("white_noise(0.5)")) == "white_noise(0.5)"
    assert ResourceSpec.parse("ideal").build().num_qubits == 4
    assert ResourceSpec.parse("box") == ResourceSpec()


def test_named_resources():
    from mbqed.cluster import box_cluster
    from mbqed.statevec import fidelity_pure

    lab = ResourceSpec.parse("lab")
    assert fidelity_pure(lab.build(), box_cluster()) == pytest.approx(1, abs=1e-12)
    square = ResourceSpec.parse("graph:3-4,1-2,1-3,2-4")
    assert str(square) == "graph:1-2,1-3,2-4,3-4"
    assert fidelity_pure(square.build(), box_cluster()) == pytest.approx(1, abs=1e-12)
    line = ResourceSpec.parse("graph:1-2,2-3,3-4")
    rep = run_scenario(parse_config("input_state: N\nresource: graph:1-2,2-3,3-4\nseed: 1\nshots: 100\n"))
    assert rep.data["config"]["resource"] == str(line)
    with pytest.raises(ValueError):
        ResourceSpec.parse("graph:1-5")


def test_run_scenario_report_contents():
    rep = run_scenario(parse_config(BASIC))
    d = rep.data
    assert d["schema_version"] == 1 and d["seed"] == 11 and not d["seed_generated"]
    assert d["shots"] == 2000 and sum(d["branches"].values()) == 2000
    synd = d["syndromes"]
    assert abs(sum(v["frequency"] for v in synd.values()) - 1) <= 1 / d["shots"]
    assert synd["++"]["count"] == synd["--"]["count"] == 0
    assert synd["+-"]["recovery"] == "I" and synd["-+"]["recovery"] == "X"
    assert synd["-+"]["fidelity_vs_ideal"] == pytest.approx(1)
    assert synd["+-"]["bloch_post_recovery"] == pytest.approx(d["input"]["bloch_ideal"], abs=1e-9)
    assert d["decoded_fidelity"]["mean"] == pytest.approx(1)
    assert d["aborted_shots"] == d["mismatch_shots"] == 0


def test_run_scenario_is_deterministic_and_tomography_independent():
    cfg = parse_config(BASIC)
    a, b = run_scenario(cfg).to_json(), run_scenario(cfg).to_json()
    assert a == b
    tomo = run_scenario(with_overrides(cfg, tomography=True, shots_per_setting=500, mc_cycles=10))
    assert tomo.data["syndromes"]["+-"]["count"] == json.loads(a)["syndromes"]["+-"]["count"]
    t = tomo.data["syndromes"]["+-"]["tomography"]
    assert 0.9 < t["fidelity"]["mean"] <= 1 and t["fidelity"]["std"] > 0


def test_csv_report():
    rep = run_scenario(with_overrides(parse_config(BASIC), format="csv"))
    rows = list(csv.DictReader(io.StringIO(rep.render())))
    assert [r["syndrome"] for r in rows] == ["++", "+-", "-+", "--"]
    assert rows[0]["recovery"] == "I" and rows[0]["count"] == "0"


def test_overrides_validate():
    cfg = parse_config(BASIC)
    assert with_overrides(cfg, seed=None).seed == 11
    with pytest.raises(ConfigError):
        with_overrides(cfg, shots=0)


def test_mismatch_counted_under_noise():
    rep = run_scenario(parse_config("input_state: P\nresource: white_noise(0.5)\nseed: 2\nshots: 4000\n"))
    d = rep.data
    assert d["syndromes"]["+-"]["recovery"] == "mismatch"
    odd = d["syndromes"]["+-"]["count"] + d["syndromes"]["-+"]["count"]
    assert d["mismatch_shots"] == odd > 0


def test_double_error_report_marks_confusion():
    rep = run_scenario(parse_config("input_state: '0'\nerror: Z2Z3\nhypothesis: unknown_location\nseed: 1\n"))
    d = rep.data
    assert d["confusable_shots"] == d["shots"]
    assert d["confusable_fraction_of_even_syndromes"] == 1
    assert d["syndromes"]["++"]["fidelity_vs_ideal"] == pytest.approx(0, abs=1e-12)


def test_bloch_records():
    rep = run_scenario(parse_config("input_state: '0'\nseed: 3\nshots: 100\n"))
    recs = {r["label"]: r for r in emit_bloch_data(rep)}
    assert (recs["pre_recovery --"]["x"], recs["pre_recovery --"]["z"]) == pytest.approx((0, -1))
    assert recs["post_recovery --"]["z"] == pytest.approx(1)
    assert recs["ideal"]["z"] == pytest.approx(1)
    m = emit_bloch_data(run_scenario(parse_config("input_state: M\nseed: 3\nshots: 10\n")))[0]
    assert (m["x"], m["y"], m["z"]) == pytest.approx((0.7071068, -0.7071068, 0))


def test_table_reproduction_layout():
    reports = [run_scenario(c) for c in grid_configs(ResourceSpec(), 200, 4)[:9]]
    text = emit_table_reproduction(reports, reference=True)
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    header = rows[0]
    assert header[:4] == ["table", "state", "none F", "none std"] and "none experimental F" in header
    first = dict(zip(header, rows[1]))
    assert first["none F"] == "1.000" and first["Z3 F"] == "NA" and first["none experimental F"] != "NA"
    bare = emit_table_reproduction(reports, reference=False)
    assert "experimental" not in bare


def test_white_noise_grid_fidelities_and_reference():
    reports = [run_scenario(c) for c in grid_configs(ResourceSpec.parse("white_noise_fidelity(0.656)"), 100, 6)]
    rows = [r for r in csv.reader(io.StringIO(emit_table_reproduction(reports))) if r]
    header, values = None, []
    for r in rows:
        if r[0] == "table":
            header = r
            continue
        cells = dict(zip(header, r))
        values += [float(v) for k, v in cells.items() if k.endswith(" F") and "experimental" not in k]
        if r[:2] == ["pi2_recovery", "N"]:
            assert (cells["Z3 experimental F"], cells["Z3 experimental std"]) == ("0.875", "0.029")
    assert len(values) == 144 and all(0.5 < v < 1 for v in values)


def test_grid_covers_all_table_cells():
    cfgs = grid_configs(ResourceSpec(), 10, 0)
    assert len(cfgs) == 54 and len({c.seed for c in cfgs}) == 54


def test_main_run_writes_json(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(BASIC)
    out = tmp_path / "r.json"
    assert main(["run", str(cfg), "--out", str(out), "--shots", "500"]) == EXIT_OK
    assert json.loads(out.read_text())["shots"] == 500
    assert main(["run", str(cfg), "--seed", "11", "--bloch-out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert "ideal" in (tmp_path / "b.csv").read_text()


def test_main_reports_generated_seed(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("input_state: T\nshots: 10\n")
    assert main(["run", str(cfg)]) == EXIT_OK
    first = capsys.readouterr()
    seed = int(first.err.split("seed:")[1])
    assert json.loads(first.out)["seed"] == seed
    assert main(["run", str(cfg), "--seed", str(seed)]) == EXIT_OK
    assert capsys.readouterr().out.replace('"seed_generated": false', '"seed_generated": true') == first.out


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("input_state: N\nshots: 0\n")
    assert main(["run", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["tables", "--resource", "pink_noise"]) == EXIT_CONFIG


def test_main_runtime_error(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(BASIC)
    assert main(["run", str(cfg), "--out", str(tmp_path / "no" / "such" / "dir.json")]) == EXIT_RUNTIME
    assert "runtime error" in capsys.readouterr().err


def test_main_catalog(capsys):
    assert main(["catalog"]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["state"] for r in rows] == ["0", "+", "-i", "T", "U", "Q", "N", "P", "M"]


def test_main_tables(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["tables", "--shots", "100", "--seed", "2", "--out", str(out), "--no-reference"]) == EXIT_OK
    rows = [r for r in csv.reader(io.StringIO(out.read_text())) if r and r[0] != "table"]
    assert len(rows) == 36
    assert "NA" not in {cell for r in rows for cell in r}
