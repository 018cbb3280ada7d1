import csv
import json

import numpy as np
import pytest

from drivenatom import ConfigError
from drivenatom.cli import PRESET_NAMES, build_preset, main, parse_config, run_scenario


# ---------------------------------------------------------------------------
# preset immutability: the parameter values are locked to the published ones
# ---------------------------------------------------------------------------


def test_fig1_presets_lock_drive_and_initial_state():
    a = build_preset("fig1a")
    assert a.cases[0].config.s == 120.241
    assert a.cases[0].config.omega_l == 50.0
    assert a.cases[0].config.g == 0.0
    assert (a.initial.sx, a.initial.sy, a.initial.sz) == (1.0, 0.0, 0.0)
    b = build_preset("fig1b")
    assert (b.initial.sx, b.initial.sy, b.initial.sz) == (0.0, 0.0, 1.0)
    assert b.cases[0].config.s == 120.241


@pytest.mark.parametrize("name,initial", [("fig2", (1.0, 0.0, 0.0)), ("fig3", (0.0, 0.0, 1.0))])
def test_four_case_presets_lock_parameters(name, initial):
    sc = build_preset(name)
    assert (sc.initial.sx, sc.initial.sy, sc.initial.sz) == initial
    by_label = {c.label: c for c in sc.cases}
    assert set(by_label) == {"isolated", "driven", "damped", "driven_damped"}
    assert by_label["isolated"].config.s == 0.0 and by_label["isolated"].config.g == 0.0
    assert by_label["driven"].config.s == 1.0 and by_label["driven"].config.omega_l == 1.0
    assert by_label["driven"].config.g == 0.0
    for label in ("damped", "driven_damped"):
        cfg = by_label[label].config
        assert cfg.g == 0.05 and cfg.gamma_cav == 0.1
        assert cfg.omega_cav == 1.0 and cfg.temperature == 0.0
        assert by_label[label].dissipative
    assert by_label["driven_damped"].config.s == 1.0


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        build_preset("fig9")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def test_minimal_preset_reference(tmp_path):
    sc = parse_config(write(tmp_path, "c.json", {"preset": "fig1b"}))
    assert sc.name == "fig1b"
    assert (sc.initial.sx, sc.initial.sy, sc.initial.sz) == (0.0, 0.0, 1.0)
    assert sc.cases[0].config.s == 120.241


def test_preset_override_violating_invariant_rejected(tmp_path):
    path = write(tmp_path, "c.json", {"preset": "fig2", "config": {"gamma_cav": 2.0}})
    with pytest.raises(ConfigError, match="gamma_cav"):
        parse_config(path)


def test_empty_document_names_missing_structure(tmp_path):
    with pytest.raises(ConfigError, match="preset"):
        parse_config(write(tmp_path, "c.json", ""))


def test_unknown_keys_reported_with_path(tmp_path):
    with pytest.raises(ConfigError, match="top level.nonsense"):
        parse_config(write(tmp_path, "c.json", {"preset": "fig2", "nonsense": 1}))
    path = write(
        tmp_path,
        "c2.json",
        {"name": "x", "initial": [1, 0, 0], "config": {"gama": 0.1}},
    )
    with pytest.raises(ConfigError, match="config.gama"):
        parse_config(path)


def test_initial_state_shape_errors(tmp_path):
    path = write(tmp_path, "c.json", {"name": "x", "initial": [1, 0], "config": {}})
    with pytest.raises(ConfigError, match="initial"):
        parse_config(path)


def test_missing_file_and_invalid_json(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(tmp_path / "nope.json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config(write(tmp_path, "c.json", "{broken"))


def test_mode_both_expands_to_two_cases(tmp_path):
    path = write(
        tmp_path,
        "c.json",
        {
            "name": "demo",
            "initial": [1, 0, 0],
            "config": {"s": 1.0, "omega_l": 1.0, "g": 0.05},
            "mode": "both",
            "t_end": 3.0,
            "sample_count": 31,
        },
    )
    sc = parse_config(path)
    assert [c.label for c in sc.cases] == ["demo_closed", "demo_dissipative"]
    assert [c.dissipative for c in sc.cases] == [False, True]


# ---------------------------------------------------------------------------
# execution, CSV schema, manifest round trip
# ---------------------------------------------------------------------------


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_csv_schema_and_manifest(tmp_path):
    sc = parse_config(
        write(
            tmp_path,
            "c.json",
            {
                "name": "demo",
                "initial": [1, 0, 0],
                "config": {"s": 1.0, "omega_l": 1.0, "g": 0.05},
                "mode": "both",
                "t_end": 3.0,
                "sample_count": 16,
            },
        )
    )
    paths = run_scenario(sc, tmp_path / "out", dt=0.05)
    rows = read_csv(paths["csv"])
    assert rows[0] == ["t", "sigma_x", "sigma_y", "sigma_z", "case_label"]
    assert len(rows) == 1 + 2 * 16
    labels = {r[4] for r in rows[1:]}
    assert labels == {"demo_closed", "demo_dissipative"}
    # floats carry 17 significant digits and parse back exactly
    assert float(rows[1][1]) == 1.0
    raw = paths["csv"].read_bytes()
    assert b"\r\n" in raw  # RFC 4180 line endings

    manifest = json.loads(paths["manifest"].read_text())
    assert manifest["settings"]["dt"] == 0.05
    assert manifest["scenario"]["cases"][1]["config"]["g"] == 0.05


def test_manifest_round_trip_bit_identical(tmp_path):
    sc = parse_config(
        write(
            tmp_path,
            "c.json",
            {
                "name": "demo",
                "initial": [0, 0, 1],
                "config": {"s": 1.0, "omega_l": 1.0, "g": 0.05},
                "mode": "dissipative",
                "t_end": 4.0,
                "sample_count": 21,
            },
        )
    )
    first = run_scenario(sc, tmp_path / "a", dt=0.1)
    sc2 = parse_config(first["manifest"])
    second = run_scenario(sc2, tmp_path / "b")
    assert first["csv"].read_bytes() == second["csv"].read_bytes()


def test_sweep_scenario_csv(tmp_path):
    sc = parse_config(
        write(
            tmp_path,
            "c.json",
            {
                "scenario": {
                    "name": "sweep",
                    "kind": "sweep",
                    "sweep": {"omega_l": 50.0, "ratios": [0.0, 1.0, 2.4048]},
                }
            },
        )
    )
    paths = run_scenario(sc, tmp_path / "out")
    rows = read_csv(paths["csv"])
    assert rows[0] == ["s_over_wl", "eps1", "eps2", "splitting", "splitting_highfreq"]
    assert len(rows) == 4
    assert float(rows[3][3]) < 0.01  # splitting collapses at the J0 zero


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    ok = main(["--preset", "fig1a", "--out", str(tmp_path / "ok"), "--rtol", "1e-7", "--samples", "41"])
    assert ok == 0
    bad = write(tmp_path, "bad.json", {"preset": "fig2", "config": {"gamma_cav": 2.0}})
    assert main(["--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "gamma_cav" in capsys.readouterr().err

    from drivenatom import NumericsError
    import drivenatom.cli as cli_mod

    def boom(*args, **kwargs):
        raise NumericsError("synthetic")

    monkeypatch.setattr(cli_mod, "run_scenario", boom)
    assert main(["--preset", "fig1a", "--out", str(tmp_path / "y")]) == 3


def test_preset_names_exposed():
    assert set(PRESET_NAMES) == {"fig1a", "fig1b", "fig2", "fig3", "sweep"}
