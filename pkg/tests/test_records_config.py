import numpy as np
import pytest

from platoon_dss.bounds import scenario_bound_inputs
from platoon_dss.conditions import check_conditions
from platoon_dss.config import ConfigError, format_gains_record, load_config, parse_config
from platoon_dss.controller import REFERENCE_GAINS
from platoon_dss.records import (read_table, write_bound_curves, write_metrics, write_sweep,
                                 write_table, write_trajectory)
from platoon_dss.simulator import SweepRow, run_scenario


def test_table_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    cols = {"t": np.linspace(0, 1, 7), "x": rng.normal(size=7), "n": np.arange(7),
            "kind": np.array(["a"] * 7)}
    write_table(tmp_path / "t.csv", cols)
    back = read_table(tmp_path / "t.csv")
    assert list(back) == list(cols)
    np.testing.assert_array_equal(back["x"], cols["x"])
    assert back["kind"][0] == "a"


def test_read_empty_file(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ValueError):
        read_table(tmp_path / "e.csv")


@pytest.fixture(scope="module")
def short_run():
    cfg = load_config()
    sc = cfg.scenario(mass_spread=0.0)
    traj, _ = run_scenario(sc, REFERENCE_GAINS, "c2", dt=0.1, t_end=2.0)
    return traj, scenario_bound_inputs(sc, REFERENCE_GAINS, check_conditions(REFERENCE_GAINS))


def test_run_records(tmp_path, short_run):
    traj, inputs = short_run
    write_trajectory(tmp_path / "traj.csv", traj)
    t = read_table(tmp_path / "traj.csv")
    assert len(t) == 1 + 7 * 5
    np.testing.assert_array_equal(t["q_3"], traj.q[:, 2])
    np.testing.assert_array_equal(t["e_gap_1"], traj.gap_errors()[:, 0])

    write_metrics(tmp_path / "m.csv", traj, inputs)
    m = read_table(tmp_path / "m.csv")
    assert list(m) == ["t", "sup_err", "bound_eq16", "bound_eq17", "sup_err_z", "bound_eq14"]
    assert np.all(m["sup_err"] <= m["bound_eq16"])
    write_metrics(tmp_path / "m0.csv", traj, None)
    assert np.isnan(read_table(tmp_path / "m0.csv")["bound_eq16"]).all()

    write_bound_curves(tmp_path / "b.csv", traj.times, inputs, ("original_eq16", "monteil_eq17"))
    b = read_table(tmp_path / "b.csv")
    assert len(b["t"]) == 2 * len(traj.times)
    assert set(b["kind"]) == {"original_eq16", "monteil_eq17"}

    write_sweep(tmp_path / "s.csv", [SweepRow(3, 1.5, 9.0), SweepRow(5, 1.6, 9.0)])
    s = read_table(tmp_path / "s.csv")
    np.testing.assert_array_equal(s["N"], [3, 5])
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "3,1.5,9.0"


def test_bundled_config_matches_reference_scenario():
    cfg = load_config()
    assert cfg.gains == REFERENCE_GAINS
    assert cfg.base.n_vehicles == 5 and cfg.base.spacing == (10.0,) * 5
    assert cfg.variant == "c2" and cfg.dt == 0.01 and cfg.t_end == 100.0
    assert cfg.bound_kinds == ("original_eq16", "monteil_eq17", "augmented_eq14")
    assert cfg.synthesis.fixed == {"eps": 1.0}
    assert cfg.scenario() == cfg.scenario()
    assert cfg.scenario_id == "reference_n5_c2_seed1"


def test_gains_record_round_trips():
    report = check_conditions(REFERENCE_GAINS)
    text = format_gains_record(REFERENCE_GAINS, report)
    assert "[certificate]" in text and "feasible = true" in text
    assert parse_config(text).gains == REFERENCE_GAINS


def test_explicit_vehicle_sections():
    text = """
[scenario]
n_vehicles = 2
[vehicle.1]
q0 = -9.5
w_bar = 0.2
[vehicle.2]
mass_true = 1100
"""
    cfg = parse_config(text)
    assert not cfg.randomize
    sc = cfg.scenario()
    assert sc.per_vehicle[0].initial.q == -9.5 and sc.per_vehicle[0].disturbance.w_bar == 0.2
    assert sc.per_vehicle[1].params.mass_true == 1100.0
    assert sc.per_vehicle[1].initial.q == -20.0


@pytest.mark.parametrize("text, fragment", [
    ("[gains]\nkp1 = abc\n", "<config>:2: [gains] kp1"),
    ("[gains]\nkp1 = 1\n", "missing field"),
    ("[run]\nvariant = c3\n", "[run] variant"),
    ("[run]\ndt = -1\n", "must be positive"),
    ("[run]\nbounds = eq99\n", "unknown bound kind"),
    ("[run]\nspeed = 3\n", "unknown field"),
    ("[bogus]\n", "unknown section"),
    ("[scenario]\nn_vehicles = 2\n[vehicle.1]\n", "explicit vehicles"),
    ("[scenario]\nn_vehicles = 0\n", "[scenario]"),
    ("[synthesis.bounds]\nkp1 = 1\n", "expected 'lo, hi'"),
    ("[scenario]\nrandomize = maybe\n", "boolean"),
    ("[gains\n", "<config>"),
])
def test_config_errors_name_the_field(text, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert fragment in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.ini"))
