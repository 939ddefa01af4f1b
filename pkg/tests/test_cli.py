import os

import numpy as np
import pytest

from nonlocal_lwr import cli
from nonlocal_lwr.core import BumpProfile, RiemannProfile
from nonlocal_lwr.errors import InvariantViolation, ParseError, ValidationError

MINIMAL = """
domain.x_min = -2.0
domain.x_max = 2.0
grid.n_left = 100
grid.n_right = 100
velocity.v_left = 1.0
velocity.v_right = 2.0
kernel.eta = 0.2
initial.type = riemann
initial.left = 0.25
initial.right = 0.77
time.t_end = 0.5
"""

LOCAL_OUT_OF_REGIME = """
domain.x_min = -2.0
domain.x_max = 2.0
grid.n_left = 400
grid.n_right = 400
velocity.v_left = 2.0
velocity.v_right = 1.0
kernel.family = local
solver.type = local_godunov
initial.type = riemann
initial.left = 0.25
initial.right = 0.77
time.t_end = 0.5
"""


def _write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_minimal_defaults():
    cfg = cli.parse_config(MINIMAL)
    scn = cfg.scenario
    assert scn.cfl == 0.5
    assert scn.kernel.family == "poly2"  # documented default
    assert scn.solver == "nonlocal_upwind"
    assert isinstance(scn.initial, RiemannProfile)
    assert cfg.snapshot_count == 11


def test_parse_unknown_key():
    with pytest.raises(ParseError) as err:
        cli.parse_config(MINIMAL + "viscocity = 3\n")
    assert "viscocity" in str(err.value)


def test_parse_negative_velocity():
    with pytest.raises(ValidationError) as err:
        cli.parse_config(MINIMAL.replace("velocity.v_left = 1.0", "velocity.v_left = -1.0"))
    assert "v_left must be positive" in str(err.value)


def test_parse_malformed_line():
    with pytest.raises(ParseError):
        cli.parse_config("domain.x_min -2\n")


def test_parse_duplicate_key():
    with pytest.raises(ParseError):
        cli.parse_config(MINIMAL + "time.t_end = 0.7\n")


def test_parse_missing_required():
    with pytest.raises(ValidationError):
        cli.parse_config(MINIMAL.replace("kernel.eta = 0.2\n", ""))


def test_parse_bump_and_comments():
    text = MINIMAL.replace(
        "initial.type = riemann\ninitial.left = 0.25\ninitial.right = 0.77",
        "initial.type = bump  # compact data\ninitial.center = -0.5\n"
        "initial.width = 0.4\ninitial.height = 0.6",
    )
    cfg = cli.parse_config(text)
    assert isinstance(cfg.scenario.initial, BumpProfile)


def test_cmd_run_writes_outputs(tmp_path):
    rc = cli.main(["run", "--config", _write(tmp_path, MINIMAL),
                   "--out", str(tmp_path / "out")])
    assert rc == 0
    files = sorted(os.listdir(tmp_path / "out"))
    assert "diagnostics.csv" in files
    assert sum(f.startswith("snapshot_") for f in files) == 11


def test_cmd_run_roundtrip_exact(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", _write(tmp_path, MINIMAL), "--out", str(out)]) == 0
    cfg = cli.parse_config(MINIMAL)
    from nonlocal_lwr.solver import run

    traj = run(cfg.scenario, snapshot_times=np.linspace(0, 0.5, 11))
    t, vals = cli.read_snapshot(str(out / "snapshot_0010.csv"))
    assert t == 0.5
    assert np.array_equal(vals, traj.snapshots[-1].values)


def test_cmd_run_deterministic(tmp_path):
    cfgp = _write(tmp_path, MINIMAL)
    assert cli.main(["run", "--config", cfgp, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", cfgp, "--out", str(tmp_path / "b")]) == 0
    for name in os.listdir(tmp_path / "a"):
        with open(tmp_path / "a" / name, "rb") as fa, open(tmp_path / "b" / name, "rb") as fb:
            assert fa.read() == fb.read(), name


def test_out_of_regime_warning_record(tmp_path, capsys):
    text = MINIMAL.replace("velocity.v_left = 1.0", "velocity.v_left = 3.0")
    rc = cli.main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert rc == 0
    assert "maximum principle" in capsys.readouterr().err
    head = (tmp_path / "o" / "diagnostics.csv").read_text().splitlines()[0]
    assert head.startswith("# warning:")


def test_env_var_overrides_out(tmp_path, monkeypatch):
    target = tmp_path / "env-target"
    monkeypatch.setenv("NONLOCAL_LWR_OUT", str(target))
    rc = cli.main(["run", "--config", _write(tmp_path, MINIMAL),
                   "--out", str(tmp_path / "flag-target")])
    assert rc == 0
    assert target.exists()
    assert not (tmp_path / "flag-target").exists()


def test_exit_codes(tmp_path, monkeypatch):
    bad = _write(tmp_path, "nonsense = 1\n", "bad.txt")
    assert cli.main(["run", "--config", bad, "--out", str(tmp_path / "x")]) == 1
    assert cli.main([]) == 1  # usage
    # viscous with epsilon below one cell is a solver error (exit 3)
    text = MINIMAL + "solver.type = viscous\nsolver.epsilon = 0.001\n"
    assert cli.main(["run", "--config", _write(tmp_path, text, "v.txt"),
                     "--out", str(tmp_path / "y")]) == 3
    # invariant violations map to exit 2
    monkeypatch.setattr(cli, "cmd_run", lambda cfg, out: (_ for _ in ()).throw(
        InvariantViolation("forced")))
    assert cli.main(["run", "--config", _write(tmp_path, MINIMAL, "m.txt"),
                     "--out", str(tmp_path / "z")]) == 2


def test_cmd_verify_passes_on_preset(tmp_path, capsys):
    rc = cli.main(["verify", "--config", _write(tmp_path, MINIMAL),
                   "--out", str(tmp_path / "v")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "max_principle" in out and "FAIL" not in out


def test_cmd_verify_randomized_corpus(tmp_path):
    text = MINIMAL + "verify.corpus = 2\n"
    rc = cli.main(["verify", "--config", _write(tmp_path, text),
                   "--out", str(tmp_path / "v"), "--seed", "7"])
    assert rc == 0


def test_cmd_verify_constant_state_trivial_pass(tmp_path):
    text = MINIMAL.replace("initial.left = 0.25", "initial.left = 0.4").replace(
        "initial.right = 0.77", "initial.right = 0.4")
    rc = cli.main(["verify", "--config", _write(tmp_path, text),
                   "--out", str(tmp_path / "v")])
    assert rc == 0


def test_cmd_counterexample_default_preset(tmp_path, capsys):
    rc = cli.main(["counterexample", "--out", str(tmp_path / "c")])
    assert rc == 0
    text = (tmp_path / "c" / "counterexample.csv").read_text().splitlines()
    assert text[1] == "cell_index,x_center,rho_numeric,rho_exact"
    assert "plateau" in capsys.readouterr().out


def test_cmd_refine(tmp_path, capsys):
    text = MINIMAL + "refine.dx_list = 0.04, 0.02, 0.01\n"
    rc = cli.main(["refine", "--config", _write(tmp_path, text),
                   "--out", str(tmp_path / "r")])
    assert rc == 0
    assert "observed L1 order" in capsys.readouterr().out
    assert (tmp_path / "r" / "refine.csv").exists()


def test_cmd_stability(tmp_path, capsys):
    text = MINIMAL + "stability.center = -0.5\nstability.width = 0.3\nstability.height = 0.05\n"
    rc = cli.main(["stability", "--config", _write(tmp_path, text),
                   "--out", str(tmp_path / "s")])
    assert rc == 0
    assert "envelope holds: True" in capsys.readouterr().out


def test_cmd_viscosity_sweep(tmp_path, capsys):
    text = MINIMAL.replace("grid.n_left = 100", "grid.n_left = 200").replace(
        "grid.n_right = 100", "grid.n_right = 200")
    text += "solver.type = viscous\nsolver.epsilon = 0.08\nsweep.eps_list = 0.16, 0.08\n"
    rc = cli.main(["viscosity-sweep", "--config", _write(tmp_path, text),
                   "--out", str(tmp_path / "w")])
    assert rc == 0
    lines = (tmp_path / "w" / "viscosity_sweep.csv").read_text().splitlines()
    assert lines[0] == "eps,l1_distance"
    assert len(lines) == 3
    # a parallel sweep produces the identical table
    rc = cli.main(["viscosity-sweep", "--config", _write(tmp_path, text, "p.txt"),
                   "--out", str(tmp_path / "wp"), "--jobs", "2"])
    assert rc == 0
    assert (tmp_path / "wp" / "viscosity_sweep.csv").read_text() == "\n".join(lines) + "\n"


def test_local_mode_config(tmp_path):
    cfg = cli.parse_config(LOCAL_OUT_OF_REGIME)
    assert cfg.scenario.kernel is None
    assert cfg.scenario.solver == "local_godunov"
    rc = cli.main(["run", "--config", _write(tmp_path, LOCAL_OUT_OF_REGIME),
                   "--out", str(tmp_path / "l")])
    assert rc == 0
