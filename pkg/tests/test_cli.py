import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from squeezetrap import coherent
from squeezetrap.cli import EXIT_DIVERGED, EXIT_FAIL, EXIT_OK, main, resolve_threads
from squeezetrap.config import load_config, to_dimensionless, validate
from squeezetrap.dynamics import CSV_HEADER, PhaseState, classical_hamiltonian
from squeezetrap.errors import ConfigError
from squeezetrap.floquet import mathieu_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

PENNING = {
    "particle": {"Q": 1.0, "M": 1.0},
    "trap": {"c2": -0.01, "B0": 1.0},
    "drive": {"U0": -5.0, "V0": 0.0, "Omega": 1.0},
    "initial_state": {"axial": {"z": [0.2, 0.1]}, "radial": {"xi": 1.0, "eta": 1.0, "sigma": 0.0}},
    "integration": {"periods": 5},
    "scales": {"hbar": 1.0, "physical_scales": False},
    "output": {"path": "out"},
}


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def variant(**sections):
    doc = json.loads(json.dumps(PENNING))
    for name, fields in sections.items():
        if fields is None:
            doc.pop(name, None)
        else:
            doc.setdefault(name, {}).update(fields)
    return doc


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SQUEEZETRAP_THREADS", raising=False)


def read_rows(path):
    lines = Path(path).read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# ---- configuration ------------------------------------------------------


def test_minimal_config_defaults():
    cfg = validate({"particle": {"Q": 1.0, "M": 1.0}, "trap": {"c2": -0.01, "B0": 1.0},
                    "drive": {"U0": -5.0, "Omega": 1.0}})
    g = cfg.geometry
    assert (g.D, g.C4, g.C6) == (0.0, 0.0, 0.0)
    assert cfg.t1 == cfg.t0 == 0.0 and cfg.k_a == 0.25 and cfg.l == 0


def test_all_violations_reported():
    doc = variant(modes={"k_a": 0.5, "l": -1}, particle={"M": -1.0},
                  initial_state={"axial": {"z": [0.9, 0.9]}}, bogus={})
    with pytest.raises(ConfigError) as info:
        validate(doc)
    paths = [p for p, _ in info.value.violations]
    for expected in ("modes.k_a", "modes.l", "particle.M", "initial_state.axial.z", "bogus"):
        assert expected in paths
    msg = str(info.value)
    assert "{0.25, 0.75}" in msg and "disk constraint" in msg


def test_k_a_rejected_with_exit_one(tmp_path, capsys):
    assert main(["simulate", "--config", write(tmp_path, variant(modes={"k_a": 0.5}))]) == EXIT_FAIL
    err = capsys.readouterr().err
    assert "modes.k_a" in err and "{0.25, 0.75}" in err


def test_disk_constraint_rejected(tmp_path, capsys):
    doc = variant(initial_state={"radial": {"z": [1.0, 0.0]}})
    assert main(["simulate", "--config", write(tmp_path, doc)]) == EXIT_FAIL
    assert "disk constraint" in capsys.readouterr().err


def test_xieta_constraint_rejected():
    with pytest.raises(ConfigError, match="initial_state.radial"):
        validate(variant(initial_state={"radial": {"xi": 2.0, "eta": 1.0, "sigma": 0.0}}))


def test_unknown_field_and_parse_errors(tmp_path):
    with pytest.raises(ConfigError, match="trap.Dx"):
        validate(variant(trap={"Dx": 1.0}))
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_conflicting_end_time():
    with pytest.raises(ConfigError, match="either t1 or periods"):
        validate(variant(integration={"t1": 3.0}))


def test_dimensionless_rescaling_preserves_invariants():
    cfg_si = load_config(CONFIGS / "calcium_si.json")
    raw = json.loads((CONFIGS / "calcium_si.json").read_text())
    raw["scales"]["dimensionless"] = False
    cfg_phys = validate(raw)
    assert cfg_si.particle.M == 1.0 and cfg_si.drive.Omega == 1.0 and cfg_si.hbar == 1.0
    W = cfg_phys.drive.Omega
    assert cfg_si.t1 == pytest.approx(cfg_phys.t1 * W, rel=1e-14)
    for mode in ("axial", "radial"):
        m1 = mathieu_params(cfg_si.params(), mode)
        m2 = mathieu_params(cfg_phys.params(), mode)
        assert (m1.a, m1.q) == pytest.approx((m2.a, m2.q), rel=1e-12, abs=1e-15)
    s = PhaseState.from_disk(0.2 + 0.1j, -0.1j)
    for t in (0.0, 1.3e-8):
        E_phys = classical_hamiltonian(s, t, cfg_phys.params()) / (cfg_phys.hbar * W)
        E_dim = classical_hamiltonian(s, t * W, cfg_si.params())
        assert E_dim == pytest.approx(E_phys, rel=1e-10)


def test_dimensionless_idempotent_on_unit_system():
    cfg = validate(PENNING)
    again = to_dimensionless(cfg)
    assert again.geometry == cfg.geometry and again.drive == cfg.drive and again.t1 == cfg.t1


def test_thread_resolution(monkeypatch):
    assert resolve_threads(None) == 1
    assert resolve_threads(3) == 3
    monkeypatch.setenv("SQUEEZETRAP_THREADS", "2")
    assert resolve_threads(5) == 2
    monkeypatch.setenv("SQUEEZETRAP_THREADS", "x")
    with pytest.raises(ConfigError):
        resolve_threads(None)


# ---- verify -------------------------------------------------------------


def test_verify_all_pass(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
    for name in ("commutator", "casimir", "s_oracle", "gradient", "invariant_drift", "mathieu_limit"):
        assert f"PASS {name}" in out


def test_verify_filter(capsys):
    assert main(["verify", "--filter", "casimir"]) == EXIT_OK
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 1 and lines[0].startswith("PASS casimir")


def test_verify_unknown_filter(capsys):
    assert main(["verify", "--filter", "nope"]) == EXIT_FAIL


def test_verify_detects_injected_moment_error(monkeypatch, capsys):
    real = coherent.husimi_Q

    def broken(n, labels, literal=False):
        q = real(n, labels, literal)
        # flip the sign of the 4(k+m) term of the third moment
        return q - 8.0 * labels.weight if n == 3 else q

    monkeypatch.setattr(coherent, "husimi_Q", broken)
    assert main(["verify", "--filter", "s_oracle"]) == EXIT_FAIL
    assert "FAIL s_oracle" in capsys.readouterr().out


def test_filter_only_for_verify(tmp_path):
    assert main(["simulate", "--config", write(tmp_path, PENNING), "--filter", "casimir"]) == EXIT_FAIL


# ---- simulate -----------------------------------------------------------


def test_simulate_writes_trajectory(tmp_path, capsys):
    assert main(["simulate", "--config", write(tmp_path, PENNING)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "steps:" in out and "max constraint residual" in out and "final energy" in out
    drift = float(out.split("relative energy drift:")[1].split()[0])
    assert drift < 1e-8
    header, rows = read_rows(tmp_path / "out" / "trajectory.csv")
    assert tuple(header) == CSV_HEADER and len(rows) > 10
    assert float(rows[-1][0]) == pytest.approx(5 * 2 * math.pi, rel=1e-14)


def test_simulate_fixed_point_constant_columns(tmp_path):
    # z = 0, V0 = 0 and default frequencies: A = B in each mode. U0 is chosen
    # so that K_a = 1/4 and K_r = 1/8, making both defaults exactly 1/2.
    doc = variant(drive={"U0": -6.25}, initial_state={"axial": {"z": [0.0, 0.0]}, "radial": {"z": [0.0, 0.0]}})
    assert main(["simulate", "--config", write(tmp_path, doc)]) == EXIT_OK
    _, rows = read_rows(tmp_path / "out" / "trajectory.csv")
    cols = np.array(rows, dtype=float)
    assert np.array_equal(cols[:, 1:8], np.broadcast_to(cols[0, 1:8], cols[:, 1:8].shape))
    assert cols[0, 1] == 1.0 and cols[0, 3] == 0.0


def test_simulate_degenerate_interval(tmp_path):
    doc = variant(integration={"periods": None})
    doc["integration"] = {"t0": 1.5, "t1": 1.5}
    assert main(["simulate", "--config", write(tmp_path, doc)]) == EXIT_OK
    _, rows = read_rows(tmp_path / "out" / "trajectory.csv")
    assert len(rows) == 1 and rows[0][0] == "1.5"


def test_simulate_divergence_exit_two(tmp_path, capsys):
    doc = variant(trap={"c2": -0.1, "B0": 0.0}, drive={"U0": 0.0, "V0": 1.0},
                  initial_state={"axial": {"z": [0.3, 0.0]}, "radial": {"z": [0.3, 0.0]}},
                  integration={"periods": 200})
    doc["frequencies"] = {"omega_a": 0.3, "omega_r": 0.3}
    assert main(["simulate", "--config", write(tmp_path, doc)]) == EXIT_DIVERGED
    assert "divergence" in capsys.readouterr().err
    _, rows = read_rows(tmp_path / "out" / "trajectory.csv")
    assert 1 <= len(rows) and float(rows[-1][0]) < 200 * 2 * math.pi


def test_simulate_plot(tmp_path):
    assert main(["simulate", "--config", write(tmp_path, PENNING), "--plot"]) == EXIT_OK
    png = tmp_path / "out" / "trajectory.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# ---- equilibria ---------------------------------------------------------


def test_combined_equilibrium_single_root(tmp_path, capsys):
    doc = variant(trap={"D": 1e-3}, modes={"k_a": 0.75, "l": 1})
    assert main(["equilibria", "--config", write(tmp_path, doc)]) == EXIT_OK
    header, rows = read_rows(tmp_path / "out" / "roots.csv")
    assert header == ["xi_a", "xi_r", "residual", "admissible", "classification"]
    assert len(rows) == 1 and float(rows[0][2]) < 1e-10


def test_combined_singular_reports_empty(tmp_path, capsys):
    doc = variant(trap={"D": 1e-3})
    assert main(["equilibria", "--config", write(tmp_path, doc)]) == EXIT_OK
    assert "singular" in capsys.readouterr().out
    _, rows = read_rows(tmp_path / "out" / "roots.csv")
    assert rows == []


def test_pseudopotential_equilibria_example(tmp_path):
    shutil.copy(CONFIGS / "ideal_paul.json", tmp_path)
    assert main(["equilibria", "--config", "ideal_paul.json"]) == EXIT_OK
    out_dir = json.loads((CONFIGS / "ideal_paul.json").read_text())["output"]["path"]
    _, rows = read_rows(tmp_path / out_dir / "roots.csv")
    assert rows and all(float(r[2]) < 1e-10 for r in rows)


# ---- spectrum and stability -------------------------------------------


def test_spectrum_unstable_mode_named(tmp_path, capsys):
    # q = 0 and a < 0 for the axial mode
    doc = variant(drive={"U0": 5.0, "V0": 0.0})
    doc["frequencies"] = {"omega_a": 1.0, "omega_r": 1.0}
    assert main(["spectrum", "--config", write(tmp_path, doc)]) == EXIT_FAIL
    err = capsys.readouterr().err
    assert "axial mode is unstable" in err and "(a, q)" in err


def test_spectrum_levels(tmp_path):
    shutil.copy(CONFIGS / "combined_anharmonic.json", tmp_path)
    assert main(["spectrum", "--config", "combined_anharmonic.json"]) == EXIT_OK
    header, rows = read_rows(tmp_path / "out" / "combined" / "spectrum.csv")
    assert header == ["k_a", "m_a", "k_r", "m_r", "l", "E"]
    assert len(rows) == 4
    E = [float(r[5]) for r in rows]
    # m_a: 0 -> 1 raises the level by 2 hbar mu_a
    assert E[1] - E[0] > 0


def test_stability_grid_file(tmp_path, capsys):
    doc = variant(stability={"a": [-1.0, 1.0, 50], "q": [0.0, 1.0, 50]})
    assert main(["stability", "--config", write(tmp_path, doc)]) == EXIT_OK
    header, rows = read_rows(tmp_path / "out" / "stability.csv")
    assert header == ["a", "q", "stable", "beta"] and len(rows) == 2500
    assert rows[0][:2] == ["-1", "0"] and rows[1][1] == "0.020408163265306121"
    assert {r[2] for r in rows} == {"true", "false"}
    assert all((r[3] == "nan") == (r[2] == "false") for r in rows)


def test_outputs_byte_identical(tmp_path):
    doc = variant(stability={"a": [-1.0, 1.0, 12], "q": [0.0, 1.0, 9]}, trap={"D": 1e-3},
                  modes={"k_a": 0.75, "l": 1})
    cfg = write(tmp_path, doc)
    files = ("trajectory.csv", "stability.csv", "roots.csv", "spectrum.csv")
    snapshots = []
    for run in range(2):
        for cmd in ("simulate", "stability", "equilibria", "spectrum"):
            assert main([cmd, "--config", cfg]) == EXIT_OK
        snapshots.append([(tmp_path / "out" / f).read_bytes() for f in files])
        shutil.rmtree(tmp_path / "out")
    assert snapshots[0] == snapshots[1]


def test_stability_threads_do_not_change_output(tmp_path, monkeypatch):
    doc = variant(stability={"a": [-1.0, 1.0, 8], "q": [0.0, 1.0, 6]})
    cfg = write(tmp_path, doc)
    assert main(["stability", "--config", cfg]) == EXIT_OK
    one = (tmp_path / "out" / "stability.csv").read_bytes()
    monkeypatch.setenv("SQUEEZETRAP_THREADS", "3")
    assert main(["stability", "--config", cfg, "--threads", "1"]) == EXIT_OK
    assert (tmp_path / "out" / "stability.csv").read_bytes() == one


def test_stability_plot(tmp_path):
    doc = variant(stability={"a": [-1.0, 1.0, 10], "q": [0.0, 1.0, 10]})
    assert main(["stability", "--config", write(tmp_path, doc), "--plot"]) == EXIT_OK
    assert (tmp_path / "out" / "stability.png").read_bytes()[:4] == b"\x89PNG"


def test_console_script_entry(tmp_path):
    exe = shutil.which("squeezetrap")
    cmd = [exe] if exe else [sys.executable, "-m", "squeezetrap"]
    proc = subprocess.run(cmd + ["verify", "--filter", "commutator,casimir"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "2/2 checks passed" in proc.stdout


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_load(name):
    load_config(CONFIGS / name)
