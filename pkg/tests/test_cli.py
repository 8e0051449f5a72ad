import json
import math

import numpy as np
import pytest

from linpot.cli import main

FREE_CFG = """\
[grid]
x_min = -32.0
x_max = 32.0
n = 1024

[state]
x0 = 0.0
p0 = 0.0
sigma = 1.0

[potential]
kind = free

[solver]
dt = 0.001
n_steps = 1000
record_every = 200
"""

LINEAR_CFG = FREE_CFG.replace("kind = free", "kind = linear\nv0 = 1.5")
ZERO_LINEAR_CFG = FREE_CFG.replace("kind = free", "kind = linear\nv0 = 0.0")

TUNNEL_CFG = """\
[grid]
x_min = -128.0
x_max = 128.0
n = 2048

[state]
x0 = 0.0
p0 = 4.0
sigma = 1.0

[potential]
kind = barrier
x_start = 36.0
slope = 8.0
peak_height = 11.2

[solver]
dt = 0.002
n_steps = 40000
record_every = 250
absorber = on
absorber_width_fraction = 0.2
absorber_strength = 12.0

[scan]
delays = 0.0,2.0
"""

PSG_CFG = """\
[psg]
v0 = 2.1708037636748028
length = 1.0
speed = 1.0
mass = 1.0
"""

SPIN_CFG = """\
[grid]
x_min = -64.0
x_max = 64.0
n = 1024

[state]
x0 = 0.0
p0 = 0.0
sigma = 2.5

[sg]
coupling = 1.0
duration = 1.0
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema:")
    header = lines[1].split(",")
    rows = [
        dict(zip(header, (float(v) for v in line.split(","))))
        for line in lines[2:]
    ]
    return header, rows


class TestEvolve:
    def test_free_width_column_matches_closed_form(self, tmp_path):
        cfg = write(tmp_path, "free.cfg", FREE_CFG)
        out = tmp_path / "out"
        assert main(["evolve", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "trajectory.csv")
        assert header == ["t", "mean_x", "mean_p", "width", "norm", "l2_vs_analytic"]
        for row in rows:
            expected = math.sqrt(1.0 + row["t"] ** 2)
            assert row["width"] == pytest.approx(expected, rel=1e-9)

    def test_linear_l2_column(self, tmp_path):
        cfg = write(tmp_path, "lin.cfg", LINEAR_CFG)
        out = tmp_path / "out"
        assert main(["evolve", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out / "trajectory.csv")
        assert all(row["l2_vs_analytic"] <= 1e-7 for row in rows)
        (out / "final_state.csv").exists()

    def test_zero_slope_bit_identical_to_free(self, tmp_path):
        free_out = tmp_path / "free_out"
        zero_out = tmp_path / "zero_out"
        main(["evolve", "--config", write(tmp_path, "f.cfg", FREE_CFG), "--out", str(free_out)])
        main(["evolve", "--config", write(tmp_path, "z.cfg", ZERO_LINEAR_CFG), "--out", str(zero_out)])
        a = (free_out / "trajectory.csv").read_text()
        b = (zero_out / "trajectory.csv").read_text()
        assert a == b
        assert (free_out / "final_state.csv").read_text() == (
            zero_out / "final_state.csv"
        ).read_text()

    def test_deterministic_output(self, tmp_path):
        cfg = write(tmp_path, "lin.cfg", LINEAR_CFG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["evolve", "--config", cfg, "--out", str(out1), "--seed", "3"])
        main(["evolve", "--config", cfg, "--out", str(out2), "--seed", "3"])
        assert (out1 / "trajectory.csv").read_bytes() == (
            out2 / "trajectory.csv"
        ).read_bytes()

    def test_bad_config_exit_code(self, tmp_path):
        cfg = write(tmp_path, "bad.cfg", "[grid]\nn = 1000\n")
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_precondition_exit_code(self, tmp_path):
        narrow = FREE_CFG.replace("x_min = -32.0", "x_min = -2.0").replace(
            "x_max = 32.0", "x_max = 2.0"
        ).replace("n = 1024", "n = 64")
        cfg = write(tmp_path, "narrow.cfg", narrow)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


class TestTunnel:
    def test_scan_outputs(self, tmp_path):
        cfg = write(tmp_path, "tun.cfg", TUNNEL_CFG)
        out = tmp_path / "out"
        assert main(["tunnel", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "scan.csv")
        assert header == ["sigma_at_arrival", "T", "R", "residual", "t_measure"]
        assert len(rows) == 2
        assert rows[1]["sigma_at_arrival"] > rows[0]["sigma_at_arrival"]
        _, profile = read_csv(out / "potential_profile.csv")
        peak = max(r["V"] for r in profile)
        # grid-sampled profile: the true apex sits between grid points
        assert 11.2 * 0.95 <= peak <= 11.2

    def test_wrong_potential_kind(self, tmp_path):
        cfg = write(tmp_path, "t.cfg", TUNNEL_CFG.replace("kind = barrier", "kind = free"))
        assert main(["tunnel", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestPsg:
    def test_pi_geometry_report(self, tmp_path):
        cfg = write(tmp_path, "psg.cfg", PSG_CFG)
        out = tmp_path / "out"
        assert main(["psg", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out / "psg_report.csv")
        assert rows[0]["closed_form_phase"] == pytest.approx(-math.pi, abs=1e-10)
        assert rows[0]["composed_phase"] == pytest.approx(-math.pi, abs=1e-10)
        assert rows[0]["abs_difference"] < 1e-10
        _, sweep = read_csv(out / "psg_sweep.csv")
        assert len(sweep) == 21
        # quadratic: phase(2 v0) = 4 phase(v0)
        mid = sweep[10]["phase"]
        end = sweep[20]["phase"]
        assert end == pytest.approx(4 * mid, rel=1e-12)

    def test_missing_section(self, tmp_path):
        cfg = write(tmp_path, "empty.cfg", "")
        assert main(["psg", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_packet_run_guard_and_override(self, tmp_path):
        # a wide packet violates the narrow-beam precondition (L/width < 20):
        # exit 3 by default, composed anyway under --override-preconditions
        text = PSG_CFG + "\n[state]\nx0 = 0.0\np0 = 0.0\nsigma = 1.0\n"
        cfg = write(tmp_path, "psg_state.cfg", text)
        out = tmp_path / "out"
        assert main(["psg", "--config", cfg, "--out", str(out)]) == 3
        assert (
            main(
                [
                    "psg",
                    "--config",
                    cfg,
                    "--out",
                    str(out),
                    "--override-preconditions",
                ]
            )
            == 0
        )
        _, rows = read_csv(out / "psg_report.csv")
        assert rows[0]["packet_phase"] == pytest.approx(-math.pi, abs=1e-6)


class TestSpin:
    def test_gate_report(self, tmp_path):
        cfg = write(tmp_path, "spin.cfg", SPIN_CFG)
        out = tmp_path / "out"
        assert main(["spin", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out / "spin_report.csv")
        # first row is the PSG-removed control
        assert rows[0]["flip_fidelity"] == pytest.approx(0.0, abs=1e-9)
        pi_rows = [r for r in rows if abs(r["target_phase"] - math.pi) < 1e-12]
        assert pi_rows and pi_rows[0]["flip_fidelity"] == pytest.approx(1.0, abs=1e-9)


class TestVerifyCommand:
    def test_subset_runs_and_reports(self, tmp_path):
        out = tmp_path / "out"
        code = main(["verify", "--only", "c02,c06", "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "verify_summary.json").read_text())
        assert summary["c02"]["passed"] is True
        assert summary["c06"]["passed"] is True
        assert "c13" not in summary
