"""CLI behavior: parsing, determinism, exit codes, files written.

Oracles: closed-form values for the circle and sphere, and the
byte-identical-output contract.
"""

import math

import numpy as np
import pytest

from rieszreg.cli import (RunConfig, main, parse_map_spec)
from rieszreg.errors import CenterTooClose


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _rows(text):
    out = []
    for line in text.splitlines():
        if line.startswith("#"):
            continue
        out.append(line.split(","))
    return out


class TestConfig:
    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(ValueError):
            RunConfig(command="energy", tol=0.0)

    def test_rejects_unknown_format(self):
        with pytest.raises(ValueError):
            RunConfig(command="energy", fmt="yaml")

    def test_hash_is_stable(self):
        a = RunConfig(command="energy", shape="circle(r=1)",
                      z_values=(-2.0,))
        b = RunConfig(command="energy", shape="circle(r=1)",
                      z_values=(-2.0,))
        assert a.digest() == b.digest()
        c = RunConfig(command="energy", shape="circle(r=2)",
                      z_values=(-2.0,))
        assert a.digest() != c.digest()


class TestMapGrammar:
    def test_inversion_and_composition(self):
        # factors apply left to right: homothety first, then inversion
        T = parse_map_spec("homothety(2)*inversion(3,0,1)")
        x = np.array([[0.5, 0.25]])
        y = 2.0 * x - [3.0, 0.0]
        assert np.allclose(T.apply(x),
                           [3.0, 0.0] + y / (y ** 2).sum())

    def test_bad_specs(self):
        for bad in ("spin(1)", "homothety(1,2)", "inversion(1)",
                    "homothety(x)"):
            with pytest.raises(ValueError):
                parse_map_spec(bad)


class TestCommands:
    def test_energy_sphere_at_zero(self, capsys):
        code, out = _run(capsys, "energy", "--shape", "sphere(r=1)",
                         "--z", "0")
        assert code == 0
        z, value, method, *_ = _rows(out)[0]
        assert method == "hadamard"
        assert float(value) == pytest.approx((4 * math.pi) ** 2,
                                             rel=1e-9)

    def test_energy_rows_carry_method_and_error(self, capsys):
        code, out = _run(capsys, "energy", "--shape", "circle(r=1)",
                         "--z", "-0.5", "--z", "-1")
        assert code == 0
        header = [ln for ln in out.splitlines()
                  if ln.startswith("# columns")][0]
        assert "method" in header and "error_estimate" in header
        assert len(_rows(out)) == 2

    def test_deterministic_output(self, capsys):
        args = ("energy", "--shape", "ellipse(a=2,b=1)", "--z", "-1.5")
        _, out1 = _run(capsys, *args)
        _, out2 = _run(capsys, *args)
        assert out1 == out2

    def test_residues_torus(self, capsys):
        code, out = _run(capsys, "residues", "--shape",
                         "torus(R=2,r=0.5)")
        assert code == 0
        rows = {float(r[0]): float(r[1]) for r in _rows(out)}
        area = (2 * math.pi * 2.0) * (2 * math.pi * 0.5)
        assert rows[-2.0] == pytest.approx(2 * math.pi * area, rel=1e-12)
        assert set(rows) == {-2.0, -4.0}

    def test_psi_circle_saturates_at_length(self, capsys, tmp_path):
        out_file = tmp_path / "psi.csv"
        code, _ = _run(capsys, "psi", "--shape", "circle(r=1)",
                       "--x", "0", "--t-grid", "0:2:5",
                       "--out", str(out_file))
        assert code == 0
        rows = _rows(out_file.read_text())
        assert float(rows[-1][1]) == pytest.approx(2 * math.pi,
                                                   rel=1e-10)
        assert (tmp_path / "psi.png").exists()

    def test_beta_sweep_writes_figure(self, capsys, tmp_path):
        out_file = tmp_path / "beta.csv"
        code, _ = _run(capsys, "beta-sweep", "--shape", "circle(r=1)",
                       "--z-grid=-0.8:0.8:5", "--out", str(out_file))
        assert code == 0
        assert len(_rows(out_file.read_text())) == 5
        assert (tmp_path / "beta.png").exists()

    def test_moebius_check_passes(self, capsys):
        code, out = _run(capsys, "moebius-check", "--shape",
                         "ellipse(a=2,b=1)", "--z", "-2",
                         "--map", "inversion(4,1,1)")
        assert code == 0
        row = _rows(out)[0]
        assert row[5] == "true"


class TestExitCodes:
    def test_unknown_shape_is_config_error(self, capsys):
        code, _ = _run(capsys, "energy", "--shape", "pentagon(r=1)",
                       "--z", "-1")
        assert code == 2

    def test_grid_pole_hit_is_config_error(self, capsys):
        code, _ = _run(capsys, "beta-sweep", "--shape", "circle(r=1)",
                       "--z-grid=-3:0:7")
        assert code == 2

    def test_missing_exponent_is_config_error(self, capsys):
        code, _ = _run(capsys, "energy", "--shape", "circle(r=1)")
        assert code == 2

    def test_numerical_failure_is_exit_three(self, capsys, monkeypatch):
        import rieszreg.cli as cli
        def boom(*a, **k):
            raise CenterTooClose("inversion center on the shape")
        monkeypatch.setattr(cli, "invariance_check", boom)
        code, _ = _run(capsys, "moebius-check", "--shape",
                       "circle(r=1)", "--z", "-2",
                       "--map", "inversion(1,0,1)")
        assert code == 3

    def test_validate_filters_and_reports(self, capsys):
        code = main(["validate", "--check", "finite part"])
        out = capsys.readouterr().out
        assert code == 0
        assert "[PASS] finite-part exactness" in out
