import math

import numpy as np
import pytest

from eikmarch.analysis import ConvergenceReport, ReportRow
from eikmarch.emitters import (
    emit_convergence_csv,
    emit_field_csv,
    emit_heatmap_pgm,
    emit_trajectory_csv,
)
from eikmarch.geometry import Grid2D
from eikmarch.trajectory import Trajectory, TrajectoryStatus


class TestFieldCsv:
    def test_zeros_two_by_two(self, tmp_path):
        g = Grid2D(2, 2, 1.0, (0.0, 0.0))
        out = tmp_path / "f.csv"
        emit_field_csv(g, np.zeros((2, 2)), out)
        assert out.read_text() == (
            "i,j,x,y,u\n"
            "0,0,0,0,0\n"
            "0,1,0,1,0\n"
            "1,0,1,0,0\n"
            "1,1,1,1,0\n")

    def test_infinity_literal(self, tmp_path):
        g = Grid2D(2, 2, 1.0, (0.0, 0.0))
        u = np.zeros((2, 2))
        u[1, 1] = np.inf
        out = tmp_path / "f.csv"
        emit_field_csv(g, u, out)
        assert out.read_text().splitlines()[-1] == "1,1,1,1,inf"

    def test_seventeen_digit_round_trip(self, tmp_path):
        g = Grid2D(2, 2, 0.1, (0.0, 0.0))
        u = np.full((2, 2), math.pi)
        out = tmp_path / "f.csv"
        emit_field_csv(g, u, out)
        val = out.read_text().splitlines()[1].split(",")[-1]
        assert float(val) == math.pi

    def test_byte_identical_reruns(self, tmp_path):
        g = Grid2D(3, 3, 1.0 / 3.0, (0.0, 0.0))
        u = np.linspace(0.0, 1.0, 9).reshape(3, 3)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        emit_field_csv(g, u, a)
        emit_field_csv(g, u, b)
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_path(self, tmp_path):
        g = Grid2D(2, 2, 1.0, (0.0, 0.0))
        with pytest.raises(RuntimeError, match="cannot write"):
            emit_field_csv(g, np.zeros((2, 2)), tmp_path / "no" / "f.csv")


class TestHeatmapPgm:
    def test_header_and_size(self, tmp_path):
        out = tmp_path / "m.pgm"
        emit_heatmap_pgm(np.zeros((4, 3)), out)
        data = out.read_bytes()
        assert data.startswith(b"P5\n4 3\n255\n")
        assert len(data) == len(b"P5\n4 3\n255\n") + 12

    def test_ramp_is_monotone_across_columns(self, tmp_path):
        # u = x: gray must increase left to right on every raster row
        g = Grid2D(5, 4, 0.25, (0.0, 0.0))
        X, _ = g.meshgrid()
        out = tmp_path / "m.pgm"
        emit_heatmap_pgm(X, out)
        data = out.read_bytes()
        header = b"P5\n5 4\n255\n"
        raster = np.frombuffer(data[len(header):], np.uint8).reshape(4, 5)
        assert (np.diff(raster.astype(int), axis=1) > 0).all()
        assert raster[0, 0] == 0 and raster[0, -1] == 255

    def test_vertical_orientation(self, tmp_path):
        # u = y: the top raster row holds the largest values
        g = Grid2D(3, 3, 0.5, (0.0, 0.0))
        _, Y = g.meshgrid()
        out = tmp_path / "m.pgm"
        emit_heatmap_pgm(Y, out)
        raster = np.frombuffer(out.read_bytes()[len(b"P5\n3 3\n255\n"):],
                               np.uint8).reshape(3, 3)
        assert (raster[0] == 255).all() and (raster[-1] == 0).all()

    def test_infinite_nodes_render_black(self, tmp_path):
        u = np.array([[1.0, 2.0], [np.inf, 3.0]])
        out = tmp_path / "m.pgm"
        emit_heatmap_pgm(u, out)
        raster = np.frombuffer(out.read_bytes()[len(b"P5\n2 2\n255\n"):],
                               np.uint8).reshape(2, 2)
        # node (1, 0) sits at raster row 1 (y = 0), column 1 (x = 1)
        assert raster[1, 1] == 0

    def test_constant_field_does_not_divide_by_zero(self, tmp_path):
        out = tmp_path / "m.pgm"
        emit_heatmap_pgm(np.full((2, 2), 7.0), out)
        raster = np.frombuffer(out.read_bytes()[len(b"P5\n2 2\n255\n"):],
                               np.uint8)
        assert (raster == 0).all()

    def test_all_infinite_raises(self, tmp_path):
        with pytest.raises(ValueError, match="no finite"):
            emit_heatmap_pgm(np.full((2, 2), np.inf), tmp_path / "m.pgm")

    def test_byte_identical_reruns(self, tmp_path):
        rng = np.random.default_rng(0)
        u = rng.random((7, 5))
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        emit_heatmap_pgm(u, a)
        emit_heatmap_pgm(u, b)
        assert a.read_bytes() == b.read_bytes()


class TestConvergenceCsv:
    def report(self):
        rows = [ReportRow(0.2, 4e-2, 8e-3, 0.11),
                ReportRow(0.1, 2e-2, 4e-3, 0.22),
                ReportRow(0.05, 1e-2, 2e-3, 0.44)]
        return ConvergenceReport("demo", rows)

    def test_shape_and_order_column(self, tmp_path):
        out = tmp_path / "c.csv"
        emit_convergence_csv({"demo": self.report()}, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "method,h,linf,l1,order_tail"
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "demo"
        assert float(first[1]) == 0.2
        order = float(first[4])
        assert order == pytest.approx(1.0, abs=1e-9)
        # the fitted order repeats on every row of the method
        assert {ln.split(",")[4] for ln in lines[1:]} == {first[4]}

    def test_runtime_is_not_emitted(self, tmp_path):
        out = tmp_path / "c.csv"
        emit_convergence_csv({"demo": self.report()}, out)
        assert "0.11" not in out.read_text()

    def test_multiple_methods_keep_given_order(self, tmp_path):
        out = tmp_path / "c.csv"
        emit_convergence_csv({"b": self.report(), "a": self.report()}, out)
        methods = [ln.split(",")[0] for ln in out.read_text().splitlines()[1:]]
        assert methods == ["b", "b", "b", "a", "a", "a"]


class TestTrajectoryCsv:
    def test_points_round_trip(self, tmp_path):
        pts = np.array([[0.4, 0.9], [0.3, 0.55], [0.0, 0.0]])
        traj = Trajectory(pts, 1.0, TrajectoryStatus.REACHED_SOURCE)
        out = tmp_path / "t.csv"
        emit_trajectory_csv(traj, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "x,y"
        back = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
        assert np.array_equal(back, pts)
