"""Grid construction: measures, distances, origin avoidance, refinement."""

import io

import numpy as np
import pytest

from frachardy.errors import DomainValidationError, ResourceLimitError
from frachardy.geometry import (
    DomainSpec,
    build_grid,
    grid_to_csv,
    parse_domain,
    refine,
)


class TestDomainSpec:
    def test_origin_must_be_interior(self):
        with pytest.raises(DomainValidationError):
            DomainSpec.interval(0.5, 1.0)
        with pytest.raises(DomainValidationError):
            DomainSpec.rectangle(0.1, 1.0, -1.0, 1.0)
        with pytest.raises(DomainValidationError):
            DomainSpec.disk(-1.0)

    def test_volume_and_diameter(self):
        assert DomainSpec.interval(-1, 1).volume == 2.0
        assert DomainSpec.rectangle(-1, 1, -0.5, 1.5).volume == 4.0
        assert DomainSpec.disk(2.0).volume == pytest.approx(4 * np.pi)
        assert DomainSpec.disk(2.0).diameter == 4.0

    def test_parse_domain(self):
        assert parse_domain("interval:-1,1").kind == "interval"
        assert parse_domain("rect:-1,1,-2,2").bounds == (-1.0, 1.0, -2.0, 2.0)
        assert parse_domain("disk:1.5").bounds == (1.5,)
        with pytest.raises(DomainValidationError):
            parse_domain("sphere:1")
        with pytest.raises(DomainValidationError):
            parse_domain("disk:abc")


class TestInterval:
    def test_four_cell_example(self):
        g = build_grid(DomainSpec.interval(-1, 1), 4)
        assert np.allclose(g.nodes[:, 0], [-0.75, -0.25, 0.25, 0.75])
        assert np.allclose(g.cell_measure, 0.5)
        assert np.allclose(g.dist_boundary, [0.25, 0.75, 0.75, 0.25])

    def test_refine_doubles(self):
        g = build_grid(DomainSpec.interval(-1, 1), 4)
        g2 = refine(g)
        assert g2.n_per_axis == 8
        assert g2.h == pytest.approx(g.h / 2)
        # nodes at odd multiples of 0.125
        assert np.allclose(g2.nodes[:, 0] / 0.125, np.round(g2.nodes[:, 0] / 0.125))
        assert np.all(np.round(g2.nodes[:, 0] / 0.125).astype(int) % 2 == 1)
        assert abs(g2.cell_measure.sum() - g.cell_measure.sum()) <= 1e-10

    def test_asymmetric_interval_origin_on_edge(self):
        g = build_grid(DomainSpec.interval(-0.7, 1.3), 10)
        assert 0.0 in g.axes[0]
        assert g.dist_origin.min() >= g.cell_widths.min() / 2 - 1e-15
        assert g.cell_measure.sum() == pytest.approx(2.0, rel=1e-12)

    def test_measure_partitions_volume(self):
        for spec in (DomainSpec.interval(-1, 1), DomainSpec.interval(-0.3, 2.1)):
            g = build_grid(spec, 64)
            assert g.cell_measure.sum() == pytest.approx(spec.volume, rel=1e-10)

    def test_min_dist_origin(self):
        g = build_grid(DomainSpec.interval(-1, 1), 64)
        assert g.dist_origin.min() >= g.h / 2 - 1e-15

    def test_too_few_cells_rejected(self):
        with pytest.raises(DomainValidationError):
            build_grid(DomainSpec.interval(-1, 1), 3)


class TestRectangle:
    def test_measure_exact(self):
        spec = DomainSpec.rectangle(-1.0, 1.0, -0.8, 1.2)
        g = build_grid(spec, 16)
        assert g.cell_measure.sum() == pytest.approx(spec.volume, rel=1e-10)
        assert g.n_nodes == 256

    def test_distance_vs_brute_force(self):
        # sample density sets the check floor: min over samples overestimates
        # the true distance by ~step^2/(2 dist), so ~1e5 points reach 1e-8
        spec = DomainSpec.rectangle(-1.0, 1.0, -0.8, 1.2)
        g = build_grid(spec, 12)
        ts = np.linspace(0.0, 1.0, 120001)
        ax, bx, ay, by = spec.bounds
        edge = np.concatenate(
            [
                np.column_stack([ax + (bx - ax) * ts, np.full_like(ts, ay)]),
                np.column_stack([ax + (bx - ax) * ts, np.full_like(ts, by)]),
                np.column_stack([np.full_like(ts, ax), ay + (by - ay) * ts]),
                np.column_stack([np.full_like(ts, bx), ay + (by - ay) * ts]),
            ]
        )
        for i in range(0, g.n_nodes, 17):
            brute = np.min(np.hypot(*(g.nodes[i] - edge).T))
            assert abs(brute - g.dist_boundary[i]) <= 1e-8

    def test_no_node_at_origin(self):
        g = build_grid(DomainSpec.rectangle(-0.9, 1.1, -1.0, 1.0), 10)
        assert g.dist_origin.min() > 0.0


class TestDisk:
    def test_rim_measure(self):
        g = build_grid(DomainSpec.disk(1.0), 16)
        assert abs(g.cell_measure.sum() - np.pi) <= 0.05

    def test_distance_exact(self):
        g = build_grid(DomainSpec.disk(1.0), 16)
        assert np.allclose(g.dist_boundary, 1.0 - g.dist_origin, atol=1e-12)
        ts = np.linspace(0, 2 * np.pi, 100000, endpoint=False)
        rim = np.column_stack([np.cos(ts), np.sin(ts)])
        for i in range(0, g.n_nodes, 23):
            brute = np.min(np.hypot(*(g.nodes[i] - rim).T))
            assert abs(brute - g.dist_boundary[i]) <= 1e-8

    def test_nodes_interior_and_off_origin(self):
        g = build_grid(DomainSpec.disk(1.0), 16)
        assert g.dist_boundary.min() > 0.0
        assert g.dist_origin.min() > 0.0
        assert np.all(g.cell_measure > 0.0)

    def test_refinement_improves_area(self):
        errs = []
        for n in (16, 32, 64):
            g = build_grid(DomainSpec.disk(1.0), n)
            errs.append(abs(g.cell_measure.sum() - np.pi))
        assert errs[2] < errs[0]


class TestBudgetAndDump:
    def test_node_budget(self):
        g = build_grid(DomainSpec.interval(-1, 1), 64)
        with pytest.raises(ResourceLimitError):
            refine(g, node_budget=100)

    def test_grids_are_frozen(self):
        g = build_grid(DomainSpec.interval(-1, 1), 8)
        with pytest.raises(ValueError):
            g.nodes[0, 0] = 7.0

    def test_csv_dump(self):
        g = build_grid(DomainSpec.interval(-1, 1), 4)
        buf = io.StringIO()
        grid_to_csv(g, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "x1,cell_measure,dist_boundary,dist_origin"
        assert len(lines) == 5
        first = [float(v) for v in lines[1].split(",")]
        assert first == [-0.75, 0.5, 0.25, 0.75]

    def test_csv_dump_2d_columns(self):
        g = build_grid(DomainSpec.disk(1.0), 8)
        buf = io.StringIO()
        grid_to_csv(g, buf)
        assert buf.getvalue().splitlines()[0] == "x1,x2,cell_measure,dist_boundary,dist_origin"
