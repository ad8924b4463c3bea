"""Boundaries, point layouts, panel meshes, and shift bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ellipe

from cqscat.geometry import (
    MfsLayout,
    ScattererShape,
    ShiftData,
    _apportion,
    boundary_for,
    certified_panel_distances,
    certified_point_panel_distances,
    conformal_ellipse_map,
    contains,
    disk_boundary,
    mfs_points,
    panel_mesh,
    panel_nodes,
    semicircle_boundary,
    shift_data_from_distances,
    shift_data_galerkin,
    shift_data_mfs,
    two_ellipses_boundary,
)

from oracles import DISK_ARCS, SEMICIRCLE_ARCS, arc_chart, dense_min_distance, largest_remainder


class TestConformalMap:
    def test_axis_points(self):
        assert conformal_ellipse_map(1.0, -2.0)[0] == pytest.approx([-2.0, 0.6], abs=1e-15)
        assert conformal_ellipse_map(1.0j, -2.0)[0] == pytest.approx([-2.4, 0.0], abs=1e-15)

    def test_rejects_origin(self):
        with pytest.raises(ValueError):
            conformal_ellipse_map(0.0, 2.0)
        with pytest.raises(ValueError):
            conformal_ellipse_map(np.array([1.0, 0.0, 1.0j]), 2.0)

    def test_unit_circle_image_winds_once(self):
        z = np.exp(2j * np.pi * np.arange(1000) / 1000)
        pts = conformal_ellipse_map(z, 2.0)
        w = (pts[:, 0] - 2.0) + 1j * pts[:, 1]
        turns = np.sum(np.angle(np.roll(w, -1) / w)) / (2.0 * np.pi)
        assert round(turns) == 1
        assert turns == pytest.approx(1.0, abs=1e-12)


class TestMfsPoints:
    def test_disk_small_example(self):
        lay = mfs_points(ScattererShape.DISK, 4, 2, 0.9)
        want_col = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        want_src = np.array([[0.9, 0.0], [-0.9, 0.0]])
        assert lay.collocation == pytest.approx(want_col, abs=1e-15)
        assert lay.sources == pytest.approx(want_src, abs=1e-15)
        assert lay.radius == 0.9

    def test_disk_separation_bound(self):
        lay = mfs_points(ScattererShape.DISK, 64, 16, 0.9)
        d = lay.collocation[:, None, :] - lay.sources[None, :, :]
        assert np.min(np.hypot(d[..., 0], d[..., 1])) >= 0.1 - 1e-12

    def test_all_shipped_layouts_separated(self):
        layouts = [
            mfs_points(ScattererShape.DISK, 200, 100, 0.9),
            mfs_points(ScattererShape.DISK, 64, 32, 1.1),
            mfs_points(ScattererShape.TWO_ELLIPSES, 200, 100, 0.9),
        ]
        for lay in layouts:
            sd = shift_data_mfs(lay, 0.1)
            assert np.min(sd.r) > 0.0

    def test_ellipse_layout_geometry(self):
        lay = mfs_points(ScattererShape.TWO_ELLIPSES, 40, 20, 0.9)
        assert lay.collocation.shape == (40, 2)
        assert lay.sources.shape == (20, 2)
        for half, off in ((slice(0, 20), -2.0), (slice(20, 40), 2.0)):
            x, y = lay.collocation[half, 0], lay.collocation[half, 1]
            level = ((x - off) / 0.4) ** 2 + (y / 0.6) ** 2
            assert level == pytest.approx(np.ones(20), rel=1e-12)
        # R < 1 sources sit strictly inside their ellipse, R > 1 outside
        for R, side in ((0.9, -1.0), (1.1, 1.0)):
            src = mfs_points(ScattererShape.TWO_ELLIPSES, 40, 20, R).sources
            x, y = src[:10, 0], src[:10, 1]
            level = ((x + 2.0) / 0.4) ** 2 + (y / 0.6) ** 2
            assert np.all(side * (level - 1.0) > 0.0)

    def test_large_layout_sizes(self):
        lay = mfs_points(ScattererShape.TWO_ELLIPSES, 4000, 2000, 0.9)
        assert lay.collocation.shape == (4000, 2)
        assert lay.sources.shape == (2000, 2)
        assert np.all(lay.collocation[:2000, 0] < 0)
        assert np.all(lay.collocation[2000:, 0] > 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            mfs_points(ScattererShape.DISK, 4, 8, 0.9)
        with pytest.raises(ValueError):
            mfs_points(ScattererShape.DISK, 4, 0, 0.9)
        for bad_R in (1.0, 0.0, -0.5):
            with pytest.raises(ValueError):
                mfs_points(ScattererShape.DISK, 8, 4, bad_R)
        with pytest.raises(ValueError):
            mfs_points(ScattererShape.SEMICIRCLES, 8, 4, 0.9)
        with pytest.raises(ValueError):
            mfs_points(ScattererShape.TWO_ELLIPSES, 7, 4, 0.9)
        with pytest.raises(ValueError):
            MfsLayout(collocation=np.zeros((2, 2)), sources=np.zeros((3, 2)), radius=0.9)


class TestBoundaries:
    def test_semicircle_anchor_points(self):
        b = semicircle_boundary()
        assert b.pieces[0].chart(0.0) == pytest.approx(1.0 + 0.0j, abs=1e-15)
        assert b.pieces[1].chart(np.pi) == pytest.approx(-0.25 + 0.75j, abs=1e-15)
        # shared junction of the big arc and the first small one
        assert b.pieces[0].chart(np.pi / 2) == pytest.approx(0.0 + 1.0j, abs=1e-15)
        assert b.pieces[1].chart(np.pi / 2) == pytest.approx(0.0 + 1.0j, abs=1e-15)

    def test_semicircle_chain_closes(self):
        b = semicircle_boundary()
        ends = [p.chart(p.theta1) for p in b.pieces]
        starts = [p.chart(p.theta0) for p in b.pieces]
        for k in range(4):
            assert ends[k] == pytest.approx(starts[(k + 1) % 4], abs=1e-14)

    def test_lengths(self):
        assert disk_boundary().length == pytest.approx(2.0 * np.pi, rel=1e-12)
        semis = semicircle_boundary()
        assert semis.length == pytest.approx(2.0 * np.pi, rel=1e-12)
        want = np.pi * np.array([1.0, 0.25, 0.5, 0.25])
        got = np.array([p.length for p in semis.pieces])
        assert got == pytest.approx(want, rel=1e-12)
        # half-axes 0.4 and 0.6: circumference 4 a E(1 - b^2/a^2), a = 0.6
        circumference = 2.4 * ellipe(5.0 / 9.0)
        for p in two_ellipses_boundary().pieces:
            assert p.length == pytest.approx(circumference, rel=1e-10)

    def test_boundary_for_names(self):
        assert boundary_for(ScattererShape.DISK).name == "disk"
        assert boundary_for(ScattererShape.TWO_ELLIPSES).name == "two-ellipses"
        assert boundary_for(ScattererShape.SEMICIRCLES).name == "semicircles"


class TestPanelMesh:
    def test_disk_four_panels(self):
        mesh = panel_mesh(disk_boundary(), 4)
        assert mesh.num_panels == 4
        assert mesh.lengths == pytest.approx(np.full(4, np.pi / 2), rel=1e-12)

    def test_total_arclength_matches_boundary(self):
        for b, M in ((disk_boundary(), 37), (two_ellipses_boundary(), 64), (semicircle_boundary(), 100)):
            mesh = panel_mesh(b, M)
            assert float(mesh.lengths.sum()) == pytest.approx(b.length, rel=1e-12)

    def test_semicircle_piece_counts(self):
        mesh = panel_mesh(semicircle_boundary(), 100)
        assert np.bincount(mesh.piece).tolist() == [50, 13, 25, 12]

    def test_apportionment_matches_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            k = rng.integers(2, 7)
            w = rng.uniform(0.1, 10.0, k)
            total = int(rng.integers(k, 200))
            assert np.array_equal(_apportion(w, total), largest_remainder(total, w))

    def test_quasi_uniform(self):
        mesh = panel_mesh(semicircle_boundary(), 100)
        assert float(mesh.lengths.max() / mesh.lengths.min()) <= 2.0

    def test_too_few_panels(self):
        with pytest.raises(ValueError):
            panel_mesh(disk_boundary(), 0)
        with pytest.raises(ValueError):
            panel_mesh(semicircle_boundary(), 3)
        # 4 panels leave the last quarter-circle empty after apportionment
        with pytest.raises(ValueError):
            panel_mesh(semicircle_boundary(), 4)

    def test_points_at_matches_analytic_chart(self):
        cases = [
            (panel_mesh(disk_boundary(), 16), DISK_ARCS, (0, 3, 9)),
            (panel_mesh(semicircle_boundary(), 100), SEMICIRCLE_ARCS, (0, 55, 62, 90)),
        ]
        for mesh, arcs, panels in cases:
            for p in panels:
                s = np.linspace(0.0, mesh.lengths[p], 7)
                got = mesh.points_at(p, s)
                w = arc_chart(mesh, p, arcs)(s)
                assert got == pytest.approx(np.column_stack((w.real, w.imag)), abs=1e-12)

    def test_ellipse_points_match_arclength_inversion(self):
        mesh = panel_mesh(two_ellipses_boundary(), 40)

        def speed(th):
            return 0.5 * abs(1.0 - np.exp(-2j * th) / 5.0)

        def oracle(off, s_glob):
            arc = lambda th: quad(speed, 0.0, th, limit=200)[0] - s_glob
            th = brentq(arc, 0.0, 2.0 * np.pi, xtol=1e-13)
            w = 0.5j * (np.exp(1j * th) + np.exp(-1j * th) / 5.0) + off
            return np.array([w.real, w.imag])

        for panel in (2, 5, 27):
            off = -2.0 if mesh.piece[panel] == 0 else 2.0
            for frac in (0.25, 0.8):
                s_loc = frac * mesh.lengths[panel]
                got = mesh.points_at(panel, s_loc)[0]
                want = oracle(off, mesh.s_start[panel] + s_loc)
                # panel charts invert arclength through a sampled table,
                # good to ~3e-7 on the ellipses (exact on circular arcs)
                assert got == pytest.approx(want, abs=1e-6)

    def test_panel_nodes_integrate_arclength(self):
        mesh = panel_mesh(disk_boundary(), 20)
        pts, wts = panel_nodes(mesh, 6)
        assert pts.shape == (20, 6, 2)
        assert float(wts.sum()) == pytest.approx(2.0 * np.pi, rel=1e-12)
        # int_circle x^2 ds = pi
        assert float((wts * pts[..., 0] ** 2).sum()) == pytest.approx(np.pi, rel=1e-10)


class TestShiftData:
    def test_floor_examples(self):
        assert shift_data_from_distances(np.array([1.0]), 0.3).m[0] == 3
        assert shift_data_from_distances(np.array([0.05]), 0.1).m[0] == 0

    def test_floor_guard_snaps_near_integers(self):
        # 0.21 / 0.07 evaluates to 2.999...96; the guard restores 3
        assert shift_data_from_distances(np.array([0.21]), 0.07).m[0] == 3

    def test_shift_time_never_exceeds_distance_meaningfully(self):
        rng = np.random.default_rng(3)
        r = rng.uniform(0.0, 50.0, 4000)
        for dt in (0.3, 0.07, 0.0125):
            sd = shift_data_from_distances(r, dt)
            assert np.all(sd.m * dt <= sd.r * (1.0 + 1e-9) + 1e-300)

    @given(
        r=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
        dt=st.floats(min_value=1e-6, max_value=1e3, allow_nan=False),
        frac=st.floats(min_value=1e-3, max_value=1.0, exclude_max=True),
    )
    @settings(max_examples=300, deadline=None)
    def test_shift_counts_monotone_in_dt(self, r, dt, frac):
        arr = np.array([r])
        coarse = shift_data_from_distances(arr, dt).m[0]
        fine = shift_data_from_distances(arr, dt * frac).m[0]
        assert fine >= coarse

    def test_validation(self):
        with pytest.raises(ValueError):
            shift_data_from_distances(np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            shift_data_from_distances(np.array([-1.0]), 0.1)
        with pytest.raises(ValueError):
            ShiftData(r=np.array([1.0]), m=np.array([-1]))

    def test_mfs_matrix(self):
        lay = mfs_points(ScattererShape.DISK, 8, 4, 0.9)
        sd = shift_data_mfs(lay, 0.25)
        assert sd.r.shape == (8, 4)
        d = lay.collocation[:, None, :] - lay.sources[None, :, :]
        assert np.array_equal(sd.r, np.hypot(d[..., 0], d[..., 1]))
        assert np.all(sd.r > 0.0)
        assert np.array_equal(sd.m, np.floor(sd.r / 0.25 + 1e-9).astype(int))


class TestCertifiedDistances:
    def test_self_and_adjacent_are_zero(self):
        mesh = panel_mesh(disk_boundary(), 32)
        r = certified_panel_distances(mesh)
        assert np.array_equal(np.diag(r), np.zeros(32))
        for i in range(32):
            assert r[i, (i + 1) % 32] == 0.0

    def test_antipodal_panels_on_unit_circle(self):
        # panels of length pi/50 half a circle apart
        mesh = panel_mesh(disk_boundary(), 100)
        r = certified_panel_distances(mesh)[0, 50]
        assert 2.0 - np.pi / 50.0 <= r <= 2.0
        assert r <= dense_min_distance(mesh, 0, 50, n=1000)

    def test_lower_bound_certification(self):
        meshes = [
            panel_mesh(disk_boundary(), 64),
            panel_mesh(two_ellipses_boundary(), 64),
            panel_mesh(semicircle_boundary(), 100),
        ]
        rng = np.random.default_rng(5)
        for mesh in meshes:
            r = certified_panel_distances(mesh)
            M = mesh.num_panels
            for _ in range(200):
                i, j = rng.integers(0, M, 2)
                if i == j:
                    continue
                dense = dense_min_distance(mesh, int(i), int(j), n=1000)
                assert r[i, j] <= dense
                # and not uselessly loose: the correction is a quarter
                # arclength per panel
                slack = 0.2501 * (mesh.lengths[i] + mesh.lengths[j])
                assert r[i, j] >= dense - slack - 1e-9

    def test_point_panel_distances(self):
        mesh = panel_mesh(disk_boundary(), 32)
        ang = np.linspace(0.0, 2.0 * np.pi, 9)
        pts = 2.0 * np.column_stack((np.cos(ang), np.sin(ang)))
        r = certified_point_panel_distances(mesh, pts)
        assert r.shape == (9, 32)
        # every entry stays below the distance to that panel's midpoint
        d_mid = pts[:, None, :] - mesh.midpoints[None, :, :]
        assert np.all(r <= np.hypot(d_mid[..., 0], d_mid[..., 1]) + 1e-12)
        # the nearest panel certifies close to the true gap of 1
        assert np.all(r.min(axis=1) <= 1.0 + 1e-12)
        assert np.all(r.min(axis=1) >= 1.0 - 0.26 * float(mesh.lengths.max()))

    def test_galerkin_shift_data(self):
        mesh = panel_mesh(disk_boundary(), 32)
        sd = shift_data_galerkin(mesh, 0.05)
        assert np.array_equal(np.diag(sd.m), np.zeros(32, dtype=int))
        assert np.all(sd.m * 0.05 <= sd.r * (1.0 + 1e-9) + 1e-300)


class TestContains:
    def test_disk(self):
        pts = np.array([[0.0, 0.0], [0.5, 0.5], [1.5, 0.0], [0.0, -1.2]])
        assert contains(disk_boundary(), pts).tolist() == [True, True, False, False]

    def test_semicircles_nonconvex(self):
        b = semicircle_boundary()
        pts = np.array(
            [
                [0.9, 0.0],  # deep inside the big half-disk
                [-0.3, 0.0],  # inside the middle left bulge
                [-0.3, 0.75],  # in the notch between the bulges
                [-0.6, 0.0],  # beyond the middle bulge
                [0.3, 0.75],  # inside, right half
            ]
        )
        assert contains(b, pts).tolist() == [True, True, False, False, True]

    def test_two_ellipses(self):
        b = two_ellipses_boundary()
        pts = np.array([[-2.0, 0.0], [2.0, 0.59], [0.0, 0.0], [2.45, 0.0]])
        assert contains(b, pts).tolist() == [True, True, False, False]

    def test_disk_grid_matches_radius_test(self):
        xs = np.linspace(-1.5, 1.5, 41)
        gx, gy = np.meshgrid(xs, xs)
        pts = np.column_stack((gx.ravel(), gy.ravel()))
        got = contains(disk_boundary(), pts)
        want = np.hypot(pts[:, 0], pts[:, 1]) < 1.0
        assert np.array_equal(got, want)
