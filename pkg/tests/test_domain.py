import numpy as np
import pytest

from nlfront.domain import (ObstacleSpec, build_grid, discrete_kernel, min_degree,
                            read_field_dump, write_field_dump, write_slice_csv)
from nlfront.kernels import Kernel


@pytest.fixture(scope="module")
def kernel2d():
    return Kernel(2, 1.0, 2)


class TestObstacleSpec:
    def test_convexity_agrees_with_brute_force(self):
        rng = np.random.default_rng(19)
        accepted = rejected = 0
        for _ in range(100):
            n = rng.integers(3, 9)
            angles = np.sort(rng.uniform(0, 2 * np.pi, size=n))
            radii = rng.uniform(0.5, 1.5, size=n)
            verts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=-1)
            expect = _brute_force_convex(verts)
            try:
                ObstacleSpec("polygon", vertices=verts)
                got = True
                accepted += 1
            except ValueError:
                got = False
                rejected += 1
            assert got == expect
        assert accepted > 0 and rejected > 0

    def test_rejects_nonconvex(self):
        verts = [(0, 0), (2, 0), (1, 0.2), (1, 2)]  # reflex at (1, 0.2)
        with pytest.raises(ValueError):
            ObstacleSpec("polygon", vertices=verts)

    def test_placement_flag(self):
        ObstacleSpec("disc", center=(-2.0, 0.0), radius=1.0, require_left_halfplane=True)
        with pytest.raises(ValueError):
            ObstacleSpec("disc", center=(-0.5, 0.0), radius=1.0,
                         require_left_halfplane=True)

    def test_contains_disc(self):
        ob = ObstacleSpec("disc", center=(1.0, 0.0), radius=0.5)
        assert ob.contains(np.array([[1.0, 0.2]]))[0]
        assert not ob.contains(np.array([[1.0, 0.8]]))[0]

    def test_contains_ellipse(self):
        ob = ObstacleSpec("ellipse", center=(0.0, 0.0), semi_axes=(2.0, 0.5))
        assert ob.contains(np.array([[1.5, 0.0]]))[0]
        assert not ob.contains(np.array([[0.0, 1.0]]))[0]


def _brute_force_convex(verts):
    # every vertex on one side of every edge
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        signs = []
        for p in verts:
            cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if abs(cr) > 1e-12:
                signs.append(np.sign(cr))
        if len(set(signs)) > 1:
            return False
    return True


class TestBuildGrid:
    def test_empty_obstacle_degree_one(self, kernel2d):
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ObstacleSpec("empty"), kernel2d)
        assert np.nanmax(np.abs(g.degree - 1.0)) <= 1e-8
        assert min_degree(g) == pytest.approx(1.0, abs=1e-8)

    def test_masks_partition_box(self, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.6)
        g = build_grid([(-3, 3), (-3, 3)], 0.125, ob, kernel2d)
        assert not np.any(g.chi_k & g.chi_omega)
        assert np.all(g.chi_k | g.chi_omega)
        assert np.any(g.chi_k)

    def test_degree_far_from_obstacle_is_one(self, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.6)
        g = build_grid([(-3, 3), (-3, 3)], 0.125, ob, kernel2d)
        centers = g.cell_centers()
        far = (np.linalg.norm(centers, axis=-1) > 0.6 + 1.0) & g.chi_omega
        # also away from the box boundary (padding already encodes far field)
        assert np.max(np.abs(g.degree[far] - 1.0)) <= 1e-8

    def test_degree_bounds(self, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.6)
        g = build_grid([(-3, 3), (-3, 3)], 0.125, ob, kernel2d)
        vals = g.degree[g.chi_omega]
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0 + 1e-10)
        assert np.min(vals) < 1.0  # boundary cells lose mass

    def test_degree_matches_midpoint_oracle(self, kernel2d):
        # direct midpoint sum of raw J over exterior cells, same rasterized
        # domain with the padded far field
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.6)
        h = 1.0 / 16.0
        g = build_grid([(-2.5, 2.5), (-2.5, 2.5)], h, ob, kernel2d)
        centers = g.cell_centers()
        # pick an exterior cell adjacent to the obstacle boundary
        dist = np.linalg.norm(centers, axis=-1)
        cand = np.argwhere(g.chi_omega & (dist <= 0.6 + 2 * h))
        i, j = cand[0]
        x = centers[i, j]
        m = g.pad
        oracle = 0.0
        for di in range(-m, m + 1):
            for dj in range(-m, m + 1):
                ii, jj = i + di, j + dj
                inside_box = 0 <= ii < g.shape[0] and 0 <= jj < g.shape[1]
                if inside_box and g.chi_k[ii, jj]:
                    continue
                y = g.box_lo + (np.array([ii, jj]) + 0.5) * h
                oracle += kernel2d.eval(x - y) * h * h
        assert g.degree[i, j] < 1.0
        assert g.degree[i, j] == pytest.approx(oracle, abs=1e-3)

    def test_degree_symmetry_under_disc_symmetry(self, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.6)
        g = build_grid([(-3, 3), (-3, 3)], 0.125, ob, kernel2d)
        d = np.where(g.chi_omega, g.degree, np.nan)
        # grid is symmetric under both axis flips and transpose
        for sym in (d[::-1], d[:, ::-1], d.T):
            diff = np.abs(d - sym)
            assert np.nanmax(diff) <= 1e-10

    def test_errors(self, kernel2d):
        with pytest.raises(ValueError):
            build_grid([(-2, 2), (-2, 2)], 0.25, ObstacleSpec("empty"), kernel2d)
        near_edge = ObstacleSpec("disc", center=(1.5, 0.0), radius=0.6)
        with pytest.raises(ValueError):
            build_grid([(-2.2, 2.2), (-2.2, 2.2)], 0.125, near_edge, kernel2d)

    def test_1d_grid(self):
        k1 = Kernel(1, 1.0, 2)
        ob = ObstacleSpec("disc", center=(-3.0,), radius=0.5)
        g = build_grid([(-8.0, 8.0)], 0.0625, ob, k1)
        assert g.dimension == 1
        assert np.any(g.chi_k)
        assert min_degree(g) > 0.5


class TestMinDegree:
    def test_large_disc_approaches_half(self, kernel2d):
        # convex K: any exterior point sees at most half the mass removed
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=10.0)
        g = build_grid([(-13, 13), (-13, 13)], 1.0 / 16.0, ob, kernel2d)
        md = min_degree(g)
        assert 0.45 < md < 1.0

    def test_monotone_in_radius(self, kernel2d):
        h = 1.0 / 16.0
        mds = []
        for r in (1.0, 2.0, 4.0):
            ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=r)
            g = build_grid([(-r - 2.5, r + 2.5), (-r - 2.5, r + 2.5)], h, ob, kernel2d)
            mds.append(min_degree(g))
        assert mds[0] >= mds[1] - 1e-3
        assert mds[1] >= mds[2] - 1e-3


class TestConvolution:
    def test_fft_matches_direct(self, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.5)
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ob, kernel2d)
        rng = np.random.default_rng(23)
        u = rng.uniform(0.0, 1.0, size=g.shape)
        fft = g.convolve_exterior(u, pad_value=0.0)
        direct = g.convolve_exterior_direct(u, pad_value=0.0)
        assert np.max(np.abs(fft - direct)) <= 1e-12

    def test_marginal_weights_sum(self, kernel2d):
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ObstacleSpec("empty"), kernel2d)
        assert g.marginal_weights().sum() == pytest.approx(1.0, abs=1e-14)

    def test_marginal_kernel1d_reproduces_weights(self, kernel2d):
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ObstacleSpec("empty"), kernel2d)
        j1 = g.marginal_kernel1d()
        _, w = j1.weights(g.h)
        assert np.max(np.abs(w - g.marginal_weights())) <= 1e-14


class TestDiscreteKernel:
    def test_normalized(self, kernel2d):
        w = discrete_kernel(kernel2d, 0.1)
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.all(w >= 0.0)

    def test_center_symmetry(self, kernel2d):
        w = discrete_kernel(kernel2d, 0.1)
        assert np.max(np.abs(w - w[::-1, ::-1])) == 0.0


class TestFieldDump:
    def test_round_trip(self, tmp_path, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.5)
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ob, kernel2d)
        rng = np.random.default_rng(3)
        u = rng.uniform(size=g.shape)
        path = str(tmp_path / "field.bin")
        write_field_dump(path, u, g.h, 1.25, obstacle_mask=g.chi_k)
        back, h, t = read_field_dump(path)
        assert h == g.h and t == 1.25
        assert np.array_equal(back[g.chi_omega], u[g.chi_omega])
        assert np.all(np.isnan(back[g.chi_k]))

    def test_header_is_32_bytes(self, tmp_path):
        path = str(tmp_path / "f.bin")
        write_field_dump(path, np.zeros(8), 0.5, 0.0)
        raw = open(path, "rb").read()
        assert len(raw) == 32 + 8 * 8
        assert raw[:8] == b"NLFLDv01"

    def test_rejects_bad_magic(self, tmp_path):
        path = str(tmp_path / "junk.bin")
        with open(path, "wb") as fh:
            fh.write(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(ValueError):
            read_field_dump(path)

    def test_slice_csv(self, tmp_path, kernel2d):
        ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.5)
        g = build_grid([(-2, 2), (-2, 2)], 0.125, ob, kernel2d)
        path = str(tmp_path / "slice.csv")
        write_slice_csv(path, g, g.degree_comp)
        rows = open(path).read().strip().splitlines()
        assert rows[0] == "coordinate,value"
        assert len(rows) == g.shape[0] + 1
        coord0, val0 = rows[1].split(",")
        assert float(coord0) == pytest.approx(g.axis_centers(0)[0])
