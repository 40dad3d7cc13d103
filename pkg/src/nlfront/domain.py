"""Exterior domains on uniform grids.

The domain is the complement of a compact convex obstacle K inside a
bounding box, rasterized cell-center-in-shape.  Each grid carries the
obstacle indicator, the exterior indicator, the sampled-and-normalized
discrete kernel, and the kernel degree field

    d(x) = integral over the exterior of J(x - y) dy,

computed as the discrete convolution of the kernel with the exterior
indicator extended by 1 outside the box (the true domain is unbounded, so
the far field contributes full mass).  There is no boundary condition in
this model; obstacle cells simply never enter integrals.

Binary dumps use a fixed 32-byte header
    magic "NLFLDv01" (8 bytes) | u16 N | u16 nx | u16 ny | u16 pad | f64 h | f64 t
followed by row-major float64 cells.
"""

import struct

import numpy as np
from scipy.signal import fftconvolve

__all__ = ["ObstacleSpec", "ExteriorGrid", "build_grid", "min_degree",
           "write_field_dump", "read_field_dump", "DUMP_MAGIC"]

DUMP_MAGIC = b"NLFLDv01"
DUMP_HEADER = struct.Struct("<8sHHHHdd")  # 32 bytes


class ObstacleSpec:
    """Convex obstacle shapes: empty, disc, ellipse, or convex polygon.

    In one dimension a disc is an interval.  With the placement flag set,
    every obstacle point must satisfy x1 <= 0 (the half-space hypothesis of
    the entire-solution construction).
    """

    KINDS = ("empty", "disc", "ellipse", "polygon")

    def __init__(self, kind="empty", center=(0.0, 0.0), radius=1.0,
                 semi_axes=(1.0, 1.0), vertices=None, require_left_halfplane=False):
        if kind not in self.KINDS:
            raise ValueError(f"unknown obstacle kind {kind!r}")
        self.kind = kind
        self.center = tuple(float(c) for c in np.atleast_1d(center))
        self.radius = float(radius)
        self.semi_axes = tuple(float(s) for s in semi_axes)
        self.vertices = None if vertices is None else np.asarray(vertices, dtype=float)
        self.require_left_halfplane = bool(require_left_halfplane)
        self._validate()

    def _validate(self):
        if self.kind == "disc" and self.radius <= 0.0:
            raise ValueError("disc radius must be positive")
        if self.kind == "ellipse" and min(self.semi_axes) <= 0.0:
            raise ValueError("ellipse semi-axes must be positive")
        if self.kind == "polygon":
            v = self.vertices
            if v is None or v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValueError("polygon needs >= 3 two-dimensional vertices")
            if not _is_convex(v):
                raise ValueError("polygon vertex list is not convex")
        if self.require_left_halfplane and self.kind != "empty":
            lo, hi = self.bounds()
            if hi[0] > 0.0:
                raise ValueError("obstacle violates the x1 <= 0 placement flag")

    def bounds(self):
        """Axis-aligned bounding box (lo, hi) of the obstacle."""
        if self.kind == "empty":
            return np.array([np.inf]), np.array([-np.inf])
        c = np.asarray(self.center)
        if self.kind == "disc":
            r = self.radius
            return c - r, c + r
        if self.kind == "ellipse":
            s = np.asarray(self.semi_axes)
            return c - s, c + s
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, points):
        """Mask of points inside (closed) K. points: (..., N) or (...,) in 1-D."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "empty":
            return np.zeros(pts.shape if pts.ndim <= 1 else pts.shape[:-1], dtype=bool)
        if pts.ndim >= 1 and pts.shape[-1] == len(self.center) and pts.ndim > 1:
            xy = pts
        elif len(self.center) == 1:
            xy = pts[..., None]
        else:
            xy = pts
        c = np.asarray(self.center)
        if self.kind == "disc":
            return np.sum((xy - c) ** 2, axis=-1) <= self.radius**2
        if self.kind == "ellipse":
            s = np.asarray(self.semi_axes)
            return np.sum(((xy - c) / s) ** 2, axis=-1) <= 1.0
        v = self.vertices
        sign = _polygon_orientation(v)
        inside = np.ones(xy.shape[:-1], dtype=bool)
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            cross = ((b[0] - a[0]) * (xy[..., 1] - a[1])
                     - (b[1] - a[1]) * (xy[..., 0] - a[0]))
            inside &= sign * cross >= 0.0
        return inside

    def __repr__(self):
        if self.kind == "empty":
            return "ObstacleSpec(empty)"
        if self.kind == "disc":
            return f"ObstacleSpec(disc, center={self.center}, r={self.radius})"
        if self.kind == "ellipse":
            return f"ObstacleSpec(ellipse, center={self.center}, semi_axes={self.semi_axes})"
        return f"ObstacleSpec(polygon, {len(self.vertices)} vertices)"


def _polygon_orientation(v):
    area2 = 0.0
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        area2 += a[0] * b[1] - b[0] * a[1]
    if area2 == 0.0:
        raise ValueError("degenerate polygon")
    return 1.0 if area2 > 0.0 else -1.0


def _is_convex(v):
    """Cross-product sign test over consecutive edge pairs (collinear allowed)."""
    n = len(v)
    sign = 0.0
    for i in range(n):
        a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross != 0.0:
            if sign != 0.0 and np.sign(cross) != sign:
                return False
            sign = np.sign(cross)
    return sign != 0.0


class ExteriorGrid:
    """Uniform grid over a box with obstacle mask and kernel degree field.

    Immutable after build_grid; fields are row-major arrays indexed
    [i, j] ~ (x1, x2) with cell centers at box_lo + (i + 1/2) h.
    """

    def __init__(self, dimension, box_lo, box_hi, h, obstacle, kernel,
                 chi_k, degree, kernel_weights):
        self.dimension = dimension
        self.box_lo = np.asarray(box_lo, dtype=float)
        self.box_hi = np.asarray(box_hi, dtype=float)
        self.h = float(h)
        self.obstacle = obstacle
        self.kernel = kernel
        self.chi_k = chi_k
        self.chi_omega = ~chi_k
        self.degree = degree
        self.kernel_weights = kernel_weights  # normalized, sums to exactly 1
        self.shape = chi_k.shape
        self.pad = kernel_weights.shape[0] // 2
        self.n_exterior = int(np.count_nonzero(self.chi_omega))

    def axis_centers(self, axis):
        n = self.shape[axis]
        return self.box_lo[axis] + (np.arange(n) + 0.5) * self.h

    def cell_centers(self):
        """Array of cell centers, shape (*grid_shape, N)."""
        axes = [self.axis_centers(a) for a in range(self.dimension)]
        if self.dimension == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(*axes, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def convolve_exterior(self, values, pad_value):
        """Discrete convolution of the kernel with values*chi_Omega.

        `pad_value` fills the ring outside the box (scalar or array matching
        the padded shape); obstacle cells contribute zero.
        """
        m = self.pad
        masked = np.where(self.chi_omega, values, 0.0)
        padded_shape = tuple(s + 2 * m for s in self.shape)
        if np.isscalar(pad_value):
            padded = np.full(padded_shape, float(pad_value))
        else:
            padded = np.array(pad_value, dtype=float)
            if padded.shape != padded_shape:
                raise ValueError("pad_value shape mismatch")
        core = (slice(m, m + self.shape[0]),) + (
            (slice(m, m + self.shape[1]),) if self.dimension == 2 else ())
        padded[core] = masked
        return fftconvolve(padded, self.kernel_weights, mode="valid")

    def convolve_exterior_direct(self, values, pad_value):
        """O(n^2) summation oracle for convolve_exterior."""
        m = self.pad
        masked = np.where(self.chi_omega, values, 0.0)
        padded_shape = tuple(s + 2 * m for s in self.shape)
        if np.isscalar(pad_value):
            padded = np.full(padded_shape, float(pad_value))
        else:
            padded = np.array(pad_value, dtype=float)
        core = (slice(m, m + self.shape[0]),) + (
            (slice(m, m + self.shape[1]),) if self.dimension == 2 else ())
        padded[core] = masked
        out = np.zeros(self.shape)
        w = self.kernel_weights
        if self.dimension == 1:
            for i in range(self.shape[0]):
                out[i] = np.dot(w, padded[i:i + 2 * m + 1][::-1])
        else:
            for i in range(self.shape[0]):
                for j in range(self.shape[1]):
                    block = padded[i:i + 2 * m + 1, j:j + 2 * m + 1]
                    out[i, j] = np.sum(w * block[::-1, ::-1])
        return out

    def marginal_weights(self):
        """x1-marginal of the discrete kernel; sums to exactly 1."""
        if self.dimension == 1:
            return self.kernel_weights.copy()
        return self.kernel_weights.sum(axis=1)

    def marginal_kernel1d(self, refine_to=129):
        """Tabulated Kernel1D whose weights at this grid spacing reproduce
        the discrete kernel marginal exactly (the profile solver then shares
        the evolution operator's planar convolution)."""
        from .kernels import Kernel1D

        w = self.marginal_weights() / self.h  # density values at offsets k*h
        m = len(w) // 2
        L = (m + 0.0) * self.h
        n = len(w)
        factor = 1
        while (n - 1) * factor + 1 < refine_to:
            factor *= 2
        coarse_nodes = np.linspace(-L, L, n)
        fine_nodes = np.linspace(-L, L, (n - 1) * factor + 1)
        table = np.interp(fine_nodes, coarse_nodes, w)
        return Kernel1D(L, table=table)

    def __repr__(self):
        return (f"ExteriorGrid(N={self.dimension}, shape={self.shape}, "
                f"h={self.h:g}, obstacle={self.obstacle.kind})")


def discrete_kernel(kernel, h):
    """Kernel sampled at cell offsets times h^N, normalized to sum to 1."""
    m = int(np.floor(kernel.support_radius / h + 1e-12))
    offs = np.arange(-m, m + 1) * h
    if kernel.dimension == 1:
        w = kernel.eval(offs) * h
    else:
        xx, yy = np.meshgrid(offs, offs, indexing="ij")
        w = kernel.eval(np.stack([xx, yy], axis=-1)) * h * h
    total = w.sum()
    if total <= 0.0:
        raise ValueError("kernel support unresolved at this spacing")
    return w / total


def build_grid(box, h, obstacle, kernel):
    """Rasterize the exterior domain and precompute the degree field.

    box: ((x_lo, x_hi),) in 1-D or ((x_lo, x_hi), (y_lo, y_hi)) in 2-D.
    Cell counts are rounded from the box extents; h <= L/8 is required so
    the kernel is resolved.  The obstacle must stay one support radius away
    from the box boundary.
    """
    L = kernel.support_radius
    if h > L / 8.0 + 1e-12:
        raise ValueError(f"h must be <= L/8 = {L / 8}")
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = box[None, :]
    dim = box.shape[0]
    if dim != kernel.dimension:
        raise ValueError("box dimension does not match the kernel dimension")
    lo, hi = box[:, 0], box[:, 1]
    counts = np.round((hi - lo) / h).astype(int)
    if np.any(counts < 4):
        raise ValueError("box too small")
    hi = lo + counts * h  # snap so cells are exactly h

    if obstacle.kind != "empty":
        ob_lo, ob_hi = obstacle.bounds()
        if np.any(ob_lo - lo < 2 * h) or np.any(hi - ob_hi < 2 * h):
            raise ValueError("obstacle touches the box boundary")

    axes = [lo[a] + (np.arange(counts[a]) + 0.5) * h for a in range(dim)]
    if dim == 1:
        centers = axes[0][:, None]
    else:
        xx, yy = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([xx, yy], axis=-1)
    chi_k = obstacle.contains(centers)

    w = discrete_kernel(kernel, h)
    grid = ExteriorGrid(dim, lo, hi, h, obstacle, kernel, chi_k, None, w)
    # degree = conv(J, chi_Omega) with chi_Omega = 1 outside the box
    degree = grid.convolve_exterior(np.ones(grid.shape), pad_value=1.0)
    grid.degree_comp = np.where(chi_k, 0.0, degree)  # NaN-free for arithmetic
    degree = degree.copy()
    degree[chi_k] = np.nan
    grid.degree = degree
    return grid


def min_degree(grid):
    """Minimum kernel degree over exterior cells (feeds the coupling check)."""
    return float(np.nanmin(np.where(grid.chi_omega, grid.degree, np.nan)))


def write_field_dump(path, values, h, t, obstacle_mask=None):
    """Row-major float64 dump with the 32-byte header; obstacle cells NaN."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError("only 1-D and 2-D fields dump")
    out = arr.copy()
    if obstacle_mask is not None:
        out[obstacle_mask] = np.nan
    nx = arr.shape[0]
    ny = arr.shape[1] if arr.ndim == 2 else 0
    header = DUMP_HEADER.pack(DUMP_MAGIC, arr.ndim, nx, ny, 0, float(h), float(t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(out.astype("<f8").tobytes(order="C"))


def read_field_dump(path):
    """Returns (values, h, t); obstacle cells come back as NaN."""
    with open(path, "rb") as fh:
        magic, ndim, nx, ny, _, h, t = DUMP_HEADER.unpack(fh.read(DUMP_HEADER.size))
        if magic != DUMP_MAGIC:
            raise ValueError("not a field dump")
        count = nx * (ny if ndim == 2 else 1)
        data = np.frombuffer(fh.read(8 * count), dtype="<f8").copy()
    shape = (nx, ny) if ndim == 2 else (nx,)
    return data.reshape(shape), h, t


def write_slice_csv(path, grid, values, axis=1):
    """Midline CSV slice of a grid field (companion to the binary dumps)."""
    arr = np.asarray(values, dtype=float)
    if grid.dimension == 1 or arr.ndim == 1:
        coords = grid.axis_centers(0)
        line = arr
    else:
        mid = arr.shape[axis] // 2
        line = arr[:, mid] if axis == 1 else arr[mid, :]
        coords = grid.axis_centers(0 if axis == 1 else 1)
    with open(path, "w") as fh:
        fh.write("coordinate,value\n")
        for c, v in zip(coords, line):
            fh.write(f"{float(c)!r},{float(v)!r}\n")
