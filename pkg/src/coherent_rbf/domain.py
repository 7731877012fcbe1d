"""Flat 2-D domains: torus, cylinder and box.

A :class:`Domain` knows its axis extents and which axes are periodic.  It
supplies the minimal-image metric used by every distance computation, builds
regular grids and splits them into interior and boundary nodes.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class BoundaryNode:
    position: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class BoundaryNodes:
    """Boundary collocation nodes stored as arrays.

    ``points`` and ``normals`` both have shape ``(k, 2)``; normals are unit
    outward vectors.  Iterating yields :class:`BoundaryNode` items.
    """

    points: np.ndarray
    normals: np.ndarray

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        for p, n in zip(self.points, self.normals):
            yield BoundaryNode(p, n)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 2)), np.zeros((0, 2)))


@dataclass(frozen=True)
class Domain:
    lower: tuple
    upper: tuple
    periodic: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        per = tuple(bool(v) for v in self.periodic)
        if not (len(lo) == len(hi) == len(per) == 2):
            raise DomainError("domains are two-dimensional")
        for a, b in zip(lo, hi):
            if not b > a:
                raise DomainError(f"axis extent [{a}, {b}] has non-positive length")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "periodic", per)

    @property
    def kind(self):
        n = sum(self.periodic)
        if n == 2:
            return "torus"
        if n == 1:
            return "cylinder"
        return "box"

    @property
    def lengths(self):
        return np.array(self.upper) - np.array(self.lower)

    @property
    def periods(self):
        """Per-axis period, 0.0 on bounded axes (the form the kernels expect)."""
        return np.where(self.periodic, self.lengths, 0.0)

    @property
    def area(self):
        return float(np.prod(self.lengths))

    @property
    def has_boundary(self):
        return not all(self.periodic)

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        return np.all((p >= self.lower) & (p <= self.upper), axis=-1)

    def check(self, points):
        p = np.asarray(points, dtype=float)
        if not np.all(self.contains(p)):
            raise DomainError(f"point(s) outside the {self.kind} extent {self.lower}-{self.upper}")
        return p

    def wrap(self, points):
        """Reduce periodic coordinates into ``[lower, upper)``."""
        p = np.array(points, dtype=float, copy=True)
        for ax in range(2):
            if self.periodic[ax]:
                lo = self.lower[ax]
                p[..., ax] = lo + np.mod(p[..., ax] - lo, self.lengths[ax])
        return p

    def displacement(self, x, y):
        """Minimal-image displacement ``x - y`` (broadcasting)."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        for ax in range(2):
            if self.periodic[ax]:
                L = self.lengths[ax]
                d[..., ax] -= L * np.round(d[..., ax] / L)
        return d

    def distance(self, x, y, check=True):
        if check:
            self.check(x)
            self.check(y)
        d = self.displacement(x, y)
        return np.sqrt(np.sum(d * d, axis=-1))


def torus(length=TWO_PI):
    return Domain((0.0, 0.0), (length, length), (True, True))


def cylinder(circumference=TWO_PI, height=np.pi):
    """``S^1 x [0, height]``: periodic in x, bounded in y."""
    return Domain((0.0, 0.0), (circumference, height), (True, False))


def box(lower=(0.0, 0.0), upper=(1.0, 1.0)):
    return Domain(lower, upper, (False, False))


def make_domain(kind, extent=None):
    """Build a domain from a kind name and optional ``(x0, x1, y0, y1)`` extent."""
    periodic = {"torus": (True, True), "cylinder": (True, False), "box": (False, False)}
    defaults = {
        "torus": (0.0, TWO_PI, 0.0, TWO_PI),
        "cylinder": (0.0, TWO_PI, 0.0, np.pi),
        "box": (0.0, 1.0, 0.0, 1.0),
    }
    if kind not in periodic:
        raise DomainError(f"unknown domain kind {kind!r}")
    x0, x1, y0, y1 = defaults[kind] if extent is None else extent
    return Domain((x0, y0), (x1, y1), periodic[kind])


def axis_coordinates(domain, axis, count, delta=0.0):
    """Grid coordinates along one axis.

    Periodic axes get ``count`` points ``lo + delta + k (L - 2 delta) / count``
    (no seam duplicate).  Bounded axes get ``count`` points including both
    endpoints, with the first and last pulled inward by ``delta``.
    """
    count = int(count)
    if count < 2:
        raise DomainError("grid counts must be >= 2 per axis")
    if delta < 0:
        raise DomainError("boundary shift must be non-negative")
    lo, L = domain.lower[axis], domain.lengths[axis]
    if domain.periodic[axis]:
        cell = L / count
        if delta > 0.5 * cell:
            raise DomainError(f"shift {delta} exceeds half a cell ({0.5 * cell})")
        return lo + delta + np.arange(count) * ((L - 2.0 * delta) / count)
    cell = L / (count - 1)
    if delta > 0.5 * cell:
        raise DomainError(f"shift {delta} exceeds half a cell ({0.5 * cell})")
    c = np.linspace(lo, domain.upper[axis], count)
    if delta > 0:
        c[0] += delta
        c[-1] -= delta
    return c


def regular_grid(domain, counts, boundary_shift=0.0):
    """Tensor grid of ``counts[0] * counts[1]`` points, x-major order."""
    xs = axis_coordinates(domain, 0, counts[0], boundary_shift)
    ys = axis_coordinates(domain, 1, counts[1], boundary_shift)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def boundary_nodes(domain, grid):
    """Split ``grid`` into interior points and boundary nodes with normals.

    Membership is an exact comparison with the bounded-axis endpoints; grids
    are generated here, so no tolerance is needed.
    """
    pts = np.asarray(grid, dtype=float)
    normals = np.zeros_like(pts)
    for ax in range(2):
        if domain.periodic[ax]:
            continue
        normals[pts[:, ax] == domain.lower[ax], ax] -= 1.0
        normals[pts[:, ax] == domain.upper[ax], ax] += 1.0
    on_bd = np.any(normals != 0.0, axis=1)
    nb = normals[on_bd]
    nb /= np.linalg.norm(nb, axis=1, keepdims=True)
    return pts[~on_bd], BoundaryNodes(pts[on_bd], nb)
