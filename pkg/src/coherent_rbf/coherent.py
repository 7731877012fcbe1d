"""Level-set extraction and the dynamic Cheeger scan.

Eigenfunctions are sampled on a regular evaluation grid, level curves are
extracted by marching squares (linear edge interpolation, saddles resolved
by the cell-centre average) and the ratio

    h(G) = (len(G) + len(Phi(G))) / 2 / min(vol(M1), vol(M2))

is evaluated over a scan of levels.  Periodic axes get a ghost row/column so
contours crossing the seam close up; crossing points on the seam edges share
one edge id, and all vertices are stored wrapped into the domain.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ScanError

log = logging.getLogger(__name__)

MIN_RESOLUTION = 8
INTERP_CHUNK = 2048


@dataclass(frozen=True)
class FieldGrid:
    """Samples ``values[i, j]`` of a scalar field at ``(xs[i], ys[j])``."""

    domain: object
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.xs), len(self.ys)):
            raise ValueError(f"values shape {v.shape} does not match axes ({len(self.xs)}, {len(self.ys)})")
        if min(v.shape) < MIN_RESOLUTION:
            raise ValueError(f"evaluation grid needs >= {MIN_RESOLUTION} points per axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def points(self):
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cells(self):
        """Marching-squares cells: ``(centre_values, areas)``, both ``(cx, cy)``.

        Cells span neighbouring samples (across the seam on periodic axes);
        the centre value is the corner average.  Areas sum to the domain area.
        """
        V, xs, ys = _extended(self)
        centre = 0.25 * (V[:-1, :-1] + V[1:, :-1] + V[1:, 1:] + V[:-1, 1:])
        return centre, np.outer(np.diff(xs), np.diff(ys))


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray
    closed: bool


@dataclass
class LevelCurve:
    level: float
    polylines: list
    total_length: float
    domain: object = field(repr=False, default=None)
    empty: bool = False

    @property
    def n_vertices(self):
        return sum(len(p.points) for p in self.polylines)


@dataclass(frozen=True)
class CheegerEvaluation:
    gamma: float
    length_initial: float
    length_final: float
    volume_min: float
    ratio: float
    lengths: tuple = ()

    @property
    def valid(self):
        return np.isfinite(self.ratio)


@dataclass
class ScanResult:
    evaluations: list
    best: CheegerEvaluation
    curve_initial: LevelCurve
    curve_final: LevelCurve
    curves_intermediate: list = field(default_factory=list)

    def table(self):
        return np.array([[e.gamma, e.length_initial, e.length_final, e.volume_min, e.ratio]
                         for e in self.evaluations])


# ---------------------------------------------------------------------------
# evaluation grid

def grid_axes(domain, resolution=100):
    """Periodic axes: ``m`` points at spacing ``L/m``; bounded axes: endpoints included."""
    m = int(resolution)
    if m < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    axes = []
    for ax in range(2):
        lo, hi = domain.lower[ax], domain.upper[ax]
        if domain.periodic[ax]:
            axes.append(lo + np.arange(m) * ((hi - lo) / m))
        else:
            axes.append(np.linspace(lo, hi, m))
    return axes


def evaluate_field(setup, node_values, resolution=100):
    """Sample the RBF interpolant of interior node values on a regular grid."""
    return evaluate_fields(setup, np.asarray(node_values, dtype=float)[:, None], resolution)[0]


def evaluate_fields(setup, node_values, resolution=100):
    """Like :func:`evaluate_field` for the columns of ``node_values`` (one matrix build)."""
    from .kernels import value_matrix

    F = np.asarray(node_values, dtype=float)
    xs, ys = grid_axes(setup.domain, resolution)
    alpha = setup.coefficients(F)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    out = np.empty((len(pts), F.shape[1]))
    for s in range(0, len(pts), INTERP_CHUNK):
        blk = pts[s:s + INTERP_CHUNK]
        out[s:s + INTERP_CHUNK] = value_matrix(setup.kernel, setup.eps, blk, setup.centers,
                                               setup.domain) @ alpha
    return [FieldGrid(setup.domain, xs, ys, out[:, k].reshape(len(xs), len(ys)))
            for k in range(F.shape[1])]


def sample_function(domain, func, resolution=100):
    """FieldGrid of an analytic ``func(x, y)`` (test fields, diagnostics)."""
    xs, ys = grid_axes(domain, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return FieldGrid(domain, xs, ys, func(gx, gy))


# ---------------------------------------------------------------------------
# marching squares (hot path)

def _extended(grid):
    """Append a ghost column/row on periodic axes (wrapped values, shifted coords)."""
    v, xs, ys = grid.values, grid.xs, grid.ys
    d = grid.domain
    if d.periodic[0]:
        v = np.vstack([v, v[:1]])
        xs = np.append(xs, xs[0] + d.lengths[0])
    if d.periodic[1]:
        v = np.hstack([v, v[:, :1]])
        ys = np.append(ys, ys[0] + d.lengths[1])
    return np.ascontiguousarray(v), np.ascontiguousarray(xs), np.ascontiguousarray(ys)


@_accel.njit
def _march_nb(V, xs, ys, gamma, nxr, nyr, perx, pery):
    NX, NY = V.shape
    cap = 2 * (NX - 1) * (NY - 1)
    ea = np.empty(cap, dtype=np.int64)
    eb = np.empty(cap, dtype=np.int64)
    pa = np.empty((cap, 2))
    pb = np.empty((cap, 2))
    voff = nxr * nyr
    ids = np.empty(4, dtype=np.int64)
    px = np.empty(4)
    py = np.empty(4)
    crossing = np.empty(4, dtype=np.bool_)
    k = 0
    for i in range(NX - 1):
        for j in range(NY - 1):
            c0 = V[i, j]
            c1 = V[i + 1, j]
            c2 = V[i + 1, j + 1]
            c3 = V[i, j + 1]
            b0 = c0 > gamma
            b1 = c1 > gamma
            b2 = c2 > gamma
            b3 = c3 > gamma
            crossing[0] = b0 != b1
            crossing[1] = b1 != b2
            crossing[2] = b3 != b2
            crossing[3] = b0 != b3
            n = 0
            for e in range(4):
                if crossing[e]:
                    n += 1
            if n == 0:
                continue
            ip1 = i + 1
            if perx and ip1 == nxr:
                ip1 = 0
            jp1 = j + 1
            if pery and jp1 == nyr:
                jp1 = 0
            dx = xs[i + 1] - xs[i]
            dy = ys[j + 1] - ys[j]
            t = (gamma - c0) / (c1 - c0) if crossing[0] else 0.0
            px[0] = xs[i] + t * dx
            py[0] = ys[j]
            ids[0] = i * nyr + j
            t = (gamma - c1) / (c2 - c1) if crossing[1] else 0.0
            px[1] = xs[i + 1]
            py[1] = ys[j] + t * dy
            ids[1] = voff + ip1 * nyr + j
            t = (gamma - c3) / (c2 - c3) if crossing[2] else 0.0
            px[2] = xs[i] + t * dx
            py[2] = ys[j + 1]
            ids[2] = i * nyr + jp1
            t = (gamma - c0) / (c3 - c0) if crossing[3] else 0.0
            px[3] = xs[i]
            py[3] = ys[j] + t * dy
            ids[3] = voff + i * nyr + j
            if n == 2:
                first = -1
                for e in range(4):
                    if crossing[e]:
                        if first < 0:
                            first = e
                        else:
                            ea[k] = ids[first]
                            eb[k] = ids[e]
                            pa[k, 0] = px[first]
                            pa[k, 1] = py[first]
                            pb[k, 0] = px[e]
                            pb[k, 1] = py[e]
                            k += 1
            else:
                centre = (c0 + c1 + c2 + c3) / 4.0 > gamma
                if b0 == centre:
                    s0, s1, s2, s3 = 0, 1, 2, 3
                else:
                    s0, s1, s2, s3 = 0, 3, 1, 2
                ea[k] = ids[s0]
                eb[k] = ids[s1]
                pa[k, 0] = px[s0]
                pa[k, 1] = py[s0]
                pb[k, 0] = px[s1]
                pb[k, 1] = py[s1]
                k += 1
                ea[k] = ids[s2]
                eb[k] = ids[s3]
                pa[k, 0] = px[s2]
                pa[k, 1] = py[s2]
                pb[k, 0] = px[s3]
                pb[k, 1] = py[s3]
                k += 1
    return ea[:k], eb[:k], pa[:k], pb[:k]


def _march_np(V, xs, ys, gamma, nxr, nyr, perx, pery):
    NX, NY = V.shape
    c0, c1, c2, c3 = V[:-1, :-1], V[1:, :-1], V[1:, 1:], V[:-1, 1:]
    b0, b1, b2, b3 = c0 > gamma, c1 > gamma, c2 > gamma, c3 > gamma
    cross = np.stack([b0 != b1, b1 != b2, b3 != b2, b0 != b3], axis=-1)
    ncross = cross.sum(axis=-1)
    I, J = np.meshgrid(np.arange(NX - 1), np.arange(NY - 1), indexing="ij")
    ip1 = I + 1
    if perx:
        ip1 = np.where(ip1 == nxr, 0, ip1)
    jp1 = J + 1
    if pery:
        jp1 = np.where(jp1 == nyr, 0, jp1)
    voff = nxr * nyr
    x0, x1 = xs[:-1][:, None], xs[1:][:, None]
    y0, y1 = ys[:-1][None, :], ys[1:][None, :]
    dx, dy = x1 - x0, y1 - y0

    def frac(a, b, c):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(c, (gamma - a) / np.where(c, b - a, 1.0), 0.0)

    px = np.stack([
        x0 + frac(c0, c1, cross[..., 0]) * dx,
        np.broadcast_to(x1, I.shape),
        x0 + frac(c3, c2, cross[..., 2]) * dx,
        np.broadcast_to(x0, I.shape),
    ], axis=-1)
    py = np.stack([
        np.broadcast_to(y0, I.shape),
        y0 + frac(c1, c2, cross[..., 1]) * dy,
        np.broadcast_to(y1, I.shape),
        y0 + frac(c0, c3, cross[..., 3]) * dy,
    ], axis=-1)
    ids = np.stack([I * nyr + J, voff + ip1 * nyr + J, I * nyr + jp1, voff + I * nyr + J], axis=-1)

    # two crossings: first and second crossing edge; saddles: two segments per cell
    order = np.argsort(~cross, axis=-1, kind="stable")
    sA = np.where(ncross == 2, order[..., 0], 0)
    sB = np.where(ncross == 2, order[..., 1], 0)
    centre = (c0 + c1 + c2 + c3) / 4.0 > gamma
    same = b0 == centre
    saddle = ncross == 4
    sA2 = np.where(same, 2, 1)
    sB2 = np.where(same, 3, 2)
    sB = np.where(saddle, np.where(same, 1, 3), sB)

    active = ncross > 0
    cell = np.flatnonzero(active.ravel())
    first_a, first_b = sA.ravel()[cell], sB.ravel()[cell]
    sad = saddle.ravel()[cell]
    slot_cell = np.concatenate([cell, cell[sad]])
    slot_rank = np.concatenate([np.zeros(len(cell), dtype=np.int64), np.ones(int(sad.sum()), dtype=np.int64)])
    ea_loc = np.concatenate([first_a, sA2.ravel()[cell][sad]])
    eb_loc = np.concatenate([first_b, sB2.ravel()[cell][sad]])
    perm = np.lexsort((slot_rank, slot_cell))
    slot_cell, ea_loc, eb_loc = slot_cell[perm], ea_loc[perm], eb_loc[perm]
    idsf = ids.reshape(-1, 4)
    pxf, pyf = px.reshape(-1, 4), py.reshape(-1, 4)
    ea = idsf[slot_cell, ea_loc].astype(np.int64)
    eb = idsf[slot_cell, eb_loc].astype(np.int64)
    pa = np.column_stack([pxf[slot_cell, ea_loc], pyf[slot_cell, ea_loc]])
    pb = np.column_stack([pxf[slot_cell, eb_loc], pyf[slot_cell, eb_loc]])
    return ea, eb, pa, pb


def level_segments(grid, gamma):
    """Marching-squares segments ``(edge_a, edge_b, p_a, p_b)``, points wrapped."""
    V, xs, ys = _extended(grid)
    nxr, nyr = grid.values.shape
    f = _march_nb if _accel.use_numba() else _march_np
    ea, eb, pa, pb = f(V, xs, ys, float(gamma), nxr, nyr, bool(grid.domain.periodic[0]),
                       bool(grid.domain.periodic[1]))
    return ea, eb, grid.domain.wrap(pa), grid.domain.wrap(pb)


def _chain(ea, eb, pa, pb):
    """Join segments sharing edge ids into polylines."""
    point = {}
    adj = {}
    for s in range(len(ea)):
        a, b = int(ea[s]), int(eb[s])
        point.setdefault(a, pa[s])
        point.setdefault(b, pb[s])
        adj.setdefault(a, []).append(s)
        adj.setdefault(b, []).append(s)
    used = np.zeros(len(ea), dtype=bool)

    def walk(start):
        ids = [start]
        cur = start
        while True:
            nxt = [s for s in adj[cur] if not used[s]]
            if not nxt:
                return ids
            s = nxt[0]
            used[s] = True
            cur = int(eb[s]) if int(ea[s]) == cur else int(ea[s])
            ids.append(cur)

    chains = []
    # open chains start at degree-1 edges (bounded-axis borders), in segment order
    for s in range(len(ea)):
        for e in (int(ea[s]), int(eb[s])):
            if len(adj[e]) == 1 and not used[adj[e][0]]:
                chains.append((walk(e), False))
    for s in range(len(ea)):
        if not used[s]:
            ids = walk(int(ea[s]))
            closed = ids[0] == ids[-1]
            chains.append((ids[:-1] if closed else ids, closed))
    out = []
    for ids, closed in chains:
        pts = [point[e] for e in ids]
        keep = [pts[0]]
        for p in pts[1:]:
            if not np.array_equal(p, keep[-1]):
                keep.append(p)
        if closed and len(keep) > 1 and np.array_equal(keep[0], keep[-1]):
            keep.pop()
        if len(keep) >= 2:
            out.append(Polyline(np.array(keep), closed))
    return out


def polyline_length(domain, poly):
    p = poly.points
    if len(p) < 2:
        return 0.0
    q = np.vstack([p, p[:1]]) if poly.closed else p
    d = domain.displacement(q[1:], q[:-1])
    return float(np.sum(np.sqrt(np.sum(d * d, axis=1))))


def segments_length(domain, pa, pb):
    d = domain.displacement(pb, pa)
    return float(np.sum(np.sqrt(np.sum(d * d, axis=1))))


def extract_level_curve(grid, gamma):
    """Level set ``{f = gamma}`` as polylines with total minimal-image length."""
    v = grid.values
    if not (v.min() < gamma < v.max()):
        log.debug("level %g outside field range [%g, %g]", gamma, v.min(), v.max())
        return LevelCurve(float(gamma), [], 0.0, grid.domain, empty=True)
    ea, eb, pa, pb = level_segments(grid, gamma)
    polys = _chain(ea, eb, pa, pb)
    length = sum(polyline_length(grid.domain, p) for p in polys)
    return LevelCurve(float(gamma), polys, length, grid.domain, empty=not polys)


def level_length(grid, gamma):
    """Total level-set length without building polylines (used in scans)."""
    v = grid.values
    if not (v.min() < gamma < v.max()):
        return 0.0
    _, _, pa, pb = level_segments(grid, gamma)
    return segments_length(grid.domain, pa, pb)


def sublevel_volume(grid, gamma):
    """``(vol{f <= gamma}, vol{f > gamma})`` by cell counting; the sides sum to the area."""
    centre, area = grid.cells()
    below = float(np.sum(area[centre <= gamma]))
    below = min(below, grid.domain.area)
    return below, grid.domain.area - below


# ---------------------------------------------------------------------------
# advection

def _refine(domain, poly):
    p = poly.points
    q = np.vstack([p, p[:1]]) if poly.closed else p
    mids = domain.wrap(q[:-1] + 0.5 * domain.displacement(q[1:], q[:-1]))
    out = np.empty((len(p) + len(mids), 2))
    out[0::2][: len(p)] = p
    out[1::2][: len(mids)] = mids
    if not poly.closed:
        out = out[: 2 * len(p) - 1]
    return Polyline(out, poly.closed)


def advect_curve(flow, curve, t=None, refine_threshold=None):
    """Map every vertex forward by ``Phi(., t0, t)``; lengths use the minimal image.

    With ``refine_threshold`` set, polylines whose image has a segment longer
    than the threshold get one round of midpoint insertion before mapping.
    """
    domain = curve.domain if curve.domain is not None else flow.domain
    if not curve.polylines:
        return LevelCurve(curve.level, [], 0.0, domain, empty=True)
    polys = _map_polylines(flow, curve.polylines, t)
    if refine_threshold is not None:
        redo = []
        for src, img in zip(curve.polylines, polys):
            q = np.vstack([img.points, img.points[:1]]) if img.closed else img.points
            seg = np.sqrt(np.sum(domain.displacement(q[1:], q[:-1]) ** 2, axis=1))
            redo.append(_refine(domain, src) if np.any(seg > refine_threshold) else None)
        if any(r is not None for r in redo):
            new = _map_polylines(flow, [r for r in redo if r is not None], t)
            it = iter(new)
            polys = [next(it) if r is not None else p for p, r in zip(polys, redo)]
    length = sum(polyline_length(domain, p) for p in polys)
    return LevelCurve(curve.level, polys, length, domain)


def _map_polylines(flow, polylines, t=None):
    sizes = [len(p.points) for p in polylines]
    img = flow.forward(np.vstack([p.points for p in polylines]), t)
    out, s = [], 0
    for p, n in zip(polylines, sizes):
        out.append(Polyline(img[s:s + n], p.closed))
        s += n
    return out


def image_curve_via_Pf(P, setup, f2, gamma, resolution=100):
    """Image curve as the ``gamma`` level set of the pushed-forward field ``P f2``."""
    grid = evaluate_field(setup, np.asarray(P) @ np.asarray(f2), resolution)
    return extract_level_curve(grid, gamma)


def split_at_seams(domain, poly):
    """Break a wrapped polyline where a segment crosses a periodic seam.

    Returns open point lists suitable for plotting; the crossing point is
    inserted on both sides of the seam.
    """
    p = poly.points
    q = np.vstack([p, p[:1]]) if poly.closed else p
    pieces, cur = [], [q[0]]
    for a, b in zip(q[:-1], q[1:]):
        d = domain.displacement(b, a)
        if np.allclose(a + d, b, rtol=0, atol=1e-12):
            cur.append(b)
            continue
        end = a + d
        s = 1.0
        for ax in range(2):
            if domain.periodic[ax] and d[ax] != 0:
                lo, hi = domain.lower[ax], domain.upper[ax]
                if end[ax] >= hi:
                    s = min(s, (hi - a[ax]) / d[ax])
                elif end[ax] < lo:
                    s = min(s, (lo - a[ax]) / d[ax])
        x = a + s * d
        if not np.array_equal(x, cur[-1]):
            cur.append(x)
        if len(cur) > 1:
            pieces.append(np.array(cur))
        # same point seen from the other side of the seam (vertices may sit on it)
        cur = [x + (b - end), b]
    pieces.append(np.array(cur))
    if poly.closed and len(pieces) > 1:
        # the closing piece continues into the first one
        pieces[0] = np.vstack([pieces[-1][:-1], pieces[0]])
        pieces.pop()
    return pieces


# ---------------------------------------------------------------------------
# Cheeger scan

def cheeger_ratio(lengths, vol_below, vol_above):
    """``mean(lengths) / min(vol_below, vol_above)``; ``inf`` when a side is empty."""
    vmin = min(vol_below, vol_above)
    if vmin <= 0:
        return vmin, np.inf
    return vmin, float(np.mean(lengths)) / vmin


def scan_levels(grid, levels):
    v = grid.values
    return np.linspace(v.min(), v.max(), int(levels) + 2)[1:-1]


def scan_cheeger(grid, levels=100, image="b", image_grid=None, flow=None, t=None,
                 refine_threshold=None):
    """Evaluate the dynamic Cheeger ratio over ``levels`` values of ``gamma``.

    ``image="a"`` advects the level curves with ``flow`` to time ``t``;
    ``image="b"`` takes the same level set of ``image_grid`` (samples of
    ``P f2``).  For several comparison times pass a list of grids (option b)
    or of times (option a); the ratio then averages all lengths, the first
    one being the initial curve.
    """
    if int(levels) < 1:
        raise ValueError("levels must be >= 1")
    if image == "b":
        if image_grid is None:
            raise ValueError("image option b needs the grid of P f2")
        images = list(image_grid) if isinstance(image_grid, (list, tuple)) else [image_grid]
    elif image == "a":
        if flow is None:
            raise ValueError("image option a needs the flow")
        images = list(t) if isinstance(t, (list, tuple)) else [t]
    else:
        raise ValueError(f"image option must be 'a' or 'b', got {image!r}")
    gammas = scan_levels(grid, levels)
    domain = grid.domain
    L = np.zeros((len(gammas), 1 + len(images)))
    if image == "b":
        for k, g in enumerate(gammas):
            L[k, 0] = level_length(grid, g)
            for i, img in enumerate(images):
                L[k, i + 1] = level_length(img, g)
    else:
        curves = []
        for k, g in enumerate(gammas):
            ea, eb, pa, pb = level_segments(grid, g)
            L[k, 0] = segments_length(domain, pa, pb)
            curves.append(LevelCurve(g, _chain(ea, eb, pa, pb), 0.0, domain))
        polys = [p for c in curves for p in c.polylines]
        for i, ti in enumerate(images):
            if refine_threshold is not None:
                for k, c in enumerate(curves):
                    if c.polylines:
                        L[k, i + 1] = advect_curve(flow, c, ti, refine_threshold).total_length
                continue
            if not polys:
                continue
            # one batched flow evaluation for every vertex of every level
            mapped = iter(_map_polylines(flow, polys, ti))
            for k, c in enumerate(curves):
                img = [next(mapped) for _ in c.polylines]
                L[k, i + 1] = sum(polyline_length(domain, p) for p in img)
    evals = []
    for k, g in enumerate(gammas):
        below, above = sublevel_volume(grid, g)
        vmin, ratio = cheeger_ratio(L[k], below, above)
        if L[k, 0] == 0.0:
            ratio = np.inf
        evals.append(CheegerEvaluation(float(g), float(L[k, 0]), float(L[k, -1]), float(vmin),
                                       float(ratio), tuple(float(x) for x in L[k])))
    valid = [e for e in evals if e.valid]
    if not valid:
        raise ScanError(f"all {len(evals)} scanned levels give an empty side")
    best = min(valid, key=lambda e: (e.ratio, e.gamma))
    curve0 = extract_level_curve(grid, best.gamma)
    if image == "b":
        imgs = [extract_level_curve(g, best.gamma) for g in images]
    else:
        imgs = [advect_curve(flow, curve0, ti, refine_threshold) for ti in images]
    log.info("Cheeger scan: %d levels, gamma*=%.6g h*=%.6g (len %.4g / %.4g, vol %.4g)",
             len(evals), best.gamma, best.ratio, best.length_initial, best.length_final,
             best.volume_min)
    return ScanResult(evals, best, curve0, imgs[-1], imgs[:-1])
