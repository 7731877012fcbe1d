"""Mesh-width and shape-parameter convergence studies with log-log slope fits."""
import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .collocation import assemble
from .errors import CoherentRBFError
from .pipeline import build_nodes, build_operator, build_system, comparison_times
from .spectral import smallest_magnitude_eigs

log = logging.getLogger(__name__)


@dataclass
class ConvergencePoint:
    kernel: str
    count: int
    eps: float
    sweep_value: float
    eigenvalues: np.ndarray = None
    max_err: float = math.nan
    error: str = None

    @property
    def ok(self):
        return self.error is None and np.isfinite(self.max_err)


@dataclass
class SlopeFit:
    kernel: str
    slope: float
    intercept: float
    used: list = field(default_factory=list)
    reason: str = None

    @property
    def defined(self):
        return self.reason is None


@dataclass
class ConvergenceResult:
    axis: str
    points: list
    fits: dict

    def errors(self, kernel):
        pts = [p for p in self.points if p.kernel == kernel]
        return np.array([p.sweep_value for p in pts]), np.array([p.max_err for p in pts])


def max_abs_error(eigenvalues, reference):
    k = min(len(eigenvalues), len(reference))
    return float(np.max(np.abs(np.asarray(eigenvalues[:k]) - np.asarray(reference[:k]))))


def fit_slope(x, err, floor=0.0, exclude_mask=None, kernel=""):
    """Least-squares slope of ``log err`` against ``log x``.

    Points below ``floor`` (where the reference's own rounding dominates),
    non-finite points and excluded points are dropped; fewer than 3 usable
    points (or all-zero errors) leave the slope undefined.
    """
    x = np.asarray(x, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = np.isfinite(err) & (err > 0) & (err >= floor)
    if exclude_mask is not None:
        keep &= ~np.asarray(exclude_mask, dtype=bool)
    used = x[keep].tolist()
    if keep.sum() < 3:
        why = "all errors zero" if np.all(err[np.isfinite(err)] == 0) else f"only {int(keep.sum())} usable points"
        return SlopeFit(kernel, math.nan, math.nan, used, f"slope undefined: {why}")
    slope, intercept = np.polyfit(np.log(x[keep]), np.log(err[keep]), 1)
    return SlopeFit(kernel, float(slope), float(intercept), used)


def sweep_point(cfg, kernel, count, eps):
    """Leading eigenvalues of the configured system at one sweep point."""
    c = copy.deepcopy(cfg)
    c.grid.counts = [count, count]
    c.rbf.kernel = kernel
    c.rbf.eps = eps
    system = build_system(c)
    times = comparison_times(c, system)
    centers, interior, boundary = build_nodes(c, system.domain)
    setup = assemble(system.domain, system, centers, interior, boundary, kernel, eps, times,
                     c.rbf.cond_warn)
    op, _, _ = build_operator(c, system, setup, times)
    return smallest_magnitude_eigs(op, c.eig.count, c.eig.tol, c.eig.method).eigenvalues


def run_convergence(cfg):
    cv = cfg.convergence
    if cv.axis == "mesh":
        sweep = [(n, cv.eps) for n in cv.counts]
    else:
        sweep = [(cfg.grid.counts[0], e) for e in cv.eps_values]
    length = 2.0 * math.pi
    points = []
    for kernel in cv.kernels:
        for count, eps in sweep:
            value = length / count if cv.axis == "mesh" else 1.0 / eps
            pt = ConvergencePoint(kernel, count, eps, value)
            try:
                pt.eigenvalues = sweep_point(cfg, kernel, count, eps)
                pt.max_err = max_abs_error(pt.eigenvalues, cv.reference)
            except (CoherentRBFError, np.linalg.LinAlgError) as exc:
                pt.error = str(exc)
                log.warning("sweep point %s N=%d eps=%g failed: %s", kernel, count, eps, exc)
            log.info("%s N=%d eps=%g max_err=%.3e", kernel, count, eps, pt.max_err)
            points.append(pt)
    fits = {}
    for kernel in cv.kernels:
        pts = [p for p in points if p.kernel == kernel]
        param = [p.count if cv.axis == "mesh" else p.eps for p in pts]
        excl = [any(np.isclose(v, e) for e in cv.exclude) for v in param]
        fits[kernel] = fit_slope([p.sweep_value for p in pts], [p.max_err for p in pts],
                                 cv.fit_error_floor, excl, kernel)
    return ConvergenceResult(cv.axis, points, fits)
