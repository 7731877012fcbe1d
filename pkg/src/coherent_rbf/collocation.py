"""RBF collocation: interpolation matrix, boundary rows and discrete operators.

A linear operator ``L`` is discretised as ``L_in A^{-1} E_0`` where ``A``
stacks the interpolation rows at interior nodes over the oblique Neumann rows
at boundary nodes.  ``A`` is factorised once (LU with partial pivoting); the
inverse is never formed.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .domain import BoundaryNodes
from .errors import AssemblyError
from .kernels import get_kernel, gradient_matrix, laplacian_matrix, overlap_count, value_matrix

log = logging.getLogger(__name__)

DEFAULT_COND_WARN = 1e14


@dataclass
class CollocationSetup:
    domain: object
    kernel: object
    eps: float
    centers: np.ndarray
    interior: np.ndarray
    boundary: BoundaryNodes
    bc_vectors: np.ndarray
    A: np.ndarray
    lu: tuple = field(repr=False)
    cond_estimate: float
    overlap: float

    @property
    def n(self):
        return len(self.centers)

    @property
    def n_interior(self):
        return len(self.interior)

    @property
    def A_in(self):
        return self.A[: self.n_interior]

    @property
    def L_bd(self):
        return self.A[self.n_interior:]

    def solve_rows(self, rows):
        """``rows @ A^{-1}`` via the stored factorisation (transposed solve)."""
        rows = np.asarray(rows, dtype=float)
        return sla.lu_solve(self.lu, rows.T, trans=1, check_finite=False).T

    def coefficients(self, node_values):
        """RBF coefficients ``alpha`` with ``A alpha = E_0 f_in``."""
        f = np.asarray(node_values, dtype=float)
        if f.shape[0] != self.n_interior:
            raise ValueError(f"expected {self.n_interior} node values, got {f.shape[0]}")
        rhs = np.zeros((self.n,) + f.shape[1:])
        rhs[: self.n_interior] = f
        return sla.lu_solve(self.lu, rhs, check_finite=False)

    def interpolate(self, node_values, points):
        """Evaluate the interpolant of interior node values at arbitrary points."""
        alpha = self.coefficients(node_values)
        return value_matrix(self.kernel, self.eps, points, self.centers, self.domain) @ alpha


def boundary_directions(flow, boundary, times=None):
    """Oblique directions ``sum_i C^{-1}_{x,t0,t_i} n(x)``; the ``t_0`` term is ``n``."""
    if len(boundary) == 0:
        return np.zeros((0, 2))
    if flow is None:
        return 2.0 * boundary.normals
    times = list(flow.default_times() if times is None else times)
    v = np.zeros_like(boundary.normals)
    for t in times:
        if t == flow.t0:
            v += boundary.normals
        else:
            C_inv = flow.cauchy_green_inverse(boundary.points, t)
            v += np.einsum("nij,nj->ni", C_inv, boundary.normals)
    return v


def assemble(domain, flow, centers, interior, boundary=None, kernel="psi64", eps=1.0,
             times=None, cond_warn=DEFAULT_COND_WARN):
    """Assemble and factorise ``A = [A_in; L_bd]``.

    ``flow`` supplies the inverse Cauchy-Green tensors for the boundary rows;
    it may be ``None`` when there are no boundary nodes (or to impose the
    static condition ``2 n . grad f = 0``).
    """
    kernel = get_kernel(kernel)
    if not eps > 0:
        raise AssemblyError("shape parameter eps must be positive")
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    interior = np.asarray(interior, dtype=float).reshape(-1, 2)
    boundary = BoundaryNodes.empty() if boundary is None else boundary
    if len(interior) + len(boundary) != len(centers):
        raise AssemblyError(
            f"{len(interior)} interior + {len(boundary)} boundary nodes != {len(centers)} centers"
        )
    A_in = value_matrix(kernel, eps, interior, centers, domain)
    if len(boundary):
        v = boundary_directions(flow, boundary, times)
        norm = np.linalg.norm(v, axis=1)
        if not np.all(np.isfinite(norm)) or np.any(norm == 0):
            raise AssemblyError("degenerate boundary direction (zero or non-finite)")
        # boundary rows have a zero right-hand side, so scaling them leaves every
        # L_in A^{-1} E_0 unchanged; unit directions keep A balanced when C^{-1} is huge
        G = gradient_matrix(kernel, eps, boundary.points, centers, domain)
        L_bd = np.einsum("ijk,ik->ij", G, v / norm[:, None])
        A = np.vstack([A_in, L_bd])
    else:
        v = np.zeros((0, 2))
        A = A_in
    if not np.all(np.isfinite(A)):
        raise AssemblyError("non-finite entries in the collocation matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > np.finfo(float).eps * 1e-2 or np.any(np.diag(lu) == 0):
        cond = np.inf if not rcond > 0 else 1.0 / rcond
        raise AssemblyError(f"collocation matrix is singular (condition estimate {cond:.3g})", cond)
    cond = 1.0 / rcond
    if cond > cond_warn:
        warnings.warn(f"collocation matrix ill-conditioned: cond ~ {cond:.3g}", RuntimeWarning,
                      stacklevel=2)
    overlap = overlap_count(eps, centers, domain)
    log.info("assembled n=%d (interior %d, boundary %d) cond_estimate=%.3e overlap=%.1f",
             len(centers), len(interior), len(boundary), cond, overlap)
    return CollocationSetup(domain, kernel, float(eps), centers, interior, boundary, v, A,
                            (lu, piv), cond, overlap)


def laplacian_rows(setup):
    """``D_in = (Laplace phi_j(x_i))`` over interior nodes."""
    return laplacian_matrix(setup.kernel, setup.eps, setup.interior, setup.centers, setup.domain)


def transfer_rows(setup, flow, t=None):
    """``P_in = (phi_j(Phi(x_i, t, t0)))``: basis values at backward-mapped nodes."""
    back = flow.backward(setup.interior, t)
    return value_matrix(setup.kernel, setup.eps, back, setup.centers, setup.domain)


def koopman_rows(setup, flow, t=None):
    """Collocated dual ``P*_in = (phi_j(Phi(x_i, t0, t)))`` (forward-mapped nodes)."""
    fwd = flow.forward(setup.interior, t)
    return value_matrix(setup.kernel, setup.eps, fwd, setup.centers, setup.domain)


def discrete_operator(setup, rows):
    """``L_in A^{-1} E_0``: an ``l_in x l_in`` matrix acting on node values."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape[1] != setup.n:
        raise ValueError(f"operator rows need {setup.n} columns, got {rows.shape[1]}")
    return setup.solve_rows(rows)[:, : setup.n_interior]


def image_setup(setup, flow, t=None):
    """Collocation setup on the image domain: centers and nodes pushed forward."""
    if len(setup.boundary):
        raise AssemblyError("moving-domain formulation supports boundaryless domains only")
    return assemble(setup.domain, None, flow.forward(setup.centers, t), flow.forward(setup.interior, t),
                    None, setup.kernel, setup.eps)


def moving_domain_operators(setup_initial, setup_image):
    """``(D, D_hat)`` with ``D = D' A^{-1}`` and ``D_hat = D_hat' A_hat^{-1}``.

    ``D_hat'`` is built from distances between image nodes and image centers.
    The dynamic Laplacian on node values is then ``(D + D_hat) / 2``.
    """
    if len(setup_initial.boundary) or len(setup_image.boundary):
        raise AssemblyError("moving-domain formulation supports boundaryless domains only")
    if setup_initial.n != setup_image.n:
        raise AssemblyError("initial and image setups must have the same size")
    D = discrete_operator(setup_initial, laplacian_rows(setup_initial))
    D_hat = discrete_operator(setup_image, laplacian_rows(setup_image))
    return D, D_hat
