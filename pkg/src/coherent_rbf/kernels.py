"""Compactly supported Wendland functions and RBF basis matrices.

Each kernel is stored in factored form ``psi(r) = (1 - r)^m q(r)`` on
``[0, 1]`` and zero beyond.  The derivatives are stored the same way::

    psi'(r)  = (1 - r)^(m-1) q1(r)      with q1(0) = 0
    psi''(r) = (1 - r)^(m-2) q2(r)

Because ``q1`` has no constant term, ``psi'(r) / r`` is again a polynomial
times ``(1 - r)^(m-1)``.  The 2-D Laplacian ``psi'' + psi'/r`` and the
gradient ``psi'(r)/r * (x - c)`` are therefore evaluated without any division
by the distance, and the coincident-point value ``2 eps^2 psi''(0)`` comes out
of the same formula.

Coefficients were generated by ``scripts/derive_wendland.py`` (sympy, the
integral recursion ``I f(r) = int_r^1 t f(t) dt`` applied ``k`` times to
``(1 - r)^l``, ``l = floor(d/2) + k + 1``) and are normalised to
``psi(0) = 1``.  Any other positive scaling gives identical discrete
operators, see :meth:`WendlandKernel.scaled`.
"""
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DomainError


@dataclass(frozen=True)
class WendlandKernel:
    name: str
    space_dim_index: int
    smoothness_index: int
    power: int
    poly: tuple
    dpoly: tuple
    ddpoly: tuple

    @property
    def dpoly_over_r(self):
        return self.dpoly[1:]

    def scaled(self, c):
        """The same kernel multiplied by ``c > 0``."""
        if not c > 0:
            raise ValueError("scale must be positive")
        mul = lambda cs: tuple(c * v for v in cs)
        return WendlandKernel(
            f"{self.name}*{c:g}", self.space_dim_index, self.smoothness_index,
            self.power, mul(self.poly), mul(self.dpoly), mul(self.ddpoly),
        )

    def monomial_coefficients(self, order=0):
        """Ascending monomial coefficients of ``psi``, ``psi'`` or ``psi''`` on [0, 1]."""
        poly = (self.poly, self.dpoly, self.ddpoly)[order]
        factor = np.polynomial.polynomial.polypow([1.0, -1.0], self.power - order)
        return np.polynomial.polynomial.polymul(factor, poly)

    def _eval(self, r, coeffs, power):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("kernel argument must be non-negative")
        inside = r < 1.0
        rc = np.where(inside, r, 1.0)
        val = (1.0 - rc) ** power * np.polynomial.polynomial.polyval(rc, coeffs)
        out = np.where(inside, val, 0.0)
        return out[()] if out.ndim == 0 else out

    def value(self, r):
        return self._eval(r, self.poly, self.power)

    def d1(self, r):
        return self._eval(r, self.dpoly, self.power - 1)

    def d2(self, r):
        return self._eval(r, self.ddpoly, self.power - 2)

    def d1_over_r(self, r):
        """``psi'(r) / r``, finite at ``r = 0`` where it equals ``psi''(0)``."""
        return self._eval(r, self.dpoly_over_r, self.power - 1)

    def arrays(self):
        """Coefficient arrays in the layout the compiled kernels take."""
        return (
            int(self.power),
            np.asarray(self.poly, dtype=float),
            np.asarray(self.dpoly_over_r, dtype=float),
            np.asarray(self.ddpoly, dtype=float),
        )


KERNELS = {
    "psi31": WendlandKernel("psi31", 3, 1, 4, (1.0, 4.0), (0.0, -20.0), (-20.0, 80.0)),
    "psi42": WendlandKernel(
        "psi42", 4, 2, 7,
        (1.0, 7.0, 16.0),
        (0.0, -24.0, -144.0),
        (-24.0, -120.0, 1152.0),
    ),
    "psi53": WendlandKernel(
        "psi53", 5, 3, 9,
        (1.0, 9.0, 159 / 5, 231 / 5),
        (0.0, -132 / 5, -1056 / 5, -2772 / 5),
        (-132 / 5, -924 / 5, 2244 / 5, 30492 / 5),
    ),
    "psi64": WendlandKernel(
        "psi64", 6, 4, 12,
        (1.0, 12.0, 426 / 7, 1108 / 7, 1287 / 7),
        (0.0, -240 / 7, -2640 / 7, -11472 / 7, -20592 / 7),
        (-240 / 7, -2400 / 7, -96 / 7, 78240 / 7, 308880 / 7),
    ),
}


def get_kernel(name):
    if isinstance(name, WendlandKernel):
        return name
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def kernel_value(kernel, r):
    return get_kernel(kernel).value(r)


def kernel_d1(kernel, r):
    return get_kernel(kernel).d1(r)


def kernel_d2(kernel, r):
    return get_kernel(kernel).d2(r)


# ---------------------------------------------------------------------------
# single-pair basis functions

def _check_eps(eps):
    if not eps > 0:
        raise DomainError("shape parameter eps must be positive")


def basis_value(kernel, eps, center, x, domain):
    _check_eps(eps)
    r = domain.distance(x, center)
    return get_kernel(kernel).value(eps * r)


def basis_gradient(kernel, eps, center, x, domain):
    """Gradient with respect to ``x`` of ``psi(eps |x - center|)``."""
    _check_eps(eps)
    domain.check(center)
    domain.check(x)
    d = domain.displacement(x, center)
    r = np.sqrt(np.sum(d * d, axis=-1))
    return eps * eps * get_kernel(kernel).d1_over_r(eps * r)[..., None] * d


def basis_laplacian(kernel, eps, center, x, domain):
    _check_eps(eps)
    k = get_kernel(kernel)
    rho = eps * domain.distance(x, center)
    return eps * eps * (k.d2(rho) + k.d1_over_r(rho))


# ---------------------------------------------------------------------------
# pairwise matrices (hot path)

@_accel.njit
def _horner(c, r):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * r + c[i]
    return acc


@_accel.njit
def _disp(a, b, period):
    d = a - b
    if period > 0.0:
        d -= period * np.round(d / period)
    return d


@_accel.njit
def _value_matrix_nb(X, Y, periods, eps, m, q):
    out = np.zeros((X.shape[0], Y.shape[0]))
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            dx = _disp(X[i, 0], Y[j, 0], periods[0])
            dy = _disp(X[i, 1], Y[j, 1], periods[1])
            rho = eps * np.sqrt(dx * dx + dy * dy)
            if rho < 1.0:
                out[i, j] = (1.0 - rho) ** m * _horner(q, rho)
    return out


@_accel.njit
def _laplacian_matrix_nb(X, Y, periods, eps, m, q1r, q2):
    out = np.zeros((X.shape[0], Y.shape[0]))
    e2 = eps * eps
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            dx = _disp(X[i, 0], Y[j, 0], periods[0])
            dy = _disp(X[i, 1], Y[j, 1], periods[1])
            rho = eps * np.sqrt(dx * dx + dy * dy)
            if rho < 1.0:
                s = 1.0 - rho
                out[i, j] = e2 * s ** (m - 2) * (_horner(q2, rho) + s * _horner(q1r, rho))
    return out


@_accel.njit
def _gradient_matrix_nb(X, Y, periods, eps, m, q1r):
    out = np.zeros((X.shape[0], Y.shape[0], 2))
    e2 = eps * eps
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            dx = _disp(X[i, 0], Y[j, 0], periods[0])
            dy = _disp(X[i, 1], Y[j, 1], periods[1])
            rho = eps * np.sqrt(dx * dx + dy * dy)
            if rho < 1.0:
                g = e2 * (1.0 - rho) ** (m - 1) * _horner(q1r, rho)
                out[i, j, 0] = g * dx
                out[i, j, 1] = g * dy
    return out


def _pair_rho_np(X, Y, periods, eps):
    d = X[:, None, :] - Y[None, :, :]
    for ax in range(2):
        if periods[ax] > 0:
            d[..., ax] -= periods[ax] * np.round(d[..., ax] / periods[ax])
    rho = eps * np.sqrt(np.sum(d * d, axis=-1))
    return d, rho


def _factored_np(rho, power, coeffs):
    inside = rho < 1.0
    rc = np.where(inside, rho, 1.0)
    return np.where(inside, (1.0 - rc) ** power * np.polynomial.polynomial.polyval(rc, coeffs), 0.0)


def _value_matrix_np(X, Y, periods, eps, m, q):
    _, rho = _pair_rho_np(X, Y, periods, eps)
    return _factored_np(rho, m, q)


def _laplacian_matrix_np(X, Y, periods, eps, m, q1r, q2):
    _, rho = _pair_rho_np(X, Y, periods, eps)
    return eps * eps * (_factored_np(rho, m - 2, q2) + _factored_np(rho, m - 1, q1r))


def _gradient_matrix_np(X, Y, periods, eps, m, q1r):
    d, rho = _pair_rho_np(X, Y, periods, eps)
    return eps * eps * _factored_np(rho, m - 1, q1r)[..., None] * d


def _prep(X, Y, domain):
    X = np.ascontiguousarray(np.asarray(X, dtype=float).reshape(-1, 2))
    Y = np.ascontiguousarray(np.asarray(Y, dtype=float).reshape(-1, 2))
    return X, Y, np.ascontiguousarray(domain.periods, dtype=float)


def value_matrix(kernel, eps, X, Y, domain):
    """``(psi(eps |x_i - y_j|))_ij`` with the domain's minimal-image metric."""
    m, q, _, _ = get_kernel(kernel).arrays()
    X, Y, per = _prep(X, Y, domain)
    f = _value_matrix_nb if _accel.use_numba() else _value_matrix_np
    return f(X, Y, per, float(eps), m, q)


def laplacian_matrix(kernel, eps, X, Y, domain):
    """``(Laplace phi_j (x_i))_ij``; coincident pairs give ``2 eps^2 psi''(0)``."""
    m, _, q1r, q2 = get_kernel(kernel).arrays()
    X, Y, per = _prep(X, Y, domain)
    f = _laplacian_matrix_nb if _accel.use_numba() else _laplacian_matrix_np
    return f(X, Y, per, float(eps), m, q1r, q2)


def gradient_matrix(kernel, eps, X, Y, domain):
    """``(grad phi_j (x_i))_ij`` with shape ``(len(X), len(Y), 2)``."""
    m, _, q1r, _ = get_kernel(kernel).arrays()
    X, Y, per = _prep(X, Y, domain)
    f = _gradient_matrix_nb if _accel.use_numba() else _gradient_matrix_np
    return f(X, Y, per, float(eps), m, q1r)


def overlap_count(eps, centers, domain):
    """Mean number of other centers inside one support radius ``1/eps``."""
    A = value_matrix(KERNELS["psi31"], eps, centers, centers, domain)
    return float(np.mean(np.count_nonzero(A > 0.0, axis=1) - 1))
