"""Flow maps: discrete maps and fixed-step RK4 flows with variational Jacobians."""
import math
import warnings

import numpy as np

from .domain import cylinder, torus
from .errors import CoherentRBFError, IntegrationError

STD_MAP_A = 0.971635


# ---------------------------------------------------------------------------
# integrators

def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state during integration at t={t:g}")


def rk4_flow(field, x, t_start, t_end, steps, domain=None):
    """Classical RK4 approximation of the flow map from ``t_start`` to ``t_end``.

    ``field(points, t)`` must accept an ``(N, 2)`` array.  A negative time
    step is used when ``t_end < t_start``.  Periodic coordinates are wrapped
    after every step when ``domain`` is given.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p = np.array(x, dtype=float, copy=True)
    h = (t_end - t_start) / steps
    for n in range(steps):
        t = t_start + n * h
        k1 = field(p, t)
        k2 = field(p + 0.5 * h * k1, t + 0.5 * h)
        k3 = field(p + 0.5 * h * k2, t + 0.5 * h)
        k4 = field(p + h * k3, t + h)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(p, t + h)
        if domain is not None:
            p = domain.wrap(p)
    return p


def rk4_variational(field, jacobian, x, t_start, t_end, steps, domain=None, adjoint=False):
    """Integrate the state together with a 2x2 matrix along the trajectory.

    By default ``dB/dt = DF(x, t) B``, so ``B`` approximates
    ``D_x Phi(x, t_start, t_end)``.  With ``adjoint=True`` the matrix obeys
    ``dB/dt = -B DF(x, t)`` and approximates ``D_z Phi(z, t_end, t_start)`` at
    the end point ``z``, the Jacobian of the way back, computed on the
    forward trajectory.  Returns ``(x_end, B)``.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p = np.array(x, dtype=float, copy=True)
    B = np.broadcast_to(np.eye(2), p.shape[:-1] + (2, 2)).copy()
    h = (t_end - t_start) / steps

    def rhs(p, B, t):
        if adjoint:
            return field(p, t), -(B @ jacobian(p, t))
        return field(p, t), jacobian(p, t) @ B

    for n in range(steps):
        t = t_start + n * h
        a1, b1 = rhs(p, B, t)
        a2, b2 = rhs(p + 0.5 * h * a1, B + 0.5 * h * b1, t + 0.5 * h)
        a3, b3 = rhs(p + 0.5 * h * a2, B + 0.5 * h * b2, t + 0.5 * h)
        a4, b4 = rhs(p + h * a3, B + h * b3, t + h)
        p = p + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        B = B + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        _check_finite(p, t + h)
        _check_finite(B, t + h)
        if domain is not None:
            p = domain.wrap(p)
    return p, B


def fd_jacobian(field, h=1e-6):
    """Central-difference Jacobian of a vector field, for fields without one."""

    def jac(p, t):
        J = np.empty(p.shape[:-1] + (2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            J[..., :, k] = (field(p + e, t) - field(p - e, t)) / (2.0 * h)
        return J

    return jac


def _gram_inverse(B):
    C_inv = B @ np.swapaxes(B, -1, -2)
    C_inv = 0.5 * (C_inv + np.swapaxes(C_inv, -1, -2))
    cond = np.linalg.cond(C_inv)
    if np.any(cond > 1e12):
        warnings.warn(
            f"inverse Cauchy-Green tensor nearly singular (max condition {np.max(cond):.3g})",
            RuntimeWarning,
            stacklevel=3,
        )
    return C_inv


# ---------------------------------------------------------------------------
# systems

class FlowSystem:
    """Common interface: ``forward`` is Phi(., t0, t), ``backward`` is Phi(., t, t0)."""

    name = "flow"
    kind = "ode-flow"

    def __init__(self, domain, t0, tf):
        self.domain = domain
        self.t0 = t0
        self.tf = tf

    def forward(self, points, t=None):
        raise NotImplementedError

    def backward(self, points, t=None):
        raise NotImplementedError

    def cauchy_green_inverse(self, points, t=None):
        raise NotImplementedError

    def default_times(self):
        return [self.t0, self.tf]


class DiscreteMap(FlowSystem):
    """A map ``T`` iterated ``iterates`` times; time is the iterate count."""

    kind = "discrete-map"

    def __init__(self, forward_map, inverse_map, iterates, domain,
                 inverse_jacobian=None, name="map"):
        super().__init__(domain, 0, int(iterates))
        if self.tf < 1:
            raise ValueError("iterates must be >= 1")
        self._T = forward_map
        self._Tinv = inverse_map
        self._DTinv = inverse_jacobian
        self.name = name

    @property
    def iterates(self):
        return self.tf

    def _n(self, t):
        n = self.tf if t is None else t
        if int(n) != n or n < 0:
            raise ValueError(f"discrete time must be a non-negative integer, got {n}")
        return int(n)

    def forward(self, points, t=None):
        p = np.asarray(points, dtype=float)
        for _ in range(self._n(t)):
            p = self.domain.wrap(self._T(p))
        return p

    def backward(self, points, t=None):
        if self._Tinv is None:
            raise CoherentRBFError(f"{self.name}: no inverse map available for backward mapping")
        p = np.asarray(points, dtype=float)
        for _ in range(self._n(t)):
            p = self.domain.wrap(self._Tinv(p))
        return p

    def cauchy_green_inverse(self, points, t=None):
        if self._Tinv is None or self._DTinv is None:
            raise CoherentRBFError(f"{self.name}: inverse Jacobian required for Cauchy-Green tensors")
        z = self.forward(points, t)
        B = np.broadcast_to(np.eye(2), z.shape[:-1] + (2, 2)).copy()
        for _ in range(self._n(t)):
            B = self._DTinv(z) @ B
            z = self.domain.wrap(self._Tinv(z))
        return _gram_inverse(B)


class ODEFlow(FlowSystem):
    """Flow of ``x' = F(x, t)`` approximated with fixed-step RK4.

    ``steps`` is the step count for the full interval ``[t0, tf]``; shorter
    intervals use a proportional count.  Defaults to 10 steps per time unit.
    """

    def __init__(self, field, t0, tf, domain, steps=None, jacobian=None, name="ode",
                 cg_method="adjoint"):
        super().__init__(domain, float(t0), float(tf))
        if cg_method not in ("adjoint", "backward"):
            raise ValueError(f"unknown cg_method {cg_method!r}")
        self.cg_method = cg_method
        if tf == t0:
            raise ValueError("flow interval must have positive length")
        self.field = field
        self.jacobian = jacobian if jacobian is not None else fd_jacobian(field)
        self.steps = int(steps) if steps is not None else default_rk4_steps(t0, tf)
        self.name = name

    def _steps_to(self, t):
        frac = abs(t - self.t0) / abs(self.tf - self.t0)
        return max(1, int(round(self.steps * frac)))

    def forward(self, points, t=None):
        t = self.tf if t is None else t
        if t == self.t0:
            return np.array(points, dtype=float)
        return rk4_flow(self.field, points, self.t0, t, self._steps_to(t), self.domain)

    def backward(self, points, t=None):
        t = self.tf if t is None else t
        if t == self.t0:
            return np.array(points, dtype=float)
        return rk4_flow(self.field, points, t, self.t0, self._steps_to(t), self.domain)

    def cauchy_green_inverse(self, points, t=None):
        """``C^{-1} = B B^T`` with ``B = D Phi(z, t, t0)`` at ``z = Phi(x, t0, t)``.

        ``B`` solves the variational equation of the way back along the
        forward trajectory.  ``cg_method="backward"`` instead integrates the
        augmented state/Jacobian system backward from the forward image; that
        re-computes the trajectory backward and is only reliable where the
        backward flow is not strongly unstable (it fails on invariant
        boundaries with strong normal stretching).
        """
        t = self.tf if t is None else t
        pts = np.asarray(points, dtype=float)
        if t == self.t0:
            return np.broadcast_to(np.eye(2), pts.shape[:-1] + (2, 2)).copy()
        n = self._steps_to(t)
        if self.cg_method == "backward":
            z = rk4_flow(self.field, pts, self.t0, t, n, self.domain)
            _, B = rk4_variational(self.field, self.jacobian, z, t, self.t0, n, self.domain)
        else:
            _, B = rk4_variational(self.field, self.jacobian, pts, self.t0, t, n, self.domain,
                                   adjoint=True)
        return _gram_inverse(B)


def default_rk4_steps(t0, tf):
    """400 steps for an interval of length 40, scaled linearly."""
    return max(1, int(math.ceil(10.0 * abs(tf - t0) - 1e-9)))


# ---------------------------------------------------------------------------
# standard map

def std_map_forward(a, p):
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    s = a * np.sin(x)
    two_pi = 2.0 * np.pi
    return np.stack([np.mod(x + y + s, two_pi), np.mod(y + s, two_pi)], axis=-1)


def std_map_backward(a, p):
    p = np.asarray(p, dtype=float)
    X, Y = p[..., 0], p[..., 1]
    two_pi = 2.0 * np.pi
    x = np.mod(X - Y, two_pi)
    return np.stack([x, np.mod(Y - a * np.sin(x), two_pi)], axis=-1)


def std_map_forward_jacobian(a, p):
    x = np.asarray(p, dtype=float)[..., 0]
    c = a * np.cos(x)
    J = np.empty(x.shape + (2, 2))
    J[..., 0, 0] = 1.0 + c
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = c
    J[..., 1, 1] = 1.0
    return J


def std_map_backward_jacobian(a, p):
    """Jacobian of the inverse map evaluated at the image point ``p``."""
    p = np.asarray(p, dtype=float)
    c = a * np.cos(p[..., 0] - p[..., 1])
    J = np.empty(c.shape + (2, 2))
    J[..., 0, 0] = 1.0
    J[..., 0, 1] = -1.0
    J[..., 1, 0] = -c
    J[..., 1, 1] = 1.0 + c
    return J


class StandardMap(DiscreteMap):
    name = "standard_map"

    def __init__(self, a=STD_MAP_A, iterates=2):
        self.a = float(a)
        super().__init__(
            lambda p: std_map_forward(self.a, p),
            lambda p: std_map_backward(self.a, p),
            iterates,
            torus(),
            inverse_jacobian=lambda p: std_map_backward_jacobian(self.a, p),
            name="standard_map",
        )

    def forward_jacobian(self, points, t=None):
        z = np.asarray(points, dtype=float)
        J = np.broadcast_to(np.eye(2), z.shape[:-1] + (2, 2)).copy()
        for _ in range(self._n(t)):
            J = std_map_forward_jacobian(self.a, z) @ J
            z = std_map_forward(self.a, z)
        return J


# ---------------------------------------------------------------------------
# cylinder flow

CYL_C = 0.5
CYL_NU = 0.25
CYL_FORCING = 0.25


def _amplitude(t):
    return 1.0 + 0.125 * np.sin(2.0 * np.sqrt(5.0) * t)


def _sin_cos_y(y):
    """``sin y, cos y`` with ``sin`` exactly 0 at ``y = 0`` and at ``y = fl(pi)``.

    Plain ``np.sin(np.pi)`` is 1.2e-16; the walls are invariant lines with
    normal stretching of order 1e16 over [0, 40], and that residue would seed
    a spurious O(1) entry in the variational Jacobian on the upper wall.
    """
    top = y > 0.5 * np.pi
    u = np.where(top, np.pi - y, y)
    cu = np.cos(u)
    return np.sin(u), np.where(top, -cu, cu)


def cylinder_field(p, t, c=CYL_C, nu=CYL_NU, forcing=CYL_FORCING):
    x, y = p[..., 0], p[..., 1]
    A = _amplitude(t)
    s, co = np.sin(x - nu * t), np.cos(x - nu * t)
    sy, cy = _sin_cos_y(y)
    g = s * sy + 0.5 * y - 0.25 * np.pi
    G = 1.0 / (g * g + 1.0) ** 2
    return np.stack(
        [c - A * s * cy + forcing * G * np.sin(0.5 * t), A * co * sy], axis=-1
    )


def cylinder_jacobian(p, t, c=CYL_C, nu=CYL_NU, forcing=CYL_FORCING):
    x, y = p[..., 0], p[..., 1]
    A = _amplitude(t)
    s, co = np.sin(x - nu * t), np.cos(x - nu * t)
    sy, cy = _sin_cos_y(y)
    g = s * sy + 0.5 * y - 0.25 * np.pi
    dG = -4.0 * g / (g * g + 1.0) ** 3
    f = forcing * dG * np.sin(0.5 * t)
    J = np.empty(x.shape + (2, 2))
    J[..., 0, 0] = -A * co * cy + f * co * sy
    J[..., 0, 1] = A * s * sy + f * (s * cy + 0.5)
    J[..., 1, 0] = -A * s * sy
    J[..., 1, 1] = A * co * cy
    return J


class CylinderFlow(ODEFlow):
    """The forced travelling-wave flow on ``S^1 x [0, pi]``."""

    def __init__(self, t0=0.0, tf=40.0, steps=None, forcing=CYL_FORCING, cg_method="adjoint"):
        self.forcing = forcing
        super().__init__(
            lambda p, t: cylinder_field(p, t, forcing=self.forcing),
            t0, tf, cylinder(), steps=steps,
            jacobian=lambda p, t: cylinder_jacobian(p, t, forcing=self.forcing),
            name="cylinder_flow", cg_method=cg_method,
        )


SYSTEMS = {
    "standard_map": "T(x,y) = (x + y + a sin x, y + a sin x) mod 2pi on the torus; "
                    "parameters a (default 0.971635), iterates (default 2)",
    "cylinder_flow": "forced travelling-wave flow on S^1 x [0,pi] (c=0.5, nu=0.25, forcing 0.25); "
                     "parameters t0, tf (default 0, 40), rk4_steps (default 10 per time unit)",
}


def make_system(name, **params):
    if name == "standard_map":
        return StandardMap(a=params.get("a", STD_MAP_A), iterates=params.get("iterates", 2))
    if name == "cylinder_flow":
        return CylinderFlow(
            t0=params.get("t0", 0.0), tf=params.get("tf", 40.0), steps=params.get("rk4_steps")
        )
    raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}")


def identity_map(domain):
    ident = lambda p: np.array(p, dtype=float)
    eye = lambda p: np.broadcast_to(np.eye(2), np.shape(p)[:-1] + (2, 2)).copy()
    return DiscreteMap(ident, ident, 1, domain, inverse_jacobian=eye, name="identity")


def translation_map(domain, shift):
    shift = np.asarray(shift, dtype=float)
    eye = lambda p: np.broadcast_to(np.eye(2), np.shape(p)[:-1] + (2, 2)).copy()
    return DiscreteMap(lambda p: p + shift, lambda p: p - shift, 1, domain,
                       inverse_jacobian=eye, name="translation")
