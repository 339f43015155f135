"""Systems, flows, flow-kick maps and orbits.

A flow-kick system is an undisturbed vector field ``f`` together with a
disturbance rate ``r(u; lam)``. One cycle flows for time ``tau`` and then
applies the kick ``tau * r``::

    Phi(x) = phi_tau(x) + tau * r(phi_tau(x); lam)

All callables work on arrays of shape ``(n, *batch)`` so that stencils and
multi-start batches go through a single integration.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .integrate import DEFAULT_BOUND, integrate

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SystemDef:
    """Vector field ``f`` and disturbance rate ``r`` of dimension ``n``.

    ``f(x)`` and ``r(u, lam)`` receive states of shape ``(n, *batch)`` and must
    return arrays of the same shape; ``lam`` is a scalar or broadcasts against
    the batch shape. ``domain_hint`` is an optional closed box ``(lo, hi)``.
    ``analytic_flow(x, t)``, when present, is an exact flow oracle.
    ``invariant_sets`` lists ``(point, dirs)`` pairs: a point that is a fixed
    point of every flow-kick map together with columns spanning the tangent
    space of the invariant set through it. Transcritical points are only
    reported at these.
    """

    n: int
    f: callable
    r: callable
    domain_hint: tuple = None
    analytic_flow: callable = None
    name: str = "system"
    state_names: tuple = ()
    invariant_sets: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not self.state_names:
            names = ("x",) if self.n == 1 else tuple(f"x{i + 1}" for i in range(self.n))
            object.__setattr__(self, "state_names", names)
        if self.domain_hint is not None:
            lo, hi = self.domain_hint
            lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.n,)).copy()
            hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.n,)).copy()
            object.__setattr__(self, "domain_hint", (lo, hi))

    def vector_field(self, x, lam):
        """Right-hand side of the continuous analog ``x' = f(x) + r(x; lam)``."""
        x = as_state(x, self.n)
        return self.f(x) + self.r(x, lam)

    def in_domain(self, x):
        if self.domain_hint is None:
            return True
        lo, hi = self.domain_hint
        x = as_state(x, self.n)
        shape = (self.n,) + (1,) * (x.ndim - 1)
        inside = (x >= lo.reshape(shape)) & (x <= hi.reshape(shape))
        return bool(np.all(inside))


@dataclass(frozen=True)
class DisturbanceParams:
    """Flow time ``tau`` between kicks and disturbance parameter ``lam``."""

    tau: float
    lam: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    @classmethod
    def from_kick(cls, tau, kappa):
        """Disturbance coordinates for a constant kick ``kappa`` every ``tau``."""
        if tau <= 0:
            raise ValueError("kick coordinates need tau > 0")
        return cls(tau, kappa / tau)

    @property
    def kappa(self):
        return self.tau * self.lam


@dataclass
class Orbit:
    """Iterates of a flow-kick map.

    ``pre[k]`` is the state just before the k-th kick, ``post[k]`` the state
    right after it (the next iterate). ``dense_t``/``dense_x`` hold sub-samples
    of each flow phase when requested.
    """

    x0: np.ndarray
    params: DisturbanceParams
    pre: np.ndarray
    post: np.ndarray
    exited: bool = False
    dense_t: np.ndarray = None
    dense_x: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.post)

    @property
    def cycles(self):
        return np.arange(1, len(self.post) + 1)


def as_state(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[0] != n:
        raise ValueError(f"expected leading dimension {n}, got shape {x.shape}")
    return x


def flow(sys, x0, t, tol=DEFAULT_TOL, exact=False, *, ref=False, bound=DEFAULT_BOUND):
    """Time-``t`` map of the undisturbed vector field.

    With ``exact=True`` and an analytic flow available, the oracle is used
    instead of numerical integration.
    """
    if t < 0:
        raise ValueError("flow time must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    x0 = as_state(x0, sys.n)
    if t == 0:
        return x0.copy()
    if exact and sys.analytic_flow is not None:
        return np.asarray(sys.analytic_flow(x0, t), dtype=float)
    return integrate(sys.f, x0, t, rtol=tol, atol=tol, ref=ref, bound=bound)


def flow_kick(sys, x, p, tol=DEFAULT_TOL, exact=False, *, ref=False):
    """One flow-kick cycle ``phi_tau(x) + tau * r(phi_tau(x); lam)``."""
    if p.tau <= 0:
        raise ValueError("the flow-kick map needs tau > 0")
    u = flow(sys, x, p.tau, tol, exact, ref=ref)
    return u + p.tau * sys.r(u, p.lam)


def _broadcast_tau(tau, x):
    tau = np.asarray(tau, dtype=float)
    return tau if tau.ndim == 0 else np.broadcast_to(tau, x.shape[1:])


def mean_drift(sys, tau, x, tol=DEFAULT_TOL, *, ref=False):
    """Average velocity ``(phi_tau(x) - x) / tau`` over one flow phase.

    Computed without cancellation by integrating the rescaled displacement
    ``w' = f(x + tau * w)``, ``w(0) = 0`` over unit time, so the result is
    smooth in ``tau`` and equals ``f(x)`` at ``tau = 0``. ``tau`` may be an
    array matching the batch shape of ``x``; negative values flow backwards.
    """
    x = as_state(x, sys.n)
    tau = _broadcast_tau(tau, x)
    if np.all(tau == 0):
        return sys.f(x)

    def rhs(w):
        return sys.f(x + tau * w)

    return integrate(rhs, np.zeros_like(x), 1.0, rtol=tol, atol=tol, ref=ref,
                     bound=DEFAULT_BOUND / max(1.0, float(np.max(np.abs(tau)))))


def residual_from_drift(sys, tau, x, lam, w):
    """Desingularized residual given a precomputed drift ``w``."""
    x = as_state(x, sys.n)
    tau = _broadcast_tau(tau, x)
    return w + sys.r(x + tau * w, lam)


def desingularized_residual(sys, tau, x, lam, tol=DEFAULT_TOL, *, ref=False):
    """``(Phi_tau(x; lam) - x) / tau``, extended to ``f(x) + r(x; lam)`` at ``tau = 0``.

    Zeros are flow-kick fixed points for ``tau > 0`` and equilibria of the
    continuous analog for ``tau = 0``.
    """
    x = as_state(x, sys.n)
    if np.ndim(tau) == 0 and tau == 0:
        return sys.f(x) + sys.r(x, lam)
    w = mean_drift(sys, tau, x, tol, ref=ref)
    return residual_from_drift(sys, tau, x, lam, w)


def iterate_orbit(sys, x0, p, n_cycles, tol=DEFAULT_TOL, *, dense=False, n_dense=32):
    """Iterate the flow-kick map ``n_cycles`` times starting from ``x0``.

    Stops early, with ``exited=True``, once a pre- or post-kick state leaves
    ``sys.domain_hint``. With ``dense=True`` each flow phase is sampled at
    ``n_dense`` equal sub-intervals.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    if p.tau <= 0:
        raise ValueError("orbits need tau > 0")
    x = as_state(x0, sys.n).astype(float)
    pre, post, dts, dxs = [], [], [], []
    exited = False
    t_sub = np.linspace(0.0, p.tau, n_dense + 1)
    for k in range(n_cycles):
        if dense:
            u, samples = integrate(sys.f, x, p.tau, rtol=tol, atol=tol, t_eval=t_sub)
            dts.append(k * p.tau + t_sub)
            dxs.append(samples)
        else:
            u = flow(sys, x, p.tau, tol)
        x_next = u + p.tau * sys.r(u, p.lam)
        pre.append(u)
        post.append(x_next)
        if not (sys.in_domain(u) and sys.in_domain(x_next)):
            exited = True
            break
        x = x_next
    orbit = Orbit(x0=as_state(x0, sys.n), params=p, pre=np.array(pre), post=np.array(post),
                  exited=exited)
    if dense:
        orbit.dense_t = np.concatenate(dts)
        orbit.dense_x = np.concatenate(dxs)
    return orbit


__all__ = [
    "DEFAULT_TOL", "DisturbanceParams", "DivergenceError", "Orbit", "SystemDef", "as_state",
    "desingularized_residual", "flow", "flow_kick", "iterate_orbit", "mean_drift",
    "residual_from_drift",
]
