"""Fixed points of flow-kick maps and equilibria of their continuous analogs.

Both are zeros of the desingularized residual ``G(tau, x; lam)``: at
``tau = 0`` it is ``f + r`` and for ``tau > 0`` it is ``(Phi - x) / tau``.
Stability uses ``D_x Phi = I + tau A`` with ``A = D_x G``.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_TOL, DisturbanceParams, as_state, desingularized_residual, flow_kick
from .errors import (FlowKickError, NearBifurcationError, NoFixedPointError,
                     UnsupportedDimensionError)
from .numdiff import DEFAULT_STENCIL, jacobian_x

EPS_HYP = 1e-6

STABLE, UNSTABLE, SADDLE, NONHYPERBOLIC = "stable", "unstable", "saddle", "nonhyperbolic"


@dataclass
class FixedPointRecord:
    x: np.ndarray
    tau: float
    lam: float
    eigenvalues: np.ndarray
    stability: str
    residual_norm: float
    kind: str
    jacobian: np.ndarray = None
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "x": [float(v) for v in self.x],
            "tau": float(self.tau),
            "lambda": float(self.lam),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "stability": self.stability,
            "residual_norm": float(self.residual_norm),
            "kind": self.kind,
        }


def _char_poly(a):
    """Characteristic polynomial coefficients (Faddeev-LeVerrier), leading 1."""
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * eye
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def eigenvalues(a):
    """Eigenvalues of a real ``n x n`` matrix, ``n <= 4``, with multiplicity."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("eigenvalues need a square matrix")
    if n == 1:
        return np.array([complex(a[0, 0])])
    if n == 2:
        p, q, r, s = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
        half_tr = 0.5 * (p + s)
        disc = 0.25 * (p - s) ** 2 + q * r
        if disc >= 0:
            root = np.sqrt(disc)
            big = half_tr + np.copysign(root, half_tr)
            det = p * s - q * r
            small = det / big if big != 0 else half_tr - root
            return np.array([complex(big), complex(small)])
        root = np.sqrt(-disc)
        return np.array([complex(half_tr, root), complex(half_tr, -root)])
    if n <= 4:
        return np.roots(_char_poly(a)).astype(complex)
    raise UnsupportedDimensionError(f"eigenvalues implemented for n <= 4, got n={n}")


def classify_stability(eigs, kind, eps_hyp=EPS_HYP):
    """Stability tag from eigenvalues of ``D_x Phi`` (flow-kick) or ``D[f + r]`` (continuous)."""
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        raise ValueError("need at least one eigenvalue")
    if kind == "flow-kick":
        s = np.abs(eigs) - 1.0
    elif kind == "continuous":
        s = eigs.real
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if np.any(np.abs(s) < eps_hyp):
        return NONHYPERBOLIC
    if np.all(s < 0):
        return STABLE
    if np.all(s > 0):
        return UNSTABLE
    return SADDLE


def residual_jacobian(sys, tau, x, lam, tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL):
    """``(G, A)``: desingularized residual and its state Jacobian from one stencil."""
    a, g = jacobian_x(lambda xs: desingularized_residual(sys, tau, xs, lam, tol, ref=True),
                      as_state(x, sys.n), cfg, return_value=True)
    return g, a


def map_jacobian(tau, a):
    """``D_x Phi = I + tau A``; at ``tau = 0`` the continuous Jacobian ``A`` itself."""
    return a if tau == 0 else np.eye(a.shape[0]) + tau * a


def make_record(sys, tau, x, lam, g, a, iterations=0, eps_hyp=EPS_HYP):
    kind = "continuous" if tau == 0 else "flow-kick"
    jac = map_jacobian(tau, a)
    eigs = eigenvalues(jac)
    return FixedPointRecord(x=np.array(x, dtype=float), tau=float(tau), lam=float(lam),
                            eigenvalues=eigs, stability=classify_stability(eigs, kind, eps_hyp),
                            residual_norm=float(np.linalg.norm(g)), kind=kind, jacobian=jac,
                            iterations=iterations)


def newton_fixed_point(sys, p, x_guess, tol=DEFAULT_TOL, max_iter=50, *, cfg=DEFAULT_STENCIL,
                       integ_tol=DEFAULT_TOL, eps_hyp=EPS_HYP, confine=False):
    """Damped Newton iteration on the desingularized residual.

    ``p.tau = 0`` solves the continuous analog ``f + r = 0``. Steps are halved
    up to 8 times when the residual norm does not decrease. With ``confine``
    the line search also rejects iterates outside ``sys.domain_hint``.

    Raises
    ------
    NoFixedPointError
        No convergence within ``max_iter`` iterations, or eight consecutive
        iterations each reducing the residual by less than 10%.
    NearBifurcationError
        The residual Jacobian is numerically singular.
    """
    tau, lam = float(p.tau), float(p.lam)
    x = as_state(x_guess, sys.n).astype(float)
    try:
        g, a = residual_jacobian(sys, tau, x, lam, integ_tol, cfg)
    except FlowKickError as exc:
        raise NoFixedPointError(f"residual not evaluable at initial guess: {exc}", x) from exc
    res = np.linalg.norm(g)
    slow = 0
    for it in range(max_iter + 1):
        if res <= tol:
            return make_record(sys, tau, x, lam, g, a, iterations=it, eps_hyp=eps_hyp)
        if it == max_iter:
            break
        if not np.all(np.isfinite(a)):
            raise NearBifurcationError("non-finite residual Jacobian", x, res)
        sv = np.linalg.svd(a, compute_uv=False)
        # scaled by max(1, |A|) rather than cond(): a 1x1 stencil-noise value has cond 1
        if sv[-1] <= 1e-9 * max(1.0, sv[0]):
            raise NearBifurcationError("singular residual Jacobian", x, res)
        dx = np.linalg.solve(a, -g)
        step = 1.0
        for _ in range(9):
            trial = x + step * dx
            if confine and not sys.in_domain(trial):
                step *= 0.5
                continue
            try:
                g_trial = desingularized_residual(sys, tau, trial, lam, integ_tol, ref=True)
                res_trial = np.linalg.norm(g_trial)
            except FlowKickError:
                res_trial = np.inf
            if res_trial < res:
                break
            step *= 0.5
        else:
            raise NoFixedPointError("line search failed to reduce the residual", x, res)
        # damped steps that barely reduce |G| mean a positive local minimum, not a root
        slow = slow + 1 if res_trial > 0.9 * res else 0
        if slow >= 8:
            raise NoFixedPointError("residual stagnated above tolerance", trial, res_trial)
        x = trial
        try:
            g, a = residual_jacobian(sys, tau, x, lam, integ_tol, cfg)
        except FlowKickError as exc:
            raise NoFixedPointError(f"residual not evaluable: {exc}", x, res) from exc
        res = np.linalg.norm(g)
    raise NoFixedPointError(f"no convergence in {max_iter} iterations (|G|={res:.3g})", x, res)


@dataclass
class EigenRelationReport:
    discrepancy: float
    map_eigenvalues: np.ndarray
    rate_eigenvalues: np.ndarray
    pairs: list


def _greedy_pairs(u, v):
    left, right, pairs = list(range(len(u))), list(range(len(v))), []
    while left:
        i, j = min(((i, j) for i in left for j in right), key=lambda ij: abs(u[ij[0]] - v[ij[1]]))
        pairs.append((i, j))
        left.remove(i)
        right.remove(j)
    return pairs


def eigenvalue_relation_check(sys, rec, cfg=DEFAULT_STENCIL, tol=DEFAULT_TOL):
    """Compare eigenvalues ``mu`` of ``D_x Phi`` with ``1 + tau * lambda(A)``, ``A = D_x G``.

    The two Jacobians come from separate routes: ``D_x Phi`` differences the
    flow-kick map itself, ``A`` differences the desingularized residual.
    """
    if rec.tau <= 0:
        raise ValueError("the eigenvalue relation concerns flow-kick fixed points (tau > 0)")
    tau, lam = rec.tau, rec.lam
    jac = flow_kick_jacobian(sys, rec.x, DisturbanceParams(tau, lam), cfg, tol)
    a = jacobian_x(lambda xs: desingularized_residual(sys, tau, xs, lam, tol, ref=True),
                   as_state(rec.x, sys.n), cfg)
    mu = eigenvalues(jac)
    rates = eigenvalues(a)
    predicted = 1.0 + tau * rates
    pairs = _greedy_pairs(mu, predicted)
    disc = max(abs(mu[i] - predicted[j]) for i, j in pairs)
    return EigenRelationReport(float(disc), mu, rates, pairs)


def flow_kick_jacobian(sys, x, p, cfg=DEFAULT_STENCIL, tol=DEFAULT_TOL):
    """``D_x Phi`` by differencing the flow-kick map itself."""
    return jacobian_x(lambda xs: flow_kick(sys, xs, p, tol, ref=True), as_state(x, sys.n), cfg)
