"""Pseudo-arclength continuation of fixed points and bifurcation curves.

Every system solved here is written in terms of the desingularized residual
``G(tau, x; lam)``, so ``tau = 0`` is an ordinary point: branches can start
at equilibria of the continuous analog and bifurcation curves in the
``(tau, lam)`` plane end exactly at the continuous bifurcation.

Test functions, with ``A = D_x G`` and ``D_x Phi = I + tau A``:

* fold / transcritical: ``det A`` (same sign as ``det(D_x Phi - I)`` for ``tau > 0``)
* Neimark-Sacker / Hopf (n = 2): ``tr A + tau det A`` = ``(det D_x Phi - 1) / tau``,
  only while the eigenvalues are a complex pair
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import (DEFAULT_TOL, DisturbanceParams, as_state, desingularized_residual,
                       mean_drift, residual_from_drift)
from .equilibria import eigenvalues, make_record, newton_fixed_point
from .errors import FlowKickError
from .numdiff import (DEFAULT_STENCIL, deriv_lambda, hessian_x, jacobian_x,
                      mixed_partial_x_lambda)

REFINE_TOL = 1e-10


@dataclass(frozen=True)
class StepControl:
    ds0: float = 1e-2
    ds_min: float = 1e-5
    ds_max: float = 0.1
    max_points: int = 2000
    newton_tol: float = 1e-10
    max_newton: int = 8


@dataclass
class BifurcationPoint:
    btype: str
    x: np.ndarray
    tau: float
    lam: float
    test_values: dict = field(default_factory=dict)
    confidence: str = "high"
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        tv = {k: (float(v) if np.isscalar(v) else np.asarray(v, dtype=float).tolist())
              for k, v in self.test_values.items()}
        return {"type": self.btype, "x": [float(v) for v in self.x], "tau": float(self.tau),
                "lambda": float(self.lam), "test_values": tv, "confidence": self.confidence,
                **({"flags": self.meta["flags"]} if self.meta.get("flags") else {})}


@dataclass
class Branch:
    free_param: str
    fixed_other: float
    points: list
    events: list = field(default_factory=list)
    termination: str = "range-end"
    arclength: np.ndarray = None

    def params(self):
        key = "tau" if self.free_param == "tau" else "lam"
        return np.array([getattr(p, key) for p in self.points])

    def states(self):
        return np.array([p.x for p in self.points])


@dataclass
class Curve:
    """Ordered points of a two-parameter bifurcation curve."""

    btype: str
    points: list
    termination: str = "range-end"

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def taus(self):
        return np.array([p.tau for p in self.points])

    def lams(self):
        return np.array([p.lam for p in self.points])


# ---------------------------------------------------------------------------
# generic engine


class _Corrector:
    def __init__(self, fn, step, cfg):
        self.fn, self.step, self.cfg = fn, step, cfg

    def jac(self, u):
        d, h = jacobian_x(self.fn, u, self.cfg, return_value=True)
        return d, h

    def solve(self, u_pred, normal, target):
        """Newton on ``fn(u) = 0`` with the linear constraint ``normal . u = target``."""
        u = np.array(u_pred, dtype=float)
        tol = self.step.newton_tol
        try:
            for it in range(self.step.max_newton + 1):
                d, h = self.jac(u)
                c = normal @ u - target
                if not np.all(np.isfinite(h)) or not np.all(np.isfinite(d)):
                    return None
                if np.linalg.norm(h) <= tol and abs(c) <= tol * (1 + abs(target)):
                    return u, d, it
                if it == self.step.max_newton:
                    return None
                m = np.vstack([d, normal])
                du = np.linalg.solve(m, -np.append(h, c))
                u = u + du
        except (FlowKickError, np.linalg.LinAlgError):
            return None
        return None


def _tangent(d, previous):
    m = np.vstack([d, previous])
    rhs = np.zeros(m.shape[0])
    rhs[-1] = 1.0
    t = np.linalg.solve(m, rhs)
    return t / np.linalg.norm(t)


def _null_tangent(d):
    _, _, vt = np.linalg.svd(d)
    return vt[-1]


def _pseudo_arclength(fn, u0, direction, step, cfg, check):
    """Trace the solution curve of ``fn(u) = 0`` through ``u0``.

    ``direction`` orients the initial tangent (``t . direction > 0``).
    ``check(u_prev, u_new)`` returns ``None`` to continue, or a tuple
    ``(tag, u_end)`` to stop; ``u_end`` (or ``None``) is appended last.
    Returns ``(us, ds_list, tangents, termination)``.
    """
    corr = _Corrector(fn, step, cfg)
    start = corr.solve(u0, np.zeros_like(u0), 0.0)
    if start is None:
        # the seed must already be on the curve; retry with a fixed last coordinate
        e = np.zeros_like(u0)
        e[-1] = 1.0
        start = corr.solve(u0, e, u0[-1])
        if start is None:
            raise FlowKickError("continuation seed does not converge")
    u, d, _ = start
    t = _null_tangent(d)
    if t @ direction < 0:
        t = -t
    us, tangents, arc = [u], [t], [0.0]
    ds = step.ds0
    secant = t
    termination = "max-points"
    while len(us) < step.max_points:
        u_pred = u + ds * secant
        res = corr.solve(u_pred, secant, secant @ u_pred)
        ok = res is not None
        if ok:
            u_new, d_new, iters = res
            try:
                t_new = _tangent(d_new, t)
            except np.linalg.LinAlgError:
                ok = False
            else:
                dist = np.linalg.norm(u_new - u)
                ok = t_new @ t > 0.8 and dist < 2.5 * ds
        if not ok:
            ds *= 0.5
            if ds < step.ds_min:
                termination = "divergence"
                break
            continue
        stop = check(u, u_new)
        if stop is not None:
            tag, u_end = stop
            if u_end is not None:
                us.append(u_end)
                tangents.append(t_new)
                arc.append(arc[-1] + np.linalg.norm(u_end - u))
            termination = tag
            break
        secant = (u_new - u) / np.linalg.norm(u_new - u)
        arc.append(arc[-1] + np.linalg.norm(u_new - u))
        u, t = u_new, t_new
        us.append(u)
        tangents.append(t)
        if iters <= 3:
            ds = min(2.0 * ds, step.ds_max)
    return us, tangents, np.array(arc), termination


def _clip_to_bound(fn, u_in, u_out, k, bound, step, cfg):
    """Solution point with coordinate ``k`` equal to ``bound`` between two curve points."""
    s = (bound - u_in[k]) / (u_out[k] - u_in[k])
    guess = u_in + s * (u_out - u_in)
    e = np.zeros_like(u_in)
    e[k] = 1.0
    res = _Corrector(fn, step, cfg).solve(guess, e, bound)
    return None if res is None else res[0]


# ---------------------------------------------------------------------------
# fixed-point branches


class _BranchProblem:
    """Unknowns ``u = (x, p)`` with ``p`` the free parameter."""

    def __init__(self, sys, free, fixed, tol, cfg):
        if free not in ("tau", "lambda"):
            raise ValueError("free parameter must be 'tau' or 'lambda'")
        self.sys, self.free, self.fixed, self.tol, self.cfg = sys, free, fixed, tol, cfg

    def unpack(self, u):
        x, p = u[:-1], u[-1]
        return (p, x, self.fixed) if self.free == "tau" else (self.fixed, x, p)

    def __call__(self, u):
        tau, x, lam = self.unpack(u)
        return desingularized_residual(self.sys, tau, x, lam, self.tol, ref=True)


def _window_check(bounds, fn, step, cfg, sys=None, n=None, domain_tol=1e-9):
    def check(u_prev, u_new):
        for k, (lo, hi) in bounds.items():
            for b in (lo, hi):
                if b is None:
                    continue
                outside = u_new[k] < b if b == lo else u_new[k] > b
                if outside:
                    u_end = _clip_to_bound(fn, u_prev, u_new, k, b, step, cfg)
                    return ("range-end", u_end)
        if sys is not None and sys.domain_hint is not None:
            lo, hi = sys.domain_hint
            x = u_new[:n]
            if np.any(x < lo - domain_tol) or np.any(x > hi + domain_tol):
                return ("domain-exit", u_new)
        return None
    return check


def continue_branch(sys, seed, free, window, step=StepControl(), *, direction=1,
                    tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL, detect=True):
    """Continue the fixed point ``seed`` in the free parameter ``free`` over ``window``.

    Folds in the free parameter are passed by arclength parametrization.
    ``direction`` picks the initial sense of the free parameter. The branch
    ends when the parameter leaves ``window`` (the boundary point itself is
    included), when a state leaves ``sys.domain_hint``, or when the corrector
    fails at the minimum step.
    """
    lo, hi = window
    if not lo < hi:
        raise ValueError("empty continuation window")
    fixed = seed.lam if free == "tau" else seed.tau
    p0 = seed.tau if free == "tau" else seed.lam
    if not lo <= p0 <= hi:
        raise ValueError("seed lies outside the continuation window")
    prob = _BranchProblem(sys, free, fixed, tol, cfg)
    n = sys.n
    u0 = np.append(as_state(seed.x, n), p0)
    orient = np.zeros(n + 1)
    orient[-1] = direction
    bounds = {n: (lo, hi)}
    check = _window_check(bounds, prob, step, cfg, sys, n)
    us, tangents, arc, term = _pseudo_arclength(prob, u0, orient, step, cfg, check)
    points = []
    for u, t in zip(us, tangents):
        d, g = jacobian_x(prob, u, cfg, return_value=True)
        tau, x, lam = prob.unpack(u)
        rec = make_record(sys, float(tau), x, float(lam), g, d[:, :n])
        rec.meta["rate_jacobian"] = d[:, :n]
        rec.meta["tangent_p"] = float(t[-1])
        points.append(rec)
    if free == "tau":
        _drop_negative_tau(points)
    branch = Branch(free_param=free, fixed_other=float(fixed), points=points, termination=term,
                    arclength=arc[:len(points)])
    branch.meta = {"problem": prob, "us": us, "tangents": tangents, "step": step}
    if detect and len(points) >= 2:
        branch.events = detect_bifurcations(sys, branch)
    return branch


def _drop_negative_tau(points):
    # guard against round-off below tau = 0 on clipped endpoints
    for p in points:
        if -1e-12 < p.tau < 0:
            p.tau = 0.0


# ---------------------------------------------------------------------------
# test functions and event refinement


def _rate_matrix(rec):
    a = rec.meta.get("rate_jacobian")
    if a is None:
        n = rec.jacobian.shape[0]
        a = rec.jacobian if rec.tau == 0 else (rec.jacobian - np.eye(n)) / rec.tau
    return a


def fold_test(a):
    return float(np.linalg.det(a))


def ns_test(a, tau):
    """``(det(I + tau A) - 1) / tau`` for 2x2 ``A``, or ``nan`` if the spectrum is real."""
    if a.shape != (2, 2):
        return np.nan
    tr, det = np.trace(a), np.linalg.det(a)
    if tr * tr - 4 * det >= 0:
        return np.nan
    return float(tr + tau * det)


def _null_vectors(m):
    u, s, vt = np.linalg.svd(m)
    v, w = vt[-1], u[:, -1]
    if v @ w < 0:
        w = -w
    return v, w


def fold_diagnostics(sys, x, tau, lam, cfg=DEFAULT_STENCIL, tol=DEFAULT_TOL, btype="SN"):
    """Nonhyperbolicity, transversality and quadratic-dominance values at a fold/TC point.

    Map-sense values (derivatives of ``Phi``) for ``tau > 0``; vector-field
    values (derivatives of ``f + r``) at ``tau = 0``. For ``n > 1`` the
    derivatives are projected with the right/left null vectors ``v``, ``w``
    of ``D_x Phi - I``.
    """
    x = as_state(x, sys.n)
    n = sys.n
    if tau == 0:
        def fam(xs, lams):
            return sys.f(xs) + sys.r(xs, lams)
    else:
        def fam(xs, lams):
            return xs + tau * desingularized_residual(sys, tau, xs, lams, tol, ref=True)

    jac = jacobian_x(lambda xs: fam(xs, lam), x, cfg)
    shifted = jac if tau == 0 else jac - np.eye(n)
    v, w = _null_vectors(shifted)
    eigs = eigenvalues(jac)
    target = 0.0 if tau == 0 else 1.0
    d_lam = deriv_lambda(fam, x, lam, cfg)
    hess = hessian_x(lambda xs: fam(xs, lam), x, cfg)
    quad = float(w @ np.einsum("ijk,j,k->i", hess, v, v))
    out = {
        "psi_sn": float(np.linalg.det(shifted)),
        "nonhyperbolicity": float(np.min(np.abs(eigs - target))),
        "transversality": float(w @ d_lam),
        "quadratic_dominance": quad,
        "dphi_dlambda_norm": float(np.linalg.norm(d_lam)),
    }
    if btype == "TC":
        mixed = mixed_partial_x_lambda(fam, x, lam, cfg)
        out["mixed_partial"] = float(w @ mixed @ v)
        out["mixed_partial_matrix"] = mixed
    return out


def ns_diagnostics(sys, x, tau, lam, cfg=DEFAULT_STENCIL, tol=DEFAULT_TOL):
    a, _ = _rate_at(sys, tau, x, lam, tol, cfg)
    jac = a if tau == 0 else np.eye(sys.n) + tau * a
    eigs = eigenvalues(jac)
    if tau == 0:
        resid = float(np.max(np.abs(eigs.real)))
    else:
        resid = float(np.max(np.abs(np.abs(eigs) - 1.0)))
    return {
        "psi_ns": float(np.linalg.det(jac) - 1.0) if tau > 0 else float(np.trace(a)),
        "modulus_residual": resid,
        "angle": float(abs(np.angle(eigs[0]))) if tau > 0 else float(abs(eigs[0].imag)),
        "imag_part": float(abs(eigs[0].imag)),
    }


def _rate_at(sys, tau, x, lam, tol, cfg):
    d, g = jacobian_x(lambda xs: desingularized_residual(sys, tau, xs, lam, tol, ref=True),
                      as_state(x, sys.n), cfg, return_value=True)
    return d, g


def _refine(prob, u_a, u_b, fa, fb, test, step, cfg, max_iter=80):
    """Illinois regula falsi on arclength for a sign change of ``test`` between curve points."""
    direction = (u_b - u_a) / np.linalg.norm(u_b - u_a)
    length = np.linalg.norm(u_b - u_a)
    corr = _Corrector(prob, step, cfg)
    sa, sb = 0.0, length
    best = (u_a, fa) if abs(fa) < abs(fb) else (u_b, fb)
    side = 0
    for _ in range(max_iter):
        s = sb - fb * (sb - sa) / (fb - fa) if fb != fa else 0.5 * (sa + sb)
        if not sa < s < sb:
            s = 0.5 * (sa + sb)
        res = corr.solve(u_a + s * direction, direction, direction @ u_a + s)
        if res is None:
            return best[0], best[1], False
        u, d, _ = res
        fs = test(u, d)
        if not np.isfinite(fs):
            return best[0], best[1], False
        if abs(fs) < abs(best[1]):
            best = (u, fs)
        if abs(fs) < REFINE_TOL or sb - sa < 1e-15:
            return u, fs, abs(fs) < 1e-8
        if np.sign(fs) == np.sign(fa):
            sa, fa = s, fs
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            sb, fb = s, fs
            if side == 1:
                fa *= 0.5
            side = 1
    return best[0], best[1], abs(best[1]) < 1e-8


def detect_bifurcations(sys, branch, cfg=DEFAULT_STENCIL, tol=DEFAULT_TOL):
    """Locate folds (SN), crossings (TC) and Neimark-Sacker/Hopf points along ``branch``.

    Sign changes of the test functions between consecutive points are refined
    by regula falsi on arclength; each located point carries the
    nonhyperbolicity, transversality, quadratic dominance (and, for TC, mixed
    partial) values. A fold in the free parameter is reported as SN, a
    crossing without a fold as TC.
    """
    pts = branch.points
    if len(pts) < 2:
        raise ValueError("need at least two branch points")
    prob = branch.meta["problem"] if hasattr(branch, "meta") else _BranchProblem(
        sys, branch.free_param, branch.fixed_other, tol, cfg)
    us = branch.meta["us"] if hasattr(branch, "meta") else [
        np.append(p.x, p.tau if branch.free_param == "tau" else p.lam) for p in pts]
    step = branch.meta.get("step", StepControl()) if hasattr(branch, "meta") else StepControl()
    n = sys.n

    def fold_fn(u, d):
        return fold_test(d[:, :n])

    def ns_fn(u, d):
        tau, _, _ = prob.unpack(u)
        return ns_test(d[:, :n], tau)

    events, unclassified = [], []
    folds = [fold_test(_rate_matrix(p)) for p in pts]
    nss = [ns_test(_rate_matrix(p), p.tau) for p in pts]
    for k in range(1, len(pts)):
        a, b = pts[k - 1], pts[k]
        if np.sign(folds[k - 1]) * np.sign(folds[k]) < 0:
            ta, tb = a.meta.get("tangent_p"), b.meta.get("tangent_p")
            if ta is not None and tb is not None and np.sign(ta) != np.sign(tb):
                u, val, good = _refine(prob, us[k - 1], us[k], folds[k - 1], folds[k], fold_fn,
                                       step, cfg)
                tau, x, lam = prob.unpack(u)
                tv = fold_diagnostics(sys, x, float(tau), float(lam), cfg, tol, "SN")
                tv["psi_desingularized"] = float(val)
                events.append(BifurcationPoint("SN", np.array(x), float(tau), float(lam), tv,
                                               "high" if good else "low",
                                               {"bracket": (k - 1, k)}))
            else:
                tc = _tc_on_branch(sys, prob, a, b, cfg, tol)
                if tc is None:
                    unclassified.append((k - 1, k))
                else:
                    tc.meta["bracket"] = (k - 1, k)
                    events.append(tc)
        if np.isfinite(nss[k - 1]) and np.isfinite(nss[k]) and nss[k - 1] * nss[k] < 0:
            u, val, good = _refine(prob, us[k - 1], us[k], nss[k - 1], nss[k], ns_fn, step, cfg)
            tau, x, lam = prob.unpack(u)
            tv = ns_diagnostics(sys, x, float(tau), float(lam), cfg, tol)
            tv["psi_desingularized"] = float(val)
            events.append(BifurcationPoint("Hopf" if tau == 0 else "NS", np.array(x), float(tau),
                                           float(lam), tv, "high" if good else "low",
                                           {"bracket": (k - 1, k)}))
    if hasattr(branch, "meta"):
        branch.meta["unclassified_crossings"] = unclassified
    return events


# ---------------------------------------------------------------------------
# two-parameter curves


class _CurveProblem:
    """Unknowns ``u = (x, tau, lam)``; equations ``G = 0`` plus one test function."""

    def __init__(self, sys, kind, tol, cfg):
        self.sys, self.kind, self.tol, self.cfg = sys, kind, tol, cfg

    def __call__(self, u):
        n = self.sys.n
        x, tau, lam = u[:n], u[n], u[n + 1]

        def g(xs):
            return desingularized_residual(self.sys, tau, xs, lam, self.tol, ref=True)

        a, val = jacobian_x(g, x, self.cfg, return_value=True)
        if n == 1:
            det = a[0, 0]
        elif n == 2:
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        else:
            det = np.linalg.det(np.moveaxis(a, (0, 1), (-2, -1)))
        if self.kind == "SN":
            extra = det
        else:
            extra = a[0, 0] + a[1, 1] + tau * det
        return np.concatenate([val, np.asarray(extra)[None]], axis=0)

    def unpack(self, u):
        n = self.sys.n
        return float(u[n]), u[:n].copy(), float(u[n + 1])


def _curve(sys, kind, seed, window, step, direction, tol, cfg, guard=None, both=True):
    (tau_lo, tau_hi), (lam_lo, lam_hi) = window
    prob = _CurveProblem(sys, kind, tol, cfg)
    n = sys.n
    u0 = np.concatenate([as_state(seed.x, n), [seed.tau, seed.lam]])
    bounds = {n: (tau_lo, tau_hi), n + 1: (lam_lo, lam_hi)}
    base = _window_check(bounds, prob, step, cfg)

    def check(u_prev, u_new):
        stop = base(u_prev, u_new)
        if stop is not None:
            return stop
        if guard is not None and not guard(u_new):
            return ("resonance", None)
        return None

    orient = np.zeros(n + 2)
    orient[n] = direction
    fwd, _, _, term_f = _pseudo_arclength(prob, u0, orient, step, cfg, check)
    if not both:
        return prob, fwd, term_f, None
    bwd, _, _, term_b = _pseudo_arclength(prob, u0, -orient, step, cfg, check)
    us = []
    for u in bwd[::-1] + fwd[1:]:
        if not us or np.linalg.norm(u - us[-1]) > 1e-10:
            us.append(u)
    return prob, us, term_f, term_b


def continue_sn_curve(sys, seed_sn, window, step=StepControl(), *, direction=1,
                      tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL, both=True):
    """Saddle-node curve in ``(tau, lam)`` through ``seed_sn``.

    Solves ``G = 0``, ``det D_x G = 0`` for ``(x, tau, lam)``; at ``tau = 0``
    these are the continuous saddle-node conditions, so the curve ends exactly
    at the continuous bifurcation. ``window = ((tau_lo, tau_hi), (lam_lo, lam_hi))``.
    Points are ordered by increasing ``tau`` near the seed when ``direction=1``.
    """
    prob, us, term_f, term_b = _curve(sys, "SN", seed_sn, window, step, direction, tol, cfg,
                                      both=both)
    pts = []
    for u in us:
        tau, x, lam = prob.unpack(u)
        tau = 0.0 if abs(tau) < 1e-13 else tau
        tv = fold_diagnostics(sys, x, tau, lam, cfg, tol, "SN")
        pts.append(BifurcationPoint("SN", x, tau, lam, tv))
    curve = Curve("SN", pts, term_f)
    curve.terminations = (term_b, term_f)
    return curve


def continue_ns_curve(sys, seed_ns, window, step=StepControl(), *, direction=1,
                      tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL, both=True):
    """Neimark-Sacker curve (Hopf at ``tau = 0``) in ``(tau, lam)`` for planar systems.

    Solves ``G = 0``, ``tr A + tau det A = 0`` with ``A = D_x G``. The curve
    stops with termination ``'resonance'`` if the eigenvalues stop being a
    complex pair.
    """
    if sys.n != 2:
        raise ValueError("Neimark-Sacker continuation is implemented for n = 2")

    def guard(u):
        a, _ = _rate_at(sys, u[2], u[:2], u[3], tol, cfg)
        return np.trace(a) ** 2 - 4 * np.linalg.det(a) < 0

    prob, us, term_f, term_b = _curve(sys, "NS", seed_ns, window, step, direction, tol, cfg,
                                      guard=guard, both=both)
    pts = []
    for u in us:
        tau, x, lam = prob.unpack(u)
        tau = 0.0 if abs(tau) < 1e-13 else tau
        tv = ns_diagnostics(sys, x, tau, lam, cfg, tol)
        pts.append(BifurcationPoint("Hopf" if tau == 0 else "NS", x, tau, lam, tv))
    curve = Curve("NS", pts, term_f)
    curve.terminations = (term_b, term_f)
    return curve


# ---------------------------------------------------------------------------
# transcritical curves on invariant sets


def _transverse_basis(n, invariant_dirs):
    dirs = np.zeros((n, 0)) if invariant_dirs is None else np.asarray(invariant_dirs, float)
    dirs = dirs.reshape(n, -1)
    k = dirs.shape[1]
    q, _ = np.linalg.qr(np.hstack([dirs, np.eye(n)]))
    return q[:, k:n]


def _transverse_det(sys, x_inv, basis, tau, lam, tol, cfg, w=None, stencil=None):
    """``det`` of the transverse block of ``A = D_x G`` at an invariant point."""
    n = sys.n
    h = cfg.steps(x_inv)
    if stencil is None:
        eye = np.eye(n)
        stencil = np.stack([x_inv] + [x_inv + h[j] * eye[j] for j in range(n)]
                           + [x_inv - h[j] * eye[j] for j in range(n)], axis=1)
    if w is None:
        w = mean_drift(sys, tau, stencil, tol, ref=True) if tau != 0 else sys.f(stencil)
    g = residual_from_drift(sys, tau, stencil, lam, w)
    a = np.stack([(g[:, 1 + j] - g[:, 1 + n + j]) / (2 * h[j]) for j in range(n)], axis=1)
    return float(np.linalg.det(basis.T @ a @ basis))


def _tc_point(sys, x_inv, tau, lam, cfg, tol):
    tv = fold_diagnostics(sys, x_inv, float(tau), float(lam), cfg, tol, "TC")
    basis = _transverse_basis(sys.n, _dirs_for(sys, x_inv))
    b = _transverse_det(sys, x_inv, basis, tau, lam, tol, cfg)
    tv["transverse_rate"] = b
    tv["nonhyperbolicity"] = abs(b) if tau == 0 else abs(tau * b)
    return BifurcationPoint("TC", x_inv.copy(), float(tau), float(lam), tv)


def _dirs_for(sys, x_inv):
    for point, dirs in sys.invariant_sets:
        if np.allclose(point, x_inv, rtol=0, atol=1e-12):
            return dirs
    return None


def _tc_on_branch(sys, prob, a, b, cfg, tol):
    """Exact TC on a declared invariant point lying between branch points ``a`` and ``b``."""
    for point, dirs in sys.invariant_sets:
        point = np.asarray(point, dtype=float)
        seg = b.x - a.x
        s = np.clip((point - a.x) @ seg / max(seg @ seg, 1e-300), 0.0, 1.0)
        # a curved branch passes the point only approximately along the chord
        if np.linalg.norm(a.x + s * seg - point) > 0.25 * np.linalg.norm(seg) + 1e-8:
            continue
        basis = _transverse_basis(sys.n, dirs)
        key = "tau" if prob.free == "tau" else "lam"
        pa, pb = getattr(a, key), getattr(b, key)
        lo, hi = min(pa, pb), max(pa, pb)
        if prob.free == "tau":
            fn = lambda t: _transverse_det(sys, point, basis, t, prob.fixed, tol, cfg)
        else:
            eye = np.eye(sys.n)
            h = cfg.steps(point)
            stencil = np.stack([point] + [point + h[j] * eye[j] for j in range(sys.n)]
                               + [point - h[j] * eye[j] for j in range(sys.n)], axis=1)
            tau = prob.fixed
            w = mean_drift(sys, tau, stencil, tol, ref=True) if tau != 0 else sys.f(stencil)
            fn = lambda lam: _transverse_det(sys, point, basis, tau, lam, tol, cfg, w, stencil)
        try:
            flo, fhi = fn(lo), fn(hi)
            if flo * fhi > 0:
                continue
            root = lo if flo == 0 else hi if fhi == 0 else brentq(
                fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except (FlowKickError, ValueError):
            continue
        tau, lam = (root, prob.fixed) if prob.free == "tau" else (prob.fixed, root)
        return _tc_point(sys, point, tau, lam, cfg, tol)
    return None


def tc_curve_at_invariant(sys, x_inv, invariant_dirs, taus, lam_bracket, *, n_scan=41,
                          tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL):
    """Transcritical curve ``lam_TC(tau)`` at a fixed point shared by all maps.

    ``invariant_dirs`` spans the tangent space of the invariant set through
    ``x_inv`` (columns; empty for ``x_inv = 0`` in one dimension). For each
    ``tau`` the transverse block ``B`` of ``A = D_x G`` is computed and
    ``det B = 0`` (transverse multiplier equal to 1) is solved for ``lam``
    inside ``lam_bracket``. ``tau = 0`` is allowed and gives the continuous
    transcritical point. Each result carries the nonhyperbolicity,
    non-transversality, mixed partial and quadratic dominance values.
    """
    n = sys.n
    x_inv = as_state(x_inv, n)
    basis = _transverse_basis(n, invariant_dirs)
    lam_lo, lam_hi = lam_bracket
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    probe = desingularized_residual(sys, float(taus[0]), x_inv, 0.5 * (lam_lo + lam_hi), tol)
    if np.linalg.norm(probe) > 1e-8:
        raise ValueError("x_inv is not a fixed point at the first (tau, lambda) probe")
    h = cfg.steps(x_inv)
    eye = np.eye(n)
    stencil = np.stack([x_inv] + [x_inv + h[j] * eye[j] for j in range(n)]
                       + [x_inv - h[j] * eye[j] for j in range(n)], axis=1)
    out = []
    for tau in taus:
        w = mean_drift(sys, tau, stencil, tol, ref=True) if tau != 0 else sys.f(stencil)

        def transverse(lam):
            return _transverse_det(sys, x_inv, basis, tau, lam, tol, cfg, w, stencil)

        grid = np.linspace(lam_lo, lam_hi, n_scan)
        vals = np.array([transverse(lam) for lam in grid])
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
        if idx.size == 0:
            warnings.warn(f"no transcritical root in lambda bracket at tau={tau:g}; omitted")
            continue
        i = idx[0]
        if vals[i] == 0:
            lam_tc = grid[i]
        else:
            lam_tc = brentq(transverse, grid[i], grid[i + 1], xtol=1e-15,
                            rtol=4 * np.finfo(float).eps)
        tv = fold_diagnostics(sys, x_inv, float(tau), lam_tc, cfg, tol, "TC")
        b = transverse(lam_tc)
        tv["transverse_rate"] = b
        tv["nonhyperbolicity"] = abs(b) if tau == 0 else abs(tau * b)
        out.append(BifurcationPoint("TC", x_inv.copy(), float(tau), float(lam_tc), tv))
    return out


# ---------------------------------------------------------------------------
# stability diagrams

INCOMPLETE_WARNING = ("fixed points are found by multi-start Newton from the supplied seeds "
                      "and continuous equilibria; the diagram may be incomplete")


@dataclass
class GridCell:
    tau: float
    second: float
    lam: float
    count: int
    stabilities: list
    states: list
    failures: int = 0

    def to_dict(self):
        return {"tau": self.tau, "second": self.second, "lambda": self.lam, "count": self.count,
                "stabilities": list(self.stabilities),
                "states": [[float(v) for v in x] for x in self.states],
                "failures": self.failures}


@dataclass
class StabilityGrid:
    tau_axis: np.ndarray
    second_axis: np.ndarray
    mode: str
    cells: list
    meta: dict = field(default_factory=dict)

    def cell(self, i, j):
        return self.cells[i][j]

    def counts(self):
        return np.array([[c.count for c in row] for row in self.cells])


def _strictly_increasing(a, name):
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0 or np.any(np.diff(a) <= 0):
        raise ValueError(f"{name} must be non-empty and strictly increasing")
    return a


def _in_domain(sys, x, tol=1e-9):
    if sys.domain_hint is None:
        return True
    lo, hi = sys.domain_hint
    return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


def _batch_residual(sys, tau, xs, lam, tol):
    """Residual of many independent states; columns that fail to integrate give ``inf``."""
    try:
        return desingularized_residual(sys, tau, xs, lam, tol)
    except FlowKickError:
        out = np.empty_like(xs)
        for j in range(xs.shape[1]):
            try:
                out[:, j] = desingularized_residual(sys, tau, xs[:, j], lam, tol)
            except FlowKickError:
                out[:, j] = np.inf
        return out


def _batch_jacobian(sys, tau, xs, lam, tol, cfg):
    def fn(z):
        return desingularized_residual(sys, tau, z, lam, tol)

    try:
        return jacobian_x(fn, xs, cfg, return_value=True)
    except FlowKickError:
        n, m = xs.shape
        a, g = np.full((n, n, m), np.nan), np.full((n, m), np.inf)
        for j in range(m):
            try:
                a[:, :, j], g[:, j] = jacobian_x(fn, xs[:, j], cfg, return_value=True)
            except FlowKickError:
                pass
        return a, g


def _multistart(sys, tau, lam, starts, tol, cfg, max_iter=40, accept=1e-8):
    """Damped Newton on all starting states at once; returns approximate roots."""
    x = np.array(starts, dtype=float).T
    active = np.ones(x.shape[1], dtype=bool)
    roots = []
    for _ in range(max_iter):
        if not active.any():
            break
        xa = x[:, active]
        a, g = _batch_jacobian(sys, tau, xa, lam, tol, cfg)
        res = np.linalg.norm(g, axis=0)
        done = res <= accept
        idx = np.flatnonzero(active)
        roots += [xa[:, j] for j in np.flatnonzero(done)]
        ok = ~done & np.all(np.isfinite(a), axis=(0, 1)) & np.isfinite(res)
        mats = np.moveaxis(a, -1, 0)
        with np.errstate(all="ignore"):
            ok &= np.abs(np.linalg.det(mats)) > 1e-14
        active[idx[~ok]] = False
        if not ok.any():
            break
        dx = np.linalg.solve(mats[ok], -g[:, ok].T[..., None])[..., 0].T
        xo, ro = xa[:, ok], res[ok]
        step = np.ones(xo.shape[1])
        pending = np.ones(xo.shape[1], dtype=bool)
        new = xo.copy()
        for _ in range(9):
            trial = xo[:, pending] + step[pending] * dx[:, pending]
            inside = np.array([sys.in_domain(trial[:, j]) for j in range(trial.shape[1])])
            rt = np.full(trial.shape[1], np.inf)
            if inside.any():
                rt[inside] = np.linalg.norm(
                    _batch_residual(sys, tau, trial[:, inside], lam, tol), axis=0)
            better = rt < ro[pending]
            pos = np.flatnonzero(pending)
            new[:, pos[better]] = trial[:, better]
            pending[pos[better]] = False
            step[pending] *= 0.5
            if not pending.any():
                break
        keep = idx[ok]
        x[:, keep] = new
        active[keep[pending]] = False
    return roots


def find_fixed_points(sys, p, seeds, dedupe_radius=1e-6, *, continuous_seeds=True,
                      tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL):
    """Distinct in-domain fixed points reached by Newton from ``seeds``.

    With ``continuous_seeds`` the equilibria of the continuous analog that
    Newton reaches from the same seeds are used as extra starting points.
    Returns ``(records, failures)`` with records sorted by state.
    """
    tau, lam = float(p.tau), float(p.lam)
    seeds = [as_state(x, sys.n) for x in seeds]
    starts = list(seeds)
    if seeds and continuous_seeds and tau > 0:
        starts += [x for x in _multistart(sys, 0.0, lam, seeds, tol, cfg) if _in_domain(sys, x)]
    candidates = _multistart(sys, tau, lam, starts, tol, cfg) if starts else []
    failures = len(starts) - len(candidates)
    found = []
    for x0 in candidates:
        if any(np.linalg.norm(x0 - other.x) <= dedupe_radius for other in found):
            continue
        try:
            rec = newton_fixed_point(sys, DisturbanceParams(tau, lam), x0, integ_tol=tol, cfg=cfg,
                                     confine=True)
        except FlowKickError:
            failures += 1
            continue
        if not _in_domain(sys, rec.x):
            continue
        if all(np.linalg.norm(rec.x - other.x) > dedupe_radius for other in found):
            found.append(rec)
    found.sort(key=lambda r: tuple(r.x))
    return found, failures


def _grid_cell(sys, tau, second, mode, seeds, radius, tol, cfg):
    lam = second / tau if mode == "kappa" else second
    found, failures = find_fixed_points(sys, DisturbanceParams(tau, lam), seeds, radius, tol=tol,
                                        cfg=cfg)
    return GridCell(float(tau), float(second), float(lam), len(found),
                    [r.stability for r in found], [r.x for r in found], failures)


def stability_grid(sys, tau_axis, second_axis, mode="kappa", seeds=(), dedupe_radius=1e-6, *,
                   threads=1, tol=DEFAULT_TOL, cfg=DEFAULT_STENCIL):
    """Count and classify flow-kick fixed points on a ``(tau, kappa)`` or ``(tau, lam)`` grid.

    Each cell runs Newton from the user ``seeds`` and from the continuous
    equilibria reachable from them at the cell's ``lam`` (``lam = kappa / tau``
    in kick mode). Converged in-domain fixed points closer than
    ``dedupe_radius`` are merged. Cells are independent; with ``threads > 1``
    they run concurrently and are merged in index order, so the result does
    not depend on scheduling.
    """
    if mode not in ("kappa", "lambda"):
        raise ValueError("mode must be 'kappa' or 'lambda'")
    taus = _strictly_increasing(tau_axis, "tau_axis")
    second = _strictly_increasing(second_axis, f"{mode}_axis")
    if np.any(taus <= 0):
        raise ValueError("grid tau values must be positive")
    if dedupe_radius <= 0:
        raise ValueError("dedupe_radius must be positive")
    seeds = [as_state(x, sys.n) for x in seeds]
    jobs = [(t, v) for t in taus for v in second]

    def run(job):
        return _grid_cell(sys, job[0], job[1], mode, seeds, dedupe_radius, tol, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(run, jobs))
    else:
        flat = [run(job) for job in jobs]
    m = len(second)
    cells = [flat[i * m:(i + 1) * m] for i in range(len(taus))]
    meta = {"warning": INCOMPLETE_WARNING, "n_seeds": len(seeds), "dedupe_radius": dedupe_radius}
    return StabilityGrid(taus, second, mode, cells, meta)


__all__ = [
    "BifurcationPoint", "Branch", "Curve", "StepControl", "continue_branch",
    "continue_ns_curve", "continue_sn_curve", "detect_bifurcations", "find_fixed_points",
    "fold_diagnostics",
    "fold_test", "GridCell", "ns_diagnostics", "ns_test", "StabilityGrid", "stability_grid",
    "tc_curve_at_invariant",
]
