"""Central-difference derivatives of batched maps.

Maps take states of shape ``(n, *batch)`` and return ``(n_out, *batch)``.
Every stencil is evaluated in one call with the base point in the first
batch column, so integrating maps can share one step sequence (``ref=True``)
and differences stay free of step-selection noise. Stencils add a batch
axis right after the state axis, which lets derivative calls nest: the
Jacobian of a map that itself differentiates is still one evaluation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FlowKickError, StencilError


@dataclass(frozen=True)
class StencilConfig:
    """Step rule ``h = max(h_rel * |x_j|, h_abs_floor)``.

    ``h_rel_second`` is used for second derivatives, where round-off grows
    like ``eps / h**2``.
    """

    h_rel: float = 1e-5
    h_abs_floor: float = 1e-7
    h_rel_second: float = 1e-4
    scheme: str = "central2"

    def __post_init__(self):
        if self.h_rel <= 0 or self.h_abs_floor <= 0 or self.h_rel_second <= 0:
            raise ValueError("stencil steps must be positive")
        if self.scheme != "central2":
            raise ValueError("only second-order central differences are implemented")

    def steps(self, x, second=False):
        rel = self.h_rel_second if second else self.h_rel
        floor = self.h_abs_floor * (rel / self.h_rel)
        return np.maximum(rel * np.abs(x), floor)


DEFAULT_STENCIL = StencilConfig()


def _evaluate(fn, args, x):
    try:
        return np.asarray(fn(*args), dtype=float)
    except FlowKickError as exc:
        raise StencilError(f"map evaluation failed on stencil around x={np.ravel(x)[:8]}: {exc}",
                           point=np.array(x)) from exc


def _unit(n, j, ndim):
    e = np.zeros((n,) + (1,) * ndim)
    e[j] = 1.0
    return e


def jacobian_x(fn, x, cfg=DEFAULT_STENCIL, *, return_value=False):
    """Jacobian ``d fn / d x`` by central differences.

    Entry ``(i, j)`` is ``[fn(x + h e_j)_i - fn(x - h e_j)_i] / (2 h_j)``.
    Trailing batch dimensions of ``x`` are carried through: the result has
    shape ``(n_out, n, *batch)``. With ``return_value`` the base value
    ``fn(x)`` is returned as well (it is the first stencil column).
    """
    x = np.asarray(x, dtype=float)
    n, extra = x.shape[0], x.ndim - 1
    h = cfg.steps(x)
    cols = [x]
    for j in range(n):
        cols.append(x + h * _unit(n, j, extra))
    for j in range(n):
        cols.append(x - h * _unit(n, j, extra))
    stencil = np.stack(cols, axis=1)
    y = _evaluate(fn, (stencil,), x)
    jac = np.stack([(y[:, 1 + j] - y[:, 1 + n + j]) / (2.0 * h[j]) for j in range(n)], axis=1)
    return (jac, y[:, 0]) if return_value else jac


def hessian_x(fn, x, cfg=DEFAULT_STENCIL):
    """All second derivatives ``d2 fn / dx_i dx_j``, shape ``(n_out, n, n, *batch)``.

    Diagonal entries use the 3-point stencil, off-diagonal ones the 4-point
    cross stencil; both halves of the symmetric pair come from the same values.
    """
    x = np.asarray(x, dtype=float)
    n, extra = x.shape[0], x.ndim - 1
    h = cfg.steps(x, second=True)
    e = [h[j] * _unit(n, j, extra) for j in range(n)]
    cols = [x]
    for j in range(n):
        cols += [x + e[j], x - e[j]]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for i, j in pairs:
        cols += [x + e[i] + e[j], x + e[i] - e[j], x - e[i] + e[j], x - e[i] - e[j]]
    y = _evaluate(fn, (np.stack(cols, axis=1),), x)
    n_out = y.shape[0]
    out = np.empty((n_out, n, n) + x.shape[1:])
    for j in range(n):
        out[:, j, j] = (y[:, 1 + 2 * j] - 2.0 * y[:, 0] + y[:, 2 + 2 * j]) / h[j] ** 2
    base = 1 + 2 * n
    for k, (i, j) in enumerate(pairs):
        pp, pm, mp, mm = (y[:, base + 4 * k + q] for q in range(4))
        val = (pp - pm - mp + mm) / (4.0 * h[i] * h[j])
        out[:, i, j] = val
        out[:, j, i] = val
    return out


def second_deriv_xx(fn, x, i, j, cfg=DEFAULT_STENCIL):
    """``d2 fn / dx_i dx_j`` at ``x``; symmetric in ``(i, j)`` by construction."""
    x = np.asarray(x, dtype=float)
    n, extra = x.shape[0], x.ndim - 1
    a, b = sorted((i, j))
    h = cfg.steps(x, second=True)
    ea = h[a] * _unit(n, a, extra)
    if a == b:
        y = _evaluate(fn, (np.stack([x, x + ea, x - ea], axis=1),), x)
        return (y[:, 1] - 2.0 * y[:, 0] + y[:, 2]) / h[a] ** 2
    eb = h[b] * _unit(n, b, extra)
    cols = [x, x + ea + eb, x + ea - eb, x - ea + eb, x - ea - eb]
    y = _evaluate(fn, (np.stack(cols, axis=1),), x)
    return (y[:, 1] - y[:, 2] - y[:, 3] + y[:, 4]) / (4.0 * h[a] * h[b])


def _lambda_step(lam, cfg, second=False):
    return float(cfg.steps(np.array([lam]), second=second)[0])


def deriv_lambda(fn, x, lam, cfg=DEFAULT_STENCIL):
    """``d fn(x; lam) / d lam`` by a central difference in ``lam``.

    ``fn(X, lam)`` must accept a ``lam`` array matching the batch shape of ``X``.
    """
    x = np.asarray(x, dtype=float)
    k = _lambda_step(lam, cfg)
    lams = np.array([lam, lam + k, lam - k])
    lams = lams.reshape((3,) + (1,) * (x.ndim - 1))
    stencil = np.stack([x, x, x], axis=1)
    y = _evaluate(fn, (stencil, np.broadcast_to(lams, stencil.shape[1:])), x)
    return (y[:, 1] - y[:, 2]) / (2.0 * k)


def mixed_partial_x_lambda(fn, x, lam, cfg=DEFAULT_STENCIL):
    """``d2 fn / dx_j d lam`` for all ``j``; shape ``(n_out, n, *batch)``."""
    x = np.asarray(x, dtype=float)
    n, extra = x.shape[0], x.ndim - 1
    h = cfg.steps(x, second=True)
    k = _lambda_step(lam, cfg, second=True)
    cols, lams = [x], [lam]
    for j in range(n):
        e = h[j] * _unit(n, j, extra)
        cols += [x + e, x + e, x - e, x - e]
        lams += [lam + k, lam - k, lam + k, lam - k]
    stencil = np.stack(cols, axis=1)
    lam_arr = np.broadcast_to(np.array(lams).reshape((len(lams),) + (1,) * extra),
                              stencil.shape[1:])
    y = _evaluate(fn, (stencil, lam_arr), x)
    out = np.empty((y.shape[0], n) + x.shape[1:])
    for j in range(n):
        pp, pm, mp, mm = (y[:, 1 + 4 * j + q] for q in range(4))
        out[:, j] = (pp - pm - mp + mm) / (4.0 * h[j] * k)
    return out
