"""Adaptive Dormand-Prince 5(4) integrator for batched autonomous systems.

States are arrays of shape ``(n, *batch)``; every batch column is advanced
with one shared step sequence. Sharing the steps makes each column a smooth
function of its initial condition, which is what the central-difference
machinery in :mod:`flowkick.numdiff` relies on.
"""

import numpy as np

from .errors import DivergenceError, StiffnessError

# Butcher tableau (Dormand & Prince 1980)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
# 5th-order weights equal the last tableau row (FSAL)
_B = np.array(_A[6] + [0.0])
# difference between 5th- and 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

DEFAULT_BOUND = 1e8
MAX_STEPS = 200_000


def _error_norm(err, y, y_new, atol, rtol, ref):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    ratio = np.abs(err) / scale
    if not ref:
        return float(np.max(ratio)) if ratio.size else 0.0
    n = ratio.shape[0]
    ratio = ratio.reshape(n, -1)
    base = float(np.max(ratio[:, 0]))
    if ratio.shape[1] == 1:
        return base
    # deviations from the base column carry the derivative information;
    # control them relative to their own size, down to round-off of the base
    err, y_new = err.reshape(n, -1), y_new.reshape(n, -1)
    dev = np.max(np.abs(y_new[:, 1:] - y_new[:, :1]), axis=0)
    derr = np.max(np.abs(err[:, 1:] - err[:, :1]), axis=0)
    floor = 1e3 * np.finfo(float).eps * (np.max(np.abs(y_new[:, 0])) + dev) + 1e-300
    return max(base, float(np.max(derr / (rtol * dev + floor))))


def _initial_step(rhs, y0, f0, t_span, atol, rtol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    f1 = rhs(y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_span)


def integrate(rhs, y0, t_end, *, rtol=1e-10, atol=1e-10, ref=False,
              bound=DEFAULT_BOUND, t_eval=None):
    """Integrate ``y' = rhs(y)`` from ``t = 0`` to ``t_end``.

    Parameters
    ----------
    rhs : callable
        Autonomous right-hand side acting on arrays of shape ``(n, *batch)``.
    y0 : array_like
        Initial state(s).
    t_end : float
        Final time, ``>= 0``.
    rtol, atol : float
        Local error tolerances.
    ref : bool
        If true, the first batch column is a base point and the others are
        perturbations of it: error control applies to the base column and to
        each column's deviation from it, relative to the deviation size
        (down to round-off of base plus deviation). Used for
        finite-difference stencils.
    bound : float
        States with absolute value above ``bound`` raise :class:`DivergenceError`.
    t_eval : sequence of float, optional
        Increasing times in ``[0, t_end]`` at which to record the state. The
        step sequence is clipped to hit each of them exactly.

    Returns
    -------
    y_end : ndarray
        State at ``t_end``. If ``t_eval`` is given, returns ``(y_end, samples)``
        with ``samples`` of shape ``(len(t_eval), *y0.shape)``.
    """
    y = np.array(y0, dtype=float)
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    stops = [] if t_eval is None else sorted(float(t) for t in t_eval)
    samples = []
    while stops and stops[0] <= 0.0:
        samples.append(y.copy())
        stops.pop(0)
    if t_end == 0.0:
        return (y, np.array(samples)) if t_eval is not None else y

    f = rhs(y)
    h = _initial_step(rhs, y, f, t_end, atol, rtol)
    t = 0.0
    h_min = 1e-14 * max(1.0, t_end)
    k = [None] * 7
    for _ in range(MAX_STEPS):
        target = stops[0] if stops else t_end
        h_try = min(h, target - t)
        clipped = h_try < h
        k[0] = f
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    acc += (h_try * a) * k[j]
            k[i] = rhs(acc)
            if i == 6:
                y_new = acc
        err = h_try * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        en = _error_norm(err, y, y_new, atol, rtol, ref)
        if not np.isfinite(en):
            en = np.inf
        if en <= 1.0:
            t = target if clipped or h_try == target - t else t + h_try
            y = y_new
            f = k[6]
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > bound:
                raise DivergenceError(f"state norm exceeded {bound:g} at t={t:.6g}", t=t, state=y)
            if stops and t >= stops[0]:
                samples.append(y.copy())
                stops.pop(0)
            if t >= t_end:
                break
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if clipped:
                # keep the unclipped proposal so sample points do not shrink the steps
                h = max(h, h_try * fac)
            else:
                h = h_try * fac
        else:
            if not np.isfinite(en) and (not np.all(np.isfinite(y_new))
                                        or np.max(np.abs(y_new)) > bound):
                h = h_try * 0.1
            else:
                h = h_try * max(0.1, 0.9 * en ** -0.2)
            if h < h_min:
                raise StiffnessError(f"step size underflow at t={t:.6g}", t=t, state=y)
    else:
        raise StiffnessError(f"exceeded {MAX_STEPS} steps before t={t_end:g}", t=t, state=y)

    if t_eval is not None:
        return y, np.array(samples)
    return y
