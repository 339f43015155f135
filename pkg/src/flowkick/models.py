"""Built-in systems: harvested logistic, nonspatial Klausmeier, predator-prey.

Each builder returns a :class:`ModelCatalogEntry` bundling the system with
closed-form oracles and a few annotated reference constants.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemDef

PP_GROWTH = 0.5 - np.exp(-2.0)  # predator growth rate along y = 0 at prey carrying capacity


@dataclass(frozen=True)
class KnownValue:
    value: float
    tol: float
    provenance: str


@dataclass(frozen=True)
class ModelCatalogEntry:
    name: str
    system: SystemDef
    params: dict = field(default_factory=dict)
    equations: tuple = ()
    oracles: dict = field(default_factory=dict)
    known_values: dict = field(default_factory=dict)
    canonical: bool = True

    def describe(self):
        lines = [f"{self.name}" + ("" if self.canonical else "  [extra variant]")]
        if self.params:
            lines.append("  params: " + ", ".join(f"{k}={v}" for k, v in self.params.items()))
        lines += [f"  {eq}" for eq in self.equations]
        for key, kv in self.known_values.items():
            lines.append(f"  {key} = {kv.value:.6g} (+/- {kv.tol:g}; {kv.provenance})")
        return "\n".join(lines)


def _logistic_flow(x, t):
    x = np.asarray(x, dtype=float)
    e = np.exp(t)
    return x * e / (1.0 + x * (e - 1.0))


def make_logistic(disturbance="constant_rate"):
    """Logistic growth ``x' = x(1 - x)`` with constant or proportional disturbance.

    ``constant_rate``: ``r(x; lam) = lam`` (harvest when ``lam < 0``).
    ``proportional_rate``: ``r(x; lam) = -lam * x``. The proportional variant
    keeps ``x = 0`` invariant and has a transcritical point at ``lam = 1``.
    """

    def f(x):
        return x * (1.0 - x)

    if disturbance == "constant_rate":
        def r(u, lam):
            return lam + 0.0 * u

        def equilibria(lam):
            disc = 1.0 + 4.0 * lam
            if disc < 0:
                return []
            s = np.sqrt(disc)
            return sorted({(1.0 - s) / 2.0, (1.0 + s) / 2.0})

        def sn_curve(tau):
            # fold where tanh(tau/4) + tau*lam = 0
            tau = np.asarray(tau, dtype=float)
            return np.where(tau == 0, -0.25, -np.tanh(tau / 4.0) / np.where(tau == 0, 1.0, tau))

        oracles = {"flow": _logistic_flow, "equilibria": equilibria, "sn_curve": sn_curve}
        known = {
            "lambda_sn": KnownValue(-0.25, 1e-12, "continuous saddle-node, quoted"),
            "tau_fold_at_-0.24": KnownValue(1.4, 0.1, "branch fold over tau, quoted to 2 s.f."),
        }
        eqs = ("x' = x*(1-x)", "r(x; lambda) = lambda")
        name, canonical = "logistic", True
    elif disturbance == "proportional_rate":
        def r(u, lam):
            return -lam * u

        def equilibria(lam):
            return sorted({0.0, 1.0 - lam})

        def tc_curve(tau):
            tau = np.asarray(tau, dtype=float)
            safe = np.where(tau == 0, 1.0, tau)
            return np.where(tau == 0, 1.0, -np.expm1(-tau) / safe)

        oracles = {"flow": _logistic_flow, "equilibria": equilibria, "tc_curve": tc_curve}
        known = {"lambda_tc": KnownValue(1.0, 1e-12, "continuous transcritical, derived")}
        eqs = ("x' = x*(1-x)", "r(x; lambda) = -lambda*x")
        name, canonical = "logistic-proportional", False
    else:
        raise ValueError(f"unknown disturbance mode {disturbance!r}")

    inv = ((np.zeros(1), np.zeros((1, 0))),) if disturbance == "proportional_rate" else ()
    sys = SystemDef(n=1, f=f, r=r, domain_hint=(0.0, np.inf), analytic_flow=_logistic_flow,
                    name=name, state_names=("x",), invariant_sets=inv)
    return ModelCatalogEntry(name=name, system=sys, params={"disturbance": disturbance},
                             equations=eqs, oracles=oracles, known_values=known,
                             canonical=canonical)


def make_klausmeier(m=0.75):
    """Nonspatial Klausmeier vegetation (x1) / water (x2) model with rain as kicks.

    Rain-free flow ``x1' = x2 x1^2 - m x1``, ``x2' = -x2 x1^2 - x2`` and rain
    rate ``r(x; lam) = (0, lam)``.
    """

    def f(x):
        x1, x2 = x[0], x[1]
        uptake = x2 * x1 * x1
        return np.stack([uptake - m * x1, -uptake - x2])

    def r(u, lam):
        zero = 0.0 * u[0]
        return np.stack([zero, lam + zero])

    def vegetated(lam):
        disc = lam * lam - 4.0 * m * m
        if disc < 0:
            return []
        s = np.sqrt(disc)
        return [np.array([(lam + s) / (2 * m), (lam - s) / 2]),
                np.array([(lam - s) / (2 * m), (lam + s) / 2])]

    def barren_fixed_point(tau, lam):
        if tau == 0:
            return np.array([0.0, lam])
        return np.array([0.0, -tau * lam / np.expm1(-tau)])

    def equilibria(lam):
        return [np.array([0.0, lam])] + vegetated(lam)

    oracles = {
        "equilibria": equilibria,
        "vegetated": vegetated,
        "barren_fixed_point": barren_fixed_point,
        "sn_point": lambda: (2 * m, np.array([1.0, m])),
    }
    known = {"lambda_sn": KnownValue(2 * m, 1e-12, "continuous saddle-node at 2m, quoted")}
    sys = SystemDef(n=2, f=f, r=r, domain_hint=((0.0, 0.0), (np.inf, np.inf)),
                    name="klausmeier", state_names=("x1", "x2"))
    eqs = ("x1' = x2*x1^2 - m*x1", "x2' = -x2*x1^2 - x2", "r(x; lambda) = (0, lambda)")
    return ModelCatalogEntry(name="klausmeier", system=sys, params={"m": m}, equations=eqs,
                             oracles=oracles, known_values=known)


def ansatz_tc_lambda(tau):
    """Transcritical harvest rate at (4, 0): ``(1 - exp(-a tau)) / tau``, ``a = 1/2 - e^-2``.

    Continuous at ``tau = 0`` where it equals ``a``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    safe = np.where(tau == 0, 1.0, tau)
    out = np.where(tau == 0, PP_GROWTH, -np.expm1(-PP_GROWTH * tau) / safe)
    return float(out) if out.ndim == 0 else out


def make_predator_prey():
    """Rosenzweig-MacArthur type predator-prey model with predator harvesting.

    ``x' = x(1 - x/4) - 0.5 y (1 - e^{-1.5x})``,
    ``y' = -0.5 y + y (1 - e^{-0.5x})``, ``r((x, y); lam) = (0, -lam y)``.
    """

    def f(v):
        x, y = v[0], v[1]
        return np.stack([
            x * (1.0 - x / 4.0) + 0.5 * y * np.expm1(-1.5 * x),
            -0.5 * y - y * np.expm1(-0.5 * x),
        ])

    def r(u, lam):
        y = u[1]
        return np.stack([0.0 * y, -lam * y])

    def coexistence(lam):
        if not 0.0 <= lam < 0.5:
            return None
        x = -2.0 * np.log(0.5 - lam)
        if not 0.0 < x < 4.0:
            return None
        y = x * (1.0 - x / 4.0) / (0.5 * -np.expm1(-1.5 * x))
        return np.array([x, y])

    def equilibria(lam):
        eqs = [np.array([0.0, 0.0]), np.array([4.0, 0.0])]
        c = coexistence(lam)
        return eqs + ([c] if c is not None else [])

    oracles = {
        "equilibria": equilibria,
        "coexistence": coexistence,
        "invariant_points": (np.array([0.0, 0.0]), np.array([4.0, 0.0])),
        "tc_curve": ansatz_tc_lambda,
    }
    known = {
        "lambda_hopf": KnownValue(0.089, 0.005, "continuous Hopf, quoted to 3 d.p."),
        "lambda_tc": KnownValue(0.365, 0.005, "continuous transcritical, quoted to 3 d.p."),
        "a": KnownValue(PP_GROWTH, 1e-15, "1/2 - e^-2, derived"),
    }
    sys = SystemDef(n=2, f=f, r=r, domain_hint=((0.0, 0.0), (np.inf, np.inf)),
                    name="predator-prey", state_names=("x", "y"),
                    invariant_sets=((np.array([4.0, 0.0]), np.array([[1.0], [0.0]])),))
    eqs = ("x' = x*(1-x/4) - 0.5*y*(1-exp(-1.5*x))", "y' = -0.5*y + y*(1-exp(-0.5*x))",
           "r((x,y); lambda) = (0, -lambda*y)")
    return ModelCatalogEntry(name="predator-prey", system=sys, equations=eqs, oracles=oracles,
                             known_values=known)


CATALOG = {
    "logistic": lambda: make_logistic("constant_rate"),
    "logistic-proportional": lambda: make_logistic("proportional_rate"),
    "klausmeier": make_klausmeier,
    "predator-prey": make_predator_prey,
}


def get_model(name, **kwargs):
    try:
        builder = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(CATALOG)}") from None
    return builder(**kwargs)
