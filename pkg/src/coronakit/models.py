"""Closed-form catalog: audible-noise and RI excitation formulas.

Every entry evaluates a published fixed-coefficient expression of the
bundle surface gradient E (kV/cm), subconductor count n and subconductor
diameter d (cm).  log10 and ln are kept distinct exactly as published;
out-of-domain inputs raise DomainError instead of clamping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from . import exprgraph
from .errors import DomainError, UnknownModelError

AN = "an"
RI = "ri"

#: dB reference conversion between generation-level conventions (uW/m, pW/m)
PW_TO_UW_OFFSET = 60.0

REF_UW = "uW/m"
REF_PW = "pW/m"


@dataclass(frozen=True)
class BundleConfig:
    """Bundle operating point: E in kV/cm, n subconductors of diameter d cm.

    n is physically an integer but accepted as real so that parameter
    sweeps can sample it densely.
    """

    E: float
    n: float
    d: float

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError(f"surface gradient must be positive, got E={self.E}")
        if not self.n >= 1:
            raise DomainError(f"subconductor count must be >= 1, got n={self.n}")
        if not self.d > 0:
            raise DomainError(f"subconductor diameter must be positive, got d={self.d}")


@dataclass(frozen=True)
class NoiseLevel:
    value: float
    reference: str = REF_UW


def convert_reference(level: NoiseLevel, to: str) -> NoiseLevel:
    """Exact re-referencing of AN generation levels: uW/m = pW/m - 60."""
    if to not in (REF_UW, REF_PW):
        raise ValueError(f"unknown reference {to!r}")
    if level.reference == to:
        return level
    if level.reference == REF_PW and to == REF_UW:
        return NoiseLevel(level.value - PW_TO_UW_OFFSET, REF_UW)
    if level.reference == REF_UW and to == REF_PW:
        return NoiseLevel(level.value + PW_TO_UW_OFFSET, REF_PW)
    raise ValueError(f"unknown reference {level.reference!r}")


def _log10(x: float, what: str) -> float:
    if x <= 0:
        raise DomainError(f"log10 argument {what} = {x} is not positive")
    return math.log10(x)


def _ln(x: float, what: str) -> float:
    if x <= 0:
        raise DomainError(f"ln argument {what} = {x} is not positive")
    return math.log(x)


def _recip(num: float, den: float, what: str) -> float:
    if abs(den) < 1e-12:
        raise DomainError(f"denominator {what} = {den} is (near) zero")
    return num / den


# --- audible noise, dB re 1 uW/m -------------------------------------------

def _an_discovered_3(E, n, d):
    return 0.0878 * E * n + 72.3 * _log10(d, "d") \
        - _recip(648.7, E * _log10(E, "E"), "E*log10(E)")


def _an_discovered_4(E, n, d):
    return 0.093 * E * n + 55.02 * _log10(d, "d") \
        - _recip(591.0, E * d ** 2, "E*d^2") - _recip(5448.0, E ** 2, "E^2")


def _an_discovered_5(E, n, d):
    return 0.0116 * n ** 2 * d \
        - _recip(102.4 * n, E * _ln(E, "E") + d ** 2, "E*ln(E)+d^2") \
        + 9.216 * d + 19.13 * _ln(n, "n") - _recip(677.3, E, "E")


def _an_poly_baseline(E, n, d):
    return 1.022 * n + 10.4 * d + 30.839 - _recip(933.633, E, "E")


def _an_bpa(E, n, d):
    return 120 * _log10(E, "E") + 55 * _log10(d, "d") + 26.4 * _log10(n, "n") - 128.4


def _an_enel(E, n, d):
    return 85 * _log10(E, "E") + 45 * _log10(d, "d") + 18 * _log10(n, "n") - 71


def _an_ireq(E, n, d):
    return 72 * _log10(E, "E") + 45.81 * _log10(d, "d") + 22.71 * _log10(n, "n") - 57.6


def _an_fgh(E, n, d):
    return 2 * E + 45 * _log10(d, "d") + 18 * _log10(n, "n") - 0.3


def _an_ge(E, n, d):
    return -_recip(655.0, E, "E") + 44 * _log10(d, "d") + 20 * _log10(n, "n") + 67.9


def _an_epri(E, n, d):
    return 120 * _log10(E, "E") + 54 * _log10(d, "d") + 24.8 - 126


def _an_pysr(E, n, d):
    return 1.58 * n * d - 2.97 * n + 55.6 - _recip(915.0, E, "E")


def _an_dso(E, n, d):
    return -2.65 * _recip(E * d, n ** 2, "n^2") + 62.8 * d \
        - _recip(64.8 * d, _log10(E, "E"), "log10(E)") + 0.47 * n - 17


# --- RI excitation function, dB --------------------------------------------

def _ri_discovered_3(E, n, d):
    return 45.6 * _log10(E, "E") - _recip(819.5, d * (E - 1.0), "d*(E-1)") \
        + 0.07 * n * d ** 2


def _ri_discovered_4(E, n, d):
    return -_recip(117.2 * n, n ** 2 * d - d, "n^2*d-d") \
        - _recip(133.5 * n, E + n * d ** 2, "E+n*d^2") \
        + 98.68 - _recip(629.7, E, "E")


def _ri_discovered_5(E, n, d):
    return -_recip(45.87 * E, n ** 3 * d, "n^3*d") + 4.499 * d + 72.88 \
        - _recip(522.2, E, "E") - _recip(543.4, E * d, "E*d")


def _ri_poly_baseline(E, n, d):
    return 6.51 * d + 10.287 * _log10(n, "n") + 55.22 - _recip(671.7, E, "E")


def _ri_bpa(E, n, d):
    return 120 * _log10(E / 15.0, "E/15") + 40 * _log10(d / 4.0, "d/4") + 37.02


def _ri_cigre(E, n, d):
    return 3.5 * E + 6 * d - 40.69


def _ri_epri(E, n, d):
    base = -_recip(580.0, E, "E") + 38 * _log10(d / 3.8, "d/3.8")
    return base + (81.1 if n <= 8 else 86.1)


def _ri_cispr(E, n, d):
    return 70 - _recip(580.0, E, "E") + 35 * _log10(d, "d") - 10 * _log10(n, "n")


def _ireq_k(n) -> float:
    if n < 2:
        return 0.0
    if n < 3:
        return 3.7
    return 6.0


def _ri_ireq(E, n, d):
    return -90.25 + 92.42 * _log10(E, "E") + 43.03 * _log10(d, "d") - _ireq_k(n)


def _ri_pysr(E, n, d):
    inner = (n - 6.35) * E
    outer = _ln(inner, "(n-6.35)*E")
    return 0.51 * (d + 158.407) * _ln(outer, "ln((n-6.35)*E)") - 613


def _ri_dso(E, n, d):
    return 11.1 * E / n + 18.2 * d - 68.6 * d / n + 0.99 * n - 16.1


@dataclass(frozen=True)
class ModelInfo:
    id: str
    kind: str  # "an" or "ri"
    label: str
    term_count: int
    family: str  # "discovered", "baseline" or "empirical"
    fn: Callable[[float, float, float], float]
    piecewise: bool = False


_MODELS = [
    ModelInfo("an-discovered-3", AN, "graph-search law, 3 terms", 3, "discovered", _an_discovered_3),
    ModelInfo("an-discovered-4", AN, "graph-search law, 4 terms", 4, "discovered", _an_discovered_4),
    ModelInfo("an-discovered-5", AN, "graph-search law, 5 terms", 5, "discovered", _an_discovered_5),
    ModelInfo("an-poly-baseline", AN, "polynomial regression baseline", 4, "baseline", _an_poly_baseline),
    ModelInfo("an-bpa", AN, "BPA", 4, "empirical", _an_bpa),
    ModelInfo("an-enel", AN, "ENEL", 4, "empirical", _an_enel),
    ModelInfo("an-ireq", AN, "IREQ", 4, "empirical", _an_ireq),
    ModelInfo("an-fgh", AN, "FGH", 4, "empirical", _an_fgh),
    ModelInfo("an-ge", AN, "GE", 4, "empirical", _an_ge),
    ModelInfo("an-epri", AN, "EPRI", 3, "empirical", _an_epri),
    ModelInfo("an-pysr", AN, "PySR baseline", 4, "discovered", _an_pysr),
    ModelInfo("an-dso", AN, "DSO baseline", 5, "discovered", _an_dso),
    ModelInfo("ri-discovered-3", RI, "graph-search law, 3 terms", 3, "discovered", _ri_discovered_3),
    ModelInfo("ri-discovered-4", RI, "graph-search law, 4 terms", 4, "discovered", _ri_discovered_4),
    ModelInfo("ri-discovered-5", RI, "graph-search law, 5 terms", 5, "discovered", _ri_discovered_5),
    ModelInfo("ri-poly-baseline", RI, "polynomial regression baseline", 4, "baseline", _ri_poly_baseline),
    ModelInfo("ri-bpa", RI, "BPA", 3, "empirical", _ri_bpa),
    ModelInfo("ri-cigre", RI, "CIGRE", 3, "empirical", _ri_cigre),
    ModelInfo("ri-epri", RI, "EPRI", 3, "empirical", _ri_epri, piecewise=True),
    ModelInfo("ri-cispr", RI, "CISPR", 4, "empirical", _ri_cispr),
    ModelInfo("ri-ireq", RI, "IREQ", 4, "empirical", _ri_ireq, piecewise=True),
    ModelInfo("ri-pysr", RI, "PySR baseline", 2, "discovered", _ri_pysr),
    ModelInfo("ri-dso", RI, "DSO baseline", 5, "discovered", _ri_dso),
]

CATALOG: dict[str, ModelInfo] = {m.id: m for m in _MODELS}


def model_catalog() -> list[ModelInfo]:
    """Static listing of every catalogued closed form."""
    return list(_MODELS)


def get_model(model_id: str) -> ModelInfo:
    try:
        return CATALOG[model_id]
    except KeyError:
        known = ", ".join(sorted(CATALOG))
        raise UnknownModelError(
            f"unknown model {model_id!r}; known models: {known}") from None


def an_level(model_id: str, bundle: BundleConfig) -> NoiseLevel:
    """A-weighted generation level of one bundle, dB re 1 uW/m."""
    info = get_model(model_id)
    if info.kind != AN:
        raise UnknownModelError(f"{model_id!r} is not an audible-noise model")
    return NoiseLevel(info.fn(bundle.E, bundle.n, bundle.d), REF_UW)


def ri_excitation(model_id: str, bundle: BundleConfig) -> float:
    """RI excitation function of one bundle, dB."""
    info = get_model(model_id)
    if info.kind != RI:
        raise UnknownModelError(f"{model_id!r} is not an RI excitation model")
    return info.fn(bundle.E, bundle.n, bundle.d)


def evaluate_model(model_id: str, bundle: BundleConfig) -> float:
    """Kind-agnostic evaluation, used by the benchmark and sweep commands."""
    info = get_model(model_id)
    return info.fn(bundle.E, bundle.n, bundle.d)


# ---------------------------------------------------------------------------
# expression-graph forms of the discovered laws and regression baselines
# ---------------------------------------------------------------------------

def _pp(b, parent, *factors):
    """Attach a power-product Mul node; factors are (name, exponent) pairs."""
    head = b.node(exprgraph.MUL)
    for name, exp in factors:
        p = b.node(exprgraph.POW)
        v = b.node(exprgraph.VAR, name)
        b.edge(head, p, exp)
        b.edge(p, v, 1.0)
    if parent is not None:
        b.edge(parent, head)
    return head


def _log_factor(b, mul_node, base, *factors):
    log_node = b.node(exprgraph.LOG)
    b.edge(mul_node, log_node, base)
    arg = _pp(b, None, *factors)
    b.edge(log_node, arg, 1.0)
    return log_node


def _reciprocal(b, mul_node, inner_id):
    p = b.node(exprgraph.POW)
    b.edge(mul_node, p, -1.0)
    b.edge(p, inner_id, 1.0)
    return p


def _const_term(b, root, value):
    c = b.node(exprgraph.CONST)
    b.edge(root, c, value)


E10 = 10.0
EE = math.e


def graph_an_discovered_3() -> exprgraph.ExprGraph:
    # 0.0878*E*n + 72.3*log10(d) - 648.7/(E*log10(E))
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    t1 = _pp(b, None, ("E", 1), ("n", 1))
    b.edge(root, t1, 0.0878)
    t2 = b.node(exprgraph.MUL)
    _log_factor(b, t2, E10, ("d", 1))
    b.edge(root, t2, 72.3)
    t3 = b.node(exprgraph.MUL)
    p = b.node(exprgraph.POW)
    v = b.node(exprgraph.VAR, "E")
    b.edge(t3, p, -1.0)
    b.edge(p, v, 1.0)
    pl = b.node(exprgraph.POW)
    b.edge(t3, pl, -1.0)
    lg = b.node(exprgraph.LOG)
    b.edge(pl, lg, E10)
    b.edge(lg, b.node(exprgraph.VAR, "E"), 1.0)
    b.edge(root, t3, -648.7)
    return b.build(root)


def graph_an_discovered_4() -> exprgraph.ExprGraph:
    # 0.093*E*n + 55.02*log10(d) - 591/(E*d^2) - 5448/E^2
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    b.edge(root, _pp(b, None, ("E", 1), ("n", 1)), 0.093)
    t2 = b.node(exprgraph.MUL)
    _log_factor(b, t2, E10, ("d", 1))
    b.edge(root, t2, 55.02)
    b.edge(root, _pp(b, None, ("E", -1), ("d", -2)), -591.0)
    b.edge(root, _pp(b, None, ("E", -2)), -5448.0)
    return b.build(root)


def graph_an_discovered_5() -> exprgraph.ExprGraph:
    # 0.0116*n^2*d - 102.4*n/(E*ln(E)+d^2) + 9.216*d + 19.13*ln(n) - 677.3/E
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    b.edge(root, _pp(b, None, ("n", 2), ("d", 1)), 0.0116)
    t2 = _pp(b, None, ("n", 1))
    denom = b.node(exprgraph.ADD)
    s1 = b.node(exprgraph.MUL)
    pE = b.node(exprgraph.POW)
    b.edge(s1, pE, 1.0)
    b.edge(pE, b.node(exprgraph.VAR, "E"), 1.0)
    _log_factor(b, s1, EE, ("E", 1))
    b.edge(denom, s1, 1.0)
    b.edge(denom, _pp(b, None, ("d", 2)), 1.0)
    _reciprocal(b, t2, denom)
    b.edge(root, t2, -102.4)
    b.edge(root, _pp(b, None, ("d", 1)), 9.216)
    t4 = b.node(exprgraph.MUL)
    _log_factor(b, t4, EE, ("n", 1))
    b.edge(root, t4, 19.13)
    b.edge(root, _pp(b, None, ("E", -1)), -677.3)
    return b.build(root)


def graph_an_poly_baseline() -> exprgraph.ExprGraph:
    # 1.022*n + 10.4*d + 30.839 - 933.633/E
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    b.edge(root, _pp(b, None, ("n", 1)), 1.022)
    b.edge(root, _pp(b, None, ("d", 1)), 10.4)
    _const_term(b, root, 30.839)
    b.edge(root, _pp(b, None, ("E", -1)), -933.633)
    return b.build(root)


def graph_ri_discovered_3() -> exprgraph.ExprGraph:
    # 45.6*log10(E) - 819.5/(d*(E-1)) + 0.07*n*d^2
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    t1 = b.node(exprgraph.MUL)
    _log_factor(b, t1, E10, ("E", 1))
    b.edge(root, t1, 45.6)
    t2 = _pp(b, None, ("d", -1))
    shifted = b.node(exprgraph.ADD)
    b.edge(shifted, _pp(b, None, ("E", 1)), 1.0)
    c = b.node(exprgraph.CONST)
    b.edge(shifted, c, -1.0)
    _reciprocal(b, t2, shifted)
    b.edge(root, t2, -819.5)
    b.edge(root, _pp(b, None, ("n", 1), ("d", 2)), 0.07)
    return b.build(root)


def graph_ri_discovered_4() -> exprgraph.ExprGraph:
    # -117.2*n/(n^2*d-d) - 133.5*n/(E+n*d^2) + 98.68 - 629.7/E
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    t1 = _pp(b, None, ("n", 1))
    d1 = b.node(exprgraph.ADD)
    b.edge(d1, _pp(b, None, ("n", 2), ("d", 1)), 1.0)
    b.edge(d1, _pp(b, None, ("d", 1)), -1.0)
    _reciprocal(b, t1, d1)
    b.edge(root, t1, -117.2)
    t2 = _pp(b, None, ("n", 1))
    d2 = b.node(exprgraph.ADD)
    b.edge(d2, _pp(b, None, ("E", 1)), 1.0)
    b.edge(d2, _pp(b, None, ("n", 1), ("d", 2)), 1.0)
    _reciprocal(b, t2, d2)
    b.edge(root, t2, -133.5)
    _const_term(b, root, 98.68)
    b.edge(root, _pp(b, None, ("E", -1)), -629.7)
    return b.build(root)


def graph_ri_discovered_5() -> exprgraph.ExprGraph:
    # -45.87*E/(n^3*d) + 4.499*d + 72.88 - 522.2/E - 543.4/(E*d)
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    b.edge(root, _pp(b, None, ("E", 1), ("n", -3), ("d", -1)), -45.87)
    b.edge(root, _pp(b, None, ("d", 1)), 4.499)
    _const_term(b, root, 72.88)
    b.edge(root, _pp(b, None, ("E", -1)), -522.2)
    b.edge(root, _pp(b, None, ("E", -1), ("d", -1)), -543.4)
    return b.build(root)


def graph_ri_poly_baseline() -> exprgraph.ExprGraph:
    # 6.51*d + 10.287*log10(n) + 55.22 - 671.7/E
    b = exprgraph.GraphBuilder()
    root = b.node(exprgraph.ADD)
    b.edge(root, _pp(b, None, ("d", 1)), 6.51)
    t2 = b.node(exprgraph.MUL)
    _log_factor(b, t2, E10, ("n", 1))
    b.edge(root, t2, 10.287)
    _const_term(b, root, 55.22)
    b.edge(root, _pp(b, None, ("E", -1)), -671.7)
    return b.build(root)


GRAPH_FORMS: dict[str, Callable[[], exprgraph.ExprGraph]] = {
    "an-discovered-3": graph_an_discovered_3,
    "an-discovered-4": graph_an_discovered_4,
    "an-discovered-5": graph_an_discovered_5,
    "an-poly-baseline": graph_an_poly_baseline,
    "ri-discovered-3": graph_ri_discovered_3,
    "ri-discovered-4": graph_ri_discovered_4,
    "ri-discovered-5": graph_ri_discovered_5,
    "ri-poly-baseline": graph_ri_poly_baseline,
}


def discovered_graph(model_id: str) -> exprgraph.ExprGraph:
    """Expression-graph form of a discovered law or regression baseline."""
    try:
        return GRAPH_FORMS[model_id]()
    except KeyError:
        raise UnknownModelError(
            f"no graph form for {model_id!r}; available: "
            f"{', '.join(sorted(GRAPH_FORMS))}") from None
