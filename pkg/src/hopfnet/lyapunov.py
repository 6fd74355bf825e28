"""First Lyapunov coefficient and the critical coupling ratio.

For a planar system ``x' = y + f(x, y)``, ``y' = -x + g(x, y)`` the first
Lyapunov coefficient decides criticality: ``l1 > 0`` subcritical, ``l1 < 0``
supercritical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DegenerateDenominator
from .spectral import GammaSet

DEGENERACY_TOL = 1e-6
DEGENERATE_SUM_TOL = 1e-14


class Criticality(str, Enum):
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class HopfDerivs:
    """Partial derivatives of the nonlinearities ``f`` and ``g`` at the origin."""

    f_xx: float = 0.0
    f_xy: float = 0.0
    f_yy: float = 0.0
    f_xxx: float = 0.0
    f_xxy: float = 0.0
    f_xyy: float = 0.0
    f_yyy: float = 0.0
    g_xx: float = 0.0
    g_xy: float = 0.0
    g_yy: float = 0.0
    g_xxx: float = 0.0
    g_xxy: float = 0.0
    g_xyy: float = 0.0
    g_yyy: float = 0.0


@dataclass(frozen=True)
class BifurcationReport:
    a: float
    b: float
    n: int
    l1_subunit: float
    l1_full: float
    term_b: float
    term_a: float
    gamma: Optional[float]
    threshold: Optional[float]
    classification: Criticality
    degeneracy_band: float

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["classification"] = self.classification.value
        return d


def l1_general(d: HopfDerivs) -> float:
    cubic = d.f_xxx + d.f_xyy + d.g_xxy + d.g_yyy
    quad = d.f_xy * (d.f_xx + d.f_yy) - d.g_xy * (d.g_xx + d.g_yy) - d.f_xx * d.g_xx + d.f_yy * d.g_yy
    return (cubic + quad) / 16.0


def subunit_derivs(a: float, b: float) -> HopfDerivs:
    """Derivatives of ``f = a x**2 + b x**3``, ``g = 0``."""
    return HopfDerivs(f_xx=2.0 * a, f_xxx=6.0 * b)


def l1_subunit(b: float) -> float:
    # a drops out: with f_xy = g = 0 every quadratic product vanishes
    return l1_general(subunit_derivs(0.0, b))


def l1_terms(a: float, b: float, n: int, g: GammaSet) -> tuple[float, float]:
    term_b = 0.375 * b * n * g.gamma_quartic
    term_a = a * a * n * g.weighted_sum
    return term_b, term_a


def l1_full(a: float, b: float, n: int, g: GammaSet) -> float:
    term_b, term_a = l1_terms(a, b, n, g)
    return term_b + term_a


def gamma_threshold(g: GammaSet, tol: float = DEGENERATE_SUM_TOL) -> float:
    if not g.weighted_sum > tol:
        raise DegenerateDenominator(
            f"weighted_sum={g.weighted_sum:.3g} <= {tol:.1g}; network is effectively uncoupled"
        )
    return math.sqrt(0.375 * g.gamma_quartic / g.weighted_sum)


def _sign_tag(value: float, band: float) -> Criticality:
    if value > band:
        return Criticality.SUBCRITICAL
    if value < -band:
        return Criticality.SUPERCRITICAL
    return Criticality.DEGENERATE


def classify_analytic(
    a: float, b: float, n: int, g: GammaSet, degeneracy_tol: float = DEGENERACY_TOL
) -> BifurcationReport:
    term_b, term_a = l1_terms(a, b, n, g)
    l1 = term_b + term_a
    sub = l1_subunit(b)
    try:
        gamma: Optional[float] = gamma_threshold(g)
    except DegenerateDenominator:
        gamma = None

    if gamma is None:
        # uncoupled limit: only the subunit rule is left
        tag = _sign_tag(sub, 0.0)
        return BifurcationReport(a, b, n, sub, l1, term_b, term_a, None, None, tag, 0.0)

    band_value = degeneracy_tol * (abs(term_b) + abs(term_a))
    tag = _sign_tag(l1, band_value)
    threshold = gamma * math.sqrt(-b) if b < 0 else None
    band = degeneracy_tol * threshold if threshold is not None else 0.0

    if threshold is not None and tag is not Criticality.DEGENERATE:
        by_ratio = Criticality.SUBCRITICAL if abs(a) > threshold else Criticality.SUPERCRITICAL
        if by_ratio is not tag:
            raise AssertionError(
                f"threshold rule ({by_ratio.value}) disagrees with sign of l1={l1!r} "
                f"at a={a!r}, b={b!r}"
            )
    return BifurcationReport(a, b, n, sub, l1, term_b, term_a, gamma, threshold, tag, band)
