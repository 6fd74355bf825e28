"""Eigendecomposition of coupling matrices and the eigenvector moments
that enter the full-network Lyapunov coefficient.

For a symmetric ``M`` with orthonormal eigenvectors ``v_1..v_N`` (columns of
``V``) and leading eigenvector ``v_1``::

    gamma_quartic = sum_phi V[phi,1]**4
    gamma_cross_k = sum_phi V[phi,k] * V[phi,1]**2          (k >= 2)
    weighted_sum  = sum_k gamma_cross_k**2 * (-lam_k) / (4 lam_k**2 + 9)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConvergenceFailure, DegenerateLeading, NonNegativeBulk, NotSymmetric
from .network import SYM_TOL, CouplingMatrix, symmetry_defect

DEGENERATE_GAP = 1e-8
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    vectors: np.ndarray  # column k is the eigenvector of eigenvalues[k]

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def leading(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def leading_vector(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[0] - self.eigenvalues[1]) if self.n > 1 else float("inf")


@dataclass(frozen=True)
class GammaSet:
    gamma_quartic: float
    gamma_cross: np.ndarray
    weighted_sum: float

    def to_dict(self) -> dict:
        return {
            "gamma_quartic": float(self.gamma_quartic),
            "gamma_cross": [float(c) for c in self.gamma_cross],
            "weighted_sum": float(self.weighted_sum),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GammaSet":
        return cls(float(d["gamma_quartic"]), np.asarray(d["gamma_cross"], dtype=float), float(d["weighted_sum"]))


def normalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive.

    Magnitudes within a few ulps of the column maximum count as ties; the
    lowest such index wins.
    """
    v = np.array(vectors, dtype=float, copy=True)
    mag = np.abs(v)
    near_max = mag >= mag.max(axis=0) * (1.0 - TIE_RTOL)
    idx = np.argmax(near_max, axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def eigendecompose(m: Union[CouplingMatrix, np.ndarray], sym_tol: float = SYM_TOL) -> Spectrum:
    entries = m.entries if isinstance(m, CouplingMatrix) else np.asarray(m, dtype=float)
    defect = symmetry_defect(entries)
    if defect > sym_tol:
        raise NotSymmetric(f"symmetry defect {defect:.3g} exceeds tolerance {sym_tol:.3g}")
    sym = 0.5 * (entries + entries.T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # LAPACK syevd iteration cap
        raise ConvergenceFailure(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(w, kind="stable")[::-1]
    w = w[order]
    v = normalize_signs(v[:, order])
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v)


def eigenbasis_coordinates(s: Spectrum) -> np.ndarray:
    """Coordinates ``c_k = <v_k, v_1**2>`` of the squared leading vector."""
    v1 = s.vectors[:, 0]
    return s.vectors.T @ (v1 * v1)


def mode_weights(eigenvalues: np.ndarray) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    return -lam / (4.0 * lam * lam + 9.0)


def gamma_set(s: Spectrum, check_gap: bool = True) -> GammaSet:
    if s.n < 2:
        raise NonNegativeBulk("need at least one non-leading mode")
    bulk = s.eigenvalues[1:]
    if np.any(bulk >= 0):
        raise NonNegativeBulk(f"non-leading eigenvalue {bulk.max():.6g} is not negative")
    if check_gap and s.gap < DEGENERATE_GAP:
        raise DegenerateLeading(f"leading gap {s.gap:.3g} below {DEGENERATE_GAP}")
    v1 = s.vectors[:, 0]
    quartic = float(np.sum(v1**4))
    cross = eigenbasis_coordinates(s)[1:]
    weighted = float(np.sum(cross**2 * mode_weights(bulk)))
    return GammaSet(quartic, cross, weighted)
