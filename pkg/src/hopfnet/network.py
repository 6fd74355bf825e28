"""Random coupling matrices with one controlled leading eigenvalue.

Two constructions are provided:

* ``build_spectral`` draws a Haar-random orthonormal basis and places a
  prescribed spectrum on it, so every eigen-quantity is known exactly.
* ``build_wigner_deflated`` starts from a shifted Wigner (GOE-like) matrix and
  moves only its top eigenvalue with a rank-one update.

Randomness always comes from ``numpy.random.default_rng(seed)`` (PCG64).
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import BulkNotNegative, InvalidBulk, InvalidSize, LeadingInsideBulk

SYM_TOL = 1e-12
EIG_TOL = 1e-8


class Construction(str, Enum):
    SPECTRAL_SYNTHESIS = "SpectralSynthesis"
    WIGNER_DEFLATED = "WignerDeflated"
    INPUT_PLUS_CONNECTIVITY = "InputPlusConnectivity"
    EXTERNAL = "External"


class BulkDistribution(str, Enum):
    UNIFORM = "UniformOnInterval"
    SEMICIRCLE = "SemicircleScaled"


@dataclass(frozen=True)
class BulkSpec:
    """Non-leading eigenvalues are drawn from ``[-d_max, -d_min]``."""

    d_min: float
    d_max: float
    distribution: BulkDistribution = BulkDistribution.UNIFORM

    def __post_init__(self):
        if not (np.isfinite(self.d_min) and np.isfinite(self.d_max)):
            raise InvalidBulk("bulk bounds must be finite")
        if not 0 < self.d_min < self.d_max:
            raise InvalidBulk(f"need 0 < d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}")
        object.__setattr__(self, "distribution", BulkDistribution(self.distribution))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        lo, hi = -self.d_max, -self.d_min
        if self.distribution is BulkDistribution.UNIFORM:
            return rng.uniform(lo, hi, size)
        # semicircle density on [lo, hi] is a Beta(3/2, 3/2) law rescaled
        return lo + (hi - lo) * rng.beta(1.5, 1.5, size)


@dataclass(frozen=True)
class CouplingMatrix:
    """Dense N x N coupling matrix ``M`` plus the metadata it was built with.

    No validation happens here; use :func:`validate_coupling`.
    """

    entries: np.ndarray
    leading_target: float
    construction: Construction = Construction.EXTERNAL
    bulk: Optional[BulkSpec] = None
    seed: Optional[int] = None
    sampled_spectrum: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidSize(f"coupling matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "construction", Construction(self.construction))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def with_leading(self, value: float) -> "CouplingMatrix":
        """Return a copy whose top eigenvalue is moved to ``value``.

        Implemented as the rank-one update ``M + (value - lambda_1) v1 v1^T``,
        which leaves every eigenvector and every other eigenvalue untouched.
        """
        w, v = np.linalg.eigh(0.5 * (self.entries + self.entries.T))
        u = v[:, -1]
        m = self.entries + (value - w[-1]) * np.outer(u, u)
        m = 0.5 * (m + m.T)
        return CouplingMatrix(m, float(value), self.construction, self.bulk, self.seed)


@dataclass(frozen=True)
class ValidationReport:
    symmetry_defect: float
    symmetric: bool
    leading: float
    leading_ok: bool
    bulk_negative: bool
    bulk_in_interval: Optional[bool]
    gap: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with a positive-diagonal R."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def build_spectral(n: int, bulk: BulkSpec, leading: float, seed: int) -> CouplingMatrix:
    """Synthesize ``M = Q D Q^T`` with ``D = diag(leading, bulk samples)``.

    The first column of ``Q`` is the leading eigenvector.
    """
    if n < 2:
        raise InvalidSize(f"n must be >= 2, got {n}")
    if not isinstance(bulk, BulkSpec):
        raise InvalidBulk("bulk must be a BulkSpec")
    if leading <= -bulk.d_min + EIG_TOL:
        raise LeadingInsideBulk(
            f"leading={leading} is not separated from the bulk upper edge {-bulk.d_min}"
        )
    rng = np.random.default_rng(seed)
    q = haar_orthogonal(n, rng)
    d = np.empty(n)
    d[0] = leading
    d[1:] = bulk.sample(rng, n - 1)
    m = (q * d) @ q.T
    m = 0.5 * (m + m.T)
    return CouplingMatrix(
        m, float(leading), Construction.SPECTRAL_SYNTHESIS, bulk, seed, sampled_spectrum=d
    )


def wigner_matrix(n: int, entry_std: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric Gaussian matrix; off-diagonal variance ``entry_std**2 / n``,
    diagonal variance twice that."""
    s = entry_std / np.sqrt(n)
    g = rng.standard_normal((n, n)) * s
    return (g + g.T) / np.sqrt(2.0)


def build_wigner_deflated(
    n: int, entry_std: float, shift: float, leading: float, seed: int
) -> CouplingMatrix:
    if n < 2:
        raise InvalidSize(f"n must be >= 2, got {n}")
    if entry_std < 0 or shift <= 0:
        raise InvalidBulk("entry_std must be >= 0 and shift > 0")
    rng = np.random.default_rng(seed)
    a = wigner_matrix(n, entry_std, rng) - shift * np.eye(n)
    w, v = np.linalg.eigh(a)
    if w[-2] >= 0:
        raise BulkNotNegative(
            f"second eigenvalue {w[-2]:.6g} >= 0 after shift={shift}; increase shift"
        )
    if leading <= w[-2] + EIG_TOL:
        raise LeadingInsideBulk(f"leading={leading} does not clear the bulk edge {w[-2]:.6g}")
    u = v[:, -1]
    m = a + (leading - w[-1]) * np.outer(u, u)
    m = 0.5 * (m + m.T)
    spectrum = np.concatenate([[leading], w[-2::-1]])
    return CouplingMatrix(
        m, float(leading), Construction.WIGNER_DEFLATED, None, seed, sampled_spectrum=spectrum
    )


def symmetry_defect(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def validate_coupling(m: CouplingMatrix, eig_tol: float = EIG_TOL, sym_tol: float = SYM_TOL) -> ValidationReport:
    defect = symmetry_defect(m.entries)
    sym = 0.5 * (m.entries + m.entries.T)
    w = np.linalg.eigvalsh(sym)[::-1]
    leading = float(w[0])
    rest = w[1:]
    near = np.abs(w - m.leading_target) <= eig_tol
    leading_ok = bool(near[0] and not near[1:].any())
    bulk_negative = bool(np.all(rest < 0))
    in_interval = None
    if m.bulk is not None:
        in_interval = bool(
            np.all(rest >= -m.bulk.d_max - eig_tol) and np.all(rest <= -m.bulk.d_min + eig_tol)
        )
    gap = float(w[0] - w[1]) if len(w) > 1 else float("inf")
    passed = defect <= sym_tol and leading_ok and bulk_negative and in_interval is not False
    return ValidationReport(defect, defect <= sym_tol, leading, leading_ok, bulk_negative, in_interval, gap, bool(passed))


def format_matrix_csv(entries: np.ndarray) -> str:
    entries = np.asarray(entries, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([entries.shape[0]])
    for row in entries:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_matrix_csv(path: Union[str, os.PathLike], m: Union[CouplingMatrix, np.ndarray]) -> None:
    entries = m.entries if isinstance(m, CouplingMatrix) else m
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix_csv(entries))


def read_matrix_csv(path: Union[str, os.PathLike]) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InvalidSize(f"{path}: empty matrix file")
    n = int(rows[0][0])
    body = rows[1:]
    if len(body) != n or any(len(r) != n for r in body):
        raise InvalidSize(f"{path}: expected {n} rows of {n} values")
    return np.array([[float(v) for v in r] for r in body])
