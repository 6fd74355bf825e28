"""Input-driven networks ``M = R + C`` and GAS/NH type switching.

``R = diag(r)`` carries the external input to each oscillator and ``C`` is a
nonnegative symmetric connectivity. Shifting ``r`` uniformly moves every
eigenvalue of ``M`` by the same amount, which is how the leading eigenvalue
is placed at a chosen bifurcation distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .dynamics import DynamicsSettings, OscillatorNetwork, Outcome, initial_state, steady_amplitude
from .errors import AsymmetricC, DaleViolation, DimensionMismatch, PreconditionViolation
from .lyapunov import gamma_threshold
from .network import SYM_TOL, Construction, CouplingMatrix, symmetry_defect
from .spectral import eigendecompose, gamma_set

POS_TOL = 1e-10
EXCLUSION_FRAC = 0.2


@dataclass(frozen=True)
class InputNetworkSpec:
    r: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if r.ndim != 1 or c.shape != (r.size, r.size):
            raise DimensionMismatch(f"r has length {r.size} but C has shape {c.shape}")
        if np.any(c < 0):
            i, j = np.argwhere(c < 0)[0]
            raise DaleViolation(f"C[{i},{j}] = {c[i, j]!r} is negative")
        defect = symmetry_defect(c)
        if defect > SYM_TOL:
            raise AsymmetricC(f"C symmetry defect {defect:.3g}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.r.size

    def matrix(self) -> np.ndarray:
        m = np.diag(self.r) + self.c
        return 0.5 * (m + m.T)

    def to_json(self) -> str:
        return json.dumps({"r": self.r.tolist(), "c": self.c.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "InputNetworkSpec":
        d = json.loads(text)
        return cls(np.array(d["r"], dtype=float), np.array(d["c"], dtype=float))


@dataclass(frozen=True)
class PerronReport:
    leading: float
    gap: float
    eigenvector_positive: bool
    irreducible: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class TypeDemoReport:
    mode: str  # GAS, NH, Quiescent or Inconclusive
    alignment: Optional[float]
    amplitude: Optional[float]
    escape_time: Optional[float]
    leading: float
    gap: float
    gamma: Optional[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def random_input_spec(n: int, seed: int, density: float = 0.1,
                      r_range: tuple[float, float] = (-1.0, 0.0)) -> InputNetworkSpec:
    """Random irreducible spec: sparse uniform(0, 1) weights plus a random
    spanning path, and inputs drawn uniformly from ``r_range``."""
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((n, n)) < density, 1)
    c = np.where(mask, rng.random((n, n)), 0.0)
    order = rng.permutation(n)
    c[order[:-1], order[1:]] += rng.uniform(0.1, 1.0, n - 1)
    c = np.triu(c, 1) + np.triu(c, 1).T + np.tril(c, -1) + np.tril(c, -1).T
    r = rng.uniform(r_range[0], r_range[1], n)
    return InputNetworkSpec(r, c)


def assemble_input_network(spec: InputNetworkSpec, a: float, b: float) -> OscillatorNetwork:
    m = spec.matrix()
    leading = float(np.linalg.eigvalsh(m)[-1])
    return OscillatorNetwork(a, b, CouplingMatrix(m, leading, Construction.INPUT_PLUS_CONNECTIVITY))


def is_irreducible(m: np.ndarray) -> bool:
    off = np.asarray(m) != 0
    np.fill_diagonal(off, False)
    count, _ = connected_components(off, directed=False)
    return count == 1


def perron_check(m: CouplingMatrix, pos_tol: float = POS_TOL) -> PerronReport:
    s = eigendecompose(m)
    return PerronReport(s.leading, s.gap, bool(np.all(s.leading_vector > pos_tol)),
                        is_irreducible(m.entries))


def tune_input_to_criticality(spec: InputNetworkSpec, target: float) -> InputNetworkSpec:
    shift = target - float(np.linalg.eigvalsh(spec.matrix())[-1])
    return InputNetworkSpec(spec.r + shift, spec.c)


def type_demo(
    spec: InputNetworkSpec,
    a: float,
    b: float,
    lambda_on: float,
    seed: int = 0,
    settings: DynamicsSettings = DynamicsSettings(),
) -> TypeDemoReport:
    """Place the leading eigenvalue at ``lambda_on`` and watch a small random
    input state: a stable cycle means GAS behaviour, escape means NH."""
    if not b < 0:
        raise PreconditionViolation(f"type demo needs b < 0, got b={b!r}")
    if not is_irreducible(spec.c):
        raise PreconditionViolation("connectivity C is reducible")
    tuned = tune_input_to_criticality(spec, lambda_on)
    net = assemble_input_network(tuned, a, b)
    s = eigendecompose(net.m)
    gamma = None
    if s.eigenvalues[1] < 0:
        gamma = gamma_threshold(gamma_set(s))
        threshold = gamma * math.sqrt(-b)
        if abs(abs(a) - threshold) <= EXCLUSION_FRAC * threshold:
            raise PreconditionViolation(
                f"|a|={abs(a):.4g} lies within {EXCLUSION_FRAC:.0%} of the threshold {threshold:.4g}"
            )
    v1 = s.leading_vector
    init = initial_state(v1, settings.init_scale, np.random.default_rng(seed))
    meas = steady_amplitude(net, v1, init, settings)
    mode = {
        Outcome.LIMIT_CYCLE: "GAS",
        Outcome.ESCAPED: "NH",
        Outcome.DECAYED: "Quiescent",
    }.get(meas.outcome, "Inconclusive")
    return TypeDemoReport(mode, meas.alignment, meas.amplitude, meas.escape_time,
                          s.leading, s.gap, gamma)
