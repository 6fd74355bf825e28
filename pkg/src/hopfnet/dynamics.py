"""Direct simulation of the coupled oscillator network and numerical
criticality detection.

Each unit obeys ``x_i' = y_i + a x_i**2 + b x_i**3 + (M x)_i``, ``y_i' = -x_i``.
Integration is fixed-step RK4 compiled with numba; long runs are advanced in
chunks so memory stays bounded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numba
import numpy as np
from scipy import signal, stats

from .errors import DimensionMismatch, EmptyGrid, NonFiniteState
from .lyapunov import Criticality
from .network import CouplingMatrix
from .spectral import eigendecompose

_COMPLETED, _ESCAPED, _NONFINITE = 0, 1, 2


class Outcome(str, Enum):
    DECAYED = "DecayedToOrigin"
    LIMIT_CYCLE = "LimitCycle"
    ESCAPED = "Escaped"
    INCONCLUSIVE = "Inconclusive"


class Protocol(str, Enum):
    FRESH = "FreshSmallInit"
    UP = "ContinuationUp"
    DOWN = "ContinuationDown"


@dataclass(frozen=True)
class DynamicsSettings:
    dt: float = 1e-3
    stride: int = 10
    t_transient: float = 2000.0
    t_measure: float = 500.0
    decay_tol: float = 1e-5
    cycle_tol: float = 0.02
    escape_bound: float = 1.0
    init_scale: float = 1e-3
    init_scale_large: float = 1.0
    fit_tol_frac: float = 0.2
    min_r_squared: float = 0.95
    chunk: float = 100.0
    align_window: float = 4.0 * math.pi

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"dynamics setting {name} must be positive, got {value!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class OscillatorNetwork:
    a: float
    b: float
    m: CouplingMatrix

    @property
    def n(self) -> int:
        return self.m.n

    def with_leading(self, value: float) -> "OscillatorNetwork":
        return replace(self, m=self.m.with_leading(value))


@dataclass(frozen=True)
class StateVector:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise DimensionMismatch(f"x and y must be equal-length vectors, got {x.shape} and {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        return cls(np.zeros(n), np.zeros(n))

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.x)), np.max(np.abs(self.y))))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    final: StateVector
    escaped: bool = False
    escape_time: Optional[float] = None

    def to_csv(self, path) -> None:
        n = self.x.shape[1]
        header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for k in range(self.t.shape[0]):
                row = [self.t[k], *self.x[k], *self.y[k]]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class AmplitudeMeasure:
    outcome: Outcome
    amplitude: Optional[float] = None
    period_estimate: Optional[float] = None
    escape_time: Optional[float] = None
    alignment: Optional[float] = None
    peak_spread: Optional[float] = None
    final: Optional[StateVector] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "amplitude": self.amplitude,
            "period_estimate": self.period_estimate,
            "escape_time": self.escape_time,
            "alignment": self.alignment,
            "peak_spread": self.peak_spread,
        }


@dataclass
class SweepResult:
    lambda_grid: np.ndarray
    protocol: Protocol
    measures: list
    fit: Optional[dict] = None

    def to_csv(self) -> str:
        lines = ["lambda,outcome,amplitude,period"]
        for lam, m in zip(self.lambda_grid, self.measures):
            amp = "" if m.amplitude is None else repr(float(m.amplitude))
            per = "" if m.period_estimate is None else repr(float(m.period_estimate))
            lines.append(f"{float(lam)!r},{m.outcome.value},{amp},{per}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "lambda_grid": [float(v) for v in self.lambda_grid],
            "measures": [m.to_dict() for m in self.measures],
            "fit": self.fit,
        }


@dataclass
class ProbeResult:
    lam: float
    small: AmplitudeMeasure
    large: AmplitudeMeasure

    @property
    def bistable(self) -> bool:
        return self.small.outcome is Outcome.DECAYED and self.large.outcome is Outcome.ESCAPED

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "small": self.small.to_dict(), "large": self.large.to_dict(),
                "bistable": self.bistable}


@dataclass
class NumericClassification:
    classification: Criticality | None  # None means inconclusive
    evidence: dict

    @property
    def label(self) -> str:
        return "Inconclusive" if self.classification is None else self.classification.value


# ---------------------------------------------------------------------------
# right-hand side and integrator


def rhs(net: OscillatorNetwork, s: StateVector) -> StateVector:
    if s.n != net.n:
        raise DimensionMismatch(f"state has {s.n} units, network has {net.n}")
    x = s.x
    dx = s.y + net.a * x * x + net.b * x * x * x + net.m.entries @ x
    return StateVector(dx, -x)


@numba.njit(cache=True, nogil=True)
def _deriv(m, a, b, x, y, dx, dy):
    n = x.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += m[i, j] * x[j]
        xi = x[i]
        dx[i] = y[i] + a * xi * xi + b * xi * xi * xi + acc
        dy[i] = -xi


@numba.njit(cache=True, nogil=True)
def _rk4_kernel(m, a, b, x, y, dt, nsteps, stride, bound, out_x, out_y):
    """Advance (x, y) in place; returns (steps_taken, status)."""
    n = x.shape[0]
    k1x = np.empty(n); k1y = np.empty(n)
    k2x = np.empty(n); k2y = np.empty(n)
    k3x = np.empty(n); k3y = np.empty(n)
    k4x = np.empty(n); k4y = np.empty(n)
    tx = np.empty(n); ty = np.empty(n)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for s in range(nsteps):
        _deriv(m, a, b, x, y, k1x, k1y)
        for i in range(n):
            tx[i] = x[i] + h2 * k1x[i]
            ty[i] = y[i] + h2 * k1y[i]
        _deriv(m, a, b, tx, ty, k2x, k2y)
        for i in range(n):
            tx[i] = x[i] + h2 * k2x[i]
            ty[i] = y[i] + h2 * k2y[i]
        _deriv(m, a, b, tx, ty, k3x, k3y)
        for i in range(n):
            tx[i] = x[i] + dt * k3x[i]
            ty[i] = y[i] + dt * k3y[i]
        _deriv(m, a, b, tx, ty, k4x, k4y)
        peak = 0.0
        finite = True
        for i in range(n):
            x[i] += h6 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i])
            y[i] += h6 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i])
            ax = abs(x[i])
            ay = abs(y[i])
            if not (ax < np.inf and ay < np.inf):
                finite = False
            if ax > peak:
                peak = ax
            if ay > peak:
                peak = ay
        if (s + 1) % stride == 0:
            r = (s + 1) // stride - 1
            for i in range(n):
                out_x[r, i] = x[i]
                out_y[r, i] = y[i]
        if peak > bound:
            return s + 1, _ESCAPED
        if not finite:
            return s + 1, _NONFINITE
    return nsteps, _COMPLETED


def _step_count(t_end: float, dt_max: float) -> int:
    return max(1, int(math.ceil(t_end / dt_max - 1e-9)))


def integrate(
    net: OscillatorNetwork,
    init: StateVector,
    dt_max: float = 1e-3,
    t_end: float = 1.0,
    escape_bound: float = math.inf,
    stride: int = 10,
    t0: float = 0.0,
) -> Trajectory:
    """Fixed-step RK4 from ``t0`` to ``t0 + t_end``.

    The step is ``t_end / ceil(t_end / dt_max)`` so the last step lands on
    ``t_end`` exactly. Samples are kept every ``stride`` steps; the initial
    state is the first sample. Integration stops as soon as any coordinate
    exceeds ``escape_bound`` in magnitude.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if init.n != net.n:
        raise DimensionMismatch(f"state has {init.n} units, network has {net.n}")
    nsteps = _step_count(t_end, dt_max)
    dt = t_end / nsteps
    x = np.array(init.x, dtype=float)
    y = np.array(init.y, dtype=float)
    if init.max_abs() > escape_bound:
        return Trajectory(np.array([t0]), x[None, :], y[None, :], StateVector(x, y), True, t0)
    rows = nsteps // stride
    out_x = np.empty((rows, net.n))
    out_y = np.empty((rows, net.n))
    m = np.ascontiguousarray(net.m.entries)
    taken, status = _rk4_kernel(m, float(net.a), float(net.b), x, y, dt, nsteps, int(stride),
                                float(escape_bound), out_x, out_y)
    t_final = t0 + taken * dt
    if status == _NONFINITE:
        raise NonFiniteState(t_final)
    kept = taken // stride
    t = t0 + dt * stride * np.arange(0, kept + 1)
    xs = np.vstack([init.x[None, :], out_x[:kept]])
    ys = np.vstack([init.y[None, :], out_y[:kept]])
    escaped = status == _ESCAPED
    if taken % stride:
        # the final (or crossing) state is always the last sample
        t = np.append(t, t_final)
        xs = np.vstack([xs, x[None, :]])
        ys = np.vstack([ys, y[None, :]])
    return Trajectory(t, xs, ys, StateVector(x, y), escaped, t_final if escaped else None)


# ---------------------------------------------------------------------------
# measurements


def principal_alignment(samples: np.ndarray, v1: np.ndarray) -> float:
    """|cos| between ``v1`` and the dominant direction of a cloud of x-samples."""
    if samples.shape[0] == 0 or not np.any(samples):
        return 0.0
    _, _, vt = np.linalg.svd(samples, full_matrices=False)
    return float(abs(vt[0] @ v1) / np.linalg.norm(v1))


def _refine_peaks(t: np.ndarray, u: np.ndarray, idx: np.ndarray):
    """Parabolic refinement of sampled maxima."""
    idx = idx[(idx > 0) & (idx < len(u) - 1)]
    y0, y1, y2 = u[idx - 1], u[idx], u[idx + 1]
    denom = y0 - 2.0 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom != 0, 0.5 * (y0 - y2) / denom, 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    step = 0.5 * (t[idx + 1] - t[idx - 1])
    return t[idx] + shift * step, y1 - 0.25 * (y0 - y2) * shift, idx


def cycle_statistics(t: np.ndarray, p: np.ndarray):
    """Peaks of ``|p|``: returns (amplitude, relative spread, period) or None.

    Spread is evaluated separately for maxima and minima of ``p`` because the
    quadratic nonlinearity makes the orbit slightly asymmetric.
    """
    u = np.abs(p)
    idx, _ = signal.find_peaks(u)
    if len(idx) < 3:
        return None
    times, values, idx = _refine_peaks(t, u, idx)
    pos = p[idx] > 0
    spreads = []
    for sel in (pos, ~pos):
        if sel.sum() >= 2:
            v = values[sel]
            spreads.append((v.max() - v.min()) / v.mean())
    if not spreads or pos.sum() < 2:
        return None
    period = float(np.mean(np.diff(times[pos])))
    return float(values.mean()), float(max(spreads)), period


def initial_state(v1: np.ndarray, scale: float, rng: Optional[np.random.Generator] = None,
                  jitter: float = 0.0) -> StateVector:
    """``scale * v1`` (or a random unit direction if ``jitter`` is 0 and rng is given)."""
    n = v1.shape[0]
    if rng is None:
        return StateVector(scale * v1, np.zeros(n))
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    if jitter == 0.0:
        return StateVector(scale * d, np.zeros(n))
    return StateVector(scale * v1 + jitter * d, np.zeros(n))


def steady_amplitude(
    net: OscillatorNetwork,
    v1: np.ndarray,
    init: StateVector,
    settings: DynamicsSettings = DynamicsSettings(),
) -> AmplitudeMeasure:
    """Run through the transient, then measure ``p(t) = v1 . x(t)``."""
    s = settings
    state = init
    t = 0.0
    window_x = np.empty((0, net.n))
    window_t = np.empty(0)

    def escaped(traj: Trajectory) -> AmplitudeMeasure:
        keep_t = np.concatenate([window_t, traj.t])
        keep_x = np.vstack([window_x, traj.x])
        sel = keep_t >= traj.escape_time - s.align_window
        return AmplitudeMeasure(Outcome.ESCAPED, escape_time=traj.escape_time,
                                alignment=principal_alignment(keep_x[sel], v1), final=traj.final)

    while t < s.t_transient - 1e-9:
        span = min(s.chunk, s.t_transient - t)
        traj = integrate(net, state, s.dt, span, s.escape_bound, s.stride, t0=t)
        if traj.escaped:
            return escaped(traj)
        keep = traj.t >= traj.t[-1] - s.align_window
        window_t, window_x = traj.t[keep], traj.x[keep]
        state, t = traj.final, t + span

    p_parts, t_parts = [], []
    scatter = np.zeros((net.n, net.n))
    end = t + s.t_measure
    while t < end - 1e-9:
        span = min(s.chunk, end - t)
        traj = integrate(net, state, s.dt, span, s.escape_bound, s.stride, t0=t)
        if traj.escaped:
            return escaped(traj)
        xs = traj.x[1:] if p_parts else traj.x
        ts = traj.t[1:] if p_parts else traj.t
        p_parts.append(xs @ v1)
        t_parts.append(ts)
        scatter += xs.T @ xs
        keep = traj.t >= traj.t[-1] - s.align_window
        window_t, window_x = traj.t[keep], traj.x[keep]
        state, t = traj.final, t + span

    p = np.concatenate(p_parts)
    times = np.concatenate(t_parts)
    if np.max(np.abs(p)) < s.decay_tol:
        return AmplitudeMeasure(Outcome.DECAYED, final=state)
    w, vecs = np.linalg.eigh(scatter)
    alignment = float(abs(vecs[:, -1] @ v1) / np.linalg.norm(v1))
    stats_ = cycle_statistics(times, p)
    if stats_ is None:
        return AmplitudeMeasure(Outcome.INCONCLUSIVE, alignment=alignment, final=state)
    amp, spread, period = stats_
    if spread < s.cycle_tol:
        return AmplitudeMeasure(Outcome.LIMIT_CYCLE, amp, period, alignment=alignment,
                                peak_spread=spread, final=state)
    return AmplitudeMeasure(Outcome.INCONCLUSIVE, alignment=alignment, peak_spread=spread, final=state)


def fit_amplitude_squared(grid: Sequence[float], measures: Sequence[AmplitudeMeasure]) -> Optional[dict]:
    """Least squares ``amplitude**2 = slope * lambda + intercept`` over the
    limit-cycle points with ``lambda > 0``; needs at least four of them."""
    pts = [(lam, m.amplitude**2) for lam, m in zip(grid, measures)
           if lam > 0 and m.outcome is Outcome.LIMIT_CYCLE]
    if len(pts) < 4:
        return None
    lam, amp2 = np.array(pts).T
    res = stats.linregress(lam, amp2)
    return {"slope": float(res.slope), "intercept": float(res.intercept),
            "r_squared": float(res.rvalue**2), "max_amplitude_sq": float(amp2.max()),
            "points": len(pts)}


def amplitude_sweep(
    net: OscillatorNetwork,
    grid: Sequence[float],
    protocol: Protocol = Protocol.FRESH,
    settings: DynamicsSettings = DynamicsSettings(),
    threads: int = 1,
) -> SweepResult:
    """Measure the network at every leading eigenvalue in ``grid``.

    ``net`` supplies the eigenvectors and bulk; its leading eigenvalue is
    replaced by each grid value in turn. Continuation protocols start each
    run from the previous run's final state (ascending for ``ContinuationUp``,
    descending for ``ContinuationDown``).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("lambda grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda grid must be sorted ascending")
    protocol = Protocol(protocol)
    v1 = eigendecompose(net.m).leading_vector
    fresh = initial_state(v1, settings.init_scale)

    if protocol is Protocol.FRESH:
        def one(lam):
            return steady_amplitude(net.with_leading(lam), v1, fresh, settings)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                measures = list(pool.map(one, grid))
        else:
            measures = [one(lam) for lam in grid]
    else:
        order = range(len(grid)) if protocol is Protocol.UP else range(len(grid) - 1, -1, -1)
        measures = [None] * len(grid)
        state = fresh
        for i in order:
            m = steady_amplitude(net.with_leading(grid[i]), v1, state, settings)
            measures[i] = m
            state = m.final
    return SweepResult(grid, protocol, measures, fit_amplitude_squared(grid, measures))


def bistability_probe(
    net: OscillatorNetwork,
    lam: float,
    settings: DynamicsSettings = DynamicsSettings(),
    seed: Optional[int] = None,
) -> ProbeResult:
    """Small and large initial conditions at the same leading eigenvalue.

    With a seed, the small init points in a random direction and the large
    init is ``init_scale_large * v1`` plus a random kick of size ``init_scale``.
    """
    v1 = eigendecompose(net.m).leading_vector
    shifted = net.with_leading(lam)
    if seed is None:
        small = initial_state(v1, settings.init_scale)
        large = initial_state(v1, settings.init_scale_large)
    else:
        rng = np.random.default_rng(seed)
        small = initial_state(v1, settings.init_scale, rng)
        large = initial_state(v1, settings.init_scale_large, rng, jitter=settings.init_scale)
    return ProbeResult(float(lam), steady_amplitude(shifted, v1, small, settings),
                       steady_amplitude(shifted, v1, large, settings))


def classify_numeric(
    up: Optional[SweepResult],
    down: Optional[SweepResult],
    fresh: SweepResult,
    probes: Sequence[ProbeResult],
    settings: DynamicsSettings = DynamicsSettings(),
) -> NumericClassification:
    grid = fresh.lambda_grid
    below = [m for lam, m in zip(grid, fresh.measures) if lam < 0]
    above = [m for lam, m in zip(grid, fresh.measures) if lam > 0]
    evidence: dict = {"fresh": fresh.to_dict(), "probes": [p.to_dict() for p in probes]}
    if up is not None and down is not None:
        evidence["up"] = up.to_dict()
        evidence["down"] = down.to_dict()
        evidence["hysteresis"] = any(
            mu.outcome is not md.outcome for mu, md in zip(up.measures, down.measures)
        )
    if not above:
        evidence["reason"] = "no lambda > 0 grid points"
        return NumericClassification(None, evidence)

    fit = fresh.fit
    decays_below = bool(below) and all(m.outcome is Outcome.DECAYED for m in below)
    cycles_above = all(m.outcome is Outcome.LIMIT_CYCLE for m in above)
    fit_ok = (
        fit is not None
        and fit["r_squared"] >= settings.min_r_squared
        and abs(fit["intercept"]) <= settings.fit_tol_frac * fit["max_amplitude_sq"]
    )
    escapes_above = all(m.outcome is Outcome.ESCAPED for m in above)
    bistable = any(p.bistable for p in probes if p.lam < 0)
    # diagnostic only: a cycle whose size does not shrink toward lambda -> 0+
    amplitude_jump = fit is not None and fit["intercept"] > settings.fit_tol_frac * fit["max_amplitude_sq"]
    evidence.update(decays_below=decays_below, cycles_above=cycles_above, fit_ok=fit_ok,
                    escapes_above=escapes_above, bistable_below=bistable, amplitude_jump=amplitude_jump)

    if decays_below and cycles_above and fit_ok:
        return NumericClassification(Criticality.SUPERCRITICAL, evidence)
    if escapes_above and bistable:
        return NumericClassification(Criticality.SUBCRITICAL, evidence)
    evidence["reason"] = "neither signature complete"
    return NumericClassification(None, evidence)
