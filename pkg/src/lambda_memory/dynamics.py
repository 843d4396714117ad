"""Time-dependent check of the adiabatic storage picture.

``evolve`` integrates d(rho)/dt = (i/2)[V(t), rho] with fixed-step RK4.
``adiabatic_propagator`` builds S(t) = sum_k exp(i phi_k) |v_k(t)><v_k(0)|
from instantaneous eigenvectors, transporting each (possibly degenerate)
eigenspace by successive projection so that the basis inside a degenerate
cluster is carried along without spurious rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import polar_unitary
from .memory import trace_distance
from .system import SystemConfig, operator_parts

MAX_STEP_PRODUCT = 0.05
DRIFT_TOL = 1e-8
ADIABATIC_STEP = 0.2  # max Omega * h for eigenspace tracking


class StepSizeError(ValueError):
    pass


class DriftError(RuntimeError):
    def __init__(self, message: str, trace_drift: float, hermiticity_drift: float):
        super().__init__(message)
        self.trace_drift = trace_drift
        self.hermiticity_drift = hermiticity_drift


class AdiabaticCrossingError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class PulseSchedule:
    """Storage ramp over ``t1``, hold ``tau``, retrieval ramp over ``t2``.

    Storage: omega_a falls from omega_a1 to 0 while omega_b rises from 0 to
    omega_b1. Retrieval mirrors it: omega_a rises to omega_a2, omega_b falls
    from omega_b2 to 0. ``t2 = 0`` means storage only.
    """

    t1: float
    tau: float = 0.0
    t2: float = 0.0
    omega_a1: float = 1.0
    omega_b1: float = 1.0
    omega_a2: float = 1.0
    omega_b2: float = 1.0
    shape: str = "sin2"
    delta: float | None = None

    def __post_init__(self):
        if self.shape not in ("sin2", "linear"):
            raise ValueError(f"unknown pulse shape {self.shape!r} (expected 'sin2' or 'linear')")
        if not self.t1 > 0:
            raise ValueError("storage duration t1 must be positive")
        if self.tau < 0 or self.t2 < 0:
            raise ValueError("durations must be non-negative")
        for w in (self.omega_a1, self.omega_b1, self.omega_a2, self.omega_b2):
            if w < 0 or not math.isfinite(w):
                raise ValueError("peak Rabi frequencies must be finite and non-negative")

    @property
    def total(self) -> float:
        return self.t1 + self.tau + self.t2

    @property
    def omega_max(self) -> float:
        peaks = [self.omega_a1, self.omega_b1]
        if self.t2 > 0:
            peaks += [self.omega_a2, self.omega_b2]
        return max(peaks)

    def stages(self) -> list[tuple[float, float]]:
        bounds = [(0.0, self.t1)]
        if self.tau > 0:
            bounds.append((self.t1, self.t1 + self.tau))
        if self.t2 > 0:
            bounds.append((self.t1 + self.tau, self.total))
        return bounds


def _ramp(x: float, shape: str) -> float:
    """Rising ramp on [0, 1] with ramp(0) = 0 and ramp(1) = 1."""
    x = min(max(x, 0.0), 1.0)
    if shape == "sin2":
        return math.sin(0.5 * math.pi * x) ** 2
    return x


def omega_profiles(sched: PulseSchedule, t: float) -> tuple[float, float]:
    """(omega_a, omega_b) at time t."""
    eps = 1e-12 * max(1.0, sched.total)
    if t < -eps or t > sched.total + eps:
        raise ValueError(f"t={t} outside schedule [0, {sched.total}]")
    t = min(max(t, 0.0), sched.total)
    if t <= sched.t1:
        up = _ramp(t / sched.t1, sched.shape)
        return sched.omega_a1 * (1.0 - up), sched.omega_b1 * up
    if t <= sched.t1 + sched.tau:
        # omega_a stays off; omega_b bridges the two cavity amplitudes
        x = (t - sched.t1) / sched.tau
        return 0.0, sched.omega_b1 + (sched.omega_b2 - sched.omega_b1) * x
    if sched.t2 == 0:
        return 0.0, sched.omega_b1
    up = _ramp((t - sched.t1 - sched.tau) / sched.t2, sched.shape)
    return sched.omega_a2 * up, sched.omega_b2 * (1.0 - up)


def _effective_config(cfg: SystemConfig, sched: PulseSchedule) -> SystemConfig:
    return cfg if sched.delta is None else cfg.with_delta(sched.delta)


def _grid(sched: PulseSchedule, steps_per_stage: list[int]) -> np.ndarray:
    pts = [0.0]
    for (a, b), n in zip(sched.stages(), steps_per_stage):
        pts.extend(np.linspace(a, b, n + 1)[1:])
    return np.asarray(pts)


@dataclass(frozen=True)
class Sample:
    time: float
    trace: float
    pop_a: float
    pop_b: float
    pop_c: float


@dataclass
class EvolutionResult:
    final: np.ndarray
    samples: list[Sample]
    sample_states: list[np.ndarray]
    max_trace_drift: float
    max_hermiticity_drift: float
    storage_end: np.ndarray
    steps: int
    step_sizes: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])


def _populations(cfg: SystemConfig, rho: np.ndarray) -> tuple[float, float, float]:
    d = np.real(np.diag(rho))
    idx = cfg.basis
    return float(d[idx.a].sum()), float(d[idx.b].sum()), float(d[idx.c].sum())


def check_step(cfg: SystemConfig, sched: PulseSchedule, dt: float) -> None:
    delta = _effective_config(cfg, sched).delta
    scale = max(sched.omega_max, abs(delta))
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    if dt * scale > MAX_STEP_PRODUCT:
        raise StepSizeError(
            f"dt * max(Omega, |Delta|) = {dt * scale:.4g} exceeds {MAX_STEP_PRODUCT}; use dt <= {MAX_STEP_PRODUCT / scale:.4g}"
        )


def evolve(
    cfg: SystemConfig,
    sched: PulseSchedule,
    rho0: np.ndarray,
    dt: float,
    samples_per_stage: int = 200,
) -> EvolutionResult:
    """Fixed-step RK4 integration of the density matrix over the whole schedule.

    Each stage is split into a whole number of steps no longer than ``dt``,
    chosen as a multiple of ``samples_per_stage`` so samples fall on steps.
    """
    check_step(cfg, sched, dt)
    ecfg = _effective_config(cfg, sched)
    parts = operator_parts(ecfg)
    rho = np.array(rho0, dtype=complex)
    idx = ecfg.basis
    if rho.shape != (idx.dim, idx.dim):
        raise ValueError(f"rho0 must be {idx.dim}x{idx.dim}, got {rho.shape}")
    tr0 = complex(np.trace(rho))

    def v_at(t):
        wa, wb = omega_profiles(sched, t)
        return parts.at(wa, wb)

    def rhs(v, r):
        return 0.5j * (v @ r - r @ v)

    samples, states = [], []
    max_tr = 0.0
    max_herm = 0.0

    def record(t, r):
        pa, pb, pc = _populations(ecfg, r)
        samples.append(Sample(float(t), float(np.real(np.trace(r))), pa, pb, pc))
        states.append(r.copy())

    record(0.0, rho)
    storage_end = None
    total_steps = 0
    step_sizes = []
    for (a, b) in sched.stages():
        length = b - a
        per = max(1, math.ceil(length / (dt * samples_per_stage) - 1e-12))
        n = per * samples_per_stage
        h = length / n
        step_sizes.append(h)
        for k in range(n):
            t = a + k * h
            v0 = v_at(t)
            vm = v_at(t + 0.5 * h)
            v1 = v_at(min(t + h, b))
            k1 = rhs(v0, rho)
            k2 = rhs(vm, rho + 0.5 * h * k1)
            k3 = rhs(vm, rho + 0.5 * h * k2)
            k4 = rhs(v1, rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            max_tr = max(max_tr, abs(complex(np.trace(rho)) - tr0))
            max_herm = max(max_herm, float(np.max(np.abs(rho - rho.conj().T))))
            if (k + 1) % per == 0:
                record(a + (k + 1) * h, rho)
        total_steps += n
        if storage_end is None:
            storage_end = rho.copy()

    if max_tr > DRIFT_TOL or max_herm > DRIFT_TOL:
        raise DriftError(
            f"integration drift too large: trace {max_tr:.3e}, hermiticity {max_herm:.3e}", max_tr, max_herm
        )
    return EvolutionResult(
        final=rho,
        samples=samples,
        sample_states=states,
        max_trace_drift=max_tr,
        max_hermiticity_drift=max_herm,
        storage_end=storage_end,
        steps=total_steps,
        step_sizes=step_sizes,
    )


# ---------------------------------------------------------------- adiabatic propagator

def _clusters(vals: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group ascending eigenvalues whose neighbours differ by at most ``tol``."""
    groups, start = [], 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > tol:
            groups.append(np.arange(start, k))
            start = k
    return groups


class _Spectrum:
    def __init__(self, v: np.ndarray, tol_rel: float):
        vals, vecs = np.linalg.eigh(v)
        scale = max(1.0, float(np.max(np.abs(vals))))
        self.groups = _clusters(vals, tol_rel * scale)
        self.bases = [vecs[:, g] for g in self.groups]
        self.values = [float(vals[g].mean()) for g in self.groups]


def _components(overlap: np.ndarray, thresh: float) -> list[tuple[list[int], list[int]]]:
    """Connected components of the bipartite new/old cluster overlap graph."""
    n_new, n_old = overlap.shape
    parent = list(range(n_new + n_old))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in zip(*np.nonzero(overlap > thresh)):
        ri, rj = find(i), find(n_new + j)
        if ri != rj:
            parent[ri] = rj
    comps: dict[int, tuple[list[int], list[int]]] = {}
    for i in range(n_new):
        comps.setdefault(find(i), ([], []))[0].append(i)
    for j in range(n_old):
        comps.setdefault(find(n_new + j), ([], []))[1].append(j)
    return list(comps.values())


def _transport_step(old: _Spectrum, new: _Spectrum, h: float, t: float, min_overlap: float) -> np.ndarray:
    """Unitary carrying the old eigenspaces to the new ones, with phase increments."""
    n = old.bases[0].shape[0]
    overlap = np.array([[np.linalg.norm(qn.conj().T @ qo) ** 2 for qo in old.bases] for qn in new.bases])
    step = np.zeros((n, n), dtype=complex)
    for new_ids, old_ids in _components(overlap, 0.05):
        if len(new_ids) > 1 and len(old_ids) > 1:
            raise AdiabaticCrossingError(f"eigenvalue crossing near t={t:.6g}: ambiguous eigenspace matching", t)
        qn = np.hstack([new.bases[i] for i in new_ids])
        qo = np.hstack([old.bases[j] for j in old_ids])
        if qn.shape[1] != qo.shape[1]:
            raise AdiabaticCrossingError(f"eigenspace dimension changed near t={t:.6g}", t)
        m = qn.conj().T @ qo
        smin = float(np.linalg.svd(m, compute_uv=False).min())
        if smin ** 2 < min_overlap:
            raise AdiabaticCrossingError(
                f"eigenvalue crossing near t={t:.6g}: max overlap {smin ** 2:.3f} < {min_overlap}", t
            )
        carried = qn @ polar_unitary(m) @ qo.conj().T
        for i in new_ids:
            w = overlap[i, old_ids]
            lam_old = float(np.dot(w, [old.values[j] for j in old_ids]) / w.sum())
            dphi = 0.25 * h * (new.values[i] + lam_old)
            p = new.bases[i]
            step += np.exp(1j * dphi) * (p @ (p.conj().T @ carried))
    return step


def adiabatic_path(
    cfg: SystemConfig,
    sched: PulseSchedule,
    times: np.ndarray,
    tol_rel: float = 1e-7,
    min_overlap: float = 0.7,
) -> list[np.ndarray]:
    """Adiabatic evolution operators S(t) at each of the (increasing) ``times``."""
    ecfg = _effective_config(cfg, sched)
    parts = operator_parts(ecfg)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    n = ecfg.basis.dim
    s = np.eye(n, dtype=complex)
    out = [s.copy()]
    old = _Spectrum(parts.at(*omega_profiles(sched, 0.0)), tol_rel)
    for t_prev, t in zip(times[:-1], times[1:]):
        new = _Spectrum(parts.at(*omega_profiles(sched, t)), tol_rel)
        s = _transport_step(old, new, t - t_prev, t, min_overlap) @ s
        out.append(s.copy())
        old = new
    return out


def adiabatic_propagator(cfg: SystemConfig, sched: PulseSchedule, t: float, n_steps: int = 2000) -> np.ndarray:
    """S(t) from n_steps tracking steps over [0, t] (stage boundaries included)."""
    if n_steps < 100:
        raise ValueError("n_steps must be at least 100")
    if t < 0 or t > sched.total * (1 + 1e-12):
        raise ValueError(f"t={t} outside schedule [0, {sched.total}]")
    if t == 0:
        return np.eye(_effective_config(cfg, sched).basis.dim, dtype=complex)
    knots = [0.0] + [b for _, b in sched.stages() if b < t] + [t]
    grid = [0.0]
    for a, b in zip(knots[:-1], knots[1:]):
        k = max(1, round(n_steps * (b - a) / t))
        grid.extend(np.linspace(a, b, k + 1)[1:])
    return adiabatic_path(cfg, sched, np.asarray(grid))[-1]


# ---------------------------------------------------------------- comparison

def _psd_sqrt(m: np.ndarray, floor: float = 1e-13) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    top = max(float(vals.max()), 0.0)
    # eigenvalues at round-off level would otherwise contribute O(1e-8) after the root
    vals = np.where(vals > floor * top, vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(tr |sqrt(rho) sqrt(sigma)|)^2; equals <psi|sigma|psi> for pure rho."""
    s = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)
    return float(np.sum(s) ** 2)


@dataclass
class AdiabaticComparison:
    fidelity: float
    trace_distance: float
    leak_weight: float
    evolution: EvolutionResult
    adiabatic_final: np.ndarray
    fidelity_trace: list[float]


def compare_adiabatic(
    cfg: SystemConfig,
    sched: PulseSchedule,
    rho0: np.ndarray,
    dt: float,
    samples_per_stage: int = 1000,
) -> AdiabaticComparison:
    """Run the RK4 oracle and the adiabatic propagator on a shared sample grid.

    ``leak_weight`` is the population outside level a when the storage stage
    ends, i.e. the part of the input that was not written into the memory.
    """
    res = evolve(cfg, sched, rho0, dt, samples_per_stage=samples_per_stage)
    # track eigenspaces on a grid fine enough for the coupling scale, keep sample times
    scale = max(sched.omega_max, abs(_effective_config(cfg, sched).delta), 1e-12)
    times = res.times
    fine, keep = [0.0], [0]
    for t0, t1 in zip(times[:-1], times[1:]):
        m = max(1, math.ceil((t1 - t0) * scale / ADIABATIC_STEP))
        fine.extend(np.linspace(t0, t1, m + 1)[1:])
        keep.append(len(fine) - 1)
    full = adiabatic_path(cfg, sched, np.asarray(fine))
    path = [full[k] for k in keep]
    rho0 = np.asarray(rho0, dtype=complex)
    fids = []
    for s_t, r_t in zip(path, res.sample_states):
        fids.append(uhlmann_fidelity(s_t @ rho0 @ s_t.conj().T, r_t))
    ad_final = path[-1] @ rho0 @ path[-1].conj().T
    pop_a = _populations(_effective_config(cfg, sched), res.storage_end)[0]
    trace0 = float(np.real(np.trace(rho0)))
    return AdiabaticComparison(
        fidelity=fids[-1],
        trace_distance=trace_distance(ad_final, res.final),
        leak_weight=trace0 - pop_a,
        evolution=res,
        adiabatic_final=ad_final,
        fidelity_trace=fids,
    )
