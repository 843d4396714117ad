"""Storage and retrieval of a photon polarization qubit.

After the storage stage each time-independent state B_n of level b (with the
photon) has been carried to -A_n on level a, so the storage map is
S1 = -sum_n |A_n><B_n|. Retrieval with the same drive applies S2 = S1^H and
S2 S1 is the projector onto span{B_n}. Whatever part of the initial state
lies outside that span is not stored.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .angular import Polarization, format_momentum, magnetic_numbers
from .darkspace import static_structure
from .system import SystemConfig

DEFAULT_TOL = 1e-9
TOL_ENV = "LAMBDA_MEMORY_TOL"


class StorageWarning(UserWarning):
    """The configuration stores nothing or leaves the guaranteed regime."""


def default_tolerance() -> float:
    """Faithfulness tolerance, overridable through ``LAMBDA_MEMORY_TOL``."""
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise ValueError(f"{TOL_ENV} must be a positive number, got {raw!r}") from exc
    if not tol > 0:
        raise ValueError(f"{TOL_ENV} must be a positive number, got {raw!r}")
    return tol


@dataclass(frozen=True)
class AtomicDensityMatrix:
    level: str
    matrix: np.ndarray
    description: str = ""

    def __post_init__(self):
        if self.level not in ("a", "b"):
            raise ValueError(f"level must be 'a' or 'b', got {self.level!r}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > 1e-12:
            raise ValueError(f"density matrix is not Hermitian (max |rho - rho^H| = {herm:.3e})")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace is {tr.real:.15g}, expected 1")
        low = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
        if low < -1e-12:
            raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {low:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, two_j: int, two_m: int, level: str = "b") -> "AtomicDensityMatrix":
        ms = magnetic_numbers(two_j)
        if two_m not in ms:
            raise ValueError(f"m={_fmt_m(two_m)} is not a sublevel of J={format_momentum(two_j)}")
        m = np.zeros((two_j + 1, two_j + 1), dtype=complex)
        k = ms.index(two_m)
        m[k, k] = 1.0
        return cls(level, m, f"m={_fmt_m(two_m)}")

    @classmethod
    def mixed(cls, two_j: int, level: str = "b") -> "AtomicDensityMatrix":
        n = two_j + 1
        return cls(level, np.eye(n, dtype=complex) / n, "mixed")

    @classmethod
    def from_state(cls, psi, level: str = "b", description: str = "pure") -> "AtomicDensityMatrix":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(level, np.outer(v, v.conj()), description)


def _fmt_m(two_m: int) -> str:
    if two_m % 2 == 0:
        return str(two_m // 2)
    return f"{two_m}/2"


@dataclass(frozen=True)
class PolarizationQubit:
    xi1: complex
    xi2: complex

    def __post_init__(self):
        n = abs(self.xi1) ** 2 + abs(self.xi2) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"qubit amplitudes are not normalized (|xi1|^2 + |xi2|^2 = {n!r})")

    @classmethod
    def normalized(cls, xi1: complex, xi2: complex) -> "PolarizationQubit":
        n = np.sqrt(abs(xi1) ** 2 + abs(xi2) ** 2)
        if n == 0:
            raise ValueError("qubit amplitudes cannot both be zero")
        return cls(complex(xi1) / n, complex(xi2) / n)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2], dtype=complex)


# ---------------------------------------------------------------- operators

def storage_operator(cfg: SystemConfig) -> np.ndarray:
    """S1 as a map from the two-mode b block to the a block."""
    st = static_structure(cfg)
    if not st.shared:
        warnings.warn(f"{cfg.scheme.label()}: no shared dark states, nothing can be stored", StorageWarning, stacklevel=2)
    return -(st.a_states @ st.b_states.conj().T)


def retrieval_operator(cfg: SystemConfig, drive: Polarization | None = None) -> np.ndarray:
    """S2 as a map from the a block back to the two-mode b block.

    With a retrieval drive different from the storage drive the operator is
    still computed from the retrieval configuration, but the round trip is
    no longer guaranteed to restore the input.
    """
    rcfg = cfg
    if drive is not None and drive != cfg.l_c:
        warnings.warn(
            "retrieval drive polarization differs from the storage drive; round-trip fidelity is not guaranteed",
            StorageWarning,
            stacklevel=2,
        )
        rcfg = cfg.with_drive(drive)
    st = static_structure(rcfg)
    if not st.shared:
        warnings.warn(f"{cfg.scheme.label()}: no shared dark states, nothing can be retrieved", StorageWarning, stacklevel=2)
    return -(st.b_states @ st.a_states.conj().T)


def embed_block(cfg: SystemConfig, block: np.ndarray, rows: str, cols: str) -> np.ndarray:
    idx = cfg.basis
    out = np.zeros((idx.dim, idx.dim), dtype=complex)
    out[getattr(idx, rows), getattr(idx, cols)] = block
    return out


def stored_projector(cfg: SystemConfig) -> np.ndarray:
    """S2 S1 on the full space: projector onto span{B_n}."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StorageWarning)
        s1 = embed_block(cfg, storage_operator(cfg), "a", "b")
        s2 = embed_block(cfg, retrieval_operator(cfg), "b", "a")
    return s2 @ s1


def photon_state(qubit: PolarizationQubit, psi_b) -> np.ndarray:
    """Two-mode b-block vector psi_b (xi1 |1,0> + xi2 |0,1>)."""
    psi = np.asarray(psi_b, dtype=complex).ravel()
    return np.concatenate([qubit.xi1 * psi, qubit.xi2 * psi])


def initial_state(cfg: SystemConfig, rho_b: AtomicDensityMatrix, qubit: PolarizationQubit) -> np.ndarray:
    """Full-space density matrix rho_b x |f><f|."""
    _check_b(cfg, rho_b)
    f = qubit.vector
    block = np.kron(np.outer(f, f.conj()), rho_b.matrix)
    return embed_block(cfg, block, "b", "b")


def stored_state(cfg: SystemConfig, psi_b, qubit: PolarizationQubit) -> np.ndarray:
    """Level-a amplitudes after storage of a pure atom+photon input."""
    return storage_operator(cfg) @ photon_state(qubit, psi_b)


def _check_b(cfg: SystemConfig, rho_b: AtomicDensityMatrix) -> None:
    if rho_b.level != "b":
        raise ValueError("initial atomic state must live on level b")
    if rho_b.dim != cfg.scheme.dim_b:
        raise ValueError(f"density matrix has dimension {rho_b.dim}, level b has {cfg.scheme.dim_b} sublevels")


# ---------------------------------------------------------------- probabilities

def _mode_projections(cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    b = static_structure(cfg).b_states
    nb = cfg.scheme.dim_b
    return b[:nb], b[nb:]


def probability_matrix(cfg: SystemConfig, rho_b: AtomicDensityMatrix) -> np.ndarray:
    """w_ij = sum_n <b_n^i| rho_b |b_n^j>, with b_n^i the mode-i part of B_n."""
    _check_b(cfg, rho_b)
    parts = _mode_projections(cfg)
    rho = rho_b.matrix
    w = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            w[i, j] = np.trace(parts[i].conj().T @ rho @ parts[j])
    return w


def diagonal_coefficients(cfg: SystemConfig) -> np.ndarray:
    """Weights of each sublevel population in w_11 (row 0) and w_22 (row 1).

    Columns follow ascending m_b.
    """
    parts = _mode_projections(cfg)
    return np.array([np.sum(np.abs(p) ** 2, axis=1) for p in parts])


def storage_probability(cfg: SystemConfig, rho_b: AtomicDensityMatrix, qubit: PolarizationQubit) -> float:
    w = probability_matrix(cfg, rho_b)
    xi = qubit.vector
    # sum_ij xi_i conj(xi_j) w_ij
    return float(np.real(xi @ w @ xi.conj()))


def is_faithful(cfg: SystemConfig, rho_b: AtomicDensityMatrix, tol: float = DEFAULT_TOL) -> bool:
    w = probability_matrix(cfg, rho_b)
    return bool(np.max(np.abs(w - np.eye(2))) <= tol)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    d = rho - sigma
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def round_trip(cfg: SystemConfig, rho0: np.ndarray) -> np.ndarray:
    """State after ideal storage followed by retrieval with the same drive."""
    rho0 = np.asarray(rho0, dtype=complex)
    idx = cfg.basis
    if rho0.shape != (idx.dim, idx.dim):
        raise ValueError(f"expected a {idx.dim}x{idx.dim} density matrix, got {rho0.shape}")
    outside = np.ones(idx.dim, dtype=bool)
    outside[idx.b] = False
    if np.max(np.abs(rho0[outside, :]), initial=0.0) > 1e-12 or np.max(np.abs(rho0[:, outside]), initial=0.0) > 1e-12:
        raise ValueError("initial state must be supported on the two-mode level-b block")
    p = stored_projector(cfg)
    return p @ rho0 @ p.conj().T


@dataclass
class StorageReport:
    w: np.ndarray
    faithful: bool
    worst_case_prob: float
    storage_prob: float
    leak_weight: float
    passage_weight: float
    absorption_weight: float
    stored_state_map: np.ndarray
    stored_state: np.ndarray | None  # only for pure initial atomic states


def storage_report(
    cfg: SystemConfig,
    rho_b: AtomicDensityMatrix,
    qubit: PolarizationQubit | None = None,
    tol: float = DEFAULT_TOL,
) -> StorageReport:
    qubit = qubit or PolarizationQubit(1.0, 0.0)
    w = probability_matrix(cfg, rho_b)
    prob = storage_probability(cfg, rho_b, qubit)
    worst = float(np.linalg.eigvalsh(0.5 * (w + w.conj().T)).min())

    st = static_structure(cfg)
    rho0 = initial_state(cfg, rho_b, qubit)[cfg.basis.b, cfg.basis.b]
    passage = float(np.real(np.trace(st.d_b.conj().T @ rho0 @ st.d_b)))
    fed = [ch.b_state for ch in st.leak if ch.b_state is not None]
    absorption = 0.0
    if fed:
        fb = np.hstack(fed)
        absorption = float(np.real(np.trace(fb.conj().T @ rho0 @ fb)))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StorageWarning)
        s1 = storage_operator(cfg)
    pure_state = None
    vals, vecs = np.linalg.eigh(rho_b.matrix)
    if vals[-1] > 1 - 1e-12:
        pure_state = s1 @ photon_state(qubit, vecs[:, -1])
    return StorageReport(
        w=w,
        faithful=bool(np.max(np.abs(w - np.eye(2))) <= tol),
        worst_case_prob=worst,
        storage_prob=prob,
        leak_weight=1.0 - prob,
        passage_weight=passage,
        absorption_weight=absorption,
        stored_state_map=s1,
        stored_state=pure_state,
    )


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class ScanRow:
    initial: str
    w: np.ndarray
    faithful: bool
    worst_case: float


@dataclass(frozen=True)
class ScanResult:
    rows: tuple[ScanRow, ...]
    best_worst_case: float
    best_initial: str

    @property
    def faithful_states(self) -> list[str]:
        return [r.initial for r in self.rows if r.faithful]


def candidate_states(two_jb: int, include_mixed: bool = True) -> list[AtomicDensityMatrix]:
    states = [AtomicDensityMatrix.pure(two_jb, m) for m in magnetic_numbers(two_jb)]
    if include_mixed:
        states.append(AtomicDensityMatrix.mixed(two_jb))
    return states


def scan_initial_states(
    cfg: SystemConfig,
    states: list[AtomicDensityMatrix] | None = None,
    include_mixed: bool = True,
    tol: float = DEFAULT_TOL,
) -> ScanResult:
    """Storage figures for every pure Zeeman state of level b (and the mixed state)."""
    states = states if states is not None else candidate_states(cfg.scheme.two_jb, include_mixed)
    rows = []
    for rho in states:
        w = probability_matrix(cfg, rho)
        worst = float(np.linalg.eigvalsh(0.5 * (w + w.conj().T)).min())
        rows.append(ScanRow(rho.description, w, bool(np.max(np.abs(w - np.eye(2))) <= tol), worst))
    best = max(range(len(rows)), key=lambda k: (rows[k].worst_case, -k))
    return ScanResult(tuple(rows), rows[best].worst_case, rows[best].initial)


@dataclass(frozen=True)
class DiagonalBound:
    best_min_diagonal: float
    populations: np.ndarray  # optimal sublevel populations, ascending m_b
    unit_feasible: bool


def diagonal_bound(cfg: SystemConfig) -> DiagonalBound:
    """Best achievable min(w_11, w_22) over diagonal initial states.

    Solved as a linear program over the population simplex; also reports
    whether w_11 = w_22 = 1 can be reached at all.
    """
    coef = diagonal_coefficients(cfg)
    n = coef.shape[1]
    # variables: populations p (n) and t; maximize t
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-coef, np.ones((2, 1))])
    b_ub = np.zeros(2)
    a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    bounds = [(0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"linear program failed: {res.message}")
    feas = linprog(
        np.zeros(n),
        A_eq=np.vstack([coef, np.ones((1, n))]),
        b_eq=[1.0, 1.0, 1.0],
        bounds=[(0, None)] * n,
        method="highs",
    )
    return DiagonalBound(float(-res.fun), np.asarray(res.x[:n]), bool(feas.status == 0))
