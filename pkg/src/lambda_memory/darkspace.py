"""Classification of the eigenbasis of V(t) into dark and bright families.

For fixed Rabi frequencies the eigenvectors of V split into

* ``d_c``       excited-level states uncoupled from both lower levels
                (eigenvalue -2 delta),
* ``dressed``   pairs built from the bright states C_n / F_n, with
                eigenvalues -delta +- sqrt(delta^2 + c_n^2),
* ``d_a``/``d_b`` lower-level states of one level uncoupled from c,
* ``shared``    time-independent pairs (A_n, B_n) whose combination
                a_n Omega_a B_n - Omega_b A_n is dark at all times,
* ``extra_dark`` additional zero-eigenvalue states that only appear when one
                (or both) of the Rabi frequencies vanishes exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import (
    DEFAULT_REL_TOL,
    canonicalize,
    eigh_sorted,
    fix_phase,
    null_space,
    nullity,
    orthonormal_complement,
)
from .system import SystemConfig, build_couplings, coupling_operator, interaction_operator

RESIDUAL_TOL = 1e-9


class DecompositionError(RuntimeError):
    """An eigen-residual of the classified basis exceeded tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class BrightPair:
    c_state: np.ndarray  # column on the c block
    f_state: np.ndarray  # column on the lower (a + b) block
    c_n: float


@dataclass(frozen=True)
class DressedState:
    vector: np.ndarray  # full-space column
    theta: float
    eigenvalue: float


@dataclass(frozen=True)
class SharedDarkPair:
    a_state: np.ndarray  # column on the a block
    b_state: np.ndarray  # column on the b (two-mode) block
    a_dn: float


@dataclass(frozen=True)
class LeakChannel:
    """Excited-level state uncoupled from level a, and the b-state feeding it."""

    c_state: np.ndarray
    b_state: np.ndarray | None
    coupling: float


@dataclass(frozen=True)
class DarkCounts:
    n_c_dark: int
    n_c: int
    n_f: int
    n_a_dark: int
    n_b_dark: int
    n_ab_dark: int
    n_dark: int

    def as_dict(self) -> dict:
        return {
            "N_c_dark": self.n_c_dark,
            "N_c": self.n_c,
            "N_f": self.n_f,
            "N_a_dark": self.n_a_dark,
            "N_b_dark": self.n_b_dark,
            "N_ab_dark": self.n_ab_dark,
            "N_dark": self.n_dark,
        }


@dataclass(frozen=True)
class StaticDarkStructure:
    """The time-independent part of the dark space of a configuration."""

    d_a: np.ndarray  # columns on the a block
    d_b: np.ndarray  # columns on the b block
    shared: tuple[SharedDarkPair, ...]
    leak: tuple[LeakChannel, ...]

    @property
    def a_states(self) -> np.ndarray:
        return _stack([p.a_state for p in self.shared], self.d_a.shape[0])

    @property
    def b_states(self) -> np.ndarray:
        return _stack([p.b_state for p in self.shared], self.d_b.shape[0])


def _stack(cols, rows: int) -> np.ndarray:
    if not cols:
        return np.zeros((rows, 0), dtype=complex)
    return np.column_stack([np.ravel(c) for c in cols])


def _positive_eig(gram: np.ndarray, rel_tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a PSD Gram matrix into (positive values, their vectors, null vectors)."""
    vals, vecs = eigh_sorted(gram)
    top = vals[0] if vals.size else 0.0
    if top <= 0.0:
        return np.zeros(0), vecs[:, :0], vecs
    pos = vals > rel_tol * top
    return vals[pos], vecs[:, pos], vecs[:, ~pos]


def _diagonalize_degenerate(vals: np.ndarray, vecs: np.ndarray, aux: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    """Inside each degenerate group of ``vals`` rotate ``vecs`` to diagonalize ``aux``."""
    out = vecs.copy()
    n = len(vals)
    i = 0
    scale = max(1.0, float(np.max(np.abs(vals)))) if n else 1.0
    while i < n:
        j = i + 1
        while j < n and abs(vals[i] - vals[j]) <= rel * scale:
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            small = block.conj().T @ aux @ block
            w, u = np.linalg.eigh(0.5 * (small + small.conj().T))
            _, u = canonicalize(w, u, 1e-10)
            out[:, i:j] = block @ u
        i = j
    return out


@lru_cache(maxsize=256)
def static_structure(cfg: SystemConfig, rel_tol: float = DEFAULT_REL_TOL) -> StaticDarkStructure:
    cs = build_couplings(cfg)
    g_a, g_b = cs.g_a, cs.g_b
    idx = cfg.basis

    d_a = null_space(g_a.conj().T, rel_tol) if g_a.size else np.eye(idx.scheme.dim_a, dtype=complex)
    d_b = null_space(g_b.conj().T, rel_tol)

    # pseudo-inverse of g_b g_b^H on its nonzero spectrum
    b_vals, b_vecs, _ = _positive_eig(g_b @ g_b.conj().T, rel_tol)
    d_b_inv = (b_vecs / b_vals) @ b_vecs.conj().T
    d_ba = d_b_inv @ g_b @ g_a.conj().T

    # keep only a-states whose image under g_a^H is reachable through g_b^H;
    # when g_b^H has full row rank this is the whole a block
    _, _, rb_null = _positive_eig(g_b.conj().T @ g_b, rel_tol)
    unreachable = rb_null.conj().T @ g_a.conj().T
    if unreachable.size and np.linalg.norm(unreachable) > 0:
        allowed = null_space(unreachable, rel_tol)
    else:
        allowed = np.eye(idx.scheme.dim_a, dtype=complex)

    gram = allowed.conj().T @ d_ba.conj().T @ d_ba @ allowed
    a_vals, a_vecs, _ = _positive_eig(gram, rel_tol) if gram.size else (np.zeros(0), gram, gram)
    a_states = allowed @ a_vecs
    # split degenerate a_dn groups by magnetic number for a reproducible basis
    jz = np.diag(np.arange(-idx.scheme.two_ja, idx.scheme.two_ja + 1, 2) / 2.0).astype(complex)
    a_states = _diagonalize_degenerate(a_vals, a_states, jz)
    shared = []
    for k, val in enumerate(a_vals):
        a_vec = a_states[:, k]
        a_vec = fix_phase(a_vec)
        a_dn = math.sqrt(val)
        b_vec = d_ba @ a_vec / a_dn
        shared.append(SharedDarkPair(a_vec.reshape(-1, 1), b_vec.reshape(-1, 1), a_dn))

    return StaticDarkStructure(d_a=d_a, d_b=d_b, shared=tuple(shared), leak=tuple(_leak_channels(g_a, g_b, rel_tol)))


def _leak_channels(g_a: np.ndarray, g_b: np.ndarray, rel_tol: float) -> list[LeakChannel]:
    c_null = null_space(g_a, rel_tol)
    if c_null.shape[1] == 0:
        return []
    # choose the basis in which g_b C_n are mutually orthogonal
    small = c_null.conj().T @ g_b.conj().T @ g_b @ c_null
    vals, u = eigh_sorted(small)
    c_states = c_null @ u
    top = float(np.max(np.linalg.svd(g_b, compute_uv=False))) if g_b.size else 0.0
    out = []
    for k in range(c_states.shape[1]):
        c = c_states[:, k : k + 1]
        fed = g_b @ c
        norm = float(np.linalg.norm(fed))
        if norm > rel_tol * max(top, 1e-300):
            out.append(LeakChannel(c, fed / norm, norm))
        else:
            out.append(LeakChannel(c, None, 0.0))
    return out


def leak_states(cfg: SystemConfig) -> list[LeakChannel]:
    """Excited-level states C^b with g_a C^b = 0, paired with normalized g_b C^b."""
    return list(static_structure(cfg).leak)


@dataclass
class DarkBrightDecomposition:
    cfg: SystemConfig
    omega_a: float
    omega_b: float
    d_c: np.ndarray  # full-space columns
    bright: list[BrightPair]
    dressed_plus: list[DressedState]
    dressed_minus: list[DressedState]
    d_a: np.ndarray  # full-space columns
    d_b: np.ndarray  # full-space columns
    shared: list[SharedDarkPair]
    extra_dark: np.ndarray  # full-space columns
    c_b_leak: list[LeakChannel]
    counts: DarkCounts
    max_residual: float = field(default=0.0)

    def shared_dark_vectors(self) -> np.ndarray:
        """Full-space dark vectors a_n Omega_a B_n - Omega_b A_n (normalized)."""
        idx = self.cfg.basis
        cols = []
        for p in self.shared:
            den = math.hypot(self.omega_b, p.a_dn * self.omega_a)
            if den == 0.0:
                continue
            v = np.zeros((idx.dim, 1), dtype=complex)
            v[idx.b] = p.a_dn * self.omega_a * p.b_state / den
            v[idx.a] = -self.omega_b * p.a_state / den
            cols.append(v)
        return _stack(cols, idx.dim)

    def dark_vectors(self) -> np.ndarray:
        return np.hstack([self.d_a, self.d_b, self.shared_dark_vectors(), self.extra_dark])

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """All classified vectors (columns) with their eigenvalues."""
        delta = self.cfg.delta
        cols = [self.d_c]
        vals = [np.full(self.d_c.shape[1], -2.0 * delta)]
        for d in self.dressed_plus + self.dressed_minus:
            cols.append(d.vector)
            vals.append(np.array([d.eigenvalue]))
        dark = self.dark_vectors()
        cols.append(dark)
        vals.append(np.zeros(dark.shape[1]))
        return np.concatenate(vals), np.hstack(cols)


def dressed_angle(c_n: float, delta: float) -> float:
    """Mixing angle in (0, pi/2) with tan(2 theta) = -c_n / delta."""
    return 0.5 * math.atan2(c_n, -delta)


def dressed_eigenvalues(c_n: float, delta: float) -> tuple[float, float]:
    r = math.hypot(delta, c_n)
    # cancellation-free form of -delta + r for large positive delta
    plus = c_n * c_n / (delta + r) if delta > 0 else -delta + r
    minus = -c_n * c_n / plus if plus != 0 else -delta - r
    return plus, minus


def decompose(cfg: SystemConfig, omega_a: float, omega_b: float, rel_tol: float = DEFAULT_REL_TOL) -> DarkBrightDecomposition:
    """Classify the complete orthonormal eigenbasis of V for given Rabi frequencies."""
    if omega_a < 0 or omega_b < 0:
        raise ValueError("Rabi frequencies must be non-negative")
    idx = cfg.basis
    cs = build_couplings(cfg)
    g_full = coupling_operator(cfg, omega_a, omega_b, cs)
    g = g_full[idx.lower, idx.c]
    v_op = interaction_operator(cfg, omega_a, omega_b, cs)
    delta = cfg.delta
    n_low = g.shape[0]

    c_vals, c_vecs, c_null = _positive_eig(g.conj().T @ g, rel_tol)
    d_c = idx.embed(c_null, "c")

    bright, plus, minus = [], [], []
    for k, val in enumerate(c_vals):
        c_n = math.sqrt(val)
        c_state = c_vecs[:, k : k + 1]
        f_state = g @ c_state / c_n
        bright.append(BrightPair(c_state, f_state, c_n))
        theta = dressed_angle(c_n, delta)
        lam_p, lam_m = dressed_eigenvalues(c_n, delta)
        f_full = np.zeros((idx.dim, 1), dtype=complex)
        f_full[idx.lower] = f_state
        c_full = idx.embed(c_state, "c")
        plus.append(DressedState(math.sin(theta) * f_full + math.cos(theta) * c_full, theta, lam_p))
        minus.append(DressedState(math.cos(theta) * f_full - math.sin(theta) * c_full, theta, lam_m))

    st = static_structure(cfg, rel_tol)
    d_a = idx.embed(st.d_a, "a")
    d_b = idx.embed(st.d_b, "b")

    decomp = DarkBrightDecomposition(
        cfg=cfg,
        omega_a=float(omega_a),
        omega_b=float(omega_b),
        d_c=d_c,
        bright=bright,
        dressed_plus=plus,
        dressed_minus=minus,
        d_a=d_a,
        d_b=d_b,
        shared=list(st.shared),
        extra_dark=np.zeros((idx.dim, 0), dtype=complex),
        c_b_leak=list(st.leak),
        counts=None,  # filled below
    )

    # dark states that exist only because a Rabi frequency vanishes exactly
    known = np.hstack([d_a, d_b, decomp.shared_dark_vectors()])[idx.lower]
    if np.linalg.norm(g) > 0:
        dark_low = null_space(g.conj().T, rel_tol)
    else:
        dark_low = np.eye(n_low, dtype=complex)
    extra = orthonormal_complement(known, dark_low)
    decomp.extra_dark = np.vstack([extra, np.zeros((idx.scheme.dim_c, extra.shape[1]), dtype=complex)])

    n_f = d_c.shape[1] + 2 * len(bright)
    decomp.counts = DarkCounts(
        n_c_dark=d_c.shape[1],
        n_c=len(bright),
        n_f=n_f,
        n_a_dark=st.d_a.shape[1],
        n_b_dark=st.d_b.shape[1],
        n_ab_dark=len(st.shared),
        n_dark=idx.dim - n_f,
    )

    vals, vecs = decomp.eigensystem()
    if vecs.shape[1] != idx.dim:
        raise DecompositionError(
            f"classified {vecs.shape[1]} vectors, expected {idx.dim} (families do not close)", float("inf")
        )
    v_norm = float(np.linalg.norm(v_op, 2))
    resid = np.linalg.norm(v_op @ vecs - vecs * vals, axis=0)
    worst = float(resid.max()) if resid.size else 0.0
    decomp.max_residual = worst
    if worst > RESIDUAL_TOL * max(v_norm, 1e-300) and worst > 1e-14:
        raise DecompositionError(f"eigen-residual {worst:.3e} exceeds {RESIDUAL_TOL:g} * ||V|| = {RESIDUAL_TOL * v_norm:.3e}", worst)
    return decomp


@dataclass(frozen=True)
class DarkCountReport:
    counts: DarkCounts
    n_b_dark_numeric: int
    n_b_dark_formula: int
    n_b_dark_minimum: int | None  # only defined when J_c = J_b + 1
    formula_agrees: bool

    def as_dict(self) -> dict:
        return {
            **self.counts.as_dict(),
            "N_b_dark_formula": self.n_b_dark_formula,
            "N_b_dark_minimum": self.n_b_dark_minimum,
            "formula_agrees": self.formula_agrees,
        }


def dark_counts(cfg: SystemConfig, omega_a: float = 1.0, omega_b: float = 1.0) -> DarkCountReport:
    """Numerical family sizes plus the closed-form count of b-only dark states.

    The closed form 2(2J_b - J_c + 1) - 1 assumes g_b has full column rank; it
    is reported as an annotation, with the numerical nullity as ground truth.
    """
    decomp = decompose(cfg, omega_a, omega_b)
    s = cfg.scheme
    g_b = build_couplings(cfg).g_b
    numeric = nullity(g_b.conj().T)
    # 2(2Jb - Jc + 1) - 1 in twice-values
    formula = (2 * s.two_jb - s.two_jc + 2) - 1
    minimum = s.two_jb - 1 if s.two_jc == s.two_jb + 2 else None
    return DarkCountReport(decomp.counts, numeric, formula, minimum, numeric == formula)
