"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays. The helpers here pin down the
conventions that make results reproducible: descending eigenvalue order,
a fixed eigenvector phase, and explicit relative tolerances for rank
decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOL = 1e-10


class ContractError(ValueError):
    """Raised when an input violates an operation's precondition."""


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray  # column, unit norm


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ContractError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix contains NaN or Inf entries")
    return a


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ContractError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(as_matrix(m), "fro"))


def trace(m) -> complex:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ContractError(f"trace of non-square matrix {a.shape}")
    return complex(np.trace(a))


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude component is real and positive.

    Near-ties in magnitude are resolved toward the lowest index so the
    choice does not flip on rounding noise.
    """
    mags = np.abs(v)
    top = mags.max()
    if top == 0.0:
        return v
    k = int(np.flatnonzero(mags >= top * (1 - 1e-9))[0])
    return v * (abs(v[k]) / v[k])


def _lex_key(v: np.ndarray) -> tuple:
    r = np.round(v, 12)
    return tuple(x for c in r for x in (-c.real, -c.imag))


def canonicalize(vals: np.ndarray, vecs: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Sort eigenpairs descending; fix phases; order degenerate groups."""
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = np.column_stack([fix_phase(vecs[:, k]) for k in range(vecs.shape[1])]) if vecs.size else vecs
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    out_vals, out_cols = [], []
    i = 0
    n = len(vals)
    while i < n:
        j = i + 1
        while j < n and vals[i] - vals[j] <= tol * scale:
            j += 1
        group = sorted(range(i, j), key=lambda k: _lex_key(vecs[:, k]))
        out_vals.extend(vals[k] for k in group)
        out_cols.extend(vecs[:, k] for k in group)
        i = j
    if not out_cols:
        return vals, vecs
    return np.asarray(out_vals, dtype=float), np.column_stack(out_cols)


def eigh_sorted(m, tol: float = DEFAULT_REL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`hermitian_eig`: ``(values, vectors-as-columns)``."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ContractError(f"hermitian_eig needs a square matrix, got {a.shape}")
    norm = np.linalg.norm(a)
    skew = np.linalg.norm(a - a.conj().T)
    if skew > max(tol, 1e-12) * max(norm, 1.0):
        raise ContractError(
            f"matrix is not Hermitian: ||m - m^H|| = {skew:.3e} vs ||m|| = {norm:.3e}"
        )
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return canonicalize(vals, vecs, tol)


def hermitian_eig(m, tol: float = DEFAULT_REL_TOL) -> list[EigenPair]:
    """Eigenpairs of a Hermitian matrix in descending eigenvalue order."""
    vals, vecs = eigh_sorted(m, tol)
    return [EigenPair(float(vals[k]), vecs[:, k : k + 1]) for k in range(len(vals))]


def nullity(m, rel_tol: float = DEFAULT_REL_TOL) -> int:
    a = as_matrix(m)
    if a.size == 0:
        return a.shape[1]
    s = np.linalg.svd(a, compute_uv=False)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return a.shape[1]
    rank = int(np.sum(s > rel_tol * smax))
    return a.shape[1] - rank


def null_space(m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the kernel of ``m``.

    The dimension comes from the singular values; the basis itself is taken
    from the eigenvectors of ``m^H m`` with the smallest eigenvalues, in the
    canonical order of :func:`hermitian_eig`.
    """
    if not 0.0 < rel_tol <= 1e-4:
        raise ContractError(f"rel_tol must lie in (0, 1e-4], got {rel_tol}")
    a = as_matrix(m)
    n = a.shape[1]
    k = nullity(a, rel_tol)
    if k == n:
        return np.eye(n, dtype=complex)
    if k == 0:
        return np.zeros((n, 0), dtype=complex)
    gram = a.conj().T @ a
    vals, vecs = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    basis = vecs[:, :k]
    # re-canonicalize inside the (degenerate) null block
    _, basis = canonicalize(np.zeros(k), basis, tol=1.0)
    return basis


def range_basis(m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``m``."""
    a = as_matrix(m)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return u[:, s > rel_tol * s[0]]


def orthonormal_complement(basis: np.ndarray, within: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    """Columns spanning ``span(within)`` minus ``span(basis)``."""
    if within.shape[1] == 0:
        return within
    if basis.shape[1]:
        resid = within - basis @ (basis.conj().T @ within)
    else:
        resid = within
    u, s, _ = np.linalg.svd(resid, full_matrices=False)
    return u[:, s > rel_tol]


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary (or partial isometry) to ``m`` in Frobenius norm."""
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh
