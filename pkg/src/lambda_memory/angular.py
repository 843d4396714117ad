"""Angular-momentum algebra: 3J symbols, dipole components, polarizations.

All momenta and magnetic numbers are carried as *twice* their value so that
half-integer levels are represented exactly (``two_j = 3`` means J = 3/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

SQRT_HALF = 1.0 / math.sqrt(2.0)


def parse_momentum(text: str | int | float) -> int:
    """Return twice the angular momentum given as ``"2"``, ``"3/2"`` or ``1.5``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        val = Fraction(text).limit_denominator(2)
    else:
        s = str(text).strip()
        try:
            val = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse angular momentum {text!r}") from exc
    two = 2 * val
    if two.denominator != 1 or two < 0:
        raise ValueError(f"angular momentum must be a non-negative multiple of 1/2, got {text!r}")
    return int(two)


def format_momentum(two_j: int) -> str:
    return str(two_j // 2) if two_j % 2 == 0 else f"{two_j}/2"


def magnetic_numbers(two_j: int) -> list[int]:
    """Twice-m values in ascending order: -2J, -2J+2, ..., 2J."""
    return list(range(-two_j, two_j + 1, 2))


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=4096)
def wigner3j(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    """Wigner 3J symbol with all arguments given as twice-values.

    Uses the Racah single-sum formula evaluated in exact rational
    arithmetic; only the final square root is taken in floating point.
    """
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if tj < 0:
            raise ValueError("angular momenta must be non-negative")
        if (tj - tm) % 2:
            raise ValueError(f"inconsistent parity between 2j={tj} and 2m={tm}")
        if abs(tm) > tj:
            raise ValueError(f"|m| exceeds j: 2j={tj}, 2m={tm}")
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if (tj1 + tj2 + tj3) % 2:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2):
        return 0.0

    j1p, j1m = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    j2p, j2m = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    j3p, j3m = (tj3 + tm3) // 2, (tj3 - tm3) // 2
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tj2 + tj3) // 2
    c = (-tj1 + tj2 + tj3) // 2
    big = (tj1 + tj2 + tj3) // 2 + 1

    # k! (j3-j2+k+m1)! (j3-j1+k-m2)! (j1+j2-j3-k)! (j1-k-m1)! (j2-k+m2)!
    o1 = (tj3 - tj2 + tm1) // 2
    o2 = (tj3 - tj1 - tm2) // 2
    kmin = max(0, -o1, -o2)
    kmax = min(a, j1m, j2p)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = _fact(k) * _fact(o1 + k) * _fact(o2 + k) * _fact(a - k) * _fact(j1m - k) * _fact(j2p - k)
        total += Fraction(-1 if k % 2 else 1, den)
    if total == 0:
        return 0.0

    radicand = Fraction(
        _fact(a) * _fact(b) * _fact(c) * _fact(j1p) * _fact(j1m) * _fact(j2p) * _fact(j2m) * _fact(j3p) * _fact(j3m),
        _fact(big),
    )
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    mag = abs(total) * abs(total) * radicand
    val = math.sqrt(mag.numerator) / math.sqrt(mag.denominator)
    return phase * (1 if total > 0 else -1) * val


def check_dipole_allowed(two_low: int, two_up: int) -> None:
    if abs(two_low - two_up) > 2 or (two_low + two_up) < 2 or (two_low + two_up) % 2:
        raise ValueError(
            f"transition J={format_momentum(two_low)} -> J={format_momentum(two_up)} is not dipole-allowed"
        )


def dipole_component(two_low: int, two_up: int, q: int) -> np.ndarray:
    """Circular component ``q`` of the dimensionless dipole operator.

    Rows run over ascending m of the lower level, columns over ascending m of
    the upper level; entry (m, m_c) = (-1)^(J-m) (J 1 J_c; -m q m_c).
    """
    if q not in (-1, 0, 1):
        raise ValueError(f"q must be -1, 0 or +1, got {q}")
    check_dipole_allowed(two_low, two_up)
    ml = magnetic_numbers(two_low)
    mu = magnetic_numbers(two_up)
    out = np.zeros((len(ml), len(mu)), dtype=complex)
    for i, m in enumerate(ml):
        mc = m - 2 * q
        if abs(mc) > two_up:
            continue
        j = mu.index(mc)
        sign = -1.0 if ((two_low - m) // 2) % 2 else 1.0
        out[i, j] = sign * wigner3j(two_low, 2, two_up, -m, 2 * q, mc)
    return out


def dipole_components(two_low: int, two_up: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three components ordered (q=-1, q=0, q=+1)."""
    return tuple(dipole_component(two_low, two_up, q) for q in (-1, 0, 1))


@dataclass(frozen=True)
class Polarization:
    """Unit polarization vector in the circular basis (q = -1, 0, +1)."""

    q_minus: complex
    q_zero: complex
    q_plus: complex
    name: str = ""

    def __post_init__(self):
        for v in self.components:
            if not np.isfinite(v):
                raise ValueError("polarization components must be finite")
        n = float(np.sum(np.abs(self.components) ** 2))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"polarization is not unit-normalized (|l|^2 = {n!r})")

    @property
    def components(self) -> np.ndarray:
        return np.array([self.q_minus, self.q_zero, self.q_plus], dtype=complex)

    @classmethod
    def from_components(cls, comps, name: str = "") -> "Polarization":
        c = np.asarray(comps, dtype=complex)
        if c.shape != (3,):
            raise ValueError("need three circular components (q=-1, 0, +1)")
        n = np.linalg.norm(c)
        if n == 0.0:
            raise ValueError("polarization vector must be nonzero")
        c = c / n
        return cls(complex(c[0]), complex(c[1]), complex(c[2]), name)

    def inner(self, other: "Polarization") -> complex:
        """Conjugate scalar product sum_q conj(self_q) other_q."""
        return complex(np.vdot(self.components, other.components))

    def label(self) -> str:
        if self.name:
            return self.name
        return ",".join(_fmt_complex(c) for c in self.components)


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


def polarization_from_cartesian(ex: complex, ey: complex, ez: complex, name: str = "") -> Polarization:
    """Convert a Cartesian vector to circular components and normalize.

    Convention: l_{+1} = -(l_x + i l_y)/sqrt2, l_0 = l_z, l_{-1} = (l_x - i l_y)/sqrt2.
    """
    ex, ey, ez = complex(ex), complex(ey), complex(ez)
    if ex == 0 and ey == 0 and ez == 0:
        raise ValueError("polarization vector must be nonzero")
    plus = -(ex + 1j * ey) * SQRT_HALF
    minus = (ex - 1j * ey) * SQRT_HALF
    return Polarization.from_components([minus, ez, plus], name)


_NAMED = {
    "pi": (0, 0, 1),
    "z": (0, 0, 1),
    "x": (1, 0, 0),
    "y": (0, 1, 0),
}


def polarization_from_name(name: str) -> Polarization:
    """Named polarizations: ``pi`` (= ``z``), ``sigma+``, ``sigma-``, ``x``, ``y``."""
    key = name.strip().lower().replace("−", "-")
    if key in ("sigma+", "sigma_plus", "s+"):
        return Polarization(0j, 0j, 1 + 0j, "sigma+")
    if key in ("sigma-", "sigma_minus", "s-"):
        return Polarization(1 + 0j, 0j, 0j, "sigma-")
    if key in _NAMED:
        return polarization_from_cartesian(*_NAMED[key], name="pi" if key == "z" else key)
    raise ValueError(f"unknown polarization name {name!r} (expected pi, sigma+, sigma-, x, y)")


def contract(components, pol: Polarization) -> np.ndarray:
    """Spherical scalar product of a vector operator with ``conj(pol)``."""
    comps = [np.asarray(c, dtype=complex) for c in components]
    if len(comps) != 3:
        raise ValueError("need exactly three circular components")
    shape = comps[0].shape
    if any(c.shape != shape for c in comps):
        raise ValueError("component matrices differ in shape")
    weights = np.conj(pol.components)
    return sum(w * c for w, c in zip(weights, comps))
