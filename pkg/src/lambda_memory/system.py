"""Level scheme, basis layout, couplings and the interaction operator.

The single-excitation space is ordered as

    |J_a m_a>|0,0>   (m ascending)
    |J_b m_b>|1,0>   (m ascending)
    |J_b m_b>|0,1>   (m ascending)
    |J_c m_c>|0,0>   (m ascending)

so its dimension is (2J_a+1) + 2(2J_b+1) + (2J_c+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .angular import (
    Polarization,
    check_dipole_allowed,
    contract,
    dipole_components,
    format_momentum,
    magnetic_numbers,
    parse_momentum,
    polarization_from_name,
)


@dataclass(frozen=True)
class LevelScheme:
    """Angular momenta of the three levels, stored as twice-values."""

    two_ja: int
    two_jb: int
    two_jc: int

    def __post_init__(self):
        for t in (self.two_ja, self.two_jb, self.two_jc):
            if not isinstance(t, (int, np.integer)) or t < 0:
                raise ValueError(f"twice-J values must be non-negative integers, got {t!r}")
        check_dipole_allowed(self.two_ja, self.two_jc)
        check_dipole_allowed(self.two_jb, self.two_jc)

    @property
    def dim_a(self) -> int:
        return self.two_ja + 1

    @property
    def dim_b(self) -> int:
        return self.two_jb + 1

    @property
    def dim_c(self) -> int:
        return self.two_jc + 1

    def label(self) -> str:
        return (
            f"Jb={format_momentum(self.two_jb)}->Jc={format_momentum(self.two_jc)}"
            f"->Ja={format_momentum(self.two_ja)}"
        )


class BasisLabel(NamedTuple):
    level: str  # "a", "b", "c"
    two_m: int
    photons: tuple[int, int]


@dataclass(frozen=True)
class BasisIndex:
    scheme: LevelScheme

    @cached_property
    def labels(self) -> tuple[BasisLabel, ...]:
        s = self.scheme
        out = [BasisLabel("a", m, (0, 0)) for m in magnetic_numbers(s.two_ja)]
        out += [BasisLabel("b", m, (1, 0)) for m in magnetic_numbers(s.two_jb)]
        out += [BasisLabel("b", m, (0, 1)) for m in magnetic_numbers(s.two_jb)]
        out += [BasisLabel("c", m, (0, 0)) for m in magnetic_numbers(s.two_jc)]
        return tuple(out)

    @cached_property
    def _positions(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index_of(self, label: BasisLabel) -> int:
        try:
            return self._positions[BasisLabel(*label)]
        except (KeyError, TypeError) as exc:
            raise KeyError(f"no basis state {label!r} in {self.scheme.label()}") from exc

    def label_of(self, position: int) -> BasisLabel:
        if not 0 <= position < self.dim:
            raise IndexError(f"basis position {position} out of range [0, {self.dim})")
        return self.labels[position]

    @property
    def a(self) -> slice:
        return slice(0, self.scheme.dim_a)

    @property
    def b(self) -> slice:
        """Both photon-mode copies of level b."""
        s = self.scheme
        return slice(s.dim_a, s.dim_a + 2 * s.dim_b)

    @property
    def b1(self) -> slice:
        s = self.scheme
        return slice(s.dim_a, s.dim_a + s.dim_b)

    @property
    def b2(self) -> slice:
        s = self.scheme
        return slice(s.dim_a + s.dim_b, s.dim_a + 2 * s.dim_b)

    @property
    def lower(self) -> slice:
        s = self.scheme
        return slice(0, s.dim_a + 2 * s.dim_b)

    @property
    def c(self) -> slice:
        s = self.scheme
        start = s.dim_a + 2 * s.dim_b
        return slice(start, start + s.dim_c)

    def embed(self, vec: np.ndarray, block: str) -> np.ndarray:
        """Place a block vector (or stack of columns) into the full space."""
        v = np.asarray(vec, dtype=complex)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        out = np.zeros((self.dim, v.shape[1]), dtype=complex)
        out[getattr(self, block), :] = v
        return out


@dataclass(frozen=True)
class SystemConfig:
    """Everything static about a setup: levels, three polarizations, detuning."""

    scheme: LevelScheme
    l_c: Polarization
    l_1: Polarization = field(default_factory=lambda: polarization_from_name("sigma-"))
    l_2: Polarization = field(default_factory=lambda: polarization_from_name("sigma+"))
    delta: float = 0.0

    def __post_init__(self):
        overlap = abs(self.l_1.inner(self.l_2))
        if overlap > 1e-12:
            raise ValueError(f"cavity mode polarizations are not orthogonal (|<l1|l2>| = {overlap:.3e})")
        if not np.isfinite(self.delta):
            raise ValueError("detuning must be finite")

    @cached_property
    def basis(self) -> BasisIndex:
        return BasisIndex(self.scheme)

    def with_drive(self, l_c: Polarization) -> "SystemConfig":
        return SystemConfig(self.scheme, l_c, self.l_1, self.l_2, self.delta)

    def with_delta(self, delta: float) -> "SystemConfig":
        return SystemConfig(self.scheme, self.l_c, self.l_1, self.l_2, delta)


def make_config(ja, jb, jc, drive="pi", l1="sigma-", l2="sigma+", delta=0.0) -> SystemConfig:
    """Convenience constructor from momenta (numbers or strings) and polarization names."""
    def pol(p):
        return p if isinstance(p, Polarization) else polarization_from_name(p)

    scheme = LevelScheme(parse_momentum(ja), parse_momentum(jb), parse_momentum(jc))
    return SystemConfig(scheme, pol(drive), pol(l1), pol(l2), float(delta))


@dataclass(frozen=True)
class CouplingSet:
    g_a: np.ndarray
    g_b1: np.ndarray
    g_b2: np.ndarray

    @property
    def g_b(self) -> np.ndarray:
        return np.vstack([self.g_b1, self.g_b2])


def build_couplings(cfg: SystemConfig) -> CouplingSet:
    s = cfg.scheme
    comps_a = dipole_components(s.two_ja, s.two_jc)
    comps_b = dipole_components(s.two_jb, s.two_jc)
    return CouplingSet(
        g_a=contract(comps_a, cfg.l_c),
        g_b1=contract(comps_b, cfg.l_1),
        g_b2=contract(comps_b, cfg.l_2),
    )


def coupling_operator(cfg: SystemConfig, omega_a: float, omega_b: float, couplings: CouplingSet | None = None) -> np.ndarray:
    """The raising part G (maps level c into the lower levels), as an N x N matrix."""
    cs = couplings or build_couplings(cfg)
    idx = cfg.basis
    g = np.zeros((idx.dim, idx.dim), dtype=complex)
    g[idx.a, idx.c] = omega_a * cs.g_a
    g[idx.b, idx.c] = omega_b * cs.g_b
    return g


def interaction_operator(cfg: SystemConfig, omega_a: float, omega_b: float, couplings: CouplingSet | None = None) -> np.ndarray:
    """V = -2 delta P_c + G + G^H."""
    if omega_a < 0 or omega_b < 0:
        raise ValueError("Rabi frequencies must be non-negative")
    g = coupling_operator(cfg, omega_a, omega_b, couplings)
    v = g + g.conj().T
    idx = cfg.basis
    c = idx.c
    v[c, c] += -2.0 * cfg.delta * np.eye(cfg.scheme.dim_c)
    return v


class OperatorParts(NamedTuple):
    """V(t) = const + omega_a * part_a + omega_b * part_b."""

    const: np.ndarray
    part_a: np.ndarray
    part_b: np.ndarray

    def at(self, omega_a: float, omega_b: float) -> np.ndarray:
        return self.const + omega_a * self.part_a + omega_b * self.part_b


def operator_parts(cfg: SystemConfig) -> OperatorParts:
    cs = build_couplings(cfg)
    const = interaction_operator(cfg, 0.0, 0.0, cs)
    part_a = interaction_operator(cfg.with_delta(0.0), 1.0, 0.0, cs)
    part_b = interaction_operator(cfg.with_delta(0.0), 0.0, 1.0, cs)
    return OperatorParts(const, part_a, part_b)
