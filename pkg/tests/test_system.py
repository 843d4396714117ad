import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j

from lambda_memory.angular import magnetic_numbers
from lambda_memory.system import (
    BasisLabel,
    LevelScheme,
    build_couplings,
    interaction_operator,
    make_config,
    operator_parts,
)


def test_dimension_and_layout(rb_pi):
    idx = rb_pi.basis
    assert idx.dim == 5 + 2 * 3 + 3
    assert idx.label_of(0) == BasisLabel("a", -4, (0, 0))
    assert idx.label_of(5) == BasisLabel("b", -2, (1, 0))
    assert idx.label_of(8) == BasisLabel("b", -2, (0, 1))
    assert idx.label_of(13) == BasisLabel("c", 2, (0, 0))
    assert idx.index_of(("b", 0, (0, 1))) == 9
    with pytest.raises(KeyError):
        idx.index_of(("b", 6, (1, 0)))
    with pytest.raises(IndexError):
        idx.label_of(14)


def test_half_integer_scheme():
    cfg = make_config("3/2", "1/2", "3/2")
    assert cfg.basis.dim == 4 + 2 * 2 + 4
    assert cfg.scheme.label() == "Jb=1/2->Jc=3/2->Ja=3/2"


def test_forbidden_schemes_rejected():
    with pytest.raises(ValueError, match="not dipole-allowed"):
        LevelScheme(2, 2, 6)
    with pytest.raises(ValueError):
        LevelScheme(0, 2, 0)
    with pytest.raises(ValueError):
        make_config(1, 1, "1/2")


def test_cavity_modes_must_be_orthogonal():
    with pytest.raises(ValueError, match="orthogonal"):
        make_config(2, 1, 1, l1="sigma+", l2="sigma+")


def test_pi_coupling_matches_sympy(rb_pi):
    g_a = build_couplings(rb_pi).g_a
    for i, ma in enumerate(magnetic_numbers(4)):
        for j, mc in enumerate(magnetic_numbers(2)):
            expected = 0.0
            if ma == mc:
                expected = (-1) ** ((4 - ma) // 2) * float(
                    wigner_3j(2, 1, 1, Rational(-ma, 2), 0, Rational(mc, 2))
                )
            assert g_a[i, j] == pytest.approx(expected, abs=1e-15)


def test_cavity_mode_selection(rb_pi):
    cs = build_couplings(rb_pi)
    mb, mc = magnetic_numbers(2), magnetic_numbers(2)
    for i, m in enumerate(mb):
        for j, n in enumerate(mc):
            # sigma- photon couples m_b to m_c = m_b + 1, sigma+ to m_c = m_b - 1
            if n != m + 2:
                assert cs.g_b1[i, j] == 0
            if n != m - 2:
                assert cs.g_b2[i, j] == 0


def test_interaction_operator_structure(rb_pi):
    cfg = rb_pi.with_delta(0.3)
    v = interaction_operator(cfg, 0.7, 1.3)
    idx = cfg.basis
    assert np.allclose(v, v.conj().T)
    assert np.allclose(v[idx.c, idx.c], -0.6 * np.eye(3))
    assert np.allclose(v[idx.lower, idx.lower], 0)
    with pytest.raises(ValueError):
        interaction_operator(cfg, -1.0, 1.0)


def test_zero_fields_leave_only_detuning(rb_pi):
    v = interaction_operator(rb_pi.with_delta(0.5), 0.0, 0.0)
    assert np.count_nonzero(v) == 3


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), st.floats(-3, 3))
def test_operator_parts_reassemble(wa, wb, delta):
    cfg = make_config(2, 1, 1, "x", delta=delta)
    assert np.allclose(operator_parts(cfg).at(wa, wb), interaction_operator(cfg, wa, wb), atol=1e-13)
