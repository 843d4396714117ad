import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j

from lambda_memory.angular import (
    Polarization,
    contract,
    dipole_component,
    dipole_components,
    format_momentum,
    magnetic_numbers,
    parse_momentum,
    polarization_from_cartesian,
    polarization_from_name,
    wigner3j,
)


def sympy_3j(tj1, tj2, tj3, tm1, tm2, tm3):
    h = lambda t: Rational(t, 2)
    return float(wigner_3j(h(tj1), h(tj2), h(tj3), h(tm1), h(tm2), h(tm3)))


def all_args(max_two_j):
    for tj1, tj2, tj3 in itertools.product(range(max_two_j + 1), repeat=3):
        for tm1 in magnetic_numbers(tj1):
            for tm2 in magnetic_numbers(tj2):
                tm3 = -tm1 - tm2
                if abs(tm3) <= tj3 and (tj3 - tm3) % 2 == 0:
                    yield tj1, tj2, tj3, tm1, tm2, tm3


def test_parse_and_format():
    assert parse_momentum("3/2") == 3
    assert parse_momentum("2") == 4
    assert parse_momentum(1.5) == 3
    assert format_momentum(3) == "3/2"
    assert format_momentum(4) == "2"
    for bad in ("1/3", "-1", "abc"):
        with pytest.raises(ValueError):
            parse_momentum(bad)


def test_known_values():
    assert wigner3j(2, 2, 4, 0, 0, 0) == pytest.approx(math.sqrt(2 / 15), abs=1e-15)
    assert wigner3j(2, 2, 0, 2, -2, 0) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert wigner3j(1, 1, 0, 1, -1, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_selection_rules_give_exact_zero():
    assert wigner3j(2, 2, 2, 0, 0, 0) == 0.0  # odd j sum with all m = 0
    assert wigner3j(2, 2, 6, 0, 0, 0) == 0.0  # triangle
    assert wigner3j(2, 2, 2, 2, 0, 0) == 0.0  # m sum


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        wigner3j(2, 2, 2, 1, 0, -1)
    with pytest.raises(ValueError):
        wigner3j(2, 2, 2, 4, 0, -4)


def test_matches_sympy_oracle():
    worst = max(abs(wigner3j(*a) - sympy_3j(*a)) for a in all_args(6))
    assert worst < 1e-14


@given(st.integers(0, 12), st.integers(0, 12), st.integers(0, 12), st.data())
def test_matches_sympy_random(tj1, tj2, tj3, data):
    tm1 = data.draw(st.sampled_from(magnetic_numbers(tj1)))
    tm2 = data.draw(st.sampled_from(magnetic_numbers(tj2)))
    tm3 = -tm1 - tm2
    if abs(tm3) > tj3 or (tj3 - tm3) % 2:
        return
    assert wigner3j(tj1, tj2, tj3, tm1, tm2, tm3) == pytest.approx(sympy_3j(tj1, tj2, tj3, tm1, tm2, tm3), abs=1e-13)


def test_dipole_selection_rule():
    for q in (-1, 0, 1):
        g = dipole_component(2, 2, q)
        for i, m in enumerate(magnetic_numbers(2)):
            for j, mc in enumerate(magnetic_numbers(2)):
                if mc != m - 2 * q:
                    assert g[i, j] == 0


def test_dipole_completeness():
    # 3J orthogonality: total weight 1, spread evenly over upper sublevels
    for tl, tu in [(2, 2), (4, 2), (4, 6), (1, 3), (0, 2)]:
        comps = dipole_components(tl, tu)
        total = sum(np.sum(np.abs(c) ** 2) for c in comps)
        assert total == pytest.approx(1.0, abs=1e-13)
        per_upper = sum(np.sum(np.abs(c) ** 2, axis=0) for c in comps)
        assert np.allclose(per_upper, 1 / (tu + 1))


def test_forbidden_transition():
    with pytest.raises(ValueError, match="not dipole-allowed"):
        dipole_component(2, 6, 0)
    with pytest.raises(ValueError):
        dipole_component(0, 0, 0)


def test_polarizations():
    assert np.allclose(polarization_from_name("pi").components, [0, 1, 0])
    x = polarization_from_name("x").components
    assert np.allclose(x, [2 ** -0.5, 0, -(2 ** -0.5)])
    y = polarization_from_name("y").components
    assert np.allclose(y, [-1j * 2 ** -0.5, 0, -1j * 2 ** -0.5])
    assert abs(polarization_from_name("x").inner(polarization_from_name("y"))) < 1e-15
    assert polarization_from_name("sigma-").inner(polarization_from_name("sigma+")) == 0
    with pytest.raises(ValueError):
        polarization_from_name("diagonal")
    with pytest.raises(ValueError):
        Polarization(1, 1, 0)
    with pytest.raises(ValueError):
        polarization_from_cartesian(0, 0, 0)


def test_contract_is_conjugate_linear():
    comps = dipole_components(4, 2)
    p = Polarization.from_components([1, 1j, 0])
    expected = np.conj(p.q_minus) * comps[0] + np.conj(p.q_zero) * comps[1]
    assert np.allclose(contract(comps, p), expected)
