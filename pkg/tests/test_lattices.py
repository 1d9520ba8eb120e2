import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.errors import CapacityError, NotAnosovError, ReductionError, UsageError
from geoflow.groups import GroupElement, commutator, inverse, multiply
from geoflow.lattices import (
    LatticeSpec,
    QuadraticField,
    SolData,
    domain_coordinates,
    evaluate_word,
    fundamental_unit,
    in_domain,
    is_squarefree,
    lattice_element,
    lattice_for,
    min_displacement,
    monodromy_determinant,
    monodromy_matrix,
    monodromy_stretch,
    nil_standard_lattice,
    reduce,
    reduce_array,
    reduce_coords,
    sol_closure_residual,
    sol_lattice,
)

SQUAREFREE = [d for d in range(2, 60) if is_squarefree(d)]


def brute_unit(d, amax=4000, bmax=400):
    """Smallest ring element > 1 of norm +-1 by exhaustive search over a box."""
    f = QuadraticField(d)
    best = None
    for b in range(1, bmax):
        for a in range(-amax, amax):
            n = f.norm(a, b)
            if (n == 1 or n == -1) and f.value(a, b) > 1 and (best is None or f.value(a, b) < best[2]):
                best = (a, b, f.value(a, b))
        if best is not None and b > best[1] + 2:
            break
    return best


def test_squarefree():
    assert [d for d in range(2, 20) if is_squarefree(d)] == [2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19]
    for bad in (0, 1, 4, 8, 9, 12, 18):
        with pytest.raises(UsageError):
            QuadraticField(bad)


def test_units_examples():
    u = fundamental_unit(QuadraticField(2))
    assert (u.a, u.b, u.norm) == (1, 1, -1) and u.value == pytest.approx(1 + math.sqrt(2))
    u = fundamental_unit(QuadraticField(3))
    assert (u.a, u.b, u.norm) == (2, 1, 1) and u.value == pytest.approx(2 + math.sqrt(3))
    u = fundamental_unit(QuadraticField(5))
    assert (u.a, u.b, u.norm) == (0, 1, -1) and u.value == pytest.approx((1 + math.sqrt(5)) / 2)


@pytest.mark.parametrize("d", [d for d in SQUAREFREE if d not in (46, 31, 43, 22, 53, 58, 29, 19, 57, 41)])
def test_units_match_brute_force(d):
    u = fundamental_unit(QuadraticField(d))
    a, b, v = brute_unit(d)
    assert (u.a, u.b) == (a, b) and u.value == pytest.approx(v, rel=1e-12)


def test_large_unit():
    # d = 94: the unit 2143295 + 221064 sqrt(94) needs a long search
    u = fundamental_unit(QuadraticField(94))
    assert (u.a, u.b, u.norm) == (2143295, 221064, 1)


def test_capacity_error():
    with pytest.raises(CapacityError):
        fundamental_unit(QuadraticField(94), bound=1000)


def test_nil_lattice():
    L = nil_standard_lattice()
    assert [g.as_array().tolist() for g in L.generators] == [[1, 0, 0], [0, 2, 0], [0, 0, 1]]
    a, b, c = L.generators
    assert commutator(a, b).as_array().tolist() == [0, 0, 2]
    for g in L.generators:
        for h in L.generators:
            z = multiply(g, h).z
            assert 2 * z == round(2 * z)
    assert min_displacement(L, 4) >= 0.5


def test_sol_lattice_d2():
    L = sol_lattice(QuadraticField(2))
    assert L.sol.unit_plus.a == 3 and L.sol.unit_plus.b == 2 and L.sol.unit_plus.norm == 1
    assert L.generators[0].x == pytest.approx(math.log(3 + 2 * math.sqrt(2)))
    assert np.allclose(L.generators[1].as_array(), [0, 1, 1])
    assert np.allclose(L.generators[2].as_array(), [0, math.sqrt(2), -math.sqrt(2)])
    assert monodromy_matrix(L).tolist() == [[3, 4], [2, 3]]
    assert monodromy_determinant(L) == 1
    t = L.generators[0]
    for y, z in ((1.0, 1.0), (math.sqrt(2), -math.sqrt(2)), (0.3, -2.0)):
        c = multiply(multiply(t, GroupElement("sol", 0, y, z)), inverse(t))
        up = L.sol.unit_plus.value
        assert np.allclose(c.as_array(), [0, up * y, z / up], atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5, 6, 7, 13])
def test_sol_lattice_invariants(d):
    L = sol_lattice(QuadraticField(d))
    assert monodromy_determinant(L) == 1
    assert abs(np.trace(monodromy_matrix(L))) > 2
    assert monodromy_stretch(L) == pytest.approx(L.sol.log_unit, abs=1e-12)
    assert sol_closure_residual(L) <= 1e-10
    assert min_displacement(L, 3) > 0.1


def test_stretch_values():
    assert monodromy_stretch(sol_lattice(QuadraticField(2))) == pytest.approx(1.76275, abs=1e-5)
    assert monodromy_stretch(sol_lattice(QuadraticField(3))) == pytest.approx(1.31696, abs=1e-5)


def test_not_anosov():
    f = QuadraticField(2)
    L = sol_lattice(f)
    bad = LatticeSpec(L.model, L.generators, SolData(f, L.sol.unit, L.sol.unit_plus, L.sol.ideal_basis,
                                                      ((1, 1), (0, 1))))
    with pytest.raises(NotAnosovError):
        monodromy_stretch(bad)
    with pytest.raises(UsageError):
        monodromy_stretch(nil_standard_lattice())


def test_json_integers_exact():
    d = json.loads(sol_lattice(QuadraticField(2)).to_json())
    assert d["sol"]["monodromy"] == [[3, 4], [2, 3]]
    assert isinstance(d["sol"]["unit"]["a"], int) and d["sol"]["unit"]["norm"] == -1
    assert d["sol"]["stretch"] == pytest.approx(1.762747174, abs=1e-9)


def test_lattice_for_selectors():
    assert lattice_for("e3").name == "e3:cube"
    assert lattice_for("nil", "standard").name == "standard"
    assert lattice_for("sol", "sol:3").sol.field.d == 3
    with pytest.raises(UsageError):
        lattice_for("nil", "sol:2")
    with pytest.raises(UsageError):
        lattice_for("sol", "sol:4")


def test_reduce_examples():
    L = lattice_for("e3")
    r, w = reduce(L, GroupElement("e3", 2.5, -0.5, 7.25))
    assert np.allclose(r.as_array(), [0.5, 0.5, 0.25])
    N = nil_standard_lattice()
    r, w = reduce(N, GroupElement("nil", 1.5, 0, 0))
    assert r.as_array().tolist() == [0.5, 0, 0] and w == [-1]
    g = GroupElement("nil", 0.2, 1.3, 0.7)
    r, w = reduce(N, g)
    assert r == g and w == []


@pytest.mark.parametrize("m", ["e3", "nil", "sol"])
@settings(max_examples=300, deadline=None)
@given(v=st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3))
def test_reduce_property(m, v):
    L = lattice_for(m)
    g = GroupElement(m, *v)
    r, word = reduce(L, g)
    assert in_domain(L, r)
    back = multiply(evaluate_word(L, word), g).as_array()
    assert np.max(np.abs(back - r.as_array())) <= 1e-10 * max(1.0, np.max(np.abs(back)))
    # the closed-form element agrees with the word
    _, exps = reduce_coords(L, g)
    assert np.allclose(lattice_element(L, exps).as_array(), evaluate_word(L, word).as_array(), atol=1e-9)


@pytest.mark.parametrize("m", ["e3", "nil", "sol"])
def test_reduce_array_matches(m):
    L = lattice_for(m)
    rng = np.random.default_rng(41)
    g = rng.uniform(-5, 5, (200, 3))
    arr = reduce_array(L, g)
    for i in range(200):
        r, _ = reduce(L, GroupElement(m, *g[i]))
        c1, c2 = domain_coordinates(L, arr[i]), domain_coordinates(L, r.as_array())
        d = np.abs(c1 - c2)
        assert np.all(np.minimum(d, 1 - d) <= 1e-9)


def test_reduction_capacity():
    with pytest.raises(ReductionError):
        reduce(lattice_for("e3"), GroupElement("e3", 2e4, 0, 0))
    # far from the domain in x, Sol translations are rescaled by u^k and words blow up
    with pytest.raises(ReductionError):
        reduce(lattice_for("sol"), GroupElement("sol", -12.0, 3.0, 0.0))
