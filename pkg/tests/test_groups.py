import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.errors import UsageError
from geoflow.groups import (
    AlgebraVector,
    Covector,
    GroupElement,
    Model,
    coadjoint,
    coadjoint_array,
    commutator,
    exponential,
    identity,
    inverse,
    multiply,
)

MODELS = list(Model)
coord = st.floats(-3, 3, allow_nan=False)
triple = st.tuples(coord, coord, coord)


def G(m, *v):
    return GroupElement(m, *map(float, v))


def close(a, b, tol):
    return np.max(np.abs(np.asarray(a.as_array()) - np.asarray(b.as_array()))) <= tol


def test_multiply_examples():
    assert multiply(G("nil", 1, 0, 0), G("nil", 0, 1, 0)).as_array().tolist() == [1, 1, 0.5]
    r = multiply(G("sol", 1, 0, 0), G("sol", 0, 1, 1)).as_array()
    assert np.allclose(r, [1, math.e, 1 / math.e], rtol=0, atol=1e-15)
    assert multiply(G("e3", 1, 2, 3), G("e3", 4, 5, 6)).as_array().tolist() == [5, 7, 9]


def test_model_mismatch():
    with pytest.raises(UsageError):
        multiply(G("nil", 0, 0, 0), G("sol", 0, 0, 0))
    with pytest.raises(UsageError):
        coadjoint(G("nil", 0, 0, 0), Covector("sol", 1, 0, 0))
    with pytest.raises(UsageError):
        Model.parse("hyperbolic")


def test_inverse_examples():
    assert inverse(G("nil", 1, 2, 3)).as_array().tolist() == [-1, -2, -3]
    x, y, z = 0.7, -1.2, 2.0
    assert np.allclose(inverse(G("sol", x, y, z)).as_array(), [-x, -math.exp(-x) * y, -math.exp(x) * z], atol=1e-15)
    assert commutator(G("nil", 1, 0, 0), G("nil", 0, 1, 0)).as_array().tolist() == [0, 0, 1]


@pytest.mark.parametrize("m", MODELS)
@settings(max_examples=200, deadline=None)
@given(a=triple, b=triple, c=triple)
def test_associativity(m, a, b, c):
    A, B, C = G(m, *a), G(m, *b), G(m, *c)
    l = multiply(multiply(A, B), C).as_array()
    r = multiply(A, multiply(B, C)).as_array()
    assert np.all(np.abs(l - r) <= 1e-12 * np.maximum(1.0, np.abs(l)))


@pytest.mark.parametrize("m", MODELS)
@settings(max_examples=200, deadline=None)
@given(a=triple)
def test_inverse_property(m, a):
    A = G(m, *a)
    assert np.max(np.abs(multiply(A, inverse(A)).as_array())) <= 1e-14 * max(1.0, math.exp(3) * 3)
    assert np.max(np.abs(multiply(inverse(A), A).as_array())) <= 1e-13


def test_exponential_examples():
    assert exponential(AlgebraVector("nil", 1, 2, 3), 1.0).as_array().tolist() == [1, 2, 3]
    for m in MODELS:
        assert exponential(AlgebraVector(m, 0.3, -1, 2), 0.0).as_array().tolist() == [0, 0, 0]
    assert np.allclose(exponential(AlgebraVector("sol", 1, 1, 0), 1.0).as_array(), [1, math.e - 1, 0], atol=1e-15)
    assert exponential(AlgebraVector("sol", 0, 2, 3), 1.5).as_array().tolist() == [0, 3, 4.5]


def test_sol_exponential_oracle():
    # integrate dg/dt = dL_g v with scipy as an independent reference
    from scipy.integrate import solve_ivp

    v = (0.8, -0.3, 1.1)

    def rhs(t, g):
        return [v[0], math.exp(g[0]) * v[1], math.exp(-g[0]) * v[2]]

    sol = solve_ivp(rhs, (0, 2.0), [0, 0, 0], method="DOP853", rtol=1e-13, atol=1e-13)
    assert np.allclose(exponential(AlgebraVector("sol", *v), 2.0).as_array(), sol.y[:, -1], atol=1e-10)


def test_sol_exponential_series_branch_continuous():
    # the Taylor branch and the closed form agree across the cutoff
    a = exponential(AlgebraVector("sol", 0.999e-6, 1, 1), 1.0).as_array()
    b = exponential(AlgebraVector("sol", 1.001e-6, 1, 1), 1.0).as_array()
    assert np.max(np.abs(a - b)) < 1e-8
    c = exponential(AlgebraVector("sol", 1e-12, 1, 1), 1.0).as_array()
    assert np.allclose(c, [1e-12, 1 + 5e-13, 1 - 5e-13], rtol=0, atol=1e-16)


@pytest.mark.parametrize("m", MODELS)
@settings(max_examples=200, deadline=None)
@given(v=st.tuples(*[st.floats(-2, 2)] * 3), s=st.floats(-5, 5), t=st.floats(-5, 5))
def test_one_parameter_subgroup(m, v, s, t):
    V = AlgebraVector(m, *v)
    lhs = multiply(exponential(V, s), exponential(V, t)).as_array()
    rhs = exponential(V, s + t).as_array()
    assert np.all(np.abs(lhs - rhs) <= 1e-10 * np.maximum(1.0, np.abs(rhs)))


def test_coadjoint_values():
    # momentum map of the left action for the coframes of the package
    assert coadjoint(G("nil", 2, 4, 0), Covector("nil", 0, 0, 1)).as_array().tolist() == [4, -2, 1]
    r = coadjoint(G("sol", 1, 1, 0), Covector("sol", 0, 1, 1)).as_array()
    assert np.allclose(r, [1 / math.e, 1 / math.e, math.e], atol=1e-15)
    assert coadjoint(G("e3", 7, 8, 9), Covector("e3", 1, 2, 3)).as_array().tolist() == [1, 2, 3]


@pytest.mark.parametrize("m", MODELS)
def test_coadjoint_action_law(m):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        h1, h2 = G(m, *rng.uniform(-2, 2, 3)), G(m, *rng.uniform(-2, 2, 3))
        p = Covector(m, *rng.uniform(-2, 2, 3))
        one = coadjoint(multiply(h1, h2), p).as_array()
        two = coadjoint(h1, coadjoint(h2, p)).as_array()
        worst = max(worst, np.max(np.abs(one - two) / np.maximum(1.0, np.abs(one))))
    assert worst <= 1e-10


def test_coadjoint_casimirs_preserved():
    rng = np.random.default_rng(12)
    for _ in range(200):
        g = rng.uniform(-2, 2, 3)
        p = rng.uniform(-2, 2, 3)
        q = coadjoint(G("sol", *g), Covector("sol", *p))
        assert abs(q.pb * q.pg - p[1] * p[2]) <= 1e-12 * max(1.0, abs(p[1] * p[2]))
        q = coadjoint(G("nil", *g), Covector("nil", *p))
        assert q.pg == p[2]


def test_coadjoint_array_matches_scalar():
    rng = np.random.default_rng(13)
    g = rng.uniform(-2, 2, (50, 3))
    p = rng.uniform(-2, 2, (50, 3))
    for m in MODELS:
        arr = coadjoint_array(m, g, p)
        for i in range(50):
            assert np.allclose(arr[i], coadjoint(G(m, *g[i]), Covector(m, *p[i])).as_array(), atol=1e-14)


def test_identity_and_parse():
    for m in ("e3", "NIL", " sol "):
        assert identity(m).as_array().tolist() == [0, 0, 0]
    assert Model.parse("Nil") is Model.NIL
