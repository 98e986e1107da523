import pytest

from helpers import nonzero_poly, pool, random_poly, rng
from varitri.errors import ContextError, VaritriError
from varitri.forms import (bidegree, components, contact_split, d_h, d_v, de_rham, interior_product,
                           jet_weight, lie_derivative, tridegree, vertical_homotopy, wedge)
from varitri.grammar import parse_expr
from varitri.jetalg import FieldDecl, JetContext

X = JetContext(("x",), (FieldDecl("u"),))
TX = JetContext(("t", "x"), (FieldDecl("u"),))
TWO = JetContext(("t", "x"), (FieldDecl("u"), FieldDecl("v")))
GR = JetContext(("t", "x"), (FieldDecl("u"), FieldDecl("c", 1), FieldDecl("ustar", -1, "u")))


def P(ctx, s):
    return parse_expr(ctx, s)


def test_wedge_examples():
    assert wedge(P(X, "dx(x)"), P(X, "dx(x)")) == 0
    assert wedge(P(X, "th(u)"), P(X, "th(u)")) == 0
    a, b = P(X, "u*dx(x)"), P(X, "th(u)")
    assert wedge(a, b) == P(X, "u*dx(x)^th(u)")
    assert wedge(b, a) == -P(X, "u*dx(x)^th(u)")
    with pytest.raises(ContextError):
        wedge(a, P(TX, "u"))


def test_differential_examples():
    assert d_h(P(TX, "u")) == P(TX, "u_t*dx(t) + u_x*dx(x)")
    assert d_h(P(TX, "u*dx(x)")) == P(TX, "u_t*dx(t)^dx(x)")
    assert d_h(P(TX, "dx(x)")) == 0
    assert d_v(P(X, "u")) == P(X, "th(u)")
    assert d_v(P(X, "u_x^2")) == P(X, "2*u_x*th(u,[1])")
    assert d_v(P(X, "x")) == 0


def test_contact_split_examples():
    u, ux, x = P(X, "u"), P(X, "u_x"), P(X, "x")
    one = X.const(1)
    assert contact_split([(one, u)]) == P(X, "th(u) + u_x*dx(x)")
    assert contact_split([(one, x)]) == P(X, "dx(x)")
    assert contact_split([(one, ux)]) == P(X, "th(u,[1]) + u_xx*dx(x)")
    with pytest.raises(VaritriError):
        contact_split([(one, P(X, "u^2"))])


def test_interior_and_lie_examples():
    one = [X.const(1)]
    assert interior_product(one, P(X, "th(u)")) == 1
    assert interior_product([P(X, "u")], P(X, "th(u,[1])")) == P(X, "u_x")
    assert interior_product([P(X, "u")], P(X, "u_x^3")) == 0
    assert lie_derivative(one, P(X, "u")) == 1
    assert lie_derivative([P(X, "u")], P(X, "u_x^2")) == P(X, "2*u_x^2")
    assert lie_derivative([P(X, "u_x")], P(X, "dx(x)")) == 0


def test_vertical_homotopy_examples():
    assert vertical_homotopy(P(X, "th(u)")) == P(X, "u")
    assert vertical_homotopy(P(X, "2*u_x*th(u,[1])")) == P(X, "u_x^2")
    w = d_v(P(X, "u^2"))
    assert d_v(vertical_homotopy(w)) == w
    with pytest.raises(VaritriError):
        vertical_homotopy(P(X, "x*dx(x)"))


def test_bidegrees():
    w = P(TX, "u*dx(t)^th(u) + th(u)^th(u,[1,0])")
    assert set(components(w)) == {(1, 1), (0, 2)}
    with pytest.raises(VaritriError):
        bidegree(w)
    assert tridegree(P(GR, "c*dx(x)^th(ustar)")) == (1, 1, 0)


@pytest.mark.parametrize("ctx", [TWO, GR])
def test_differentials_square_zero(ctx):
    r = rng(30)
    gens = pool(ctx, 3, forms=True)
    for _ in range(100):
        w = random_poly(r, ctx, gens, max_factors=3)
        assert d_h(d_h(w)) == 0
        assert d_v(d_v(w)) == 0
        assert d_h(d_v(w)) + d_v(d_h(w)) == 0
        assert de_rham(de_rham(w)) == 0


@pytest.mark.parametrize("ctx", [TWO, GR])
def test_differentials_are_graded_derivations(ctx):
    r = rng(31)
    gens = pool(ctx, 2, forms=True)
    for _ in range(100):
        a = nonzero_poly(r, ctx, gens, terms=1)
        b = random_poly(r, ctx, gens)
        s = -1 if a.parity() else 1
        for d in (d_h, d_v):
            assert d(a * b) == d(a) * b + (a * d(b)).scale(s)


def test_wedge_graded_commutative():
    r = rng(32)
    gens = pool(GR, 2, forms=True)
    for _ in range(100):
        a = nonzero_poly(r, GR, gens, terms=1)
        b = nonzero_poly(r, GR, gens, terms=1)
        s = -1 if a.parity() and b.parity() else 1
        assert wedge(a, b) == wedge(b, a).scale(s)


def test_homotopy_identity_random():
    r = rng(33)
    gens = [g for g in pool(TWO, 3, forms=True)]
    checked = 0
    while checked < 100:
        w = random_poly(r, TWO, gens, terms=3)
        if not w.terms or any(jet_weight(m) == 0 for m in w.terms):
            continue
        assert d_v(vertical_homotopy(w)) + vertical_homotopy(d_v(w)) == w
        checked += 1


def test_interior_squares_to_zero_for_even_fields():
    r = rng(34)
    gens = pool(TWO, 2, forms=False)
    fgens = pool(TWO, 2, forms=True)
    for _ in range(50):
        chi = [random_poly(r, TWO, gens) for _ in range(2)]
        w = random_poly(r, TWO, fgens)
        assert interior_product(chi, interior_product(chi, w)) == 0
