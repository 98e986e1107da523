"""Horizontal/contact forms on the jet space.

A BiForm is a :class:`~varitri.jetalg.DiffPoly` whose monomials may contain
``dx^i`` and contact symbols ``theta^A_sigma``.  Wedge is the graded product
of the algebra.  Conventions:

* theta^A_sigma = du^A_sigma - sum_i u^A_{sigma+1_i} dx^i
* d_h = sum_i dx^i D_i, so d_h(theta^A_sigma) = sum_i dx^i ^ theta^A_{sigma+1_i}
* d_v(u^A_sigma) = theta^A_sigma, d_v(x) = d_v(dx) = d_v(theta) = 0

With these, d = d_h + d_v squares to zero and both pieces are odd
derivations.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ContextError, VaritriError
from .jetalg import (BASE, DX, JET, THETA, DiffPoly, JetContext, apply_derivation,
                     jet_gen, prolong_derivative, theta_gen, total_derivative)

BiForm = DiffPoly


def bidegree_of_monomial(m) -> tuple[int, int]:
    p = q = 0
    for g, e in m:
        if g[0] == DX:
            p += 1
        elif g[0] == THETA:
            q += e
    return p, q


def components(w: BiForm) -> dict:
    """Split a form into its (p, q) homogeneous pieces."""
    parts: dict = {}
    for m, c in w.terms.items():
        parts.setdefault(bidegree_of_monomial(m), {})[m] = c
    return {k: DiffPoly(w.ctx, v) for k, v in sorted(parts.items())}


def bidegree(w: BiForm) -> tuple[int, int]:
    degs = {bidegree_of_monomial(m) for m in w.terms}
    if len(degs) > 1:
        raise VaritriError(f"form is not bihomogeneous: {sorted(degs)}")
    return degs.pop() if degs else (0, 0)


def tridegree(w: BiForm) -> tuple[int, int, int]:
    """(p, q, ghost) of a homogeneous form."""
    p, q = bidegree(w)
    return p, q, w.ghost()


def total_degree(w: BiForm) -> int:
    p, q, gh = tridegree(w)
    return p + q + gh


def wedge(a: BiForm, b: BiForm) -> BiForm:
    if a.ctx != b.ctx:
        raise ContextError("wedge of forms from different contexts")
    return a * b


def volume_form(ctx: JetContext) -> BiForm:
    out = ctx.const(1)
    for i in range(ctx.n):
        out = out * ctx.dx(i)
    return out


def d_h(w: BiForm) -> BiForm:
    """Horizontal differential, bidegree (1, 0)."""
    ctx = w.ctx
    out = ctx.zero()
    for i in range(ctx.n):
        di = total_derivative(w, i)
        if di.terms:
            out = out + ctx.dx(i) * di
    return out


def d_v(w: BiForm) -> BiForm:
    """Vertical differential, bidegree (0, 1)."""
    ctx = w.ctx

    def image(g):
        if g[0] == JET:
            return ctx.var(theta_gen(g[1], g[3]))
        return None

    return apply_derivation(w, image)


def de_rham(w: BiForm) -> BiForm:
    return d_h(w) + d_v(w)


def contact_split(pairs: Iterable) -> BiForm:
    """Rewrite sum coefficient * d(generator) in the (dx, theta) basis.

    ``pairs`` is an iterable of ``(coefficient_form, generator_poly)`` where the
    generator is a single base coordinate or jet variable.  Uses
    du^A_sigma = theta^A_sigma + sum_i u^A_{sigma+1_i} dx^i.
    """
    out = None
    for coef, gen in pairs:
        if len(gen.terms) != 1:
            raise VaritriError("contact_split expects single generators")
        (m, c), = gen.terms.items()
        if c != 1 or len(m) != 1 or m[0][1] != 1 or m[0][0][0] not in (BASE, JET):
            raise VaritriError("contact_split expects a base coordinate or jet variable")
        term = coef * de_rham(gen)
        out = term if out is None else out + term
    if out is None:
        raise VaritriError("contact_split needs at least one term")
    return out


def _homogeneous_parity(vals: Sequence[DiffPoly], extra: Sequence[int]) -> int | None:
    ps = set()
    for v, e in zip(vals, extra):
        if v.terms:
            ps.add((v.parity() + e) % 2)
    if len(ps) > 1:
        raise VaritriError("evolutionary field is not parity-homogeneous")
    return ps.pop() if ps else None


def interior_product(chi: Sequence[DiffPoly], w: BiForm) -> BiForm:
    """Insertion of an evolutionary field: theta^A_sigma -> D_sigma(chi^A)."""
    ctx = w.ctx
    chi = _check_field(ctx, chi)

    def image(g):
        if g[0] == THETA:
            return prolong_derivative(chi[g[1]], g[3])
        return None

    return apply_derivation(w, image)


def _check_field(ctx: JetContext, chi):
    if len(chi) != ctx.m:
        raise ContextError(f"evolutionary field has {len(chi)} components, context has {ctx.m} fields")
    return [ctx.embed(c) if isinstance(c, DiffPoly) else ctx.const(c) for c in chi]


def interior_parity(ctx: JetContext, chi) -> int:
    """Parity of the derivation iota_chi (0 when chi vanishes)."""
    chi = _check_field(ctx, chi)
    p = _homogeneous_parity(chi, [1 + f.ghost for f in ctx.fields])
    return 0 if p is None else p


def lie_derivative(chi: Sequence[DiffPoly], w: BiForm) -> BiForm:
    """Vertical Cartan formula: graded commutator of iota_chi and d_v."""
    ctx = w.ctx
    chi = _check_field(ctx, chi)
    a = interior_product(chi, d_v(w))
    b = d_v(interior_product(chi, w))
    if interior_parity(ctx, chi):
        return a + b
    return a - b


def jet_weight(m) -> int:
    """Number of jet-variable factors plus number of contact factors."""
    return sum(e for g, e in m if g[0] in (JET, THETA))


def vertical_homotopy(w: BiForm) -> BiForm:
    """Homotopy h with d_v h + h d_v = id on forms of positive jet weight.

    h = iota_R / weight termwise, R the radial field with components u^A.
    """
    ctx = w.ctx

    def image(g):
        if g[0] == THETA:
            return ctx.var(jet_gen(g[1], g[3]))
        return None

    out = ctx.zero()
    for m, c in w.sorted_terms():
        wt = jet_weight(m)
        if wt == 0:
            raise VaritriError("vertical_homotopy needs every term to have positive jet weight")
        out = out + apply_derivation(DiffPoly(ctx, {m: c}), image).scale(Fraction(1, wt))
    return out


def top_coefficient(w: BiForm) -> DiffPoly:
    """Coefficient of dx^0 ^ ... ^ dx^{n-1} in a (n, 0)-form."""
    ctx = w.ctx
    vol = volume_form(ctx)
    (vm, _), = vol.terms.items()
    out = {}
    for m, c in w.terms.items():
        rest = tuple((g, e) for g, e in m if g[0] != DX)
        dxs = tuple((g, e) for g, e in m if g[0] == DX)
        if dxs != vm or any(g[0] == THETA for g, _ in rest):
            raise VaritriError("expected a top-degree horizontal form")
        out[rest] = out.get(rest, 0) + c
    return DiffPoly(ctx, {m: c for m, c in out.items() if c})
