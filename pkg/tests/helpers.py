"""Random samplers and independent oracles shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import sympy

from varitri.jetalg import (BASE, DX, JET, THETA, DiffPoly, FieldDecl, JetContext, base_gen,
                            dx_gen, jet_gen, multi_indices_upto, theta_gen)

SEED = 20260412


def rng(offset: int = 0) -> random.Random:
    return random.Random(SEED + offset)


def pool(ctx: JetContext, max_jet: int, forms: bool = True, base: bool = True, fields=None):
    fields = range(ctx.m) if fields is None else fields
    out = [base_gen(i) for i in range(ctx.n)] if base else []
    for a in fields:
        for s in multi_indices_upto(ctx.n, max_jet):
            out.append(jet_gen(a, s))
            if forms:
                out.append(theta_gen(a, s))
    if forms:
        out += [dx_gen(i) for i in range(ctx.n)]
    return out


def coef(r: random.Random) -> Fraction:
    c = 0
    while c == 0:
        c = r.randint(-4, 4)
    return Fraction(c, r.choice([1, 1, 2, 3]))


def random_poly(r, ctx, gens, terms=3, max_factors=3, allow_const=True) -> DiffPoly:
    """Sum of random monomials; may be zero when odd factors repeat."""
    out = ctx.zero()
    for _ in range(r.randint(1, terms)):
        k = r.randint(0 if allow_const else 1, max_factors)
        f = ctx.const(coef(r))
        for _ in range(k):
            f = f * ctx.var(r.choice(gens))
        out = out + f
    return out


def nonzero_poly(r, ctx, gens, **kw) -> DiffPoly:
    while True:
        f = random_poly(r, ctx, gens, **kw)
        if f.terms:
            return f


def random_monomial(r, ctx, p, q, ghost, max_jet=1, extra=2):
    """A nonzero monomial of tridegree (p, q, ghost), or None after retries.

    Built constructively: dx factors, q contact symbols, then jets chosen to
    hit the ghost target, plus a few ghost-0 jets.
    """
    if p > ctx.n:
        return None
    by_ghost = {}
    for a, f in enumerate(ctx.fields):
        by_ghost.setdefault(f.ghost, []).append(a)
    sigmas = multi_indices_upto(ctx.n, max_jet)
    for _ in range(40):
        f = ctx.const(coef(r))
        for i in sorted(r.sample(range(ctx.n), p)):
            f = f * ctx.dx(i)
        g = 0
        for _ in range(q):
            a = r.randrange(ctx.m)
            g += ctx.fields[a].ghost
            f = f * ctx.var(theta_gen(a, r.choice(sigmas)))
        need = ghost - g
        steps = 0
        while need != 0 and steps < 6:
            sign = 1 if need > 0 else -1
            choices = [h for h in by_ghost if h * sign > 0 and abs(h) <= abs(need)]
            if not choices:
                break
            h = r.choice(choices)
            a = r.choice(by_ghost[h])
            f = f * ctx.var(jet_gen(a, r.choice(sigmas)))
            need -= h
            steps += 1
        if need != 0:
            continue
        for _ in range(r.randint(0, extra)):
            if 0 in by_ghost:
                f = f * ctx.var(jet_gen(r.choice(by_ghost[0]), r.choice(sigmas)))
        if f.terms:
            return f
    return None


def random_homogeneous(r, ctx, p, q, ghost, terms=2, max_jet=1):
    out = ctx.zero()
    for _ in range(terms):
        m = random_monomial(r, ctx, p, q, ghost, max_jet)
        if m is not None:
            out = out + m
    return out


def random_key(r, ctx, N, p, q, depth):
    """Key of degree N with random homogeneous components in every slot."""
    from varitri.tricomplex import FormKey

    comps = {}
    for s in range(depth + 1):
        for a in range(s + 1):
            if p + a > ctx.n:
                continue
            comps[(s, a, s - a)] = random_homogeneous(r, ctx, p + a, q + s - a, N - s, max_jet=1)
    return FormKey(ctx, N, p, q, depth, comps)


# ---------------------------------------------------------------- shared models

KCTX = JetContext(("x",), (FieldDecl("u"), FieldDecl("ustar", -1, "u"), FieldDecl("c", 1)))


def kdelta():
    """delta(ustar) = u_xx - u on a context with an extra inert ghost."""
    from varitri.grammar import parse_expr
    from varitri.tricomplex import extend_delta

    return extend_delta(KCTX, {"ustar": parse_expr(KCTX, "u_xx - u")})


PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

CLI_CASES = [
    ("el", "half_ux2", 0), ("eval", "half_ux2", 0), ("presymplectic", "half_ux2", 0),
    ("current-check", "kdv", 0), ("symmetry-check", "kdv", 0),
    ("current-check", "kdv_bad_current", 1),
    ("noether-check", "maxwell2d", 0), ("kt", "maxwell2d", 0), ("bv-master", "maxwell2d", 0),
    ("bv-h0", "maxwell2d", 0), ("helmholtz", "maxwell2d", 0),
    ("bv-master", "maxwell2d_bad_action", 1),
    ("cohomology", "free_dv", 0), ("cohomology", "kt_trivial", 0),
    ("closure", "closure_key", 0), ("closure", "closure_key_bad", 1),
    ("bracket", "schouten", 0), ("presymplectic", "wave", 0),
]


# ---------------------------------------------------------------- sympy oracle

def sympy_image(f: DiffPoly):
    """Replace jets by derivatives of sympy functions of the base symbols."""
    ctx = f.ctx
    if any(fd.ghost for fd in ctx.fields):
        raise ValueError("sympy oracle handles ghost-0 contexts only")
    xs = sympy.symbols(" ".join(ctx.base) + ",") if ctx.n else ()
    xs = tuple(xs)
    funcs = [sympy.Function(fd.name)(*xs) for fd in ctx.fields]
    total = sympy.Integer(0)
    for m, c in f.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for g, e in m:
            if g[0] == BASE:
                term *= xs[g[1]] ** e
            elif g[0] == JET:
                args = [(xs[i], k) for i, k in enumerate(g[3]) if k]
                d = sympy.diff(funcs[g[1]], *args) if args else funcs[g[1]]
                term *= d ** e
            else:
                raise ValueError("sympy oracle handles functions only")
        total += term
    return total, xs, funcs


def dense_rank(columns, size):
    if not columns:
        return 0
    M = sympy.Matrix([[col.get(k, 0) for col in columns] for k in range(size)])
    return M.rank()


def toy_ctx():
    return JetContext(("x",), (FieldDecl("u", 0), FieldDecl("ustar", -1, "u")))
