"""Exact differential polynomial algebra over a jet context.

A :class:`JetContext` fixes base coordinates ``x^0..x^{n-1}`` and a list of
fields, each with an integer ghost number.  Elements of the algebra are
:class:`DiffPoly` instances: finite sums of monomials with
:class:`fractions.Fraction` coefficients.

The same element type also carries the form symbols ``dx^i`` and the contact
symbols ``theta^A_sigma`` used by :mod:`varitri.forms`; the algebra is one
graded-commutative polynomial ring and every sign comes from the Koszul rule on
generator parities.

Generators are plain tuples ``(kind, index, order, sigma)``:

* ``(BASE, i, 0, ())``        base coordinate ``x^i`` (even)
* ``(JET, a, |s|, s)``        jet variable ``u^a_s`` (parity of field ``a``)
* ``(DX, i, 0, ())``          horizontal one-form ``dx^i`` (odd)
* ``(THETA, a, |s|, s)``      contact form ``theta^a_s`` (parity 1 + ghost)

Tuple order is the canonical order: base coordinates, then jets by field and
graded-lexicographic multi-index, then ``dx``, then contact forms.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ContextError, VaritriError

BASE, JET, DX, THETA = 0, 1, 2, 3

Generator = tuple
Monomial = tuple  # tuple of (generator, exponent), sorted by generator


# ---------------------------------------------------------------- multi-indices

def multi_index(counts: Iterable[int], n: int | None = None) -> tuple:
    sigma = tuple(int(c) for c in counts)
    if any(c < 0 for c in sigma):
        raise ValueError(f"negative multi-index entry in {sigma}")
    if n is not None and len(sigma) != n:
        raise ValueError(f"multi-index arity {len(sigma)} != base dimension {n}")
    return sigma


def mi_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def mi_le(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mi_unit(n: int, i: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


def mi_binomial(sigma: tuple, tau: tuple) -> int:
    out = 1
    for s, t in zip(sigma, tau):
        out *= comb(s, t)
    return out


def multi_indices_upto(n: int, k: int) -> list[tuple]:
    """All multi-indices of order <= k, in canonical (graded-lex) order."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], k, n)
    return sorted(out, key=lambda s: (sum(s), s))


# ---------------------------------------------------------------- context

@dataclass(frozen=True)
class FieldDecl:
    """A field with its ghost number.

    ``conjugate`` names the field this one is the antifield of, if any.
    """
    name: str
    ghost: int = 0
    conjugate: str | None = None

    @property
    def parity(self) -> int:
        return self.ghost % 2


@dataclass(frozen=True)
class JetContext:
    base: tuple
    fields: tuple = ()
    _odd: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        base = tuple(self.base)
        fields = tuple(f if isinstance(f, FieldDecl) else FieldDecl(*f) for f in self.fields)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fields", fields)
        if len(base) < 1:
            raise ContextError("a jet context needs at least one base coordinate")
        names = list(base) + [f.name for f in fields]
        if len(set(names)) != len(names):
            raise ContextError(f"duplicate names in context: {names}")
        object.__setattr__(self, "_odd", tuple(f.ghost % 2 == 1 for f in fields))
        object.__setattr__(self, "_index", {f.name: a for a, f in enumerate(fields)})

    def __hash__(self):
        return hash((self.base, self.fields))

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def m(self) -> int:
        return len(self.fields)

    # -- lookup
    def field_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ContextError(f"undeclared field {name!r}") from None

    def base_index(self, name: str) -> int:
        try:
            return self.base.index(name)
        except ValueError:
            raise ContextError(f"undeclared base coordinate {name!r}") from None

    def has_field(self, name: str) -> bool:
        return name in self._index

    def conjugate_pairs(self) -> list[tuple[int, int]]:
        """(field index, antifield index) for every declared antifield."""
        out = []
        for a, f in enumerate(self.fields):
            if f.conjugate is not None:
                out.append((self.field_index(f.conjugate), a))
        return sorted(out)

    def extend(self, new_fields: Sequence[FieldDecl]) -> "JetContext":
        return JetContext(self.base, self.fields + tuple(new_fields))

    def is_prefix_of(self, other: "JetContext") -> bool:
        return self.base == other.base and other.fields[: len(self.fields)] == self.fields

    # -- parity / ghost of generators
    def is_odd(self, g: Generator) -> bool:
        kind = g[0]
        if kind == JET:
            return self._odd[g[1]]
        if kind == THETA:
            return not self._odd[g[1]]
        return kind == DX

    def ghost_of(self, g: Generator) -> int:
        if g[0] == JET or g[0] == THETA:
            return self.fields[g[1]].ghost
        return 0

    # -- element constructors
    def zero(self) -> "DiffPoly":
        return DiffPoly(self, {})

    def const(self, c) -> "DiffPoly":
        c = Fraction(c)
        return DiffPoly(self, {(): c} if c else {})

    def var(self, g: Generator) -> "DiffPoly":
        self.check_generator(g)
        return DiffPoly(self, {((g, 1),): Fraction(1)})

    def coord(self, i) -> "DiffPoly":
        if isinstance(i, str):
            i = self.base_index(i)
        return self.var(base_gen(i))

    def jet(self, fld, sigma=None) -> "DiffPoly":
        a = self.field_index(fld) if isinstance(fld, str) else fld
        sigma = tuple(sigma) if sigma is not None else (0,) * self.n
        return self.var(jet_gen(a, multi_index(sigma, self.n)))

    def dx(self, i) -> "DiffPoly":
        if isinstance(i, str):
            i = self.base_index(i)
        return self.var(dx_gen(i))

    def theta(self, fld, sigma=None) -> "DiffPoly":
        a = self.field_index(fld) if isinstance(fld, str) else fld
        sigma = tuple(sigma) if sigma is not None else (0,) * self.n
        return self.var(theta_gen(a, multi_index(sigma, self.n)))

    def check_generator(self, g: Generator) -> None:
        kind, idx = g[0], g[1]
        if kind in (BASE, DX):
            if not 0 <= idx < self.n:
                raise ContextError(f"base index {idx} out of range")
        elif kind in (JET, THETA):
            if not 0 <= idx < self.m:
                raise ContextError(f"field index {idx} out of range")
            if len(g[3]) != self.n:
                raise ContextError(f"multi-index arity {len(g[3])} != {self.n}")
        else:
            raise ContextError(f"unknown generator kind {kind}")

    def embed(self, f: "DiffPoly") -> "DiffPoly":
        """View an element of a prefix context inside this one."""
        if f.ctx is self or f.ctx == self:
            return f
        if not f.ctx.is_prefix_of(self):
            raise ContextError("source context is not a prefix of the target context")
        return DiffPoly(self, dict(f.terms))


def base_gen(i: int) -> Generator:
    return (BASE, i, 0, ())


def jet_gen(a: int, sigma: tuple) -> Generator:
    return (JET, a, sum(sigma), tuple(sigma))


def dx_gen(i: int) -> Generator:
    return (DX, i, 0, ())


def theta_gen(a: int, sigma: tuple) -> Generator:
    return (THETA, a, sum(sigma), tuple(sigma))


# ---------------------------------------------------------------- monomials

def _mono_mul(ctx: JetContext, m1: Monomial, m2: Monomial):
    """Product of two monomials as (sign, monomial), or None when it vanishes."""
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    is_odd = ctx.is_odd
    odd_left = sum(1 for g, _ in m1 if is_odd(g))
    out = []
    sign = 1
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        g1, e1 = m1[i]
        g2, e2 = m2[j]
        if g1 < g2:
            out.append(m1[i])
            if odd_left and is_odd(g1):
                odd_left -= 1
            i += 1
        elif g2 < g1:
            if odd_left and is_odd(g2) and odd_left % 2:
                sign = -sign
            out.append(m2[j])
            j += 1
        else:
            if is_odd(g1):
                return None
            out.append((g1, e1 + e2))
            i += 1
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return sign, tuple(out)


def _mono_ghost(ctx: JetContext, m: Monomial) -> int:
    return sum(ctx.ghost_of(g) * e for g, e in m)


def _mono_parity(ctx: JetContext, m: Monomial) -> int:
    return sum(e for g, e in m if ctx.is_odd(g)) % 2


# ---------------------------------------------------------------- DiffPoly

class DiffPoly:
    """Immutable exact-rational element of the graded jet algebra.

    ``terms`` maps canonical monomials to nonzero Fractions.  Two DiffPolys
    are equal exactly when their stored terms coincide.
    """

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: JetContext, terms: Mapping | None = None):
        self.ctx = ctx
        self.terms = dict(terms) if terms else {}
        self._hash = None

    # -- basic protocol
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            return (self.ctx is other.ctx or self.ctx == other.ctx) and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return not self.terms
            return self.terms == {(): Fraction(other)}
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        from .grammar import format_poly
        return f"DiffPoly({format_poly(self)!r})"

    def __str__(self):
        from .grammar import format_poly
        return format_poly(self)

    # -- coercion
    def _coerce(self, other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise ContextError("operands belong to different jet contexts")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.const(other)
        raise TypeError(f"cannot combine DiffPoly with {type(other).__name__}")

    # -- ring operations
    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        terms = dict(self.terms)
        for m, c in other.terms.items():
            v = terms.get(m, 0) + c
            if v:
                terms[m] = v
            else:
                terms.pop(m, None)
        return DiffPoly(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly(self.ctx, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        ctx = self.ctx
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                r = _mono_mul(ctx, m1, m2)
                if r is None:
                    continue
                s, m = r
                v = terms.get(m, 0) + s * c1 * c2
                if v:
                    terms[m] = v
                else:
                    terms.pop(m, None)
        return DiffPoly(ctx, terms)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = self.ctx.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c) -> "DiffPoly":
        c = Fraction(c)
        if not c:
            return self.ctx.zero()
        return DiffPoly(self.ctx, {m: c * v for m, v in self.terms.items()})

    # -- inspection
    def generators(self) -> set:
        return {g for m in self.terms for g, _ in m}

    def ghost_degrees(self) -> set:
        return {_mono_ghost(self.ctx, m) for m in self.terms}

    def ghost(self) -> int:
        """Ghost number of a homogeneous element (0 for zero)."""
        gs = self.ghost_degrees()
        if len(gs) > 1:
            raise VaritriError(f"element is not ghost-homogeneous: {sorted(gs)}")
        return gs.pop() if gs else 0

    def parity(self) -> int:
        ps = {_mono_parity(self.ctx, m) for m in self.terms}
        if len(ps) > 1:
            raise VaritriError("element is not parity-homogeneous")
        return ps.pop() if ps else 0

    def constant_value(self) -> Fraction | None:
        if not self.terms:
            return Fraction(0)
        if set(self.terms) == {()}:
            return self.terms[()]
        return None

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def split_terms(self) -> list["DiffPoly"]:
        return [DiffPoly(self.ctx, {m: c}) for m, c in self.sorted_terms()]


# ---------------------------------------------------------------- canonicalize

def _resolve_factor(ctx: JetContext, factor) -> Generator:
    if isinstance(factor, tuple) and len(factor) == 4:
        ctx.check_generator(factor)
        return factor
    if isinstance(factor, str):
        if factor in ctx.base:
            return base_gen(ctx.base_index(factor))
        if ctx.has_field(factor):
            return jet_gen(ctx.field_index(factor), (0,) * ctx.n)
        raise ContextError(f"undeclared generator {factor!r}")
    if isinstance(factor, tuple) and len(factor) == 2 and isinstance(factor[0], str):
        name, sigma = factor
        return jet_gen(ctx.field_index(name), multi_index(sigma, ctx.n))
    raise ContextError(f"cannot interpret factor {factor!r}")


def canonicalize(ctx: JetContext, raw: Iterable) -> DiffPoly:
    """Build a DiffPoly from ``[(coefficient, [factor, ...]), ...]``.

    Factors are multiplied left to right, so reordering odd generators picks up
    Koszul signs and repeated odd generators vanish.  A factor may be a
    generator tuple, a base/field name, or ``(field_name, sigma)``.
    """
    out = ctx.zero()
    for coef, factors in raw:
        term = ctx.const(coef)
        for fac in factors:
            term = term * ctx.var(_resolve_factor(ctx, fac))
        out = out + term
    return out


# ---------------------------------------------------------------- derivatives

def _mono_partial(ctx: JetContext, m: Monomial, g: Generator, right: bool = False):
    """(coefficient, monomial) of the left (or right) derivative, or None."""
    for pos, (h, e) in enumerate(m):
        if h == g:
            break
    else:
        return None
    if ctx.is_odd(g):
        others = m[pos + 1:] if right else m[:pos]
        n_odd = sum(1 for h, _ in others if ctx.is_odd(h))
        return (-1 if n_odd % 2 else 1), m[:pos] + m[pos + 1:]
    if e == 1:
        return e, m[:pos] + m[pos + 1:]
    return e, m[:pos] + ((g, e - 1),) + m[pos + 1:]


def partial_derivative(f: DiffPoly, g: Generator, right: bool = False) -> DiffPoly:
    """Graded partial derivative by a generator (left convention by default)."""
    f.ctx.check_generator(g)
    terms: dict = {}
    for m, c in f.terms.items():
        r = _mono_partial(f.ctx, m, g, right)
        if r is None:
            continue
        k, mm = r
        v = terms.get(mm, 0) + k * c
        if v:
            terms[mm] = v
        else:
            terms.pop(mm, None)
    return DiffPoly(f.ctx, terms)


def apply_derivation(f: DiffPoly, image: Callable[[Generator], DiffPoly | None]) -> DiffPoly:
    """Apply the graded derivation X with X(g) = image(g) to f.

    Uses X(f) = sum_g X(g) * d_L f / d g, valid for a derivation of any
    parity as long as the images are homogeneous of the derivation's degree.
    ``image`` may return None for generators it annihilates.
    """
    ctx = f.ctx
    cache: dict = {}
    acc: dict = {}
    for m, c in f.terms.items():
        for g, _ in m:
            if g not in cache:
                cache[g] = image(g)
            img = cache[g]
            if img is None or not img.terms:
                continue
            k, mm = _mono_partial(ctx, m, g)
            for m0, c0 in img.terms.items():
                r = _mono_mul(ctx, m0, mm)
                if r is None:
                    continue
                s, prod = r
                v = acc.get(prod, 0) + s * k * c * c0
                if v:
                    acc[prod] = v
                else:
                    acc.pop(prod, None)
    return DiffPoly(ctx, acc)


def total_derivative(f: DiffPoly, i: int) -> DiffPoly:
    """D_i f: differentiate through base coordinates, jets and contact symbols."""
    ctx = f.ctx
    if not 0 <= i < ctx.n:
        raise ContextError(f"base index {i} out of range")
    unit = mi_unit(ctx.n, i)
    one = ctx.const(1)

    def image(g):
        kind = g[0]
        if kind == BASE:
            return one if g[1] == i else None
        if kind == JET:
            return DiffPoly(ctx, {((jet_gen(g[1], mi_add(g[3], unit)), 1),): Fraction(1)})
        if kind == THETA:
            return DiffPoly(ctx, {((theta_gen(g[1], mi_add(g[3], unit)), 1),): Fraction(1)})
        return None

    return apply_derivation(f, image)


def prolong_derivative(f: DiffPoly, sigma: Sequence[int]) -> DiffPoly:
    """D_sigma f for a multi-index of counts; D_0 is the identity."""
    sigma = multi_index(sigma, f.ctx.n)
    out = f
    for i, k in enumerate(sigma):
        for _ in range(k):
            if not out.terms:
                return out
            out = total_derivative(out, i)
    return out


def evolutionary_apply(chi: Sequence[DiffPoly], f: DiffPoly) -> DiffPoly:
    """E_chi(f) = sum D_sigma(chi^A) * d f / d u^A_sigma (left convention)."""
    ctx = f.ctx
    if len(chi) != ctx.m:
        raise ContextError(f"evolutionary field has {len(chi)} components, context has {ctx.m} fields")
    chi = [ctx.embed(c) if isinstance(c, DiffPoly) else ctx.const(c) for c in chi]

    def image(g):
        if g[0] == JET:
            return prolong_derivative(chi[g[1]], g[3])
        return None

    return apply_derivation(f, image)


def substitute(f: DiffPoly, image: Callable[[Generator], DiffPoly | None],
               target: JetContext | None = None) -> DiffPoly:
    """Algebra homomorphism sending each generator g to image(g).

    Generators for which image returns None are kept.  Images must have the
    parity of the generator they replace.
    """
    target = target or f.ctx
    cache: dict = {}
    out = target.zero()
    for m, c in f.sorted_terms():
        term = target.const(c)
        for g, e in m:
            if g not in cache:
                img = image(g)
                cache[g] = target.var(g) if img is None else target.embed(img)
            term = term * (cache[g] ** e)
            if not term.terms:
                break
        out = out + term
    return out


def is_base_only(f: DiffPoly) -> bool:
    return all(g[0] == BASE for g in f.generators())


def substitute_section(f: DiffPoly, section: Mapping) -> DiffPoly:
    """Pull back along the jet prolongation of a polynomial section.

    ``section`` maps field names (or indices) to base-only DiffPolys.  Each
    u^A_sigma becomes the sigma-th partial derivative of the section component.
    """
    ctx = f.ctx
    comps = {}
    for key, s in section.items():
        a = ctx.field_index(key) if isinstance(key, str) else key
        s = ctx.embed(s) if isinstance(s, DiffPoly) else ctx.const(s)
        if not is_base_only(s):
            raise VaritriError(f"section component for {ctx.fields[a].name!r} contains jet variables")
        if ctx.fields[a].parity:
            raise VaritriError(f"cannot substitute a polynomial section for odd field {ctx.fields[a].name!r}")
        comps[a] = s

    def image(g):
        if g[0] == JET:
            if g[1] not in comps:
                raise VaritriError(f"section does not cover field {ctx.fields[g[1]].name!r}")
            return prolong_derivative(comps[g[1]], g[3])
        if g[0] in (DX, THETA):
            raise VaritriError("substitute_section applies to functions, not forms")
        return None

    return substitute(f, image)


def jet_order(f: DiffPoly) -> int:
    return max((g[2] for g in f.generators() if g[0] in (JET, THETA)), default=0)
