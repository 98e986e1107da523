"""The derived direction: internal differentials, keys of forms, closure.

An :class:`InternalDifferential` is an odd derivation raising ghost number by
one, given by its values on the fields and extended so that it commutes with
every total derivative and anticommutes with d_v:

    delta(u^A_sigma)     = D_sigma(delta u^A)
    delta(theta^A_sigma) = -D_sigma(d_v(delta u^A))

Together with d_h and d_v it gives the total differential D = d_h + d_v + delta.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Callable, Mapping, Sequence

from . import linalg
from .errors import ContextError, GhostError, VaritriError
from .forms import bidegree_of_monomial, d_h, d_v, volume_form
from .jetalg import (BASE, DX, JET, THETA, DiffPoly, JetContext, apply_derivation, base_gen,
                     dx_gen, jet_gen, mi_unit, mi_sub, multi_indices_upto, prolong_derivative,
                     substitute, theta_gen, total_derivative)


# ---------------------------------------------------------------- internal differential

@dataclass(frozen=True)
class InternalDifferential:
    ctx: JetContext
    images: Mapping = field(default_factory=dict)  # field index -> DiffPoly

    def __post_init__(self):
        clean = {}
        for a, img in self.images.items():
            img = self.ctx.embed(img) if isinstance(img, DiffPoly) else self.ctx.const(img)
            want = self.ctx.fields[a].ghost + 1
            if img.terms and img.ghost_degrees() != {want}:
                raise GhostError(
                    f"delta({self.ctx.fields[a].name}) must have ghost {want}, got {sorted(img.ghost_degrees())}")
            if img.terms:
                clean[a] = img
        object.__setattr__(self, "images", dict(sorted(clean.items())))

    def image_of(self, a: int) -> DiffPoly:
        return self.images.get(a, self.ctx.zero())

    def __call__(self, w: DiffPoly) -> DiffPoly:
        ctx = self.ctx
        w = ctx.embed(w)
        images = self.images

        def image(g):
            kind = g[0]
            if kind == JET and g[1] in images:
                return prolong_derivative(images[g[1]], g[3])
            if kind == THETA and g[1] in images:
                return -prolong_derivative(d_v(images[g[1]]), g[3])
            return None

        return apply_derivation(w, image)

    def square_on_generators(self, max_jet: int = 0) -> dict:
        """delta^2 on every jet generator of order <= max_jet (nonzero entries only)."""
        out = {}
        for a in range(self.ctx.m):
            for sigma in multi_indices_upto(self.ctx.n, max_jet):
                g = jet_gen(a, sigma)
                sq = self(self(self.ctx.var(g)))
                if sq.terms:
                    out[g] = sq
        return out

    def is_square_zero(self, max_jet: int = 0) -> bool:
        return not self.square_on_generators(max_jet)

    def to_names(self) -> dict:
        return {self.ctx.fields[a].name: img for a, img in self.images.items()}


def extend_delta(ctx: JetContext, spec: Mapping) -> InternalDifferential:
    """Build delta from {field name or index: image}; ghost checked."""
    images = {}
    for key, img in spec.items():
        a = ctx.field_index(key) if isinstance(key, str) else key
        images[a] = img
    return InternalDifferential(ctx, images)


def total_differential(w: DiffPoly, delta: InternalDifferential | None = None,
                       check: bool = True) -> DiffPoly:
    out = d_h(w) + d_v(w)
    if delta is not None:
        if check and not delta.is_square_zero():
            raise VaritriError("internal differential does not square to zero")
        out = out + delta(w)
    return out


# ---------------------------------------------------------------- keys

def _tri(ctx: JetContext, w: DiffPoly):
    degs = set()
    for m in w.terms:
        p, q = bidegree_of_monomial(m)
        gh = sum(ctx.ghost_of(g) * e for g, e in m)
        degs.add((p, q, gh))
    return degs


@dataclass(frozen=True)
class FormKey:
    """Truncated key of a cohomological degree N (p, q)-form.

    ``components[(r, a, b)]`` (a + b = r <= depth) is the correction term of
    ghost degree N - r and bidegree (p + a, q + b).  Absent slots read as 0.
    """
    ctx: JetContext
    N: int
    p: int
    q: int
    depth: int
    components: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for slot, w in self.components.items():
            r, a, b = slot
            if a < 0 or b < 0 or a + b != r or not 0 <= r <= self.depth:
                raise VaritriError(f"malformed key slot {slot} for depth {self.depth}")
            w = self.ctx.embed(w)
            if not w.terms:
                continue
            want = (self.p + a, self.q + b, self.N - r)
            if _tri(self.ctx, w) != {want}:
                raise VaritriError(f"key slot {slot} must be homogeneous of (p,q,gh)={want}")
            clean[(r, a, b)] = w
        object.__setattr__(self, "components", dict(sorted(clean.items())))

    def get(self, r, a, b) -> DiffPoly:
        return self.components.get((r, a, b), self.ctx.zero())

    def slots(self, depth: int | None = None):
        depth = self.depth if depth is None else depth
        return [(r, a, r - a) for r in range(depth + 1) for a in range(r + 1)]

    def with_component(self, slot, w) -> "FormKey":
        comps = dict(self.components)
        comps[slot] = comps.get(slot, self.ctx.zero()) + w
        return FormKey(self.ctx, self.N, self.p, self.q, self.depth, comps)


def key_differential(key: FormKey, delta: InternalDifferential | None) -> FormKey:
    """D applied slotwise; the result has degree N+1 and the same depth."""
    comps = {}
    for (r, a, b) in key.slots():
        w = delta(key.get(r, a, b)) if delta is not None else key.ctx.zero()
        if r > 0:
            if a > 0:
                w = w + d_h(key.get(r - 1, a - 1, b))
            if b > 0:
                w = w + d_v(key.get(r - 1, a, b - 1))
        if w.terms:
            comps[(r, a, b)] = w
    return FormKey(key.ctx, key.N + 1, key.p, key.q, key.depth, comps)


@dataclass(frozen=True)
class Relation:
    """One closure relation: sum of operator(slot) terms landing in ``slot``."""
    slot: tuple
    terms: tuple  # of (operator, r, a, b)

    def describe(self) -> str:
        return " + ".join(f"{op} theta_{_ghost_label(r)}^({_shift('p', a)},{_shift('q', b)})"
                          for op, r, a, b in self.terms) + \
            f" = 0 in ({_shift('p', self.slot[1])},{_shift('q', self.slot[2])})_{_ghost_label(self.slot[0] - 1)}"


def _shift(sym, k):
    return sym if k == 0 else f"{sym}+{k}"


def _ghost_label(r):
    if r == 0:
        return "N"
    if r < 0:
        return f"N+{-r}"
    return f"N-{r}"


def closure_relations(depth: int) -> list[Relation]:
    """Relations D(theta) = 0 slot by slot, through slot ``depth``.

    Slot (s, a, b) collects d_h of (s-1, a-1, b), d_v of (s-1, a, b-1) and
    delta of (s, a, b).
    """
    out = []
    for s in range(depth + 1):
        for a in range(s + 1):
            b = s - a
            terms = []
            if s > 0 and a > 0:
                terms.append(("d_h", s - 1, a - 1, b))
            if s > 0 and b > 0:
                terms.append(("d_v", s - 1, a, b - 1))
            terms.append(("delta", s, a, b))
            out.append(Relation((s, a, b), tuple(terms)))
    return out


def boundary_relations(depth: int) -> list[Relation]:
    """The relations at slot depth+1, which involve no delta term inside the key."""
    s = depth + 1
    out = []
    for a in range(s + 1):
        b = s - a
        terms = []
        if a > 0:
            terms.append(("d_h", s - 1, a - 1, b))
        if b > 0:
            terms.append(("d_v", s - 1, a, b - 1))
        out.append(Relation((s, a, b), tuple(terms)))
    return out


@dataclass
class RelationResult:
    relation: Relation
    status: str  # "ok", "fail" or "unresolved"
    residual: DiffPoly | None


@dataclass
class ClosureReport:
    mode: str
    checked_depth: int
    results: list

    @property
    def closed(self) -> bool:
        return all(r.status == "ok" for r in self.results if r.status != "unresolved") and \
            (self.mode != "strict" or all(r.status != "unresolved" for r in self.results))

    def failures(self) -> list:
        return [r for r in self.results if r.status == "fail"]


def _evaluate(rel: Relation, key: FormKey, delta) -> DiffPoly:
    ctx = key.ctx
    total = ctx.zero()
    for op, r, a, b in rel.terms:
        w = key.get(r, a, b)
        if not w.terms:
            continue
        if op == "d_h":
            total = total + d_h(w)
        elif op == "d_v":
            total = total + d_v(w)
        elif delta is not None:
            total = total + delta(w)
    return total


def closure_check(key: FormKey, delta: InternalDifferential | None, mode: str = "strict",
                  depth: int | None = None) -> ClosureReport:
    """Check the slotwise relations of D(theta) = 0 for a truncated key.

    strict: every relation through slot depth+1 must hold, treating slots
    beyond the key's depth as zero.  to-depth: relations through slot
    ``depth`` (default: key depth) are checked, later ones are unresolved.
    """
    if mode not in ("strict", "to-depth"):
        raise VaritriError(f"unknown closure mode {mode!r}")
    if delta is not None and not delta.is_square_zero():
        raise VaritriError("internal differential does not square to zero")
    R = key.depth
    d = R if depth is None else depth
    if d > R or d < 0:
        raise VaritriError(f"check depth {d} outside 0..{R}")
    results = []
    rels = closure_relations(R) + boundary_relations(R)
    for rel in rels:
        s = rel.slot[0]
        if mode == "to-depth" and s > d:
            results.append(RelationResult(rel, "unresolved", None))
            continue
        res = _evaluate(rel, key, delta)
        results.append(RelationResult(rel, "ok" if not res.terms else "fail", res))
    return ClosureReport(mode, R + 1 if mode == "strict" else d, results)


# ---------------------------------------------------------------- morphisms

@dataclass(frozen=True)
class AlgebraMorphism:
    """Substitution of source fields by target elements of equal ghost."""
    source: JetContext
    target: JetContext
    images: Mapping  # source field index -> target DiffPoly

    def __post_init__(self):
        if self.source.base != self.target.base:
            raise ContextError("morphism contexts must share the base")
        clean = {}
        for a in range(self.source.m):
            img = self.images.get(a, self.images.get(self.source.fields[a].name))
            if img is None:
                raise VaritriError(f"morphism has no image for {self.source.fields[a].name!r}")
            img = self.target.embed(img) if isinstance(img, DiffPoly) else self.target.const(img)
            gh = self.source.fields[a].ghost
            if img.terms and img.ghost_degrees() != {gh}:
                raise GhostError(f"image of {self.source.fields[a].name!r} must have ghost {gh}")
            clean[a] = img
        object.__setattr__(self, "images", clean)

    def __call__(self, w: DiffPoly) -> DiffPoly:
        imgs = self.images

        def image(g):
            kind = g[0]
            if kind == JET:
                return prolong_derivative(imgs[g[1]], g[3])
            if kind == THETA:
                return prolong_derivative(d_v(imgs[g[1]]), g[3])
            return None

        if w.ctx != self.source:
            raise ContextError("element does not live in the morphism's source context")
        return substitute(w, image, self.target)

    def intertwines(self, delta_src: InternalDifferential | None,
                    delta_tgt: InternalDifferential | None) -> bool:
        for a in range(self.source.m):
            lhs = self(delta_src.image_of(a)) if delta_src else self.target.zero()
            rhs = delta_tgt(self.images[a]) if delta_tgt else self.target.zero()
            if lhs != rhs:
                return False
        return True


def induced_map(phi: AlgebraMorphism, w, delta_src=None, delta_tgt=None):
    """Pull a form or key along phi; refuses morphisms that break delta."""
    if (delta_src is not None or delta_tgt is not None) and not phi.intertwines(delta_src, delta_tgt):
        raise VaritriError("morphism does not intertwine the internal differentials")
    if isinstance(w, FormKey):
        return FormKey(phi.target, w.N, w.p, w.q, w.depth,
                       {s: phi(c) for s, c in w.components.items()})
    return phi(w)


# ---------------------------------------------------------------- presymplectic form

def _partial_volume(ctx: JetContext, i: int) -> DiffPoly:
    """vol_i with dx^i ^ vol_i = dx^0 ^ ... ^ dx^{n-1}."""
    out = ctx.const(-1 if i % 2 else 1)
    for j in range(ctx.n):
        if j != i:
            out = out * ctx.dx(j)
    return out


def integrate_by_parts(L: DiffPoly):
    """(theta_bdry, source) with d_v(L vol) = source - d_h(theta_bdry).

    ``source`` contains only undifferentiated contact symbols.
    """
    ctx = L.ctx
    rest = d_v(L * volume_form(ctx))
    bdry = ctx.zero()
    while True:
        pending = []
        for m, c in rest.terms.items():
            th = [g for g, _ in m if g[0] == THETA]
            if th and th[0][2] > 0:
                pending.append((th[0][2], m, c, th[0]))
        if not pending:
            return bdry, rest
        _, m, c, tg = max(pending)
        sigma = tg[3]
        i = next(k for k, s in enumerate(sigma) if s > 0)
        tau = mi_sub(sigma, mi_unit(ctx.n, i))
        coef = DiffPoly(ctx, {tuple((g, e) for g, e in m if g[0] not in (DX, THETA)): Fraction(1)})
        b0 = coef * ctx.var(theta_gen(tg[1], tau)) * _partial_volume(ctx, i)
        k = d_h(b0).terms.get(m)
        if not k:
            raise VaritriError("integration by parts failed to reproduce a term")
        b = b0.scale(c / k)
        rest = rest - d_h(b)
        bdry = bdry - b


def presymplectic_form(L: DiffPoly):
    """Boundary form and presymplectic current of a Lagrangian density.

    Returns (theta_bdry, omega) with
    d_v(L vol) = sum_A theta^A E_A(L) vol - d_h(theta_bdry), omega = d_v(theta_bdry).
    """
    from .varops import euler_operator

    ctx = L.ctx
    bdry, source = integrate_by_parts(L)
    expected = ctx.zero()
    for a, e in enumerate(euler_operator(L)):
        expected = expected + ctx.theta(a) * e * volume_form(ctx)
    omega = d_v(bdry)
    if source != expected or d_v(omega).terms:
        raise VaritriError("presymplectic decomposition failed its own check")
    return bdry, omega


# ---------------------------------------------------------------- truncated cohomology

@dataclass(frozen=True)
class Truncation:
    """Finite window for cohomology computations.

    ``max_jet`` bounds the weighted jet order |sigma| + weight(field) of
    jets and contact symbols; ``max_deg`` bounds the number of coefficient and
    contact factors; ``p``, ``q``, ``ghost`` are the reported degree windows.
    """
    max_jet: int = 1
    max_deg: int = 2
    p: tuple = (0, 0)
    q: tuple = (0, 0)
    ghost: tuple = (0, 0)
    base_deg: int = 0
    weights: tuple | None = None


def filtration_weights(ctx: JetContext, delta: InternalDifferential | None, rounds: int = 64):
    """Per-field jet-order offsets making delta non-increasing in weighted order.

    Ghost-0 fields keep offset 0.  Negative-ghost generators are pushed up,
    positive-ghost generators pushed down.  Returns None when no such
    offsets exist (for example when delta raises the order of a ghost-0 jet
    into another ghost-0 jet).
    """
    w = [0] * ctx.m
    if delta is None:
        return tuple(w)
    edges = []
    for a, img in delta.images.items():
        for g in img.generators():
            if g[0] == JET:
                edges.append((a, g[1], g[2]))
    for _ in range(rounds):
        changed = False
        for a, b, order in edges:
            if w[a] >= w[b] + order:
                continue
            ga, gb = ctx.fields[a].ghost, ctx.fields[b].ghost
            if ga < 0 and a != b:
                w[a] = w[b] + order
            elif gb > 0 and a != b:
                w[b] = w[a] - order
            else:
                return None
            changed = True
        if not changed:
            return tuple(w)
    return None


def _multisets(atoms, max_size, odd_flags):
    """All multisets of atom indices of size <= max_size; odd atoms at most once."""
    out = []

    def rec(start, size, acc):
        out.append(tuple(acc))
        if size == max_size:
            return
        for k in range(start, len(atoms)):
            if odd_flags[k] and acc and acc[-1] == k:
                continue
            acc.append(k)
            rec(k, size + 1, acc)
            acc.pop()

    rec(0, 0, [])
    return out


class _Space:
    """Enumerates the truncated monomial basis, grouped by (p, q, ghost)."""

    def __init__(self, ctx: JetContext, trunc: Truncation, weights):
        self.ctx = ctx
        self.trunc = trunc
        self.weights = weights if weights is not None else (0,) * ctx.m
        n = ctx.n
        coef_atoms, theta_atoms = [], []
        for a in range(ctx.m):
            top = trunc.max_jet - self.weights[a]
            if top < 0:
                continue
            for sigma in multi_indices_upto(n, top):
                coef_atoms.append(jet_gen(a, sigma))
                theta_atoms.append(theta_gen(a, sigma))
        self.base_atoms = [base_gen(i) for i in range(n)] if trunc.base_deg > 0 else []
        self.coef_atoms = coef_atoms
        self.theta_atoms = theta_atoms
        self._coef = None
        self._theta: dict = {}
        self._pieces: dict = {}

    def in_window_gen(self, g) -> bool:
        if g[0] in (JET, THETA):
            return g[2] + self.weights[g[1]] <= self.trunc.max_jet
        return True

    def _group(self, atoms, max_size):
        ctx = self.ctx
        odd = [ctx.is_odd(g) for g in atoms]
        groups: dict = {}
        for ms in _multisets(atoms, max_size, odd):
            mono: dict = {}
            for k in ms:
                mono[atoms[k]] = mono.get(atoms[k], 0) + 1
            m = tuple(sorted(mono.items()))
            gh = sum(ctx.ghost_of(g) * e for g, e in m)
            groups.setdefault((len(ms), gh), []).append(m)
        return groups

    def coefficient_monomials(self):
        if self._coef is None:
            jets = self._group(self.coef_atoms, self.trunc.max_deg)
            bases = self._group(self.base_atoms, self.trunc.base_deg) if self.base_atoms else {(0, 0): [()]}
            combined: dict = {}
            for (s1, g1), ms1 in jets.items():
                for (s2, _), ms2 in bases.items():
                    if s1 + s2 > self.trunc.max_deg:
                        continue
                    for m1 in ms1:
                        for m2 in ms2:
                            combined.setdefault((s1 + s2, g1), []).append(tuple(sorted(m2 + m1)))
            self._coef = combined
        return self._coef

    def theta_monomials(self, q):
        if q not in self._theta:
            groups = self._group(self.theta_atoms, q)
            self._theta[q] = {gh: ms for (s, gh), ms in groups.items() if s == q}
        return self._theta[q]

    def piece(self, p: int, q: int, gh: int) -> list:
        key = (p, q, gh)
        if key in self._pieces:
            return self._pieces[key]
        ctx = self.ctx
        out = []
        if 0 <= p <= ctx.n and q >= 0 and q <= self.trunc.max_deg:
            dx_sets = [tuple((dx_gen(i), 1) for i in c) for c in combinations(range(ctx.n), p)]
            coefs = self.coefficient_monomials()
            for gth, thms in self.theta_monomials(q).items():
                for (size, gc), cms in coefs.items():
                    if gc + gth != gh or size + q > self.trunc.max_deg:
                        continue
                    for cm in cms:
                        for dm in dx_sets:
                            for tm in thms:
                                out.append(cm + dm + tm)
        out.sort()
        self._pieces[key] = out
        return out


_SHIFTS = {"d_h": (1, 0, 0), "d_v": (0, 1, 0), "delta": (0, 0, 1), "D_BV": (0, 0, 1)}


@dataclass
class DegreeRow:
    degree: tuple
    dim: int
    rank_out: int
    kernel: int
    rank_in: int
    betti: int
    certified: bool
    representatives: list = field(default_factory=list)
    coboundaries: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"degree": list(self.degree), "dim": self.dim, "rank_out": self.rank_out,
                "kernel": self.kernel, "rank_in": self.rank_in, "betti": self.betti,
                "certified": self.certified}


@dataclass
class CohomologyTable:
    which: str
    trunc: Truncation
    weights: tuple | None
    rows: list

    def row(self, degree) -> DegreeRow:
        for r in self.rows:
            if r.degree == tuple(degree):
                return r
        raise KeyError(degree)

    def certified_rows(self) -> list:
        return [r for r in self.rows if r.certified]

    def euler_characteristic(self, axis: int):
        """(sum (-1)^i dim, sum (-1)^i betti) along the differential's axis."""
        chi_dim = sum((-1) ** r.degree[axis] * r.dim for r in self.rows)
        chi_betti = sum((-1) ** r.degree[axis] * r.betti for r in self.rows)
        return chi_dim, chi_betti


def _differential(which: str, delta: InternalDifferential | None) -> Callable:
    if which == "d_h":
        return d_h
    if which == "d_v":
        return d_v
    if which in ("delta", "D_BV"):
        if delta is None:
            raise VaritriError(f"{which} cohomology needs an internal differential")
        return delta
    if which == "D":
        return lambda w: total_differential(w, delta, check=False)
    raise VaritriError(f"unknown differential {which!r}")


def bounded_cohomology(ctx: JetContext, which: str, trunc: Truncation,
                       delta: InternalDifferential | None = None, jobs: int = 1) -> CohomologyTable:
    """Exact Betti numbers of a differential on a truncated monomial window.

    A degree is certified when the differential maps both it and its
    predecessor into the window; otherwise its row is reported but flagged.
    For D the grading is the total degree p + q + ghost.
    """
    if delta is not None and not delta.is_square_zero(max_jet=trunc.max_jet):
        raise VaritriError("internal differential does not square to zero")
    if which in ("d_h", "d_v"):
        weights = trunc.weights or (0,) * ctx.m
    else:
        weights = trunc.weights or filtration_weights(ctx, delta)
    space = _Space(ctx, trunc, weights)
    diff = _differential(which, delta)

    if which == "D":
        def basis(t):
            out = []
            for p in range(trunc.p[0], trunc.p[1] + 1):
                for q in range(trunc.q[0], trunc.q[1] + 1):
                    gh = t - p - q
                    if trunc.ghost[0] <= gh <= trunc.ghost[1]:
                        out.extend(space.piece(p, q, gh))
            return sorted(out)
        lo = trunc.p[0] + trunc.q[0] + trunc.ghost[0]
        hi = trunc.p[1] + trunc.q[1] + trunc.ghost[1]
        degrees = [(t,) for t in range(lo, hi + 1)]

        def succ(d):
            return (d[0] + 1,)

        def pred(d):
            return (d[0] - 1,)

        def basis_of(d):
            return basis(d[0])
    else:
        shift = _SHIFTS[which]
        degrees = [(p, q, gh) for p in range(trunc.p[0], trunc.p[1] + 1)
                   for q in range(trunc.q[0], trunc.q[1] + 1)
                   for gh in range(trunc.ghost[0], trunc.ghost[1] + 1)]

        def succ(d):
            return tuple(x + s for x, s in zip(d, shift))

        def pred(d):
            return tuple(x - s for x, s in zip(d, shift))

        def basis_of(d):
            return space.piece(*d)

    cache: dict = {}

    def images(d):
        if d in cache:
            return cache[d]
        src = basis_of(d)
        tgt_set = set(basis_of(succ(d)))
        polys = [DiffPoly(ctx, {m: Fraction(1)}) for m in src]
        if jobs > 1 and len(polys) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                imgs = list(ex.map(diff, polys))
        else:
            imgs = [diff(w) for w in polys]
        inside = all(m in tgt_set for img in imgs for m in img.terms)
        cache[d] = (src, imgs, inside)
        return cache[d]

    def index_of(ms):
        return {m: k for k, m in enumerate(sorted(ms))}

    rows = []
    for d in degrees:
        src, imgs, inside_out = images(d)
        psrc, pimgs, inside_in = images(pred(d))
        tgt = set(basis_of(succ(d)))
        for img in imgs:
            tgt.update(img.terms)
        tidx = index_of(tgt)
        cols = [{tidx[m]: c for m, c in img.terms.items()} for img in imgs]
        rank_out = linalg.rank(cols)
        here = set(src)
        for img in pimgs:
            here.update(img.terms)
        hidx = index_of(here)
        in_cols = [{hidx[m]: c for m, c in img.terms.items()} for img in pimgs]
        rank_in = linalg.rank(in_cols)
        ker = len(src) - rank_out
        row = DegreeRow(d, len(src), rank_out, ker, rank_in, ker - rank_in,
                        inside_out and inside_in)
        if row.certified:
            row.coboundaries = [img for img in pimgs if img.terms]
            if row.betti > 0:
                row.representatives = _representatives(ctx, src, cols, in_cols, hidx)
        rows.append(row)
    return CohomologyTable(which, trunc, weights, rows)


def _representatives(ctx, src, cols, in_cols, hidx):
    """Cocycles spanning a complement of the coboundaries, in basis order."""
    kern = linalg.kernel(cols)
    ech = linalg.Echelon()
    for c in in_cols:
        ech.insert(c)
    reps = []
    for vec in sorted(kern, key=lambda v: sorted(v)):
        as_here = {hidx[src[j]]: c for j, c in vec.items()}
        if ech.insert(as_here):
            reps.append(DiffPoly(ctx, {src[j]: Fraction(c) for j, c in vec.items() if c}))
    return reps


def class_is_nontrivial(table: CohomologyTable, degree, f: DiffPoly, delta=None) -> bool:
    """True iff f is a cocycle in a certified degree and not a truncated coboundary."""
    row = table.row(degree)
    if not row.certified:
        raise VaritriError(f"degree {degree} is not certified")
    diff = _differential(table.which, delta)
    if diff(f).terms:
        return False
    ms = sorted(set(f.terms).union(*[set(b.terms) for b in row.coboundaries]))
    idx = {m: k for k, m in enumerate(ms)}
    ech = linalg.Echelon()
    for b in row.coboundaries:
        ech.insert({idx[m]: c for m, c in b.terms.items()})
    return not ech.contains({idx[m]: c for m, c in f.terms.items()})


# ---------------------------------------------------------------- grading bookkeeping

def _sym_dim(n: int, k: int) -> int:
    if k < 0:
        return 0
    if n == 0:
        return 1 if k == 0 else 0
    return comb(n + k - 1, k)


def graded_piece_dimensions(n_even: int, n_odd: int, max_weight: int) -> dict:
    """{(w, i): dim Sym^{w-i}(even) * dim Lambda^i(odd)} by the counting formula."""
    return {(w, i): _sym_dim(n_even, w - i) * comb(n_odd, i)
            for w in range(max_weight + 1) for i in range(w + 1)}
