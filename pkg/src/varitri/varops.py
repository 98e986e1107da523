"""Variational calculus on the jet algebra.

Euler operators, Fréchet derivatives and their formal adjoints, the Helmholtz
test, Noether identities, reduction modulo a solved (orthonomic) system,
conservation-law and symmetry certificates, exact functional evaluation and
the local Lie bracket of evolutionary fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ContextError, ReductionError, VaritriError
from .forms import bidegree, d_h, top_coefficient
from .jetalg import (BASE, JET, DiffPoly, JetContext, evolutionary_apply, is_base_only,
                     jet_gen, mi_binomial, mi_le, mi_sub, multi_index, partial_derivative,
                     prolong_derivative, substitute, substitute_section)


# ---------------------------------------------------------------- operators

@dataclass(frozen=True)
class TotalDiffOperator:
    """Matrix of total differential operators sum_sigma P_sigma D_sigma.

    ``entries`` maps (row, source, sigma) to a nonzero DiffPoly coefficient.
    Sources are positions in the tuple the operator acts on; they need not
    be fields of the context (gauge parameters, equation labels).
    """
    ctx: JetContext
    rows: int
    cols: int
    entries: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (r, s, sigma), c in self.entries.items():
            if not (0 <= r < self.rows and 0 <= s < self.cols):
                raise ContextError(f"operator entry {(r, s)} outside shape {(self.rows, self.cols)}")
            c = self.ctx.embed(c) if isinstance(c, DiffPoly) else self.ctx.const(c)
            if c.terms:
                clean[(r, s, multi_index(sigma, self.ctx.n))] = c
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __eq__(self, other):
        if not isinstance(other, TotalDiffOperator):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(self.entries.items())))

    def is_zero(self) -> bool:
        return not self.entries

    def apply(self, g: Sequence[DiffPoly]) -> list[DiffPoly]:
        if len(g) != self.cols:
            raise ContextError(f"operator takes {self.cols} inputs, got {len(g)}")
        g = [self.ctx.embed(x) if isinstance(x, DiffPoly) else self.ctx.const(x) for x in g]
        out = [self.ctx.zero() for _ in range(self.rows)]
        cache: dict = {}
        for (r, s, sigma), c in self.entries.items():
            key = (s, sigma)
            if key not in cache:
                cache[key] = prolong_derivative(g[s], sigma)
            out[r] = out[r] + c * cache[key]
        return out

    def adjoint(self) -> "TotalDiffOperator":
        """Formal adjoint: (P^+)_{s,r} g = sum_sigma (-1)^|sigma| D_sigma(P_{r,s,sigma} g)."""
        acc: dict = {}
        for (r, s, sigma), c in self.entries.items():
            sign = -1 if sum(sigma) % 2 else 1
            for tau in _sub_indices(sigma):
                coef = prolong_derivative(c, mi_sub(sigma, tau)).scale(sign * mi_binomial(sigma, tau))
                key = (s, r, tau)
                acc[key] = acc[key] + coef if key in acc else coef
        return TotalDiffOperator(self.ctx, self.cols, self.rows, acc)

    def embed(self, ctx: JetContext) -> "TotalDiffOperator":
        return TotalDiffOperator(ctx, self.rows, self.cols,
                                 {k: ctx.embed(v) for k, v in self.entries.items()})

    @classmethod
    def from_images(cls, ctx: JetContext, params: Sequence[int], images: Sequence[DiffPoly]) -> "TotalDiffOperator":
        """Operator read off from images linear in the jets of ``params``.

        ``params`` are field indices of ``ctx`` playing the role of the
        operator's inputs; the coefficients must not involve them.
        """
        entries = {}
        pset = set(params)
        for r, img in enumerate(images):
            for m, c in img.terms.items():
                hits = [(g, e) for g, e in m if g[0] == JET and g[1] in pset]
                if len(hits) != 1 or hits[0][1] != 1:
                    raise VaritriError("operator image must be linear in the parameter jets")
                g = hits[0][0]
                rest = DiffPoly(ctx, {tuple(x for x in m if x[0] != g): c})
                s = list(params).index(g[1])
                key = (r, s, g[3])
                entries[key] = entries[key] + rest if key in entries else rest
        return cls(ctx, len(images), len(params), entries)


def _sub_indices(sigma):
    out = [()]
    for c in sigma:
        out = [t + (k,) for t in out for k in range(c + 1)]
    return out


# ---------------------------------------------------------------- PDE systems

@dataclass
class PdeSystem:
    """A polynomial PDE system F_a = 0 with an optional solved presentation.

    ``solved_form`` maps distinguished jet generators to their right-hand
    sides.  ``noether_ops`` are one-row operators Z with Z(F) = 0.
    """
    ctx: JetContext
    equations: list
    solved_form: dict | None = None
    noether_ops: list = field(default_factory=list)
    names: list | None = None
    max_rounds: int = 1000

    def __post_init__(self):
        self.equations = [self.ctx.embed(f) if isinstance(f, DiffPoly) else self.ctx.const(f)
                          for f in self.equations]
        for f in self.equations:
            if f.terms and f.ghost_degrees() != {0}:
                raise VaritriError("equations must have ghost number 0")
        if self.solved_form is not None:
            self._check_solved()

    def _check_solved(self):
        leads = list(self.solved_form)
        for g in leads:
            if g[0] != JET:
                raise VaritriError("solved_form keys must be jet variables")
        for g, rhs in self.solved_form.items():
            for h in rhs.generators():
                if h[0] != JET:
                    continue
                for lead in leads:
                    if h[1] == lead[1] and mi_le(lead[3], h[3]):
                        raise VaritriError(
                            "solved_form right-hand side contains a derivative of a distinguished variable")

    def equation_names(self) -> list[str]:
        if self.names:
            return list(self.names)
        if len(self.equations) == self.ctx.m:
            return [f.name for f in self.ctx.fields]
        return [f"e{a}" for a in range(len(self.equations))]


# ---------------------------------------------------------------- Euler operator

def euler_operator(L: DiffPoly) -> list[DiffPoly]:
    """E_A(L) = sum_sigma (-1)^|sigma| D_sigma(dL/du^A_sigma), one per field."""
    return [euler_component(L, a) for a in range(L.ctx.m)]


def euler_component(L: DiffPoly, a: int, right: bool = False) -> DiffPoly:
    ctx = L.ctx
    out = ctx.zero()
    jets = sorted(g for g in L.generators() if g[0] == JET and g[1] == a)
    for g in jets:
        dp = partial_derivative(L, g, right=right)
        term = prolong_derivative(dp, g[3])
        out = out - term if g[2] % 2 else out + term
    return out


def frechet_derivative(F: Sequence[DiffPoly]) -> TotalDiffOperator:
    if not F:
        raise VaritriError("empty tuple")
    ctx = F[0].ctx
    entries = {}
    for r, f in enumerate(F):
        for g in sorted(f.generators()):
            if g[0] == JET:
                entries[(r, g[1], g[3])] = partial_derivative(f, g)
    return TotalDiffOperator(ctx, len(F), ctx.m, entries)


def helmholtz_check(F: Sequence[DiffPoly]) -> bool:
    """True iff the Fréchet derivative of F is formally self-adjoint."""
    ctx = F[0].ctx
    if len(F) != ctx.m:
        raise VaritriError("helmholtz_check needs one component per field")
    if any(f.ghost_degrees() - {0} for f in F) or any(fd.ghost for fd in ctx.fields):
        raise VaritriError("helmholtz_check is defined for ghost-0 fields")
    ell = frechet_derivative(F)
    return ell == ell.adjoint()


def insertion_map(L: DiffPoly, chi: Sequence[DiffPoly]) -> DiffPoly:
    E = euler_operator(L)
    out = L.ctx.zero()
    for c, e in zip(_field_tuple(L.ctx, chi), E):
        out = out + c * e
    return out


def _field_tuple(ctx, chi):
    if len(chi) != ctx.m:
        raise ContextError(f"evolutionary field has {len(chi)} components, context has {ctx.m} fields")
    return [ctx.embed(c) if isinstance(c, DiffPoly) else ctx.const(c) for c in chi]


def triviality_check(f: DiffPoly) -> bool:
    """True iff f is a total divergence (all Euler components vanish)."""
    return all(not e.terms for e in euler_operator(f))


def same_class(f: DiffPoly, g: DiffPoly) -> bool:
    """Equality of densities modulo total divergences."""
    return triviality_check(f - g)


# ---------------------------------------------------------------- ideal reduction

def _distinguished_for(g, leads):
    for lead in leads:
        if lead[1] == g[1] and mi_le(lead[3], g[3]):
            return lead
    return None


def reduce_mod_ideal(f: DiffPoly, sys: PdeSystem) -> DiffPoly:
    """Normal form of f modulo the differential ideal of a solved system."""
    if sys.solved_form is None:
        raise ReductionError("reduce_mod_ideal requires a solved form")
    ctx = sys.ctx
    f = ctx.embed(f)
    leads = list(sys.solved_form)
    rhs = {g: ctx.embed(v) for g, v in sys.solved_form.items()}
    prolonged: dict = {}

    def image(g):
        if g[0] != JET:
            return None
        lead = _distinguished_for(g, leads)
        if lead is None:
            return None
        if g not in prolonged:
            prolonged[g] = prolong_derivative(rhs[lead], mi_sub(g[3], lead[3]))
        return prolonged[g]

    for _ in range(sys.max_rounds):
        if not any(g[0] == JET and _distinguished_for(g, leads) for g in f.generators()):
            return f
        f = substitute(f, image)
    raise ReductionError(f"reduction did not terminate within {sys.max_rounds} rounds")


# ---------------------------------------------------------------- certificates

def conservation_check(J: DiffPoly, sys: PdeSystem):
    """(holds, residue) for a horizontal (n-1, 0)-form current J."""
    ctx = sys.ctx
    J = ctx.embed(J)
    if J.terms and bidegree(J) != (ctx.n - 1, 0):
        raise VaritriError(f"current must have bidegree ({ctx.n - 1}, 0)")
    div = d_h(J)
    residue = reduce_mod_ideal(top_coefficient(div), sys) if div.terms else ctx.zero()
    return (not residue.terms), residue


def symmetry_check(chi: Sequence[DiffPoly], lagrangian: DiffPoly | None = None,
                   system: PdeSystem | None = None) -> bool:
    """Lagrangian mode: E_chi(L) is a divergence.  Equation mode: l_F(chi) = 0 mod I."""
    if lagrangian is not None:
        chi = _field_tuple(lagrangian.ctx, chi)
        return triviality_check(evolutionary_apply(chi, lagrangian))
    if system is not None and system.solved_form is not None:
        chi = _field_tuple(system.ctx, chi)
        return all(not reduce_mod_ideal(evolutionary_apply(chi, F), system).terms
                   for F in system.equations)
    raise VaritriError("symmetry_check needs a Lagrangian or a solved system")


def noether_identity_check(R: TotalDiffOperator, L: DiffPoly) -> bool:
    """True iff R^+(E(L)) vanishes identically."""
    if R.rows != L.ctx.m:
        raise VaritriError(f"gauge operator has {R.rows} rows, context has {L.ctx.m} fields")
    E = euler_operator(L)
    return all(not x.terms for x in R.embed(L.ctx).adjoint().apply(E))


# ---------------------------------------------------------------- integration

def integrate_box(f: DiffPoly, box: Sequence) -> Fraction:
    """Exact integral of a base-only polynomial over a product of intervals."""
    ctx = f.ctx
    if len(box) != ctx.n:
        raise VaritriError(f"box has {len(box)} intervals, base dimension is {ctx.n}")
    if not is_base_only(f):
        raise VaritriError("integrand still contains jet variables")
    bounds = [(Fraction(a), Fraction(b)) for a, b in box]
    total = Fraction(0)
    for m, c in f.terms.items():
        exps = [0] * ctx.n
        for g, e in m:
            exps[g[1]] = e
        val = c
        for (a, b), e in zip(bounds, exps):
            val *= (b ** (e + 1) - a ** (e + 1)) / (e + 1)
        total += val
    return total


def evaluate_functional(L: DiffPoly, section: Mapping, box: Sequence) -> Fraction:
    return integrate_box(substitute_section(L, section), box)


# ---------------------------------------------------------------- brackets

def _field_parity(ctx, chi):
    ps = {(c.parity() + f.parity) % 2 for c, f in zip(chi, ctx.fields) if c.terms}
    if len(ps) > 1:
        raise VaritriError("evolutionary field is not parity-homogeneous")
    return ps.pop() if ps else 0


def lie_bracket(chi: Sequence[DiffPoly], psi: Sequence[DiffPoly]) -> list[DiffPoly]:
    """[chi, psi]^B = E_chi(psi^B) - (-1)^{|chi||psi|} E_psi(chi^B)."""
    if not chi:
        return []
    ctx = chi[0].ctx
    chi = _field_tuple(ctx, chi)
    psi = _field_tuple(ctx, psi)
    sign = -1 if _field_parity(ctx, chi) and _field_parity(ctx, psi) else 1
    return [evolutionary_apply(chi, b) - evolutionary_apply(psi, a).scale(sign)
            for a, b in zip(chi, psi)]


def _antifield_degree(f: DiffPoly) -> int:
    ctx = f.ctx
    stars = {b for _, b in ctx.conjugate_pairs()}
    degs = {sum(e for g, e in m if g[0] == JET and g[1] in stars) for m in f.terms}
    if len(degs) > 1:
        raise VaritriError("polyvector is not homogeneous in antifield degree")
    return degs.pop() if degs else 0


def schouten_bracket(P: DiffPoly, Q: DiffPoly) -> DiffPoly:
    """Variational Schouten bracket of local polyvectors, written with antifields.

    A k-vector is a density of antifield degree k over ghost-0 fields.  The
    bracket is the negated antibracket, which makes it restrict to the Lie
    bracket of evolutionary fields on antifield-linear densities.
    """
    from .ktbv import antibracket

    for f in (P, Q):
        _antifield_degree(f)
        if any(g[0] == JET and f.ctx.fields[g[1]].ghost > 0 for g in f.generators()):
            raise VaritriError("polyvectors may not involve positive-ghost fields")
    return -antibracket(P, Q)
