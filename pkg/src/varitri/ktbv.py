"""Koszul-Tate resolutions, the antibracket and the classical BV package.

Field content conventions: the antifield of ``u`` is ``ustar`` (ghost
gh(u) - 1, ``conjugate="u"``); gauge ghosts are ``c`` or ``c1, c2, ...``;
Noether antighosts are ``cstar`` or ``c1star, ...``.

The antibracket of densities is

    {F, G} = sum_A  E^R_{phi^A}(F) E^L_{phi*_A}(G) - E^R_{phi*_A}(F) E^L_{phi^A}(G)

so that {phi, phi*} = 1 and {F, G} = -(-1)^{(|F|+1)(|G|+1)} {G, F} as classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import GhostError, VaritriError
from .grammar import format_poly, parse_expr
from .jetalg import BASE, JET, DiffPoly, FieldDecl, JetContext, prolong_derivative, apply_derivation
from .tricomplex import InternalDifferential, Truncation, bounded_cohomology
from .varops import (PdeSystem, TotalDiffOperator, euler_component, euler_operator,
                     noether_identity_check, reduce_mod_ideal, symmetry_check)


def _fresh(taken: set, stem: str) -> str:
    name, k = stem, 1
    while name in taken:
        name = f"{stem}{k}"
        k += 1
    taken.add(name)
    return name


def _names(ctx: JetContext) -> set:
    return set(ctx.base) | {f.name for f in ctx.fields}


def _ghost_names(taken: set, count: int, stem: str = "c") -> list:
    if count == 1:
        return [_fresh(taken, stem)]
    return [_fresh(taken, f"{stem}{k + 1}") for k in range(count)]


# ---------------------------------------------------------------- Koszul-Tate

def kt_extend(sys: PdeSystem):
    """Adjoin antifields for the equations and antighosts for Noether identities.

    Returns (context, delta) with delta(phi*_a) = F_a and delta(c*_Z) = Z(phi*).
    """
    ctx = sys.ctx
    if not sys.equations:
        return ctx, InternalDifferential(ctx, {})
    taken = _names(ctx)
    new = []
    for name in sys.equation_names():
        conj = name if ctx.has_field(name) and ctx.fields[ctx.field_index(name)].ghost == 0 else None
        new.append(FieldDecl(_fresh(taken, name + "star"), -1, conj))
    anti = [ghost + "star" for ghost in _ghost_names(set(), len(sys.noether_ops))] if sys.noether_ops else []
    for name in anti:
        new.append(FieldDecl(_fresh(taken, name), -2, None))
    ext = ctx.extend(new)
    m, k = ctx.m, len(sys.equations)
    images = {m + a: ext.embed(F) for a, F in enumerate(sys.equations)}
    star_jets = [ext.jet(m + a) for a in range(k)]
    for j, Z in enumerate(sys.noether_ops):
        if Z.rows != 1 or Z.cols != k:
            raise VaritriError(f"Noether operator {j} must be 1 x {k}")
        images[m + k + j] = Z.embed(ext).apply(star_jets)[0]
    delta = InternalDifferential(ext, images)
    bad = delta.square_on_generators()
    if bad:
        g = sorted(bad)[0]
        raise VaritriError(f"delta^2 != 0 on {ext.fields[g[1]].name}: invalid Noether data")
    return ext, delta


# ---------------------------------------------------------------- BV model

@dataclass
class BvModel:
    """BV field content and action over a ghost-0 Lagrangian.

    ``gauge_ops`` act on the gauge parameters (columns) and produce one
    component per original field (rows).
    """
    base: JetContext
    lagrangian: DiffPoly
    gauge_ops: list = field(default_factory=list)
    ctx: JetContext | None = None
    action: DiffPoly | None = None
    system: PdeSystem | None = None

    @property
    def n_ghosts(self) -> int:
        return sum(R.cols for R in self.gauge_ops)

    def ghost_indices(self) -> list:
        m = self.base.m
        return list(range(m, m + self.n_ghosts))

    def to_dict(self) -> dict:
        params = [f"eps{k + 1}" if self.n_ghosts > 1 else "eps" for k in range(self.n_ghosts)]
        aux = self.base.extend([FieldDecl(p, 0) for p in params])
        ops, offset = [], 0
        for R in self.gauge_ops:
            own = params[offset:offset + R.cols]
            imgs = R.embed(aux).apply([aux.jet(p) for p in own])
            ops.append({"params": own,
                        "images": {f.name: format_poly(i) for f, i in zip(self.base.fields, imgs)}})
            offset += R.cols
        return {
            "base": list(self.base.base),
            "fields": [{"name": f.name, "ghost": f.ghost} for f in self.base.fields],
            "lagrangian": format_poly(self.lagrangian),
            "gauge_ops": ops,
            "bv_action": format_poly(self.action) if self.action is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BvModel":
        base = JetContext(tuple(data["base"]), tuple(FieldDecl(f["name"], f.get("ghost", 0))
                                                      for f in data["fields"]))
        L = parse_expr(base, data.get("lagrangian", "0"))
        ops = [gauge_operator(base, op["params"], op["images"]) for op in data.get("gauge_ops", [])]
        model = bv_extend(L, ops)
        if data.get("bv_action"):
            model.action = parse_expr(model.ctx, data["bv_action"])
        return model


def gauge_operator(ctx: JetContext, params: Sequence[str], images) -> TotalDiffOperator:
    """Operator from images written in terms of named gauge parameters."""
    aux = ctx.extend([FieldDecl(p, 0) for p in params])
    rows = []
    for f in ctx.fields:
        text = images.get(f.name, "0") if isinstance(images, dict) else images[ctx.field_index(f.name)]
        rows.append(parse_expr(aux, text) if isinstance(text, str) else aux.embed(text))
    op = TotalDiffOperator.from_images(aux, [aux.field_index(p) for p in params], rows)
    pset = set(range(ctx.m, aux.m))
    entries = {}
    for key, c in op.entries.items():
        if any(g[0] == JET and g[1] in pset for g in c.generators()):
            raise VaritriError("gauge operator coefficients may not involve the parameters")
        entries[key] = DiffPoly(ctx, dict(c.terms))
    return TotalDiffOperator(ctx, op.rows, op.cols, entries)


def bv_content(base: JetContext, n_ghosts: int) -> JetContext:
    """fields, ghosts, antifields, ghost antifields (in that order)."""
    for f in base.fields:
        if f.ghost != 0:
            raise GhostError("bv_extend expects a ghost-0 field content")
    taken = _names(base)
    ghosts = _ghost_names(taken, n_ghosts) if n_ghosts else []
    decls = [FieldDecl(g, 1) for g in ghosts]
    decls += [FieldDecl(_fresh(taken, f.name + "star"), -1, f.name) for f in base.fields]
    decls += [FieldDecl(_fresh(taken, g + "star"), -2, g) for g in ghosts]
    return base.extend(decls)


def bv_extend(L: DiffPoly, gauge_ops: Sequence[TotalDiffOperator] = (),
              system: PdeSystem | None = None) -> BvModel:
    """First-order BV action S = L + sum_A phi*_A R_A(c)."""
    base = L.ctx
    for j, R in enumerate(gauge_ops):
        if not noether_identity_check(R, L):
            raise VaritriError(f"gauge operator {j} fails the Noether identity check")
    k = sum(R.cols for R in gauge_ops)
    ctx = bv_content(base, k)
    m = base.m
    S = ctx.embed(L)
    offset = 0
    for R in gauge_ops:
        ghosts = [ctx.jet(m + offset + j) for j in range(R.cols)]
        comps = R.embed(ctx).apply(ghosts)
        for a, comp in enumerate(comps):
            if comp.terms:
                S = S + ctx.jet(m + k + a) * comp
        offset += R.cols
    return BvModel(base, L, list(gauge_ops), ctx, S, system)


# ---------------------------------------------------------------- antibracket

def _pairs(ctx: JetContext):
    pairs = ctx.conjugate_pairs()
    if not pairs:
        raise VaritriError("antibracket needs a context with antifields")
    return pairs


def antibracket(F: DiffPoly, G: DiffPoly) -> DiffPoly:
    """Density representing the class of {F, G}."""
    if F.ctx != G.ctx:
        raise VaritriError("antibracket of densities from different contexts")
    ctx = F.ctx
    out = ctx.zero()
    for a, b in _pairs(ctx):
        out = out + euler_component(F, a, right=True) * euler_component(G, b)
        out = out - euler_component(F, b, right=True) * euler_component(G, a)
    return out


def hamiltonian_derivation(F: DiffPoly):
    """Evolutionary derivation X_F with X_F(G) = {F, G} modulo divergences.

    Returns the field-level images {field index: X_F(field)}.
    """
    ctx = F.ctx
    images = {}
    for a, b in _pairs(ctx):
        images[b] = euler_component(F, a, right=True)
        images[a] = -euler_component(F, b, right=True)
    return {k: v for k, v in sorted(images.items()) if v.terms}


def apply_hamiltonian(F: DiffPoly, G: DiffPoly) -> DiffPoly:
    imgs = hamiltonian_derivation(F)

    def image(g):
        if g[0] == JET and g[1] in imgs:
            return prolong_derivative(imgs[g[1]], g[3])
        return None

    return apply_derivation(G, image)


def fingerprint(f: DiffPoly) -> list:
    """Euler components; equal fingerprints mean equal classes mod divergences."""
    return euler_operator(f)


def master_equation_check(S: DiffPoly):
    """(holds, residue) where residue lists the Euler components of {S, S}."""
    if S.terms and S.ghost_degrees() != {0}:
        raise GhostError("BV action must have total ghost number 0")
    if not S.ctx.conjugate_pairs():
        return True, [S.ctx.zero() for _ in range(S.ctx.m)]
    res = fingerprint(antibracket(S, S))
    return all(not r.terms for r in res), res


def bv_differential(S: DiffPoly, max_jet: int = 3) -> InternalDifferential:
    """D_BV = X_S, verified to square to zero on generators up to ``max_jet``."""
    ok, _ = master_equation_check(S)
    if not ok:
        raise VaritriError("master equation fails; no BV differential")
    delta = InternalDifferential(S.ctx, hamiltonian_derivation(S))
    bad = delta.square_on_generators(max_jet)
    if bad:
        raise VaritriError("D_BV does not square to zero on generators")
    return delta


# ---------------------------------------------------------------- H^0

@dataclass
class H0Report:
    table: object
    entries: list  # dicts: representative, gauge_invariant, nontrivial_mod_el
    negative: list  # certified rows of negative ghost degree

    @property
    def negative_vanishes(self) -> bool:
        return all(r.betti == 0 for r in self.negative)


def _gauge_invariant(model: BvModel, f: DiffPoly) -> bool:
    if not model.gauge_ops:
        return True
    k = model.n_ghosts
    params = [f"eps{j}" for j in range(k)]
    base = model.base
    aux = base.extend([FieldDecl(p, 0) for p in params])
    g = DiffPoly(aux, {m: c for m, c in f.terms.items()})
    chi = [aux.zero() for _ in range(base.m)]
    offset = 0
    for R in model.gauge_ops:
        comps = R.embed(aux).apply([aux.jet(base.m + offset + j) for j in range(R.cols)])
        chi = [x + y for x, y in zip(chi, comps)]
        offset += R.cols
    chi += [aux.zero() for _ in range(k)]
    return symmetry_check(chi, lagrangian=g)


def h0_report(model: BvModel, trunc: Truncation, jobs: int = 1) -> H0Report:
    """Ghost-0 D_BV cohomology in a window, with cross-checks on representatives."""
    delta = bv_differential(model.action, max_jet=trunc.max_jet)
    lo = min(trunc.ghost[0], -1)
    window = Truncation(trunc.max_jet, trunc.max_deg, trunc.p, trunc.q, (lo, 0),
                        trunc.base_deg, trunc.weights)
    table = bounded_cohomology(model.ctx, "D_BV", window, delta, jobs=jobs)
    entries = []
    for row in table.rows:
        if row.degree[2] != 0 or not row.certified:
            continue
        for rep in row.representatives:
            on_base = all(g[0] == BASE or (g[0] == JET and g[1] < model.base.m)
                          for g in rep.generators())
            entry = {"representative": rep, "gauge_invariant": None, "nontrivial_mod_el": None}
            if on_base:
                base_rep = DiffPoly(model.base, dict(rep.terms))
                entry["gauge_invariant"] = _gauge_invariant(model, base_rep)
                if model.system is not None and model.system.solved_form is not None:
                    entry["nontrivial_mod_el"] = bool(reduce_mod_ideal(base_rep, model.system).terms)
            entries.append(entry)
    negative = [r for r in table.rows if r.degree[2] < 0 and r.certified]
    return H0Report(table, entries, negative)
