"""Command-line front end: problem files in, deterministic reports out.

Exit codes: 0 the property holds (or the computation finished), 1 it fails,
2 the input could not be read or validated.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import __version__
from .errors import ContextError, GhostError, ParseError, VaritriError
from .forms import components
from .grammar import format_poly, latex_poly, parse_expr
from .jetalg import BASE, JET, DiffPoly, FieldDecl, JetContext
from .ktbv import (BvModel, antibracket, bv_content, bv_differential, bv_extend, gauge_operator,
                   h0_report, kt_extend, master_equation_check)
from .tricomplex import (FormKey, InternalDifferential, Truncation, bounded_cohomology,
                         closure_check, presymplectic_form)
from .varops import (PdeSystem, TotalDiffOperator, conservation_check, euler_operator,
                     evaluate_functional, helmholtz_check, lie_bracket, noether_identity_check,
                     same_class, schouten_bracket, symmetry_check)

COMMANDS = ("el", "helmholtz", "current-check", "symmetry-check", "noether-check", "kt",
            "bv-master", "bv-h0", "closure", "cohomology", "eval", "presymplectic", "bracket")

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")
_RESERVED = {"dx", "th"}


# ---------------------------------------------------------------- problem files

@dataclass
class ProblemFile:
    ctx: JetContext
    raw: dict
    lagrangian: DiffPoly | None = None
    equations: list = field(default_factory=list)
    equation_names: list | None = None
    solved_form: dict | None = None
    noether_ops: list = field(default_factory=list)
    currents: list = field(default_factory=list)
    symmetries: list = field(default_factory=list)
    gauge_ops: list = field(default_factory=list)
    bv_ctx: JetContext | None = None
    bv_action: DiffPoly | None = None
    key: FormKey | None = None
    delta: InternalDifferential | None = None
    truncation: dict = field(default_factory=dict)
    section: dict | None = None
    box: list | None = None
    bracket: dict | None = None

    def system(self) -> PdeSystem:
        if not self.equations:
            raise ParseError("problem has no equations", where="equations")
        return PdeSystem(self.ctx, self.equations, self.solved_form, self.noether_ops,
                         self.equation_names)


def _expr(ctx, text, where):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = str(Fraction(text))
    if not isinstance(text, str):
        raise ParseError("expected an expression string", where=where)
    try:
        return parse_expr(ctx, text)
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, exc.column, where) from None


def _context(data) -> JetContext:
    base = data.get("base")
    if not isinstance(base, list) or not base:
        raise ParseError("'base' must be a non-empty list of coordinate names", where="base")
    for name in base:
        if not isinstance(name, str) or not _IDENT.match(name) or name in _RESERVED:
            raise ParseError(f"invalid base coordinate name {name!r}", where="base")
    decls = []
    raw_fields = data.get("fields", [])
    if not isinstance(raw_fields, list):
        raise ParseError("'fields' must be a list", where="fields")
    for k, f in enumerate(raw_fields):
        where = f"fields[{k}]"
        if isinstance(f, str):
            f = {"name": f}
        if not isinstance(f, dict) or "name" not in f:
            raise ParseError("field entries need a 'name'", where=where)
        name, ghost = f["name"], f.get("ghost", 0)
        if not isinstance(name, str) or not _IDENT.match(name) or name in _RESERVED:
            raise ParseError(f"invalid field name {name!r}", where=where)
        if not isinstance(ghost, int) or isinstance(ghost, bool):
            raise ParseError(f"ghost number of {name!r} must be an integer", where=where)
        decls.append((name, ghost, f.get("conjugate")))
    ghosts = {name: g for name, g, _ in decls}
    fields = []
    for name, ghost, conj in decls:
        if conj is None and name.endswith("star") and ghosts.get(name[:-4]) == ghost + 1:
            conj = name[:-4]
        if conj is not None and conj not in ghosts:
            raise ParseError(f"conjugate {conj!r} of {name!r} is not declared", where="fields")
        fields.append(FieldDecl(name, ghost, conj))
    try:
        return JetContext(tuple(base), tuple(fields))
    except ContextError as exc:
        raise ParseError(str(exc), where="fields") from None


def _jet_generator(ctx, text, where):
    f = _expr(ctx, text, where)
    if len(f.terms) == 1:
        (m, c), = f.terms.items()
        if c == 1 and len(m) == 1 and m[0][1] == 1 and m[0][0][0] == JET:
            return m[0][0]
    raise ParseError(f"{text!r} is not a single jet variable", where=where)


def _operator(ctx, params, images, where, rows_from=None) -> TotalDiffOperator:
    try:
        if rows_from is None:
            return gauge_operator(ctx, params, images)
        aux = ctx.extend([FieldDecl(p, 0) for p in params])
        imgs = [_expr(aux, t, f"{where}.images[{k}]") for k, t in enumerate(images)]
        op = TotalDiffOperator.from_images(aux, [aux.field_index(p) for p in params], imgs)
        return TotalDiffOperator(ctx, op.rows, op.cols,
                                 {k: DiffPoly(ctx, dict(v.terms)) for k, v in op.entries.items()})
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, exc.column, exc.where or where) from None
    except VaritriError as exc:
        raise ParseError(str(exc), where=where) from None


def _list(data, name):
    v = data.get(name, [])
    if not isinstance(v, list):
        raise ParseError(f"'{name}' must be a list", where=name)
    return v


def parse_problem(text: str, where: str = "<input>") -> ProblemFile:
    """Parse and validate a JSON problem file."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, where) from None
    if not isinstance(data, dict):
        raise ParseError("problem file must be a JSON object", where=where)
    ctx = _context(data)
    pf = ProblemFile(ctx, data)
    if "lagrangian" in data:
        pf.lagrangian = _expr(ctx, data["lagrangian"], "lagrangian")
        if pf.lagrangian.terms and pf.lagrangian.ghost_degrees() != {0}:
            raise ParseError("the Lagrangian must have ghost number 0", where="lagrangian")
    eqs = data.get("equations", [])
    if isinstance(eqs, dict):
        pf.equation_names = list(eqs)
        eqs = list(eqs.values())
    if not isinstance(eqs, list):
        raise ParseError("'equations' must be a list or an object", where="equations")
    pf.equations = [_expr(ctx, e, f"equations[{k}]") for k, e in enumerate(eqs)]
    for k, f in enumerate(pf.equations):
        if f.terms and f.ghost_degrees() != {0}:
            raise ParseError("equations must have ghost number 0", where=f"equations[{k}]")
    if "solved_form" in data:
        sf = data["solved_form"]
        if not isinstance(sf, dict):
            raise ParseError("'solved_form' must map jet variables to expressions", where="solved_form")
        pf.solved_form = {_jet_generator(ctx, k, f"solved_form.{k}"): _expr(ctx, v, f"solved_form.{k}")
                          for k, v in sf.items()}
        try:
            PdeSystem(ctx, pf.equations, pf.solved_form)
        except VaritriError as exc:
            raise ParseError(str(exc), where="solved_form") from None
    for k, op in enumerate(_list(data, "noether_ops")):
        where = f"noether_ops[{k}]"
        if not isinstance(op, dict) or "params" not in op:
            raise ParseError("Noether operators need 'params' and 'images'", where=where)
        images = op.get("images", [op.get("image", "0")])
        pf.noether_ops.append(_operator(ctx, op["params"], images, where, rows_from="list"))
    pf.currents = [_expr(ctx, c, f"currents[{k}]") for k, c in enumerate(_list(data, "currents"))]
    for k, s in enumerate(_list(data, "symmetries")):
        where = f"symmetries[{k}]"
        if isinstance(s, dict):
            s = [s.get(f.name, "0") for f in ctx.fields]
        if not isinstance(s, list) or len(s) != ctx.m:
            raise ParseError(f"a symmetry needs {ctx.m} components", where=where)
        pf.symmetries.append([_expr(ctx, c, f"{where}[{j}]") for j, c in enumerate(s)])
    for k, op in enumerate(_list(data, "gauge_ops")):
        where = f"gauge_ops[{k}]"
        if not isinstance(op, dict) or "params" not in op or "images" not in op:
            raise ParseError("gauge operators need 'params' and 'images'", where=where)
        pf.gauge_ops.append(_operator(ctx, op["params"], op["images"], where))
    if pf.gauge_ops or "bv_action" in data:
        if any(f.ghost for f in ctx.fields):
            raise ParseError("BV data needs a ghost-0 field content", where="fields")
        pf.bv_ctx = bv_content(ctx, sum(R.cols for R in pf.gauge_ops))
        if "bv_action" in data:
            pf.bv_action = _expr(pf.bv_ctx, data["bv_action"], "bv_action")
    if "delta" in data:
        d = data["delta"]
        if not isinstance(d, dict):
            raise ParseError("'delta' must map field names to images", where="delta")
        images = {}
        for name, img in d.items():
            if not ctx.has_field(name):
                raise ParseError(f"undeclared field {name!r}", where=f"delta.{name}")
            images[ctx.field_index(name)] = _expr(ctx, img, f"delta.{name}")
        try:
            pf.delta = InternalDifferential(ctx, images)
        except GhostError as exc:
            raise ParseError(str(exc), where="delta") from None
    if "key" in data:
        pf.key = _key(ctx, data["key"])
    if "truncation" in data:
        if not isinstance(data["truncation"], dict):
            raise ParseError("'truncation' must be an object", where="truncation")
        pf.truncation = dict(data["truncation"])
    if "section" in data:
        sec = data["section"]
        if not isinstance(sec, dict):
            raise ParseError("'section' must map fields to expressions", where="section")
        pf.section = {}
        for name, v in sec.items():
            if not ctx.has_field(name):
                raise ParseError(f"undeclared field {name!r}", where=f"section.{name}")
            pf.section[name] = _expr(ctx, v, f"section.{name}")
    if "box" in data:
        box = data["box"]
        try:
            pf.box = [(Fraction(str(a)), Fraction(str(b))) for a, b in box]
        except (TypeError, ValueError):
            raise ParseError("'box' must be a list of [a, b] pairs", where="box") from None
    if "bracket" in data:
        pf.bracket = _bracket(ctx, data["bracket"])
    return pf


def _key(ctx, raw) -> FormKey:
    where = "key"
    if not isinstance(raw, dict):
        raise ParseError("'key' must be an object", where=where)
    try:
        N, p, q, depth = (int(raw.get(k, 0)) for k in ("N", "p", "q", "depth"))
    except (TypeError, ValueError):
        raise ParseError("N, p, q and depth must be integers", where=where) from None
    comps = {}
    for k, c in enumerate(raw.get("components", [])):
        w = f"key.components[{k}]"
        if not isinstance(c, dict) or "slot" not in c or "form" not in c:
            raise ParseError("key components need 'slot' and 'form'", where=w)
        slot = tuple(c["slot"])
        if len(slot) == 2:
            slot = (slot[0] + slot[1],) + slot
        comps[slot] = _expr(ctx, c["form"], w)
    try:
        return FormKey(ctx, N, p, q, depth, comps)
    except VaritriError as exc:
        raise ParseError(f"malformed key: {exc}", where=where) from None


def _bracket(ctx, raw):
    if not isinstance(raw, dict) or "left" not in raw or "right" not in raw:
        raise ParseError("'bracket' needs 'left' and 'right'", where="bracket")
    kind = raw.get("kind", "anti")
    if kind not in ("anti", "lie", "schouten"):
        raise ParseError(f"unknown bracket kind {kind!r}", where="bracket.kind")
    out = {"kind": kind}
    for side in ("left", "right"):
        v = raw[side]
        if kind == "lie":
            if isinstance(v, dict):
                v = [v.get(f.name, "0") for f in ctx.fields]
            if not isinstance(v, list) or len(v) != ctx.m:
                raise ParseError(f"evolutionary fields need {ctx.m} components", where=f"bracket.{side}")
            out[side] = [_expr(ctx, c, f"bracket.{side}[{j}]") for j, c in enumerate(v)]
        else:
            out[side] = _expr(ctx, v, f"bracket.{side}")
    if kind != "lie" and not ctx.conjugate_pairs():
        raise ParseError("antibracket needs declared antifields", where="bracket")
    return out


# ---------------------------------------------------------------- reports

@dataclass
class Report:
    command: str
    body: dict
    exit_code: int = 0

    def as_dict(self) -> dict:
        out = {"tool": "varitri", "version": __version__, "command": self.command}
        out.update(_plain(self.body))
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def _plain(v):
    if isinstance(v, DiffPoly):
        return format_poly(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def render_latex(obj) -> str:
    """LaTeX for a DiffPoly, or a description list for a report."""
    if isinstance(obj, DiffPoly):
        return latex_poly(obj)
    if isinstance(obj, Report):
        lines = ["\\begin{description}",
                 f"\\item[command] \\texttt{{{obj.command}}}"]
        lines += _latex_items(obj.body)
        lines.append("\\end{description}")
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot render {type(obj).__name__}")


def _latex_value(v):
    if isinstance(v, DiffPoly):
        return f"${latex_poly(v)}$"
    if isinstance(v, bool) or v is None:
        return f"\\texttt{{{json.dumps(v)}}}"
    if isinstance(v, Fraction):
        return f"${v}$"
    if isinstance(v, (int, str)):
        return str(v).replace("_", "\\_")
    return None


def _latex_items(body, prefix=""):
    out = []
    for k, v in body.items():
        label = f"{prefix}{k}".replace("_", "\\_")
        simple = _latex_value(v)
        if simple is not None:
            out.append(f"\\item[{label}] {simple}")
        elif isinstance(v, dict):
            out += _latex_items(v, f"{prefix}{k}.")
        else:
            for j, x in enumerate(v):
                if isinstance(x, dict):
                    out += _latex_items(x, f"{prefix}{k}[{j}].")
                else:
                    s = _latex_value(x)
                    out.append(f"\\item[{label}[{j}]] {s if s is not None else json.dumps(_plain(x))}")
    return out


# ---------------------------------------------------------------- commands

def _need(value, what):
    if value is None or value == [] or value == {}:
        raise ParseError(f"problem file has no {what}", where=what)
    return value


def _named(ctx, values):
    return {f.name: v for f, v in zip(ctx.fields, values)}


def _cmd_el(pf, opts):
    L = _need(pf.lagrangian, "lagrangian")
    return {"euler": _named(pf.ctx, euler_operator(L))}, 0


def _cmd_helmholtz(pf, opts):
    eqs = pf.equations or (euler_operator(pf.lagrangian) if pf.lagrangian is not None else None)
    eqs = _need(eqs, "equations")
    ok = helmholtz_check(eqs)
    return {"verdict": ok}, 0 if ok else 1


def _cmd_current(pf, opts):
    sys_ = pf.system()
    results = []
    for J in _need(pf.currents, "currents"):
        ok, res = conservation_check(J, sys_)
        results.append({"current": J, "verdict": ok, "residue": res})
    ok = all(r["verdict"] for r in results)
    return {"verdict": ok, "currents": results}, 0 if ok else 1


def _cmd_symmetry(pf, opts):
    results = []
    for chi in _need(pf.symmetries, "symmetries"):
        if pf.lagrangian is not None:
            ok = symmetry_check(chi, lagrangian=pf.lagrangian)
            mode = "lagrangian"
        else:
            ok = symmetry_check(chi, system=pf.system())
            mode = "equations"
        results.append({"characteristic": _named(pf.ctx, chi), "mode": mode, "verdict": ok})
    ok = all(r["verdict"] for r in results)
    return {"verdict": ok, "symmetries": results}, 0 if ok else 1


def _cmd_noether(pf, opts):
    L = _need(pf.lagrangian, "lagrangian")
    results = []
    for k, R in enumerate(_need(pf.gauge_ops, "gauge_ops")):
        ok = noether_identity_check(R, L)
        results.append({"operator": k, "verdict": ok,
                        "identity": R.adjoint().apply(euler_operator(L))})
    ok = all(r["verdict"] for r in results)
    return {"verdict": ok, "operators": results}, 0 if ok else 1


def _truncation(pf, opts, **defaults) -> Truncation:
    t = dict(defaults)
    t.update({k: v for k, v in pf.truncation.items() if k != "which"})
    if opts.max_jet is not None:
        t["max_jet"] = opts.max_jet
    if opts.max_deg is not None:
        t["max_deg"] = opts.max_deg
    try:
        return Truncation(max_jet=int(t.get("max_jet", 1)), max_deg=int(t.get("max_deg", 2)),
                          p=tuple(t.get("p", (0, 0))), q=tuple(t.get("q", (0, 0))),
                          ghost=tuple(t.get("ghost", (0, 0))), base_deg=int(t.get("base_deg", 0)),
                          weights=tuple(t["weights"]) if t.get("weights") else None)
    except (TypeError, ValueError):
        raise ParseError("invalid truncation window", where="truncation") from None


def _table(tab) -> dict:
    rows = []
    for r in tab.rows:
        d = r.as_dict()
        if r.certified:
            d["representatives"] = list(r.representatives)
        rows.append(d)
    return {"which": tab.which, "weights": list(tab.weights) if tab.weights else None, "rows": rows}


def _cmd_kt(pf, opts):
    sys_ = pf.system()
    ext, delta = kt_extend(sys_)
    body = {"fields": [{"name": f.name, "ghost": f.ghost} for f in ext.fields],
            "delta": delta.to_names(), "square_zero": delta.is_square_zero(opts.max_jet or 0)}
    if pf.truncation:
        trunc = _truncation(pf, opts, ghost=(-2, 0))
        body["homology"] = _table(bounded_cohomology(ext, "delta", trunc, delta, jobs=opts.jobs))
    return body, 0 if body["square_zero"] else 1


def _model(pf) -> BvModel:
    L = _need(pf.lagrangian, "lagrangian")
    model = bv_extend(L, pf.gauge_ops, pf.system() if pf.solved_form else None)
    if pf.bv_action is not None:
        model.action = pf.bv_action
    return model


def _cmd_bv_master(pf, opts):
    model = _model(pf)
    ok, residue = master_equation_check(model.action)
    return {"action": model.action, "verdict": ok, "residue": _named(model.ctx, residue)}, 0 if ok else 1


def _cmd_bv_h0(pf, opts):
    model = _model(pf)
    trunc = _truncation(pf, opts, ghost=(-1, 0))
    rep = h0_report(model, trunc, jobs=opts.jobs)
    entries = [{"representative": e["representative"], "gauge_invariant": e["gauge_invariant"],
                "nontrivial_mod_el": e["nontrivial_mod_el"]} for e in rep.entries]
    ok = rep.negative_vanishes and all(e["gauge_invariant"] is not False for e in entries)
    body = {"verdict": ok, "h0": entries, "negative_ghost_vanishes": rep.negative_vanishes,
            "table": _table(rep.table)}
    return body, 0 if ok else 1


def _cmd_closure(pf, opts):
    key = _need(pf.key, "key")
    rep = closure_check(key, pf.delta, mode=opts.mode, depth=opts.depth)
    rels = [{"slot": list(r.relation.slot), "relation": r.relation.describe(), "status": r.status,
             "residual": r.residual} for r in rep.results]
    return {"mode": rep.mode, "verdict": rep.closed, "relations": rels}, 0 if rep.closed else 1


def _cmd_cohomology(pf, opts):
    which = opts.which or pf.truncation.get("which", "d_v")
    ctx, delta = pf.ctx, pf.delta
    if which == "delta" and delta is None and pf.equations:
        ctx, delta = kt_extend(pf.system())
    if which == "D_BV":
        model = _model(pf)
        ctx, delta = model.ctx, bv_differential(model.action)
    trunc = _truncation(pf, opts)
    tab = bounded_cohomology(ctx, which, trunc, delta, jobs=opts.jobs)
    return {"table": _table(tab)}, 0


def _cmd_eval(pf, opts):
    L = _need(pf.lagrangian, "lagrangian")
    value = evaluate_functional(L, _need(pf.section, "section"), _need(pf.box, "box"))
    return {"value": value}, 0


def _cmd_presymplectic(pf, opts):
    theta, omega = presymplectic_form(_need(pf.lagrangian, "lagrangian"))
    return {"theta_bdry": theta, "omega": omega}, 0


def _cmd_bracket(pf, opts):
    br = _need(pf.bracket, "bracket")
    kind, a, b = br["kind"], br["left"], br["right"]
    if kind == "lie":
        out = lie_bracket(a, b)
        return {"kind": kind, "result": _named(pf.ctx, out),
                "zero": all(not x.terms for x in out)}, 0
    out = antibracket(a, b) if kind == "anti" else schouten_bracket(a, b)
    return {"kind": kind, "result": out, "zero_class": same_class(out, pf.ctx.zero())}, 0


_DISPATCH = {
    "el": _cmd_el, "helmholtz": _cmd_helmholtz, "current-check": _cmd_current,
    "symmetry-check": _cmd_symmetry, "noether-check": _cmd_noether, "kt": _cmd_kt,
    "bv-master": _cmd_bv_master, "bv-h0": _cmd_bv_h0, "closure": _cmd_closure,
    "cohomology": _cmd_cohomology, "eval": _cmd_eval, "presymplectic": _cmd_presymplectic,
    "bracket": _cmd_bracket,
}


def run(command: str, pf: ProblemFile, opts) -> Report:
    """Dispatch one command.  Input problems raise ParseError; others become exit 1."""
    if command not in _DISPATCH:
        raise ParseError(f"unknown command {command!r}")
    start = time.perf_counter()
    try:
        body, code = _DISPATCH[command](pf, opts)
    except (ParseError, ContextError, GhostError):
        raise
    except VaritriError as exc:
        body, code = {"verdict": False, "error": str(exc)}, 1
    if getattr(opts, "timing", False):
        body["timing_seconds"] = round(time.perf_counter() - start, 6)
    return Report(command, body, code)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varitri", description="Variational tricomplex toolkit")
    ap.add_argument("--version", action="version", version=f"varitri {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", required=True, help="problem file (JSON)")
    ap.add_argument("--output", choices=("json", "latex"), default="json")
    ap.add_argument("--max-jet", type=int, default=None)
    ap.add_argument("--max-deg", type=int, default=None)
    ap.add_argument("--depth", type=int, default=None)
    ap.add_argument("--mode", choices=("strict", "to-depth"), default="strict")
    ap.add_argument("--which", choices=("d_h", "d_v", "delta", "D", "D_BV"), default=None)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    return ap


def main(argv=None) -> int:
    opts = build_parser().parse_args(argv)
    try:
        with open(opts.input, encoding="utf-8") as fh:
            text = fh.read()
        pf = parse_problem(text, where=opts.input)
        report = run(opts.command, pf, opts)
    except OSError as exc:
        print(f"varitri: cannot read {opts.input}: {exc.strerror}", file=sys.stderr)
        return 2
    except (ParseError, ContextError, GhostError) as exc:
        print(f"varitri: {exc}", file=sys.stderr)
        return 2
    out = report.to_json() if opts.output == "json" else render_latex(report)
    sys.stdout.write(out)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
