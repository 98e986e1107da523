"""Expression grammar: parsing, canonical printing and LaTeX rendering.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | wedge
    wedge   := powered ('^' powered)*          # '^' before a non-integer
    powered := atom ('^' INT)*                 # '^' before an integer
    atom    := NUMBER | NAME jetsuffix? | 'dx' '(' NAME ')'
             | 'th' '(' NAME (',' '[' INT (',' INT)* ']')? ')' | '(' expr ')'
    jetsuffix := '_[' INT (',' INT)* ']' | '_' LETTERS

``LETTERS`` sugar (``u_txx``) is accepted only when every base coordinate
name is a single character.  Division is only allowed by a nonzero constant.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ContextError, ParseError
from .jetalg import (BASE, DX, JET, THETA, DiffPoly, JetContext, base_gen, dx_gen,
                     jet_gen, theta_gen)

RESERVED = {"dx", "th"}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z][A-Za-z0-9]*)
  | (?P<op>[-+*/^(),\[\]_])
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def _linecol(text: str, pos: int):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _error(text, pos, msg):
    line, col = _linecol(text, pos)
    return ParseError(msg, line, col)


class _Parser:
    def __init__(self, ctx: JetContext, text: str):
        self.ctx = ctx
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.sugar = all(len(b) == 1 for b in ctx.base)

    # -- token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value:
            raise _error(self.text, t[2], f"expected {value!r}, found {t[1] or 'end of input'!r}")
        return t

    def fail(self, tok, msg):
        raise _error(self.text, tok[2], msg)

    # -- grammar
    def parse(self) -> DiffPoly:
        out = self.expr()
        t = self.peek()
        if t[0] != "end":
            self.fail(t, f"unexpected token {t[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek()[1] in ("*", "/"):
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                out = out * rhs
            else:
                c = rhs.constant_value()
                if c is None or c == 0:
                    self.fail(tok, "division is only allowed by a nonzero constant")
                out = out.scale(Fraction(1) / c)
        return out

    def unary(self):
        t = self.peek()
        if t[1] == "-":
            self.take()
            return -self.unary()
        if t[1] == "+":
            self.take()
            return self.unary()
        return self.wedge()

    def wedge(self):
        out = self.powered()
        while self.peek()[1] == "^" and self.peek(1)[0] != "num":
            self.take()
            out = out * self.powered()
        return out

    def powered(self):
        out = self.atom()
        while self.peek()[1] == "^" and self.peek(1)[0] == "num":
            self.take()
            out = out ** int(self.take()[1])
        return out

    def atom(self):
        t = self.take()
        kind, val, pos = t
        if kind == "num":
            return self.ctx.const(int(val))
        if val == "(":
            out = self.expr()
            self.expect(")")
            return out
        if kind == "name":
            if val == "dx" and self.peek()[1] == "(":
                return self.dx_atom()
            if val == "th" and self.peek()[1] == "(":
                return self.theta_atom()
            return self.name_atom(t)
        self.fail(t, f"unexpected token {val or 'end of input'!r}")

    def int_list(self):
        self.expect("[")
        vals = []
        while True:
            t = self.take()
            if t[0] != "num":
                self.fail(t, "expected an integer in multi-index")
            vals.append(int(t[1]))
            if self.peek()[1] == ",":
                self.take()
                continue
            self.expect("]")
            return vals

    def sigma_from(self, tok, counts):
        if len(counts) != self.ctx.n:
            self.fail(tok, f"multi-index arity {len(counts)} does not match base dimension {self.ctx.n}")
        return tuple(counts)

    def dx_atom(self):
        self.expect("(")
        t = self.take()
        if t[1] not in self.ctx.base:
            self.fail(t, f"undeclared base coordinate {t[1]!r}")
        self.expect(")")
        return self.ctx.var(dx_gen(self.ctx.base.index(t[1])))

    def field_tok(self):
        t = self.take()
        if t[0] != "name" or not self.ctx.has_field(t[1]):
            self.fail(t, f"undeclared field {t[1]!r}")
        return t, self.ctx.field_index(t[1])

    def theta_atom(self):
        self.expect("(")
        t, a = self.field_tok()
        sigma = (0,) * self.ctx.n
        if self.peek()[1] == ",":
            self.take()
            lb = self.peek()
            sigma = self.sigma_from(lb, self.int_list())
        self.expect(")")
        return self.ctx.var(theta_gen(a, sigma))

    def name_atom(self, t):
        _, name, pos = t
        ctx = self.ctx
        if name in RESERVED:
            self.fail(t, f"{name!r} must be followed by '('")
        if name in ctx.base:
            return ctx.var(base_gen(ctx.base.index(name)))
        if not ctx.has_field(name):
            self.fail(t, f"undeclared identifier {name!r}")
        a = ctx.field_index(name)
        sigma = (0,) * ctx.n
        if self.peek()[1] == "_":
            us = self.take()
            nxt = self.peek()
            if nxt[1] == "[":
                sigma = self.sigma_from(nxt, self.int_list())
            elif nxt[0] == "name" and nxt[2] == us[2] + 1:
                self.take()
                if not self.sugar:
                    self.fail(nxt, "letter jet suffix requires single-character base names; use _[...]")
                counts = [0] * ctx.n
                for ch in nxt[1]:
                    if ch not in ctx.base:
                        self.fail(nxt, f"{ch!r} is not a base coordinate")
                    counts[ctx.base.index(ch)] += 1
                sigma = tuple(counts)
            else:
                self.fail(nxt, "expected '[' or base letters after '_'")
        return ctx.var(jet_gen(a, sigma))


def parse_expr(ctx: JetContext, text: str) -> DiffPoly:
    """Parse an expression in ``ctx``; raises ParseError with line/column."""
    if not isinstance(text, str):
        if isinstance(text, (int,)):
            return ctx.const(text)
        raise ParseError(f"expected an expression string, got {type(text).__name__}")
    try:
        return _Parser(ctx, text).parse()
    except ContextError as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------- printing

def _fmt_sigma(sigma):
    return "[" + ",".join(str(c) for c in sigma) + "]"


def format_generator(ctx: JetContext, g) -> str:
    kind = g[0]
    if kind == BASE:
        return ctx.base[g[1]]
    if kind == JET:
        name = ctx.fields[g[1]].name
        return name if g[2] == 0 else f"{name}_{_fmt_sigma(g[3])}"
    if kind == DX:
        return f"dx({ctx.base[g[1]]})"
    return f"th({ctx.fields[g[1]].name},{_fmt_sigma(g[3])})"


def _fmt_coef(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_monomial(ctx: JetContext, m) -> str:
    coef_part, form_part = [], []
    for g, e in m:
        s = format_generator(ctx, g)
        if e != 1:
            s = f"{s}^{e}"
        (form_part if g[0] in (DX, THETA) else coef_part).append(s)
    body = "*".join(coef_part)
    if form_part:
        body = body + ("*" if body else "") + "^".join(form_part)
    return body


def format_poly(f: DiffPoly) -> str:
    """Canonical, parseable string; terms in canonical monomial order."""
    if not f.terms:
        return "0"
    pieces = []
    for m, c in f.sorted_terms():
        body = format_monomial(f.ctx, m)
        mag = abs(c)
        if not body:
            text = _fmt_coef(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_fmt_coef(mag)}*{body}"
        if not pieces:
            pieces.append(("-" if c < 0 else "") + text)
        else:
            pieces.append((" - " if c < 0 else " + ") + text)
    return "".join(pieces)


# ---------------------------------------------------------------- LaTeX

def _latex_name(ctx: JetContext, a: int) -> str:
    f = ctx.fields[a]
    name = f.name
    if f.conjugate is not None and name == f.conjugate + "star":
        return f"{_latex_ident(f.conjugate)}^{{\\ddagger}}"
    return _latex_ident(name)


def _latex_ident(name: str) -> str:
    return name if len(name) == 1 else f"\\mathrm{{{name}}}"


def _latex_sigma(ctx: JetContext, sigma) -> str:
    return "".join(ctx.base[i] * c for i, c in enumerate(sigma))


def latex_generator(ctx: JetContext, g) -> str:
    kind = g[0]
    if kind == BASE:
        return ctx.base[g[1]]
    if kind == DX:
        return f"d{ctx.base[g[1]]}"
    name = _latex_name(ctx, g[1])
    sub = _latex_sigma(ctx, g[3])
    if kind == JET:
        return f"{name}_{{{sub}}}" if sub else name
    base = f"\\theta^{{{ctx.fields[g[1]].name}}}"
    return f"{base}_{{{sub}}}" if sub else base


def latex_poly(f: DiffPoly) -> str:
    if not f.terms:
        return "0"
    out = []
    for m, c in f.sorted_terms():
        coef_parts, form_parts = [], []
        for g, e in m:
            s = latex_generator(f.ctx, g)
            if e != 1:
                s = f"{{{s}}}^{{{e}}}" if "_" in s or "^" in s else f"{s}^{{{e}}}"
            (form_parts if g[0] in (DX, THETA) else coef_parts).append(s)
        body = " ".join(coef_parts)
        if form_parts:
            body = (body + " " if body else "") + "\\wedge ".join(form_parts)
        mag = abs(c)
        if mag.denominator != 1:
            cs = f"\\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        else:
            cs = str(mag.numerator)
        if not body:
            text = cs
        elif mag == 1:
            text = body
        else:
            text = f"{cs} {body}"
        if not out:
            out.append(("-" if c < 0 else "") + text)
        else:
            out.append((" - " if c < 0 else " + ") + text)
    return "".join(out)
