"""Fraction-free sparse elimination over the integers.

Vectors are dicts ``{index: int}``.  Rational input is scaled to primitive
integer vectors first, so ranks and kernels are exact without any Fraction
arithmetic inside the elimination loop.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable


def primitive(vec: dict) -> dict:
    """Scale a rational sparse vector to a primitive integer vector."""
    if not vec:
        return {}
    den = 1
    for v in vec.values():
        v = Fraction(v)
        den = den * v.denominator // gcd(den, v.denominator)
    ints = {k: int(Fraction(v) * den) for k, v in vec.items() if v}
    if not ints:
        return {}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    lead = ints[min(ints)]
    if lead < 0:
        g = -g
    return {k: v // g for k, v in ints.items()}


def _content_normalize(main: dict, track: dict | None):
    g = 0
    for v in main.values():
        g = gcd(g, v)
    if track:
        for v in track.values():
            g = gcd(g, v)
    if g > 1:
        main = {k: v // g for k, v in main.items()}
        if track is not None:
            track = {k: v // g for k, v in track.items()}
    return main, track


def _combine(a: int, x: dict, b: int, y: dict) -> dict:
    out = {k: a * v for k, v in x.items()}
    for k, v in y.items():
        w = out.get(k, 0) - b * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


class Echelon:
    """Incrementally maintained row-echelon basis with pivot = smallest index.

    With ``track=True`` every stored row remembers which inserted vectors it
    combines, so vectors that reduce to zero yield kernel relations.
    """

    def __init__(self, track: bool = False):
        self.rows: dict = {}  # pivot -> (row, tracking)
        self.track = track
        self.relations: list = []

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vec: dict, tracking: dict | None = None):
        v = {k: int(x) for k, x in vec.items() if x}
        t = dict(tracking) if tracking is not None else None
        while v:
            p = min(v)
            if p not in self.rows:
                break
            row, rt = self.rows[p]
            a, b = row[p], v[p]
            g = gcd(a, b)
            a, b = a // g, b // g
            v = _combine(a, v, b, row)
            if t is not None:
                t = _combine(a, t, b, rt or {})
            v, t = _content_normalize(v, t)
        return v, t

    def insert(self, vec: dict, label=None) -> bool:
        """Insert a vector; returns True iff it was independent."""
        tracking = {label: 1} if self.track else None
        v, t = self.reduce(primitive(vec) if vec else {}, tracking)
        if not v:
            if self.track and t:
                self.relations.append(t)
            return False
        p = min(v)
        if v[p] < 0:
            v = {k: -x for k, x in v.items()}
            if t is not None:
                t = {k: -x for k, x in t.items()}
        self.rows[p] = (v, t)
        return True

    def contains(self, vec: dict) -> bool:
        v, _ = self.reduce(primitive(vec) if vec else {})
        return not v


def rank(vectors: Iterable[dict]) -> int:
    e = Echelon()
    for v in vectors:
        e.insert(v)
    return e.rank


def _scale_to(vec: dict, prim: dict) -> Fraction:
    k = min(prim)
    return Fraction(prim[k]) / Fraction(vec[k])


def kernel(columns: list[dict]) -> list[dict]:
    """Integer basis of {c : sum_j c_j * columns[j] = 0}."""
    e = Echelon(track=True)
    scales = []
    for j, col in enumerate(columns):
        col = {k: v for k, v in col.items() if v}
        prim = primitive(col)
        scales.append(_scale_to(col, prim) if prim else Fraction(1))
        e.insert(prim, label=j)
    out = []
    for rel in e.relations:
        out.append(primitive({j: r * scales[j] for j, r in rel.items()}))
    return out
