"""Acceptance criteria, one test per criterion, each printing PASS or FAIL."""

import os
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

from conftest import ACCEPTANCE_LINES
from helpers import (CLI_CASES, KCTX, PROBLEMS, kdelta, pool, random_homogeneous, random_key,
                     random_poly, rng)
from varitri.forms import d_h, d_v, vertical_homotopy
from varitri.grammar import parse_expr
from varitri.jetalg import FieldDecl, JetContext, jet_gen, total_derivative
from varitri.ktbv import (antibracket, apply_hamiltonian, bv_content, bv_differential, bv_extend,
                          fingerprint, gauge_operator, h0_report, kt_extend, master_equation_check)
from varitri.tricomplex import (Truncation, bounded_cohomology, closure_check, closure_relations,
                                key_differential)
from varitri.varops import (PdeSystem, TotalDiffOperator, conservation_check, euler_operator,
                            evaluate_functional, helmholtz_check, lie_bracket, same_class,
                            schouten_bracket)

LIMIT = 60.0
TWO = JetContext(("t", "x"), (FieldDecl("u"), FieldDecl("v")))
TX = JetContext(("t", "x"), (FieldDecl("u"),))
X = JetContext(("x",), (FieldDecl("u"),))
MX = JetContext(("t", "x"), (FieldDecl("At"), FieldDecl("Ax")))
MAXWELL_L = "1/2*(Ax_t - At_x)^2"


def P(ctx, s):
    return parse_expr(ctx, s)


@contextmanager
def criterion(n, title):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < LIMIT
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.1f}s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert elapsed < LIMIT, f"criterion {n} took {elapsed:.1f}s"


def test_criterion_01_differential_algebra():
    with criterion(1, "D_i D_j = D_j D_i, Leibniz, d_h^2 = d_v^2 = d_h d_v + d_v d_h = 0"):
        r = rng(100)
        fgens = pool(TWO, 3, forms=False)
        wgens = pool(TWO, 3, forms=True)
        for _ in range(100):
            f, g = random_poly(r, TWO, fgens), random_poly(r, TWO, fgens)
            D = total_derivative
            assert D(D(f, 0), 1) == D(D(f, 1), 0)
            for i in (0, 1):
                assert D(f * g, i) == D(f, i) * g + f * D(g, i)
            w = random_poly(r, TWO, wgens)
            assert d_h(d_h(w)) == 0
            assert d_v(d_v(w)) == 0
            assert d_h(d_v(w)) + d_v(d_h(w)) == 0


def test_criterion_02_euler_helmholtz():
    with criterion(2, "E o D_i = 0 and Helmholtz o E = true on random Lagrangians"):
        r = rng(101)
        gens = pool(TWO, 2, forms=False)
        for _ in range(100):
            L = random_poly(r, TWO, gens)
            for i in (0, 1):
                assert all(not e.terms for e in euler_operator(total_derivative(L, i)))
            assert helmholtz_check(euler_operator(L))
        assert helmholtz_check([P(TX, "u_t - u_xx")]) is False


def test_criterion_03_kdv_certificate():
    with criterion(3, "KdV current certified; perturbed current leaves 6uu_x + u_xxx"):
        sys_ = PdeSystem(TX, [P(TX, "u_t - 6*u*u_x - u_xxx")],
                         solved_form={jet_gen(0, (1, 0)): P(TX, "6*u*u_x + u_xxx")})
        ok, res = conservation_check(P(TX, "u*dx(x) + (3*u^2 + u_xx)*dx(t)"), sys_)
        assert ok and not res.terms
        ok, res = conservation_check(P(TX, "u*dx(x)"), sys_)
        assert not ok and res == P(TX, "6*u*u_x + u_xxx")


def test_criterion_04_maxwell_bv():
    with criterion(4, "Maxwell BV: master equation, corrupted action, D_BV^2 = 0, H^0 window"):
        R = gauge_operator(MX, ["eps"], {"At": "eps_t", "Ax": "eps_x"})
        model = bv_extend(P(MX, MAXWELL_L), [R])
        assert master_equation_check(model.action)[0]
        ok, res = master_equation_check(P(model.ctx, MAXWELL_L + " + Axstar*c"))
        assert not ok and any(x.terms for x in res)
        D = bv_differential(model.action, max_jet=3)
        assert not D.square_on_generators(3)
        rep = h0_report(model, Truncation(1, 2, ghost=(-1, 0)))
        F = P(model.ctx, "Ax_t - At_x")
        assert any(e["representative"] in (F, -F) for e in rep.entries)
        row = rep.table.row((0, 0, -1))
        assert row.certified and row.betti == 0


def test_criterion_05_koszul_tate():
    with criterion(5, "Koszul-Tate: delta^2 c* = 0, ghost -1 homology vanishes"):
        E = euler_operator(P(MX, MAXWELL_L))
        Z = TotalDiffOperator(MX, 1, 2, {(0, 0, (1, 0)): 1, (0, 1, (0, 1)): 1})
        ext, d = kt_extend(PdeSystem(MX, E, noether_ops=[Z]))
        assert d(d(ext.jet("cstar"))) == 0
        for k in (1, 3):
            row = bounded_cohomology(ext, "delta", Truncation(k, 2, ghost=(-2, 0)), d).row((0, 0, -1))
            assert row.certified and row.betti == 0
            if k == 3:
                assert row.dim > 0
        ext, d = kt_extend(PdeSystem(X, [P(X, "u")]))
        row = bounded_cohomology(ext, "delta", Truncation(1, 2, ghost=(-2, 0)), d).row((0, 0, -1))
        assert row.certified and row.dim > 0 and row.betti == 0


def test_criterion_06_closure():
    with criterion(6, "closure: exact keys pass, perturbations rejected, six relations"):
        rels = closure_relations(2)
        assert len(rels) == 6
        assert [r.terms for r in rels] == [
            (("delta", 0, 0, 0),),
            (("d_v", 0, 0, 0), ("delta", 1, 0, 1)),
            (("d_h", 0, 0, 0), ("delta", 1, 1, 0)),
            (("d_v", 1, 0, 1), ("delta", 2, 0, 2)),
            (("d_h", 1, 0, 1), ("d_v", 1, 1, 0), ("delta", 2, 1, 1)),
            (("d_h", 1, 1, 0), ("delta", 2, 2, 0)),
        ]
        r = rng(106)
        delta = kdelta()
        for _ in range(20):
            key = key_differential(random_key(r, KCTX, 1, 0, 0, 3), delta)
            assert closure_check(key, delta, mode="to-depth", depth=2).closed
            slot = r.choice([s for s in key.slots() if s[1] <= KCTX.n and s[0] <= 2])
            rr, a, b = slot
            while True:
                w = random_homogeneous(r, KCTX, a, b, key.N - rr, max_jet=1)
                hits = [delta(w)] + ([d_h(w), d_v(w)] if rr < 2 else [])
                if any(h.terms for h in hits):
                    break
            assert not closure_check(key.with_component(slot, w), delta, mode="to-depth", depth=2).closed


def test_criterion_07_vertical_exactness():
    with criterion(7, "d_v h + h d_v = id; H^(0,q) = 0 for q >= 1 on the free context"):
        r = rng(107)
        gens = pool(TWO, 2, forms=True)
        weighted = [g for g in gens if g[0] in (1, 3)]
        for _ in range(100):
            w = random_poly(r, TWO, gens) * TWO.var(r.choice(weighted))
            assert d_v(vertical_homotopy(w)) + vertical_homotopy(d_v(w)) == w
        tab = bounded_cohomology(X, "d_v", Truncation(2, 2, q=(0, 2)))
        checked = [row for row in tab.rows if row.degree[1] >= 1 and row.certified]
        assert checked and any(row.dim for row in checked)
        assert all(row.betti == 0 for row in checked)


def test_criterion_08_brackets():
    with criterion(8, "Lie Jacobi; antibracket symmetry, Leibniz, Jacobi; [pi, pi] = 0"):
        r = rng(108)
        gens = pool(TWO, 1, forms=False)
        for _ in range(20):
            a, b, c = ([random_poly(r, TWO, gens, terms=2, max_factors=2) for _ in range(2)]
                       for _ in range(3))
            jac = [x + y + z for x, y, z in zip(lie_bracket(a, lie_bracket(b, c)),
                                                lie_bracket(b, lie_bracket(c, a)),
                                                lie_bracket(c, lie_bracket(a, b)))]
            assert all(not j.terms for j in jac)
        bv = bv_content(X, 1)
        zero = fingerprint(bv.zero())

        def sample():
            while True:
                f = random_homogeneous(r, bv, 0, 0, r.choice([-1, 0, 1]), terms=2, max_jet=1)
                if f.terms:
                    return f

        for _ in range(20):
            F, G, H = sample(), sample(), sample()
            pf, pg = F.parity(), G.parity()
            s = -(-1) ** ((pf + 1) * (pg + 1))
            assert fingerprint(antibracket(F, G) - s * antibracket(G, F)) == zero
            lsign = (-1) ** ((pf + 1) * pg)
            rhs = apply_hamiltonian(F, G) * H + lsign * G * apply_hamiltonian(F, H)
            assert fingerprint(antibracket(F, G * H) - rhs) == zero
            jsign = (-1) ** ((pf + 1) * (pg + 1))
            lhs = antibracket(F, antibracket(G, H))
            rhs = antibracket(antibracket(F, G), H) + jsign * antibracket(G, antibracket(F, H))
            assert fingerprint(lhs - rhs) == zero
        star = JetContext(("x",), (FieldDecl("u"), FieldDecl("ustar", -1, "u")))
        pi = P(star, "1/2*ustar*ustar_x")
        assert same_class(schouten_bracket(pi, pi), star.zero())


def test_criterion_09_integration_pairing():
    with criterion(9, "integration pairing: 1/3 and 4/3 exactly"):
        assert evaluate_functional(P(X, "u^2"), {"u": P(X, "x")}, [(0, 1)]) == Fraction(1, 3)
        assert evaluate_functional(P(X, "u_x^2"), {"u": P(X, "x^2")}, [(0, 1)]) == Fraction(4, 3)


def _cli(args, seed):
    env = dict(os.environ, PYTHONHASHSEED=seed)
    proc = subprocess.run([sys.executable, "-m", "varitri.cli", *args], capture_output=True, env=env)
    return proc.returncode, proc.stdout


def test_criterion_10_determinism():
    with criterion(10, "CLI reports byte-identical across runs and --jobs settings"):
        for command, name, code in CLI_CASES:
            args = [command, "--input", str(PROBLEMS / f"{name}.json")]
            a = _cli(args, "1")
            b = _cli(args, "2")
            c = _cli(args + ["--jobs", "4"], "3")
            assert a[0] == code and a == b == c, (command, name)
        args = ["el", "--input", str(PROBLEMS / "half_ux2.json"), "--output", "latex"]
        assert _cli(args, "1") == _cli(args, "2")
