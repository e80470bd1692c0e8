import itertools
from fractions import Fraction

import pytest

from gsdeform.gs import (
    GsCochain,
    GsEngine,
    GsWindow,
    assemble,
    bicomplex_check,
    gs_cohomology,
    horizontal,
    internal,
    stabilization_scan,
    total_differential,
    vertical,
    window_basis,
)
from gsdeform.linear import IntegrityError
from gsdeform.symalg import SymBuildSpec, build_sym

Q = Fraction


def sym(labels=("x",), degrees=None, w=4, diff=None):
    degrees = degrees or (0,) * len(labels)
    return build_sym(SymBuildSpec(labels, degrees, w, diff or {}))


def lab(b, name):
    return b.space.labels.index(name)


def test_d_h_of_zero_and_derivation_cocycle():
    b = sym(w=5)
    w_in = 3
    zero = GsCochain(b, 1, 1, 0, {})
    assert horizontal(zero, w_in).is_zero()
    # f = x d/dx restricted to the window: f(x^k) = k x^k
    f = GsCochain(b, 1, 1, 0, {
        ((lab(b, f"x^{k}" if k > 1 else "x"),),
         (lab(b, f"x^{k}" if k > 1 else "x"),)): Q(k)
        for k in range(1, w_in + 1)
    })
    assert horizontal(f, w_in).is_zero()
    # and the coderivation dual statement: same f is a d_v cocycle
    assert vertical(f, w_in).is_zero()


def test_d_h_of_non_derivation():
    # f(x) = x^2 extended by zero: (d_h f)(x, x) = Delta(x) . f(x) - f(x^2)
    # + f(x) . Delta(x) = 2 x (x) ... -> nonzero
    b = sym(w=5)
    w_in = 3
    f = GsCochain(b, 1, 1, 1, {((lab(b, "x"),), (lab(b, "x^2"),)): Q(1)})
    df = horizontal(f, w_in)
    assert not df.is_zero()
    ix = lab(b, "x")
    ix3 = lab(b, "x^3")
    # value on (x, x): 2 x^3 - f(x^2) = 2 x^3 (f vanishes on x^2)
    assert df.entries.get(((ix, ix), (ix3,))) == Q(2)


def _dual_bialgebra(b):
    # transpose the structure tables: mu° = Delta^T, Delta° = mu^T.
    # Only for ungraded instances (degree bookkeeping would flip signs).
    from gsdeform.symalg import OVERFLOW, DgBialgebra, WeightGradedSpace
    assert all(d == 0 for d in b.space.degrees)
    n = b.dim()
    mu = {}
    for c in range(n):
        for (a, x), coeff in b.coproduct(c).items():
            tbl = mu.setdefault((a, x), {})
            tbl[c] = tbl.get(c, Q(0)) + coeff
    for i in range(n):
        for j in range(n):
            if b.weight(i) + b.weight(j) > b.w_max:
                mu[(i, j)] = OVERFLOW
    delta = {}
    for (a, x), tbl in b.mu.items():
        if tbl is OVERFLOW:
            continue
        for c, coeff in tbl.items():
            d2 = delta.setdefault(c, {})
            d2[(a, x)] = d2.get((a, x), Q(0)) + coeff
    counit = {b.unit_index: Q(1)}
    return DgBialgebra(
        WeightGradedSpace(b.space.labels, b.space.degrees, b.space.weights),
        b.w_max, b.unit_index, mu, delta, counit, {},
    )


def test_d_v_matches_dualization_oracle():
    # d_v computed by the formula equals the transpose of d_h computed on the
    # explicit dual bialgebra (mu and Delta tables transposed).
    from gsdeform.symalg import verify_bialgebra
    b = sym(w=4)
    bd = _dual_bialgebra(b)
    assert verify_bialgebra(bd).ok()
    w_in = 2
    eng = GsEngine(b, w_in)
    basis11 = [(it, ot) for it in eng.tuples(1, 0, w_in)
               for ot in eng.tuples(1, b.tensor_weight(it), b.tensor_weight(it))]
    for (it, ot) in basis11:
        f = GsCochain(b, 1, 1, 0, {(it, ot): Q(1)})
        dv = vertical(f, w_in)
        g = GsCochain(bd, 1, 1, 0, {(ot, it): Q(1)})
        dh = horizontal(g, w_in)
        transposed = {(o, i): c for (i, o), c in dh.entries.items()}
        assert dv.entries == transposed


def test_total_differential_and_d_int_zero_without_dv():
    b = sym(w=4)
    f = GsCochain(b, 1, 1, 0, {((lab(b, "x"),), (lab(b, "x"),)): Q(1)})
    assert internal(f, 2).is_zero()  # d_V = 0
    parts = total_differential([f], 2)
    # D f = d_h f + (-1)^1 d_v f; both vanish for the derivation piece of f?
    # f here is the rank-1 projector, not a derivation: D f nonzero
    assert any(not g.is_zero() for g in parts) or not parts


def test_bicomplex_identities_small_windows_pure_and_scipy():
    for labels, degs, diff in [
        (("x",), (0,), None),
        (("a", "b"), (0, 1), {(1, 0): Q(1)}),
    ]:
        b = sym(labels, degs, w=4, diff=diff)
        win = GsWindow(m_max=2, w_in=2, s_max=2)
        s1 = bicomplex_check(b, "full", win, use_scipy=False)
        s2 = bicomplex_check(b, "full", win, use_scipy=True)
        assert s1["columns"] == s2["columns"] > 0


def test_assemble_complexes_and_variant_inclusion():
    b = sym(("x",), (0,), w=5)
    win = GsWindow(m_max=2, w_in=3, s_max=1)
    complexes = assemble("gs", b, win)  # ChainComplex ctor checks D^2 = 0
    assert sorted(complexes) == [-1, 0, 1]
    # dimension of the (m,n)=(1,1), s=0 piece for Sym^{<=3}(Q x) is 3
    eng = GsEngine(b, 3)
    basis = window_basis(eng, "gs", win)
    count11 = sum(
        1 for (m, n, it, ot) in basis[(2, 0)] if (m, n) == (1, 1)
    )
    assert count11 == 3
    # TILDE contains GS: every GS window basis key appears in TILDE's
    tilde = window_basis(eng, "tilde", win)
    for key, items in basis.items():
        tset = set(tilde.get(key, []))
        assert all(x in tset for x in items)


def test_trivial_bialgebra_gs_window_is_zero():
    b = sym(("x",), (0,), w=1)  # just K + x; gs variant needs m,n >= 1
    # restrict weights so no admissible cochains of positive dims? use w_in=1
    win = GsWindow(m_max=1, w_in=1, s_max=0)
    t = gs_cohomology("gs", b, win, with_breakdown=False)
    # complex is tiny but well defined; Betti must be >= 0 and finite
    assert all(v >= 0 for v in t.betti.values())


def test_gs_cohomology_sym_one_variable():
    # Theorem table: V = Q ungraded, d = 0 -> only (m,n) = (1,1), deg 2, s=0
    b = sym(("x",), (0,), w=7)
    win = GsWindow(m_max=3, w_in=4, s_max=2, t_max=5)
    t = gs_cohomology("gs", b, win)
    for (T, s), v in sorted(t.betti.items()):
        if not t.trusted[T]:
            continue
        expect = 1 if (T, s) == (2, 0) else 0
        assert v == expect, ((T, s), v)
    assert t.breakdown[(2, 0)] == {(1, 1): 1}
    # trusted degrees reach at least 4 here
    assert t.trusted[2] and t.trusted[3] and t.trusted[4]


def test_gs_cohomology_tilde_gains_cobar_classes():
    # the m=0 column adds V-side classes: for V = Q, one extra class in
    # degree 1 at s = +1 (and FULL adds the mirror at s = -1 plus the unit)
    b = sym(("x",), (0,), w=7)
    win = GsWindow(m_max=3, w_in=4, s_max=2, t_max=5)
    t_tilde = gs_cohomology("tilde", b, win, with_breakdown=False)
    assert t_tilde.betti[(1, 1)] == 1
    assert t_tilde.betti[(2, 0)] == 1
    assert t_tilde.betti.get((1, -1), 0) == 0
    t_full = gs_cohomology("full", b, win, with_breakdown=False)
    assert t_full.betti[(0, 0)] == 1
    assert t_full.betti[(1, 1)] == 1
    assert t_full.betti[(1, -1)] == 1
    assert t_full.betti[(2, 0)] == 1


def test_stabilization_scan_one_variable():
    bials = {w: sym(("x",), (0,), w=w + 2) for w in (2, 3, 4)}
    wins = {w: GsWindow(m_max=2, w_in=w, s_max=2, t_max=4) for w in (2, 3, 4)}
    rep = stabilization_scan("gs", bials, wins)
    assert rep["stable"] is True
    assert rep["series"]["2,0"][-1] == 1


def test_window_soundness_requires_storage():
    from gsdeform.linear import StructuralError
    b = sym(("x",), (0,), w=2)
    with pytest.raises(StructuralError):
        gs_cohomology("gs", b, GsWindow(m_max=1, w_in=2, s_max=2))
