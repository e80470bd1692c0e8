import itertools
from fractions import Fraction

import pytest

from gsdeform.linear import IntegrityError
from gsdeform.symalg import (
    OVERFLOW,
    AxiomError,
    SymBuildSpec,
    bialgebra_equal,
    bialgebra_to_json,
    build_sym,
    load_bialgebra,
    verify_bialgebra,
)

Q = Fraction


def sym_x(w_max=2, degree=0):
    return build_sym(SymBuildSpec(("x",), (degree,), w_max))


def test_build_sym_even_generator_weight_2():
    b = sym_x(2)
    assert b.space.labels == ("1", "x", "x^2")
    i1, ix, ix2 = 0, 1, 2
    # Delta(x^2) = x^2 (x) 1 + 2 x (x) x + 1 (x) x^2   (expand multiplicatively)
    assert b.coproduct(ix2) == {(ix2, i1): Q(1), (ix, ix): Q(2), (i1, ix2): Q(1)}
    assert b.product(ix, ix) == {ix2: Q(1)}
    assert b.product(ix, ix2) is OVERFLOW


def test_build_sym_odd_generator_square_zero():
    b = build_sym(SymBuildSpec(("x",), (1,), 3))
    assert b.space.labels == ("1", "x")
    # x odd: x^2 = 0 by the Koszul sign, not overflow
    assert b.product(1, 1) == {}


def test_counit_unit_pointing():
    b = sym_x(3)
    assert b.counit == {b.unit_index: Q(1)}
    assert b.iterated_coproduct(b.unit_index, 0) == {(): Q(1)}


def test_iterated_product_and_overflow():
    b = sym_x(2)
    assert b.iterated_product((1, 1)) == {2: Q(1)}
    assert b.iterated_product((1, 1, 1)) is OVERFLOW
    assert b.iterated_product(()) == {b.unit_index: Q(1)}


def test_iterated_product_associative_exhaustive():
    b = build_sym(SymBuildSpec(("x", "y"), (0, 0), 3))
    n = b.dim()
    for i, j, k in itertools.product(range(n), repeat=3):
        if b.weight(i) + b.weight(j) + b.weight(k) > 3:
            continue
        pij = b.product(i, j)
        pjk = b.product(j, k)
        assert pij is not OVERFLOW and pjk is not OVERFLOW
        lhs = {}
        for m, c in pij.items():
            for t, v in b.product(m, k).items():
                lhs[t] = lhs.get(t, Q(0)) + c * v
        rhs = {}
        for m, c in pjk.items():
            for t, v in b.product(i, m).items():
                rhs[t] = rhs.get(t, Q(0)) + c * v
        assert {k2: v for k2, v in lhs.items() if v} == {k2: v for k2, v in rhs.items() if v}


def test_iterated_coproduct_primitivity_and_counts():
    b = sym_x(2)
    ix, ix2 = 1, 2
    d2 = b.iterated_coproduct(ix, 2)
    assert d2 == {(ix, 0): Q(1), (0, ix): Q(1)}
    d3 = b.iterated_coproduct(ix2, 3)
    # 9 terms with multinomial coefficients: exponent patterns (2,0,0)..(0,0,2)
    assert sum(d3.values()) == Q(9)
    assert d3[(ix, ix, 0)] == Q(2)
    assert d3[(0, ix2, 0)] == Q(1)
    # counit axiom (eps (x) id) Delta = id on every basis element
    for i in range(b.dim()):
        acc = {}
        for (a, c), v in b.coproduct(i).items():
            e = b.counit.get(a, Q(0))
            if e:
                acc[c] = acc.get(c, Q(0)) + e * v
        assert {k: v for k, v in acc.items() if v} == {i: Q(1)}


def test_verify_bialgebra_sym_instances():
    for labels, degs, w in [
        (("x",), (0,), 4),
        (("x", "y"), (0, 0), 4),
        (("x", "y"), (0, 1), 3),
    ]:
        rep = verify_bialgebra(build_sym(SymBuildSpec(labels, degs, w)))
        assert rep.ok(), rep.failures[:3]


def test_verify_bialgebra_dg_instance():
    # 2-term acyclic complex: d a = b, |a| = 0, |b| = 1
    spec = SymBuildSpec(("a", "b"), (0, 1), 3, {(1, 0): Q(1)})
    b = build_sym(spec)
    rep = verify_bialgebra(b)
    assert rep.ok(), rep.failures[:3]
    # d(a^2) = 2 a b with the derivation rule
    ia2 = b.space.labels.index("a^2")
    iab = b.space.labels.index("a*b")
    assert b.diff[ia2] == {iab: Q(2)}


def test_trivial_bialgebra_passes():
    b = build_sym(SymBuildSpec(("x",), (0,), 1))
    assert verify_bialgebra(b).ok()


def test_corrupted_coproduct_located():
    b = sym_x(2)
    b.delta[2] = {(2, 0): Q(1), (0, 2): Q(1)}  # drop the 2 x(x)x term
    rep = verify_bialgebra(b)
    assert not rep.passed["compatibility"]
    assert any(name == "compatibility" for name, _ in rep.failures)


def test_json_roundtrip_and_loader():
    b = build_sym(SymBuildSpec(("x", "y"), (0, 1), 3, {(1, 0): Q(1)}))
    doc = bialgebra_to_json(b)
    b2 = load_bialgebra(doc)
    assert bialgebra_equal(b, b2)


def test_loader_missing_counit_is_schema_error():
    doc = bialgebra_to_json(sym_x(2))
    del doc["counit"]
    from gsdeform.linear import StructuralError
    with pytest.raises(StructuralError):
        load_bialgebra(doc)


def test_loader_axiom_failure_aborts_unless_overridden():
    doc = bialgebra_to_json(sym_x(2))
    for e in doc["delta"]:
        if e["a"] == "x^2":
            e["result"] = [r for r in e["result"] if not (r["left"] == "x" and r["right"] == "x")]
    with pytest.raises(AxiomError):
        load_bialgebra(doc)
    b = load_bialgebra(doc, check=False)
    assert not verify_bialgebra(b).ok()


def test_group_algebra_style_load():
    # span{1, g} with g grouplike of weight 1: mu(g,g) overflow-free needs w>=2,
    # so store weight 2; hand-checked axioms.
    doc = {
        "schema": "gsdeform.bialgebra.v1",
        "w_max": 2,
        "carrier": [
            {"label": "1", "degree": 0, "weight": 0},
            {"label": "g", "degree": 0, "weight": 1},
            {"label": "g2", "degree": 0, "weight": 2},
        ],
        "unit": "1",
        "counit": [
            {"basis": "1", "coeff": "1"},
            {"basis": "g", "coeff": "1"},
            {"basis": "g2", "coeff": "1"},
        ],
        "mu": [
            {"a": "g", "b": "g", "result": [{"basis": "g2", "coeff": "1"}]},
            {"a": "g", "b": "g2", "overflow": True},
            {"a": "g2", "b": "g", "overflow": True},
            {"a": "g2", "b": "g2", "overflow": True},
        ],
        "delta": [
            {"a": "1", "result": [{"left": "1", "right": "1", "coeff": "1"}]},
            {"a": "g", "result": [{"left": "g", "right": "g", "coeff": "1"}]},
            {"a": "g2", "result": [{"left": "g2", "right": "g2", "coeff": "1"}]},
        ],
    }
    b = load_bialgebra(doc)
    assert verify_bialgebra(b).ok()


def test_conilpotency_via_weight():
    # w-fold reduced coproduct of weight-w element lands in (weight 1)^{(x)w};
    # (w+1)-fold reduced coproduct vanishes.
    b = build_sym(SymBuildSpec(("x", "y"), (0, 0), 3))
    unit = b.unit_index
    for i in range(b.dim()):
        w = b.weight(i)
        if w < 1:
            continue
        full = b.iterated_coproduct(i, w)
        reduced = {
            legs: c for legs, c in full.items() if all(l != unit for l in legs)
        }
        assert reduced, b.label(i)
        assert all(all(b.weight(l) == 1 for l in legs) for legs in reduced)
        more = b.iterated_coproduct(i, w + 1)
        reduced_more = {
            legs: c for legs, c in more.items() if all(l != unit for l in legs)
        }
        assert not reduced_more


def test_overflow_consumption_raises():
    b = sym_x(2)
    with pytest.raises(IntegrityError):
        b.tensor_product_pointwise((1,), (2,))
