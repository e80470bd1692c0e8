"""Weight-truncated free graded-commutative bialgebras Sym(V) and friends.

Basis elements are monomials in the generators; the coproduct makes the
generators primitive and extends multiplicatively. Products whose target
weight exceeds the stored truncation are flagged as overflow rather than
silently zeroed, so downstream windows can prove they never consume one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

from .linear import GradedVectorSpace, IntegrityError, StructuralError

Q = Fraction

OVERFLOW = "overflow"


class AxiomError(IntegrityError):
    """A bialgebra axiom failed; message carries the witness tuple."""


@dataclass(frozen=True)
class WeightGradedSpace:
    labels: tuple[str, ...]
    degrees: tuple[int, ...]
    weights: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.labels) == len(self.degrees) == len(self.weights)):
            raise StructuralError("labels/degrees/weights length mismatch")
        if len(set(self.labels)) != len(self.labels):
            raise StructuralError("duplicate labels")
        if any(w < 0 for w in self.weights):
            raise StructuralError("negative weight")

    def __len__(self):
        return len(self.labels)

    def graded_space(self) -> GradedVectorSpace:
        basis: dict[int, list[str]] = {}
        for lbl, d in zip(self.labels, self.degrees):
            basis.setdefault(d, []).append(lbl)
        return GradedVectorSpace({d: tuple(ls) for d, ls in basis.items()})


Coeffs = dict[int, Fraction]


@dataclass
class DgBialgebra:
    """Structure-constant tables indexed by basis position.

    mu[(i, j)] is either a sparse {k: coeff} dict or the OVERFLOW marker
    when weight(i) + weight(j) exceeds the stored truncation W_max.
    delta[i] is {(j, k): coeff}; diff[i] is {j: coeff}; counit[i] a scalar.
    """

    space: WeightGradedSpace
    w_max: int
    unit_index: int
    mu: dict[tuple[int, int], object]
    delta: dict[int, dict[tuple[int, int], Fraction]]
    counit: dict[int, Fraction]
    diff: dict[int, Coeffs] = field(default_factory=dict)
    # exponent vectors per basis element when the monomial structure is known
    # (enables splitting window complexes by multidegree); None for loaded data
    multidegrees: Optional[tuple[tuple[int, ...], ...]] = None

    # -- simple accessors ---------------------------------------------------

    def dim(self) -> int:
        return len(self.space)

    def weight(self, i: int) -> int:
        return self.space.weights[i]

    def degree(self, i: int) -> int:
        return self.space.degrees[i]

    def label(self, i: int) -> str:
        return self.space.labels[i]

    def is_dg(self) -> bool:
        return any(self.diff.get(i) for i in range(self.dim()))

    def product(self, i: int, j: int):
        """Sparse product or OVERFLOW; absent table entries are zero."""
        v = self.mu.get((i, j))
        if v is None:
            return {}
        return v

    def coproduct(self, i: int) -> dict[tuple[int, int], Fraction]:
        return self.delta.get(i, {})

    # -- iterated structure maps (cached) ------------------------------------

    def iterated_coproduct(self, i: int, n: int) -> dict[tuple[int, ...], Fraction]:
        """Delta^{(n)}: B -> B^{(x)n}; Delta^{(1)} = id, Delta^{(0)} = counit."""
        if n < 0:
            raise StructuralError("negative coproduct arity")
        cache = self._delta_cache.setdefault(n, {})
        if i in cache:
            return cache[i]
        if n == 0:
            out = {(): self.counit.get(i, Q(0))}
            out = {k: v for k, v in out.items() if v}
        elif n == 1:
            out = {(i,): Q(1)}
        else:
            out = {}
            for legs, c in self.iterated_coproduct(i, n - 1).items():
                # expand the FIRST leg: Delta^{(n)} = (Delta (x) id^{n-2}) Delta^{(n-1)}
                for (a, b), c2 in self.coproduct(legs[0]).items():
                    key = (a, b) + legs[1:]
                    nv = out.get(key, Q(0)) + c * c2
                    if nv:
                        out[key] = nv
                    else:
                        out.pop(key, None)
        cache[i] = out
        return out

    def iterated_product(self, legs: tuple[int, ...]):
        """mu^{(m)} applied to a basis tuple; returns sparse dict or OVERFLOW."""
        if len(legs) == 0:
            return {self.unit_index: Q(1)}
        if len(legs) == 1:
            return {legs[0]: Q(1)}
        cache = self._mu_cache
        if legs in cache:
            return cache[legs]
        acc = {legs[0]: Q(1)}
        for nxt in legs[1:]:
            new: dict[int, Fraction] = {}
            for b, c in acc.items():
                p = self.product(b, nxt)
                if p is OVERFLOW:
                    cache[legs] = OVERFLOW
                    return OVERFLOW
                for k, c2 in p.items():
                    nv = new.get(k, Q(0)) + c * c2
                    if nv:
                        new[k] = nv
                    else:
                        new.pop(k, None)
            acc = new
        cache[legs] = acc
        return acc

    def __post_init__(self):
        self._delta_cache: dict[int, dict] = {}
        self._mu_cache: dict[tuple, object] = {}

    # -- tensor helpers -------------------------------------------------------

    def tensor_product_pointwise(self, left: tuple[int, ...],
                                 right: tuple[int, ...]
                                 ) -> dict[tuple[int, ...], Fraction]:
        """Componentwise product (l_1 (x)...(x) l_n) * (r_1 (x)...(x) r_n).

        Carries the Koszul sign from moving l_j past r_i for i < j.
        """
        n = len(left)
        assert len(right) == n
        sign = 1
        for jj in range(1, n):
            if self.degree(left[jj]) % 2:
                par = sum(self.degree(right[ii]) for ii in range(jj)) % 2
                if par:
                    sign = -sign
        out: dict[tuple[int, ...], Fraction] = {(): Q(sign)}
        for pos in range(n):
            p = self.product(left[pos], right[pos])
            if p is OVERFLOW:
                raise IntegrityError(
                    f"overflow product consumed: {self.label(left[pos])} * "
                    f"{self.label(right[pos])} beyond stored weight {self.w_max}"
                )
            new: dict[tuple[int, ...], Fraction] = {}
            for prefix, c in out.items():
                for k, c2 in p.items():
                    key = prefix + (k,)
                    nv = new.get(key, Q(0)) + c * c2
                    if nv:
                        new[key] = nv
                    else:
                        new.pop(key, None)
            out = new
            if not out:
                return {}
        return out

    def differential_on_tensor(self, legs: tuple[int, ...]) -> dict[tuple[int, ...], Fraction]:
        """d on B^{(x)m} with Koszul signs from the prefix degrees."""
        out: dict[tuple[int, ...], Fraction] = {}
        for pos in range(len(legs)):
            dl = self.diff.get(legs[pos])
            if not dl:
                continue
            sign = -1 if sum(self.degree(legs[t]) for t in range(pos)) % 2 else 1
            for j, c in dl.items():
                key = legs[:pos] + (j,) + legs[pos + 1:]
                nv = out.get(key, Q(0)) + sign * c
                if nv:
                    out[key] = nv
                else:
                    out.pop(key, None)
        return out

    def tensor_weight(self, legs: tuple[int, ...]) -> int:
        return sum(self.weight(i) for i in legs)

    def tensor_degree(self, legs: tuple[int, ...]) -> int:
        return sum(self.degree(i) for i in legs)

    def tensor_multidegree(self, legs: tuple[int, ...]) -> tuple[int, ...]:
        md = self.multidegrees
        if md is None:
            return ()
        acc = [0] * (len(md[0]) if md else 0)
        for i in legs:
            for t, e in enumerate(md[i]):
                acc[t] += e
        return tuple(acc)


# --------------------------------------------------------------------------
# Sym(V) construction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymBuildSpec:
    generator_labels: tuple[str, ...]
    generator_degrees: tuple[int, ...]
    w_max: int
    # d_V as {(target_gen, source_gen): coeff}
    differential: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.w_max < 1:
            raise StructuralError("w_max must be >= 1")


def _monomials(ngen, parities, w_max):
    """Exponent vectors of weight <= w_max; odd generators have exponent <= 1."""
    out = []

    def rec(prefix, remaining, idx):
        if idx == ngen:
            out.append(tuple(prefix))
            return
        cap = 1 if parities[idx] else remaining
        for e in range(cap + 1):
            if e <= remaining:
                rec(prefix + [e], remaining - e, idx + 1)

    rec([], w_max, 0)
    out.sort(key=lambda e: (sum(e), e))
    return out


def _mono_label(exps, labels):
    parts = []
    for e, lbl in zip(exps, labels):
        if e == 1:
            parts.append(lbl)
        elif e > 1:
            parts.append(f"{lbl}^{e}")
    return "*".join(parts) if parts else "1"


def _word_of(exps):
    word = []
    for idx, e in enumerate(exps):
        word.extend([idx] * e)
    return tuple(word)


def _normalize_word(word, parities):
    """Sort a generator word; returns (exponent tuple, sign) or (None, 0)."""
    word = list(word)
    sign = 1
    # insertion sort counting odd-odd transpositions
    for i in range(1, len(word)):
        j = i
        while j > 0 and word[j - 1] > word[j]:
            if parities[word[j - 1]] and parities[word[j]]:
                sign = -sign
            word[j - 1], word[j] = word[j], word[j - 1]
            j -= 1
    exps = {}
    for g in word:
        exps[g] = exps.get(g, 0) + 1
        if parities[g] and exps[g] > 1:
            return None, 0
    n = max(word) + 1 if word else 0
    return tuple(exps.get(g, 0) for g in range(max(n, len(parities)))), sign


def build_sym(spec: SymBuildSpec) -> DgBialgebra:
    """Free graded-commutative bialgebra on V, truncated at weight w_max."""
    ngen = len(spec.generator_labels)
    parities = tuple(d % 2 for d in spec.generator_degrees)
    mons = _monomials(ngen, parities, spec.w_max)
    index = {m: i for i, m in enumerate(mons)}
    labels = tuple(_mono_label(m, spec.generator_labels) for m in mons)
    degrees = tuple(
        sum(e * d for e, d in zip(m, spec.generator_degrees)) for m in mons
    )
    weights = tuple(sum(m) for m in mons)
    space = WeightGradedSpace(labels, degrees, weights)

    # product: exponent addition with the Koszul sign of interleaving
    mu: dict[tuple[int, int], object] = {}
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            if weights[i] + weights[j] > spec.w_max:
                mu[(i, j)] = OVERFLOW
                continue
            zero = False
            sign = 1
            for g in range(ngen):
                if parities[g] and a[g] and b[g]:
                    zero = True
                    break
            if zero:
                continue
            # sign: move each odd g-part of b past odd parts of a with index > g
            for g in range(ngen):
                if parities[g] and b[g]:
                    crossings = sum(a[h] for h in range(g + 1, ngen) if parities[h])
                    if crossings % 2:
                        sign = -sign
            tot = tuple(x + y for x, y in zip(a, b))
            mu[(i, j)] = {index[tot]: Q(sign)}

    # coproduct: generators primitive, extended multiplicatively
    delta: dict[int, dict[tuple[int, int], Fraction]] = {}
    for i, m in enumerate(mons):
        terms: dict[tuple[tuple, tuple], Fraction] = {((0,) * ngen, (0,) * ngen): Q(1)}
        for g in range(ngen):
            e = m[g]
            if e == 0:
                continue
            new: dict[tuple[tuple, tuple], Fraction] = {}
            for (l, r), c in terms.items():
                for k in range(e + 1):
                    # Koszul: g^k crosses the right leg r (odd counts only)
                    sign = 1
                    if parities[g] and k % 2:
                        rpar = sum(r[h] for h in range(ngen) if parities[h]) % 2
                        if rpar:
                            sign = -1
                    nl = tuple(x + (k if h == g else 0) for h, x in enumerate(l))
                    nr = tuple(x + (e - k if h == g else 0) for h, x in enumerate(r))
                    key = (nl, nr)
                    nv = new.get(key, Q(0)) + c * comb(e, k) * sign
                    if nv:
                        new[key] = nv
            terms = new
        delta[i] = {
            (index[l], index[r]): c for (l, r), c in terms.items()
        }

    counit = {index[(0,) * ngen]: Q(1)}

    # differential: extend d_V as a derivation
    diff: dict[int, Coeffs] = {}
    dv: dict[int, dict[int, Fraction]] = {}
    for (tg, sg), c in spec.differential.items():
        dv.setdefault(sg, {})[tg] = Q(c)
    for i, m in enumerate(mons):
        word = _word_of(m)
        acc: Coeffs = {}
        for pos in range(len(word)):
            g = word[pos]
            tbl = dv.get(g)
            if not tbl:
                continue
            prefix_par = sum(parities[word[t]] for t in range(pos)) % 2
            for tg, c in tbl.items():
                nw = word[:pos] + (tg,) + word[pos + 1:]
                exps, sign = _normalize_word(nw, parities)
                if exps is None:
                    continue
                exps = exps[:ngen] if len(exps) >= ngen else exps + (0,) * (ngen - len(exps))
                sgn = sign * (-1 if prefix_par else 1)
                k = index[exps]
                nv = acc.get(k, Q(0)) + sgn * c
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        if acc:
            diff[i] = acc

    bial = DgBialgebra(
        space=space,
        w_max=spec.w_max,
        unit_index=index[(0,) * ngen],
        mu=mu,
        delta=delta,
        counit=counit,
        diff=diff,
        multidegrees=mons,
    )
    return bial


# --------------------------------------------------------------------------
# axiom verification
# --------------------------------------------------------------------------

@dataclass
class AxiomReport:
    passed: dict[str, bool]
    failures: list[tuple[str, tuple]]

    def ok(self) -> bool:
        return all(self.passed.values())


def verify_bialgebra(b: DgBialgebra) -> AxiomReport:
    """Exact pass/fail per axiom, restricted to non-overflow instances."""
    failures: list[tuple[str, tuple]] = []
    passed = {k: True for k in (
        "associativity", "coassociativity", "unit", "counit",
        "compatibility", "derivation", "coderivation", "d_squared",
    )}

    def fail(name, witness):
        passed[name] = False
        if len(failures) < 64:
            failures.append((name, witness))

    n = b.dim()
    e = b.unit_index

    # unit and counit laws
    for i in range(n):
        if b.product(e, i) != {i: Q(1)} or b.product(i, e) != {i: Q(1)}:
            if b.product(e, i) is not OVERFLOW and b.product(i, e) is not OVERFLOW:
                fail("unit", (i,))
        left = _apply_counit_left(b, i)
        right = _apply_counit_right(b, i)
        if left != {i: Q(1)} or right != {i: Q(1)}:
            fail("counit", (i,))
    if b.counit.get(e, Q(0)) != Q(1):
        fail("counit", (e,))

    # associativity on non-overflow triples
    for i in range(n):
        for j in range(n):
            pij = b.product(i, j)
            for k in range(n):
                if b.weight(i) + b.weight(j) + b.weight(k) > b.w_max:
                    continue
                pjk = b.product(j, k)
                if pij is OVERFLOW or pjk is OVERFLOW:
                    continue
                lhs = _sparse_mul_left(b, pij, k)
                rhs = _sparse_mul_right(b, i, pjk)
                if lhs != rhs:
                    fail("associativity", (i, j, k))

    # coassociativity
    for i in range(n):
        lhs: dict[tuple[int, int, int], Fraction] = {}
        rhs: dict[tuple[int, int, int], Fraction] = {}
        for (a, c), v in b.coproduct(i).items():
            for (x, y), v2 in b.coproduct(a).items():
                key = (x, y, c)
                lhs[key] = lhs.get(key, Q(0)) + v * v2
            for (x, y), v2 in b.coproduct(c).items():
                key = (a, x, y)
                rhs[key] = rhs.get(key, Q(0)) + v * v2
        lhs = {k: v for k, v in lhs.items() if v}
        rhs = {k: v for k, v in rhs.items() if v}
        if lhs != rhs:
            fail("coassociativity", (i,))

    # compatibility: Delta(xy) = Delta(x) Delta(y), Koszul signs included
    for i in range(n):
        for j in range(n):
            p = b.product(i, j)
            if p is OVERFLOW:
                continue
            lhs: dict[tuple[int, int], Fraction] = {}
            for k, c in p.items():
                for (a, d_), v in b.coproduct(k).items():
                    key = (a, d_)
                    nv = lhs.get(key, Q(0)) + c * v
                    if nv:
                        lhs[key] = nv
                    else:
                        lhs.pop(key, None)
            rhs: dict[tuple[int, int], Fraction] = {}
            ok = True
            for (a, c1), v1 in b.coproduct(i).items():
                for (x, y), v2 in b.coproduct(j).items():
                    # (a (x) c1)(x (x) y) = ± ax (x) c1 y
                    sign = -1 if (b.degree(c1) % 2) and (b.degree(x) % 2) else 1
                    pax = b.product(a, x)
                    pcy = b.product(c1, y)
                    if pax is OVERFLOW or pcy is OVERFLOW:
                        ok = False
                        break
                    for r1, w1 in pax.items():
                        for r2, w2 in pcy.items():
                            key = (r1, r2)
                            nv = rhs.get(key, Q(0)) + sign * v1 * v2 * w1 * w2
                            if nv:
                                rhs[key] = nv
                            else:
                                rhs.pop(key, None)
                if not ok:
                    break
            if ok and lhs != rhs:
                fail("compatibility", (i, j))

    # derivation: d(xy) = d(x) y + (-1)^{|x|} x d(y)
    for i in range(n):
        for j in range(n):
            p = b.product(i, j)
            if p is OVERFLOW:
                continue
            lhs: Coeffs = {}
            for k, c in p.items():
                for t, v in b.diff.get(k, {}).items():
                    nv = lhs.get(t, Q(0)) + c * v
                    if nv:
                        lhs[t] = nv
                    else:
                        lhs.pop(t, None)
            rhs: Coeffs = {}
            for t, v in b.diff.get(i, {}).items():
                pt = b.product(t, j)
                if pt is OVERFLOW:
                    continue
                for k, c in pt.items():
                    nv = rhs.get(k, Q(0)) + v * c
                    if nv:
                        rhs[k] = nv
                    else:
                        rhs.pop(k, None)
            sgn = -1 if b.degree(i) % 2 else 1
            for t, v in b.diff.get(j, {}).items():
                pt = b.product(i, t)
                if pt is OVERFLOW:
                    continue
                for k, c in pt.items():
                    nv = rhs.get(k, Q(0)) + sgn * v * c
                    if nv:
                        rhs[k] = nv
                    else:
                        rhs.pop(k, None)
            if lhs != rhs:
                fail("derivation", (i, j))

    # coderivation: Delta d = (d (x) 1 + 1 (x) d) Delta
    for i in range(n):
        lhs: dict[tuple[int, int], Fraction] = {}
        for t, v in b.diff.get(i, {}).items():
            for (a, c), v2 in b.coproduct(t).items():
                key = (a, c)
                nv = lhs.get(key, Q(0)) + v * v2
                if nv:
                    lhs[key] = nv
                else:
                    lhs.pop(key, None)
        rhs: dict[tuple[int, int], Fraction] = {}
        for (a, c), v in b.coproduct(i).items():
            for t, v2 in b.diff.get(a, {}).items():
                key = (t, c)
                nv = rhs.get(key, Q(0)) + v * v2
                if nv:
                    rhs[key] = nv
                else:
                    rhs.pop(key, None)
            sgn = -1 if b.degree(a) % 2 else 1
            for t, v2 in b.diff.get(c, {}).items():
                key = (a, t)
                nv = rhs.get(key, Q(0)) + sgn * v * v2
                if nv:
                    rhs[key] = nv
                else:
                    rhs.pop(key, None)
        if lhs != rhs:
            fail("coderivation", (i,))

    # d^2 = 0
    for i in range(n):
        acc: Coeffs = {}
        for t, v in b.diff.get(i, {}).items():
            for u, v2 in b.diff.get(t, {}).items():
                nv = acc.get(u, Q(0)) + v * v2
                if nv:
                    acc[u] = nv
                else:
                    acc.pop(u, None)
        if acc:
            fail("d_squared", (i,))

    return AxiomReport(passed, failures)


def _apply_counit_left(b, i):
    out: Coeffs = {}
    for (a, c), v in b.coproduct(i).items():
        eps = b.counit.get(a, Q(0))
        if eps:
            nv = out.get(c, Q(0)) + eps * v
            if nv:
                out[c] = nv
            else:
                out.pop(c, None)
    return out


def _apply_counit_right(b, i):
    out: Coeffs = {}
    for (a, c), v in b.coproduct(i).items():
        eps = b.counit.get(c, Q(0))
        if eps:
            out[a] = out.get(a, Q(0)) + eps * v
    return {k: v for k, v in out.items() if v}


def _sparse_mul_left(b, sparse, k):
    out: Coeffs = {}
    for m, c in sparse.items():
        p = b.product(m, k)
        if p is OVERFLOW:
            raise IntegrityError("overflow in associativity check")
        for t, v in p.items():
            nv = out.get(t, Q(0)) + c * v
            if nv:
                out[t] = nv
            else:
                out.pop(t, None)
    return out


def _sparse_mul_right(b, i, sparse):
    out: Coeffs = {}
    for m, c in sparse.items():
        p = b.product(i, m)
        if p is OVERFLOW:
            raise IntegrityError("overflow in associativity check")
        for t, v in p.items():
            nv = out.get(t, Q(0)) + c * v
            if nv:
                out[t] = nv
            else:
                out.pop(t, None)
    return out


# --------------------------------------------------------------------------
# JSON serialization
# --------------------------------------------------------------------------

def _qstr(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator)


def _qparse(s) -> Fraction:
    return Fraction(str(s))


def bialgebra_to_json(b: DgBialgebra) -> dict:
    doc = {
        "schema": "gsdeform.bialgebra.v1",
        "w_max": b.w_max,
        "carrier": [
            {"label": b.label(i), "degree": b.degree(i), "weight": b.weight(i)}
            for i in range(b.dim())
        ],
        "unit": b.label(b.unit_index),
        "counit": [{"basis": b.label(i), "coeff": _qstr(c)}
                   for i, c in sorted(b.counit.items())],
        "mu": [],
        "delta": [],
        "diff": [],
    }
    for (i, j), val in sorted(b.mu.items()):
        entry = {"a": b.label(i), "b": b.label(j)}
        if val is OVERFLOW:
            entry["overflow"] = True
        else:
            entry["result"] = [
                {"basis": b.label(k), "coeff": _qstr(c)} for k, c in sorted(val.items())
            ]
            if not entry["result"]:
                continue
        doc["mu"].append(entry)
    for i, tbl in sorted(b.delta.items()):
        doc["delta"].append({
            "a": b.label(i),
            "result": [
                {"left": b.label(x), "right": b.label(y), "coeff": _qstr(c)}
                for (x, y), c in sorted(tbl.items())
            ],
        })
    for i, tbl in sorted(b.diff.items()):
        doc["diff"].append({
            "a": b.label(i),
            "result": [{"basis": b.label(k), "coeff": _qstr(c)}
                       for k, c in sorted(tbl.items())],
        })
    if b.multidegrees is not None:
        doc["multidegrees"] = [list(m) for m in b.multidegrees]
    return doc


def load_bialgebra(doc: dict, check: bool = True) -> DgBialgebra:
    """Build a DgBialgebra from structure constants; verify unless check=False."""
    try:
        carrier = doc["carrier"]
        labels = tuple(e["label"] for e in carrier)
        degrees = tuple(int(e["degree"]) for e in carrier)
        weights = tuple(int(e["weight"]) for e in carrier)
        idx = {l: i for i, l in enumerate(labels)}
        space = WeightGradedSpace(labels, degrees, weights)
        w_max = int(doc["w_max"])
        unit_index = idx[doc["unit"]]
        counit = {idx[e["basis"]]: _qparse(e["coeff"]) for e in doc["counit"]}
        mu: dict[tuple[int, int], object] = {}
        for e in doc["mu"]:
            key = (idx[e["a"]], idx[e["b"]])
            if e.get("overflow"):
                mu[key] = OVERFLOW
            else:
                mu[key] = {idx[r["basis"]]: _qparse(r["coeff"]) for r in e["result"]}
        delta: dict[int, dict[tuple[int, int], Fraction]] = {}
        for e in doc["delta"]:
            delta[idx[e["a"]]] = {
                (idx[r["left"]], idx[r["right"]]): _qparse(r["coeff"])
                for r in e["result"]
            }
        diff: dict[int, Coeffs] = {}
        for e in doc.get("diff", []):
            diff[idx[e["a"]]] = {idx[r["basis"]]: _qparse(r["coeff"])
                                 for r in e["result"]}
        md = doc.get("multidegrees")
        multideg = tuple(tuple(m) for m in md) if md is not None else None
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"bialgebra document malformed: {exc}") from exc

    # fill missing unit products so the tables are genuinely total
    for i in range(len(labels)):
        mu.setdefault((unit_index, i), {i: Q(1)})
        mu.setdefault((i, unit_index), {i: Q(1)})

    b = DgBialgebra(space, w_max, unit_index, mu, delta, counit, diff, multideg)
    if check:
        report = verify_bialgebra(b)
        if not report.ok():
            bad = [k for k, v in report.passed.items() if not v]
            raise AxiomError(
                f"bialgebra axioms failed: {bad}; witnesses {report.failures[:3]}"
            )
    return b


def bialgebra_equal(a: DgBialgebra, bb: DgBialgebra) -> bool:
    if a.space != bb.space or a.w_max != bb.w_max or a.unit_index != bb.unit_index:
        return False
    am = {k: v for k, v in a.mu.items() if v is OVERFLOW or v}
    bm = {k: v for k, v in bb.mu.items() if v is OVERFLOW or v}
    ad = {k: v for k, v in a.delta.items() if v}
    bd = {k: v for k, v in bb.delta.items() if v}
    return am == bm and ad == bd and a.counit == bb.counit and \
        {k: v for k, v in a.diff.items() if v} == {k: v for k, v in bb.diff.items() if v}
