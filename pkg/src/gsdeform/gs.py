"""Gerstenhaber-Schack complex windows for a dg bialgebra.

A cochain lives in Hom(B^{(x)m}, B^{(x)n}) and is stored sparsely as
{(in_tuple, out_tuple): coeff} over basis indices of B. The window keeps
input tuples of total weight <= w_in (a quotient complex: all three
differentials evaluated on low-weight inputs depend only on low-weight
values), restricts the weight shift s = wt(out) - wt(in) to |s| <= s_max,
and caps the bidegrees by m,n <= m_max and optionally m+n <= t_max.

Differentials (validated by the exact d^2 = 0 checks, see tests):
  d_int f = d o f - (-1)^q f o d                      (q = internal degree)
  (d_h f)(b0,..,bm) = (-1)^{q|b0|} D^n(b0) * f(b1,..,bm)
       + sum_i (-1)^i f(b0,..,b_{i-1}b_i,..,bm)
       + (-1)^{m+1} f(b0,..,b_{m-1}) * D^n(bm)
  d_v f = (1 (x) f) o lambda + sum_j (-1)^j Delta_j o f
       + (-1)^{n+1} (f (x) 1) o rho
  D = d_int + d_h + (-1)^m d_v
where * is the componentwise product in B^{(x)n} through the iterated
coproduct, and lambda/rho are the coactions of B on B^{(x)m} through the
componentwise coproduct followed by the iterated product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .linear import (
    ChainComplex,
    GradedLinearMap,
    GradedVectorSpace,
    IntegrityError,
    StructuralError,
    sparse_rank,
    sparse_rank_kernel,
)
from .symalg import OVERFLOW, DgBialgebra

Q = Fraction

VARIANTS = {
    "gs": (1, 1),
    "tilde": (0, 1),
    "full": (0, 0),
}


@dataclass(frozen=True)
class GsWindow:
    m_max: int
    w_in: int
    s_max: int
    t_max: Optional[int] = None  # optional cap on m+n

    def __post_init__(self):
        if self.m_max < 1 or self.w_in < 1 or self.s_max < 0:
            raise StructuralError("window caps must be positive")

    def spots(self, variant: str) -> list[tuple[int, int]]:
        mmin, nmin = VARIANTS[variant]
        out = []
        for m in range(mmin, self.m_max + 1):
            for n in range(nmin, self.m_max + 1):
                if self.t_max is not None and m + n > self.t_max:
                    continue
                out.append((m, n))
        return out

    def in_window(self, variant: str, m: int, n: int) -> bool:
        mmin, nmin = VARIANTS[variant]
        if m < mmin or n < nmin:
            return False
        if m > self.m_max or n > self.m_max:
            return False
        if self.t_max is not None and m + n > self.t_max:
            return False
        return True


@dataclass
class GsCochain:
    """Sparse homogeneous cochain of bidegree (m, n) and weight shift s."""

    bialgebra: DgBialgebra
    m: int
    n: int
    shift: int
    entries: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction]

    def __post_init__(self):
        b = self.bialgebra
        clean = {}
        for (it, ot), c in self.entries.items():
            if len(it) != self.m or len(ot) != self.n:
                raise StructuralError("tuple length does not match bidegree")
            if b.tensor_weight(ot) - b.tensor_weight(it) != self.shift:
                raise StructuralError("entry violates the declared weight shift")
            c = c if isinstance(c, Fraction) else Q(c)
            if c:
                clean[(it, ot)] = c
        self.entries = clean

    def internal_degree(self) -> Optional[int]:
        degs = {
            self.bialgebra.tensor_degree(ot) - self.bialgebra.tensor_degree(it)
            for (it, ot) in self.entries
        }
        if not degs:
            return None
        if len(degs) > 1:
            raise StructuralError("cochain not degree-homogeneous")
        return degs.pop()

    def is_zero(self) -> bool:
        return not self.entries

    def __add__(self, other: "GsCochain") -> "GsCochain":
        assert (self.m, self.n, self.shift) == (other.m, other.n, other.shift)
        ent = dict(self.entries)
        for k, v in other.entries.items():
            nv = ent.get(k, Q(0)) + v
            if nv:
                ent[k] = nv
            else:
                ent.pop(k, None)
        return GsCochain(self.bialgebra, self.m, self.n, self.shift, ent)

    def scale(self, c) -> "GsCochain":
        c = Q(c)
        return GsCochain(
            self.bialgebra, self.m, self.n, self.shift,
            {k: c * v for k, v in self.entries.items()},
        )


# --------------------------------------------------------------------------
# the evaluation engine
# --------------------------------------------------------------------------

class GsEngine:
    """Caches reverse structure tables of a bialgebra for fast evaluation."""

    def __init__(self, bial: DgBialgebra, w_in: int):
        self.b = bial
        self.w_in = w_in
        b = bial
        n = b.dim()
        self.deg = [b.degree(i) for i in range(n)]
        self.wt = [b.weight(i) for i in range(n)]
        self.par = [d % 2 for d in self.deg]
        # basis ids by weight, weights <= w_in are the only admissible inputs
        self.by_weight: dict[int, list[int]] = {}
        for i in range(n):
            self.by_weight.setdefault(self.wt[i], []).append(i)
        # reverse product: w -> [(u, v, coeff)] with mu(u, v) ∋ w
        self.rev_mu: dict[int, list] = {i: [] for i in range(n)}
        for (u, v), tbl in b.mu.items():
            if tbl is OVERFLOW or not tbl:
                continue
            for w, c in tbl.items():
                self.rev_mu[w].append((u, v, c))
        # reverse coproduct, by second and by first leg
        self.rev_dl: dict[int, list] = {i: [] for i in range(n)}
        self.rev_dr: dict[int, list] = {i: [] for i in range(n)}
        for cidx in range(n):
            for (a, bb), c in b.coproduct(cidx).items():
                self.rev_dl[bb].append((cidx, a, c))
                self.rev_dr[a].append((cidx, bb, c))
        # reverse differential: w -> [(v, coeff)] with d(v) ∋ w
        self.rev_d: dict[int, list] = {i: [] for i in range(n)}
        for v, tbl in b.diff.items():
            for w, c in tbl.items():
                self.rev_d[w].append((v, c))
        self._delta_legs: dict[tuple[int, int], list] = {}
        self._tuples_cache: dict[tuple[int, int, int], list] = {}

    # ---- combinatorial enumerations ---------------------------------------

    def tuples(self, length: int, wmin: int, wmax: int) -> list[tuple[int, ...]]:
        """All basis tuples of given length with total weight in [wmin, wmax]."""
        key = (length, wmin, wmax)
        if key in self._tuples_cache:
            return self._tuples_cache[key]
        out: list[tuple[int, ...]] = []
        if length == 0:
            if wmin <= 0 <= wmax:
                out.append(())
        else:
            weights = sorted(self.by_weight)

            def rec(prefix, used):
                if len(prefix) == length:
                    if used >= wmin:
                        out.append(tuple(prefix))
                    return
                for w in weights:
                    if used + w > wmax:
                        break
                    for i in self.by_weight[w]:
                        rec(prefix + [i], used + w)

            rec([], 0)
        self._tuples_cache[key] = out
        return out

    def delta_legs(self, i: int, n: int) -> list[tuple[tuple[int, ...], Fraction]]:
        key = (i, n)
        got = self._delta_legs.get(key)
        if got is None:
            got = list(self.b.iterated_coproduct(i, n).items())
            self._delta_legs[key] = got
        return got

    # ---- single-term evaluations -------------------------------------------

    def _star(self, left_legs, right_legs, acc, base, new_in):
        """acc[(new_in, legs)] += base * componentwise product left * right."""
        b = self.b
        n = len(left_legs)
        # Koszul: moving left_legs[j] past right_legs[i] for i < j
        sign = 1
        pref = 0
        for j in range(n):
            if j > 0 and self.par[left_legs[j]] and pref % 2:
                sign = -sign
            pref += self.deg[right_legs[j]]
        partials = [((), base * sign)]
        for pos in range(n):
            p = b.product(left_legs[pos], right_legs[pos])
            if p is OVERFLOW:
                raise IntegrityError(
                    "window-unsound: overflow product consumed in GS evaluation"
                )
            new = []
            for po, c in partials:
                for k, c2 in p.items():
                    new.append((po + (k,), c * c2))
            partials = new
            if not partials:
                return
        for po, c in partials:
            k = (new_in, po)
            nv = acc.get(k, 0) + c
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)

    def apply_d_int(self, it, ot):
        """d o f - (-1)^q f o d on the elementary cochain (it -> ot)."""
        b = self.b
        q = (b.tensor_degree(ot) - b.tensor_degree(it)) % 2
        acc: dict = {}
        for not_, c in b.differential_on_tensor(ot).items():
            k = (it, not_)
            nv = acc.get(k, 0) + c
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        sgn_f = -1 if q == 0 else 1  # the -(-1)^q factor
        for pos in range(len(it)):
            pre_par = sum(self.deg[it[t]] for t in range(pos)) % 2
            for v, c in self.rev_d[it[pos]]:
                nit = it[:pos] + (v,) + it[pos + 1:]
                coeff = c * sgn_f * (-1 if pre_par else 1)
                k = (nit, ot)
                nv = acc.get(k, 0) + coeff
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        return acc

    def apply_d_h(self, it, ot):
        b = self.b
        m = len(it)
        n = len(ot)
        q = (b.tensor_degree(ot) - b.tensor_degree(it)) % 2
        w_in = b.tensor_weight(it)
        budget = self.w_in - w_in
        acc: dict = {}
        # term A: new first argument acts from the left
        for w0 in range(0, budget + 1):
            for b0 in self.by_weight.get(w0, ()):
                base_sign = -1 if (q and self.par[b0]) else 1
                for legs, c in self.delta_legs(b0, n):
                    self._star(legs, ot, acc, base_sign * c, (b0,) + it)
        # term B: merge adjacent arguments
        for j in range(m):
            sgn = -1 if (j + 1) % 2 else 1
            for (u, v, c) in self.rev_mu[it[j]]:
                nit = it[:j] + (u, v) + it[j + 1:]
                if b.tensor_weight(nit) > self.w_in:
                    continue
                k = (nit, ot)
                nv = acc.get(k, 0) + sgn * c
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        # term C: new last argument acts from the right
        sgn_last = -1 if (m + 1) % 2 else 1
        for w0 in range(0, budget + 1):
            for bm in self.by_weight.get(w0, ()):
                for legs, c in self.delta_legs(bm, n):
                    self._star(ot, legs, acc, sgn_last * c, it + (bm,))
        return acc

    def apply_d_v(self, it, ot):
        b = self.b
        m = len(it)
        n = len(ot)
        q = (b.tensor_degree(ot) - b.tensor_degree(it)) % 2
        acc: dict = {}
        # term B': comultiply each output leg
        for j in range(n):
            sgn = -1 if (j + 1) % 2 else 1
            for (u, v), c in b.coproduct(ot[j]).items():
                not_ = ot[:j] + (u, v) + ot[j + 1:]
                k = (it, not_)
                nv = acc.get(k, 0) + sgn * c
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        # terms A'/C': coactions on the input tuple
        budget = self.w_in - b.tensor_weight(it)
        self._coaction(it, ot, acc, budget, q, left=True, sign=1)
        self._coaction(it, ot, acc, budget, q, left=False,
                       sign=(-1 if (n + 1) % 2 else 1))
        return acc

    def _coaction(self, it, ot, acc, budget, q, left, sign):
        b = self.b
        m = len(it)
        table = self.rev_dl if left else self.rev_dr
        # choose (c_i, a_i) per position with sum wt(a_i) <= budget
        combos = [((), (), 1, 0)]
        for pos in range(m):
            new = []
            for (cs, as_, coeff, used) in combos:
                for (cc, aa, cf) in table[it[pos]]:
                    wa = self.wt[cc] - self.wt[it[pos]]
                    if used + wa > budget:
                        continue
                    new.append((cs + (cc,), as_ + (aa,), coeff * cf, used + wa))
            combos = new
            if not combos:
                return
        for (cs, as_, coeff, _) in combos:
            # Koszul reorder sign
            sgn = 1
            if left:
                # move a_i left past b_j = it[j] for j < i
                pref = 0
                for i in range(m):
                    if i > 0 and self.par[as_[i]] and pref % 2:
                        sgn = -sgn
                    pref += self.deg[it[i]]
            else:
                # move a_i (second legs) right past it[j] for j > i
                for i in range(m):
                    if self.par[as_[i]]:
                        tail = sum(self.deg[it[j]] for j in range(i + 1, m)) % 2
                        if tail:
                            sgn = -sgn
            prod = b.iterated_product(as_)
            if prod is OVERFLOW:
                raise IntegrityError("window-unsound: coaction product overflow")
            adeg = sum(self.deg[a] for a in as_) % 2
            fsign = -1 if (left and q and adeg) else 1
            for p, cp in prod.items():
                if left:
                    key = (cs, (p,) + ot)
                else:
                    key = (cs, ot + (p,))
                nv = acc.get(key, 0) + sign * sgn * fsign * coeff * cp
                if nv:
                    acc[key] = nv
                else:
                    acc.pop(key, None)

    def apply_total(self, it, ot):
        """D = d_int + d_h + (-1)^m d_v on an elementary cochain."""
        m = len(it)
        acc = self.apply_d_int(it, ot)
        for k, v in self.apply_d_h(it, ot).items():
            nv = acc.get(k, 0) + v
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        tw = -1 if m % 2 else 1
        for k, v in self.apply_d_v(it, ot).items():
            nv = acc.get(k, 0) + tw * v
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        return acc


# --------------------------------------------------------------------------
# public single-cochain operations
# --------------------------------------------------------------------------

def _combine(engine, f, apply_fn, dm, dn):
    acc: dict = {}
    for (it, ot), c in f.entries.items():
        for k, v in apply_fn(it, ot).items():
            nv = acc.get(k, 0) + c * v
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
    out = GsCochain(f.bialgebra, f.m + dm, f.n + dn, f.shift,
                    {k: Q(v) for k, v in acc.items()})
    return out


_ENGINES: dict[tuple[int, int], GsEngine] = {}


def _shared(f: GsCochain, w_in: int) -> GsEngine:
    key = (id(f.bialgebra), w_in)
    eng = _ENGINES.get(key)
    if eng is None or eng.b is not f.bialgebra:
        eng = GsEngine(f.bialgebra, w_in)
        _ENGINES[key] = eng
    return eng


def horizontal(f: GsCochain, w_in: int) -> GsCochain:
    eng = _shared(f, w_in)
    return _combine(eng, f, eng.apply_d_h, 1, 0)


def vertical(f: GsCochain, w_in: int) -> GsCochain:
    eng = _shared(f, w_in)
    return _combine(eng, f, eng.apply_d_v, 0, 1)


def internal(f: GsCochain, w_in: int) -> GsCochain:
    eng = _shared(f, w_in)
    return _combine(eng, f, eng.apply_d_int, 0, 0)


def total_differential(parts: Iterable[GsCochain], w_in: int) -> list[GsCochain]:
    """D applied to a sum of homogeneous cochains; result grouped by (m, n)."""
    acc: dict[tuple[int, int, int], GsCochain] = {}

    def add(g: GsCochain):
        key = (g.m, g.n, g.shift)
        if key in acc:
            acc[key] = acc[key] + g
        else:
            acc[key] = g

    for f in parts:
        eng = _shared(f, w_in)
        add(_combine(eng, f, eng.apply_d_int, 0, 0))
        add(_combine(eng, f, eng.apply_d_h, 1, 0))
        tw = -1 if f.m % 2 else 1
        add(_combine(eng, f, eng.apply_d_v, 0, 1).scale(tw))
    return [g for g in acc.values() if not g.is_zero()]


# --------------------------------------------------------------------------
# window assembly
# --------------------------------------------------------------------------

def _check_storage(bial: DgBialgebra, window: GsWindow) -> None:
    if bial.w_max < window.w_in + window.s_max:
        raise StructuralError(
            f"bialgebra stored to weight {bial.w_max} but the window needs "
            f"w_in + s_max = {window.w_in + window.s_max}"
        )


def window_basis(engine: GsEngine, variant: str, window: GsWindow):
    """Enumerate elementary cochains grouped by (total degree, shift s).

    Returns {(T, s): [(m, n, in_t, out_t), ...]} with deterministic order.
    """
    _check_storage(engine.b, window)
    b = engine.b
    out: dict[tuple[int, int], list] = {}
    for (m, n) in window.spots(variant):
        for it in engine.tuples(m, 0, window.w_in):
            wi = b.tensor_weight(it)
            di = b.tensor_degree(it)
            for s in range(-window.s_max, window.s_max + 1):
                wo = wi + s
                if wo < 0:
                    continue
                for ot in engine.tuples(n, wo, wo):
                    T = b.tensor_degree(ot) - di + m + n
                    out.setdefault((T, s), []).append((m, n, it, ot))
    for key in out:
        out[key].sort()
    return out


def _block_key(engine: GsEngine, m, n, it, ot, use_multi):
    b = engine.b
    T = b.tensor_degree(ot) - b.tensor_degree(it) + m + n
    s = b.tensor_weight(ot) - b.tensor_weight(it)
    if use_multi:
        mi = b.tensor_multidegree(it)
        mo = b.tensor_multidegree(ot)
        return (T, s, tuple(x - y for x, y in zip(mo, mi)))
    return (T, s, None)


@dataclass
class GsCohomologyTable:
    variant: str
    window: GsWindow
    w_in: int
    betti: dict[tuple[int, int], int]               # (degree, shift) -> dim
    breakdown: dict[tuple[int, int], dict[tuple[int, int], int]]
    trusted: dict[int, bool]                         # per total degree
    dims: dict[tuple[int, int], int]                 # cochain dimensions
    representatives: dict[tuple[int, int], list] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": "gsdeform.gstable.v1",
            "variant": self.variant,
            "window": {
                "m_max": self.window.m_max,
                "w_in": self.w_in,
                "s_max": self.window.s_max,
                "t_max": self.window.t_max,
            },
            "tables": [
                {
                    "degree": T,
                    "shift": s,
                    "betti": self.betti[(T, s)],
                    "dim": self.dims.get((T, s), 0),
                    "trusted": bool(self.trusted.get(T, False)),
                    "breakdown": [
                        {"m": m, "n": n, "dim": d}
                        for (m, n), d in sorted(self.breakdown.get((T, s), {}).items())
                        if d
                    ],
                }
                for (T, s) in sorted(self.betti)
            ],
        }

    def to_csv(self) -> str:
        lines = ["degree,shift,betti,dim,trusted"]
        for (T, s) in sorted(self.betti):
            lines.append(
                f"{T},{s},{self.betti[(T, s)]},{self.dims.get((T, s), 0)},"
                f"{int(self.trusted.get(T, False))}"
            )
        return "\n".join(lines) + "\n"


def _columns_int(raw_cols, row_index):
    """Convert raw {key: coeff} columns to integer sparse columns."""
    cols = []
    for raw in raw_cols:
        col = {}
        denlcm = 1
        vals = list(raw.items())
        for _, v in vals:
            if isinstance(v, Fraction) and v.denominator != 1:
                denlcm = denlcm * v.denominator // _gcd(denlcm, v.denominator)
        for k, v in vals:
            r = row_index.get(k)
            if r is None:
                continue
            iv = int(v * denlcm) if isinstance(v, Fraction) else v * denlcm
            if iv:
                col[r] = iv
        cols.append(col)
    return cols


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def assemble(variant: str, bial: DgBialgebra, window: GsWindow
             ) -> dict[int, ChainComplex]:
    """One ChainComplex per weight shift s; degrees are total degrees."""
    engine = GsEngine(bial, window.w_in)
    basis = window_basis(engine, variant, window)
    by_s: dict[int, dict[int, list]] = {}
    for (T, s), items in basis.items():
        by_s.setdefault(s, {})[T] = items
    out: dict[int, ChainComplex] = {}
    for s, per_deg in sorted(by_s.items()):
        spaces = {}
        index: dict[int, dict] = {}
        for T, items in per_deg.items():
            labels = []
            idx = {}
            for pos, (m, n, it, ot) in enumerate(items):
                lbl = _cochain_label(bial, it, ot)
                idx[(it, ot)] = pos
                labels.append(lbl)
            spaces[T] = tuple(labels)
            index[T] = idx
        space = GradedVectorSpace(spaces)
        blocks: dict[int, dict] = {}
        for T, items in per_deg.items():
            tgt = index.get(T + 1)
            if tgt is None:
                continue
            blk: dict = {}
            for j, (m, n, it, ot) in enumerate(items):
                for (nit, not_), c in engine.apply_total(it, ot).items():
                    if not window.in_window(variant, len(nit), len(not_)):
                        continue
                    i = tgt.get((nit, not_))
                    if i is None:
                        continue
                    blk[(i, j)] = blk.get((i, j), Q(0)) + Q(c)
            blk = {k: v for k, v in blk.items() if v}
            if blk:
                blocks[T] = blk
        diff = GradedLinearMap(space, space, 1, blocks)
        out[s] = ChainComplex(space, diff)  # raises IntegrityError if D^2 != 0
    return out


def _cochain_label(b, it, ot):
    lin = ",".join(b.label(i) for i in it) or "1"
    lout = ",".join(b.label(i) for i in ot) or "1"
    return f"[{lin}=>{lout}]"


def gs_cohomology(variant: str, bial: DgBialgebra, window: GsWindow,
                  with_breakdown: bool = True,
                  keep_representatives: bool = False) -> GsCohomologyTable:
    engine = GsEngine(bial, window.w_in)
    use_multi = bial.multidegrees is not None and not bial.is_dg()
    basis = window_basis(engine, variant, window)
    # refine blocks by multidegree shift where available
    cols_by_block: dict = {}
    for (T, s), items in basis.items():
        for (m, n, it, ot) in items:
            key = _block_key(engine, m, n, it, ot, use_multi)
            cols_by_block.setdefault(key, []).append((m, n, it, ot))
    # per block: image of D restricted to the window
    dims: dict[tuple[int, int], int] = {}
    for (T, s), items in basis.items():
        dims[(T, s)] = len(items)
    ranks: dict = {}        # block key -> rank of D out of that block
    kernels: dict = {}      # block key -> (columns, kernel basis) if needed
    betti: dict[tuple[int, int], int] = {}
    breakdown: dict[tuple[int, int], dict[tuple[int, int], int]] = {}
    reps: dict[tuple[int, int], list] = {}

    def block_columns(key):
        items = cols_by_block.get(key, [])
        row_index: dict = {}
        raw_cols = []
        for (m, n, it, ot) in items:
            raw = {}
            for (k2, v) in engine.apply_total(it, ot).items():
                nit, not_ = k2
                if not window.in_window(variant, len(nit), len(not_)):
                    continue
                raw[k2] = raw.get(k2, 0) + v
            for k2 in raw:
                if k2 not in row_index:
                    row_index[k2] = len(row_index)
            raw_cols.append(raw)
        return items, _columns_int(raw_cols, row_index)

    all_keys = sorted(cols_by_block, key=lambda k: (k[0], k[1], str(k[2])))
    for key in all_keys:
        items, cols = block_columns(key)
        if keep_representatives or with_breakdown:
            rank, ker = sparse_rank_kernel(cols)
            kernels[key] = (items, ker)
        else:
            rank = sparse_rank(cols)
        ranks[key] = rank

    for (T, s) in sorted(dims):
        total = dims[(T, s)]
        rk_here = sum(r for k, r in ranks.items() if k[0] == T and k[1] == s)
        rk_prev = sum(r for k, r in ranks.items() if k[0] == T - 1 and k[1] == s)
        betti[(T, s)] = total - rk_here - rk_prev
        if betti[(T, s)] < 0:
            raise IntegrityError(f"negative Betti at degree {T}, shift {s}")

    if with_breakdown:
        _fill_breakdown(engine, variant, window, cols_by_block, kernels,
                        ranks, betti, breakdown, use_multi)
    if keep_representatives:
        for key, (items, ker) in kernels.items():
            T, s = key[0], key[1]
            if betti.get((T, s), 0):
                lst = reps.setdefault((T, s), [])
                for vec in ker:
                    lst.append([
                        (items[j][0], items[j][1],
                         _cochain_label(bial, items[j][2], items[j][3]), str(c))
                        for j, c in sorted(vec.items())
                    ])

    trusted = _trusted_degrees(engine, variant, window, basis)
    return GsCohomologyTable(
        variant=variant, window=window, w_in=window.w_in,
        betti=betti, breakdown=breakdown, trusted=trusted, dims=dims,
        representatives=reps,
    )


def _fill_breakdown(engine, variant, window, cols_by_block, kernels, ranks,
                    betti, breakdown, use_multi):
    """Associated graded of the filtration by the first bidegree m.

    F_p = cochains with m >= p is a subcomplex; dim gr_p H = (rank of
    [ker(D|F_p) | im D] - rank[im D]) - (same with p+1).
    """
    # group per (T, s)
    blocks_by_ts: dict = {}
    for key in cols_by_block:
        blocks_by_ts.setdefault((key[0], key[1]), []).append(key)
    for (T, s), keys in sorted(blocks_by_ts.items()):
        h = betti.get((T, s), 0)
        if not h:
            continue
        mvals = sorted({m for key in keys for (m, n, _, _) in cols_by_block[key]})
        # image columns of D_{T-1,s} expressed in (T, s) coordinates
        filt_dim: dict[int, int] = {}
        prev_keys = [k for k in cols_by_block if k[0] == T - 1 and k[1] == s]
        for p in mvals + [max(mvals) + 1]:
            # kernel vectors of D on columns with m >= p, per refined block
            span_cols = []
            row_index: dict = {}

            def col_of_cochain_list(entry_list):
                col = {}
                for (mm, nn, it, ot), c in entry_list:
                    k2 = (it, ot)
                    if k2 not in row_index:
                        row_index[k2] = len(row_index)
                    col[row_index[k2]] = col.get(row_index[k2], 0) + c
                return {k: v for k, v in col.items() if v}

            for key in keys:
                items = cols_by_block[key]
                sub_idx = [j for j, (mm, _, _, _) in enumerate(items) if mm >= p]
                if not sub_idx:
                    continue
                raw_cols = []
                for j in sub_idx:
                    m, n, it, ot = items[j]
                    raw = {}
                    for k2, v in engine.apply_total(it, ot).items():
                        nit, not_ = k2
                        if not window.in_window(variant, len(nit), len(not_)):
                            continue
                        raw[k2] = raw.get(k2, 0) + v
                    raw_cols.append(raw)
                ridx: dict = {}
                for raw in raw_cols:
                    for k2 in raw:
                        ridx.setdefault(k2, len(ridx))
                cols = _columns_int(raw_cols, ridx)
                _, ker = sparse_rank_kernel(cols)
                for vec in ker:
                    span_cols.append(col_of_cochain_list(
                        [(items[sub_idx[j]], c) for j, c in vec.items()]
                    ))
            # image of D_{T-1}
            img_cols = []
            for key in prev_keys:
                for (m, n, it, ot) in cols_by_block[key]:
                    raw = {}
                    for k2, v in engine.apply_total(it, ot).items():
                        nit, not_ = k2
                        if not window.in_window(variant, len(nit), len(not_)):
                            continue
                        raw[k2] = raw.get(k2, 0) + v
                    if raw:
                        img_cols.append(col_of_cochain_list(
                            [((len(kk[0]), len(kk[1]), kk[0], kk[1]), v)
                             for kk, v in raw.items()]
                        ))
            base = sparse_rank([dict(c) for c in img_cols])
            joint = sparse_rank([dict(c) for c in img_cols + span_cols])
            filt_dim[p] = joint - base
        bd = {}
        for i, p in enumerate(mvals):
            nxt = mvals[i + 1] if i + 1 < len(mvals) else max(mvals) + 1
            d = filt_dim.get(p, 0) - filt_dim.get(nxt, 0)
            if d:
                # n is determined inside the block by T, s only when q = 0;
                # report the m-graded dimension against the matching n
                ns = sorted({n for key in keys
                             for (mm, n, _, _) in cols_by_block[key] if mm == p})
                n_rep = ns[0] if len(ns) == 1 else T - p
                bd[(p, n_rep)] = d
        breakdown[(T, s)] = bd


def _trusted_degrees(engine, variant, window, basis) -> dict[int, bool]:
    """A degree T is trusted when no cap-truncation borders it.

    (a) every in-window spot with basis at degree T must have its d_h/d_v
        targets in-window (or empty); otherwise kernels at T are inflated.
    (b) every in-window spot with basis at degree T must have its sources
        in-window (or empty, or excluded by the variant); otherwise the
        image into degree T is underestimated.
    Emptiness is judged conservatively by weight counting only.
    """
    mmin, nmin = VARIANTS[variant]
    spots_at: dict[int, set] = {}
    for (T, s), items in basis.items():
        for (m, n, _, _) in items:
            spots_at.setdefault(T, set()).add((m, n))

    def spot_nonempty(m, n):
        # any input tuple of weight <= w_in and any matching output exists
        if m < 0 or n < 0:
            return False
        return True  # weight counting: weight-0 tuples always exist

    trusted = {}
    degrees = sorted(spots_at)
    for T in degrees:
        ok = True
        for (m, n) in spots_at.get(T, ()) | spots_at.get(T + 1, set()):
            for (tm, tn) in ((m + 1, n), (m, n + 1)):
                if tm < mmin or tn < nmin:
                    continue
                if not window.in_window(variant, tm, tn) and spot_nonempty(tm, tn):
                    ok = False
        for (m, n) in spots_at.get(T, ()):
            for (sm, sn) in ((m - 1, n), (m, n - 1)):
                if sm < mmin or sn < nmin:
                    continue  # excluded by the variant itself, not a cap
                if not window.in_window(variant, sm, sn) and spot_nonempty(sm, sn):
                    ok = False
        trusted[T] = ok
    return trusted


# --------------------------------------------------------------------------
# exact bicomplex identity checks (criterion-1 style)
# --------------------------------------------------------------------------

def bicomplex_check(bial: DgBialgebra, variant: str, window: GsWindow,
                    use_scipy: bool = True) -> dict:
    """Verify d_h^2 = 0, d_v^2 = 0, commutation, d_int compat and D^2 = 0.

    The identities are evaluated as honest maps: targets are not truncated
    in the bidegree direction (only the exact weight-window quotient is
    applied). Raises IntegrityError with a witness on any failure.
    """
    engine = GsEngine(bial, window.w_in)
    basis = window_basis(engine, variant, window)
    columns = [key for items in basis.values() for key in items]
    stats = {"columns": len(columns), "second_level": 0}

    if use_scipy:
        try:
            import numpy as np
            from scipy import sparse as sp
        except Exception:  # pragma: no cover
            use_scipy = False

    appliers = {
        "h": engine.apply_d_h,
        "v": engine.apply_d_v,
        "i": engine.apply_d_int,
    }
    memo: dict[tuple[str, tuple], dict] = {}

    def mapped(which, it, ot):
        key = (which, (it, ot))
        got = memo.get(key)
        if got is None:
            got = appliers[which](it, ot)
            memo[key] = got
            stats["second_level"] += 1
        return got

    if not use_scipy:
        for (m, n, it, ot) in columns:
            _pure_checks(engine, mapped, m, it, ot)
        return stats

    import numpy as np
    from scipy import sparse as sp

    # first level: images of each component on window columns
    row_index: dict = {}
    first: dict[str, dict] = {w: {} for w in "hvi"}
    for j, (m, n, it, ot) in enumerate(columns):
        for w in "hvi":
            for k2, v in mapped(w, it, ot).items():
                r = row_index.setdefault(k2, len(row_index))
                first[w][(r, j)] = first[w].get((r, j), 0) + v
    mid = sorted(row_index.items(), key=lambda kv: kv[1])
    mids = [k for k, _ in mid]
    # second level matrices on the reached cochains
    row2: dict = {}
    second: dict[str, dict] = {w: {} for w in "hvi"}
    for jj, k2 in enumerate(mids):
        it, ot = k2
        for w in "hvi":
            for k3, v in mapped(w, it, ot).items():
                r = row2.setdefault(k3, len(row2))
                second[w][(r, jj)] = second[w].get((r, jj), 0) + v

    def csr(d, shape):
        if not d:
            return sp.csr_matrix(shape, dtype=np.int64)
        rows = np.fromiter((k[0] for k in d), dtype=np.int64, count=len(d))
        cols = np.fromiter((k[1] for k in d), dtype=np.int64, count=len(d))
        vals = np.fromiter((int(v) for v in d.values()), dtype=np.int64,
                           count=len(d))
        if np.abs(vals).max(initial=0) > 2 ** 31:
            raise IntegrityError("entry too large for the int64 fast path")
        return sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)

    nc, nm, nr2 = len(columns), len(mids), len(row2)
    F = {w: csr(first[w], (nm, nc)) for w in "hvi"}
    Sd = {w: csr(second[w], (nr2, nm)) for w in "hvi"}

    # sign diagonals: (-1)^m per column / per mid cochain
    sgn_cols = np.array([-1 if len(it) % 2 else 1 for (_, _, it, _) in columns],
                        dtype=np.int64)
    sgn_mid = np.array([-1 if len(it) % 2 else 1 for (it, _) in mids],
                       dtype=np.int64)
    Dc = sp.diags(sgn_cols, dtype=np.int64)
    Dm = sp.diags(sgn_mid, dtype=np.int64)

    def zero_or_raise(mat, name):
        mat = sp.csr_matrix(mat)
        mat.eliminate_zeros()
        if mat.nnz:
            jj = int(mat.nonzero()[1][0])
            m, n, it, ot = columns[jj]
            raise IntegrityError(
                f"{name} != 0; witness {_cochain_label(bial, it, ot)} "
                f"at bidegree ({m},{n})"
            )

    zero_or_raise(Sd["h"] @ F["h"], "d_h^2")
    zero_or_raise(Sd["v"] @ F["v"], "d_v^2")
    zero_or_raise(Sd["h"] @ F["v"] - Sd["v"] @ F["h"], "d_h d_v - d_v d_h")
    zero_or_raise(Sd["i"] @ F["i"], "d_int^2")
    zero_or_raise(Sd["i"] @ F["h"] + Sd["h"] @ F["i"], "d_int d_h + d_h d_int")
    zero_or_raise(Sd["i"] @ F["v"] + Sd["v"] @ F["i"], "d_int d_v + d_v d_int")
    # full total differential: D = I + H + (-1)^m V
    Fd = F["i"] + F["h"] + F["v"] @ Dc
    Sfull = Sd["i"] + Sd["h"] + Sd["v"] @ Dm
    zero_or_raise(Sfull @ Fd, "D^2")
    return stats


def _pure_checks(engine, mapped, m, it, ot):
    def second(w1, w2, tw_by_m=False):
        acc: dict = {}
        for k2, v in mapped(w1, it, ot).items():
            tw = 1
            if tw_by_m:
                tw = -1 if len(k2[0]) % 2 else 1
            for k3, v2 in mapped(w2, *k2).items():
                nv = acc.get(k3, 0) + tw * v * v2
                if nv:
                    acc[k3] = nv
                else:
                    acc.pop(k3, None)
        return acc

    for name, a, b in (("d_h^2", "h", "h"), ("d_v^2", "v", "v"),
                       ("d_int^2", "i", "i")):
        if second(a, b):
            raise IntegrityError(f"{name} != 0 at {it}->{ot}")
    # second(a, b) applies b after a
    hv = second("h", "v")
    vh = second("v", "h")
    diff = dict(hv)
    for k3, v in vh.items():
        nv = diff.get(k3, 0) - v
        if nv:
            diff[k3] = nv
        else:
            diff.pop(k3, None)
    if diff:
        raise IntegrityError(f"d_h d_v != d_v d_h at {it}->{ot}")
    for name, a, b in (("d_int d_h + d_h d_int", "i", "h"),
                       ("d_int d_v + d_v d_int", "i", "v")):
        acc = second(a, b)
        for k3, v in second(b, a).items():
            nv = acc.get(k3, 0) + v
            if nv:
                acc[k3] = nv
            else:
                acc.pop(k3, None)
        if acc:
            raise IntegrityError(f"{name} != 0 at {it}->{ot}")
    # D^2
    accD: dict = {}
    tw_m = -1 if m % 2 else 1
    firstD: dict = {}
    for w, tw in (("i", 1), ("h", 1), ("v", tw_m)):
        for k2, v in mapped(w, it, ot).items():
            nv = firstD.get(k2, 0) + tw * v
            if nv:
                firstD[k2] = nv
            else:
                firstD.pop(k2, None)
    for k2, v in firstD.items():
        tw2 = -1 if len(k2[0]) % 2 else 1
        for w, tw in (("i", 1), ("h", 1), ("v", tw2)):
            for k3, v2 in mapped(w, *k2).items():
                nv = accD.get(k3, 0) + tw * v * v2
                if nv:
                    accD[k3] = nv
                else:
                    accD.pop(k3, None)
    if accD:
        raise IntegrityError(f"D^2 != 0 at {it}->{ot}")


# --------------------------------------------------------------------------
# stabilization scan
# --------------------------------------------------------------------------

def stabilization_scan(variant: str, bialgebras: dict[int, DgBialgebra],
                       window_for: dict[int, GsWindow]) -> dict:
    """Betti sequences across increasing w_in with an equal-on-last-two verdict."""
    w_values = sorted(bialgebras)
    tables = {}
    for w in w_values:
        tables[w] = gs_cohomology(variant, bialgebras[w], window_for[w],
                                  with_breakdown=False)
    keys = sorted({k for t in tables.values() for k in t.betti})
    series = {}
    for key in keys:
        series[key] = [tables[w].betti.get(key, 0) for w in w_values]
    last_two_equal = all(
        s[-1] == s[-2] for s in series.values()
    ) if len(w_values) >= 2 else False
    return {
        "schema": "gsdeform.stabilization.v1",
        "variant": variant,
        "w_values": w_values,
        "series": {f"{k[0]},{k[1]}": v for k, v in sorted(series.items())},
        "stable": last_two_equal,
        "tables": {w: tables[w].to_json() for w in w_values},
    }
