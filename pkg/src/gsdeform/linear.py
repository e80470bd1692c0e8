"""Exact linear algebra over Q for finite-dimensional graded vector spaces.

Grading is cohomological, differentials have degree +1, and the shift V[k]
places degree-d elements in degree d-k (so V[-1] raises degrees by one).
Every scalar is a fractions.Fraction; there is no floating point anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Q = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class StructuralError(ValueError):
    """Shapes or degrees of the inputs do not line up."""


class IntegrityError(ValueError):
    """An exact mathematical identity failed; carries a witness."""


def _as_q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


# --------------------------------------------------------------------------
# graded vector spaces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GradedVectorSpace:
    """Finite collection of ordered basis labels, one list per degree."""

    basis: Mapping[int, tuple[str, ...]]

    def __post_init__(self):
        clean = {}
        for d, labels in self.basis.items():
            labels = tuple(labels)
            if len(set(labels)) != len(labels):
                raise StructuralError(f"duplicate basis labels in degree {d}")
            if labels:
                clean[int(d)] = labels
        object.__setattr__(self, "basis", clean)

    def degrees(self) -> list[int]:
        return sorted(self.basis)

    def dim(self, d: int) -> int:
        return len(self.basis.get(d, ()))

    def total_dim(self) -> int:
        return sum(len(v) for v in self.basis.values())

    def labels(self, d: int) -> tuple[str, ...]:
        return self.basis.get(d, ())

    def index(self, d: int, label: str) -> int:
        return self.basis[d].index(label)

    def shift(self, k: int) -> "GradedVectorSpace":
        """V[k]: degree-d elements land in degree d-k."""
        return GradedVectorSpace({d - k: ls for d, ls in self.basis.items()})

    def dual(self) -> "GradedVectorSpace":
        """dim(V*)_d = dim V_{-d}; labels get a trailing '*'."""
        return GradedVectorSpace(
            {-d: tuple(l + "*" for l in ls) for d, ls in self.basis.items()}
        )

    def to_json(self) -> list[dict]:
        return [{"degree": d, "labels": list(self.labels(d))} for d in self.degrees()]

    @classmethod
    def from_json(cls, doc: Iterable[dict]) -> "GradedVectorSpace":
        return cls({int(e["degree"]): tuple(e["labels"]) for e in doc})


# --------------------------------------------------------------------------
# graded linear maps
# --------------------------------------------------------------------------

@dataclass
class GradedLinearMap:
    """Degree-homogeneous map; blocks[d] sends V_d to W_{d+degree}.

    blocks[d] is a sparse dict {(row, col): Fraction}; absent blocks and
    absent entries are zero.
    """

    source: GradedVectorSpace
    target: GradedVectorSpace
    degree: int
    blocks: dict[int, dict[tuple[int, int], Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        for d, blk in list(self.blocks.items()):
            nr = self.target.dim(d + self.degree)
            nc = self.source.dim(d)
            clean = {}
            for (i, j), v in blk.items():
                if not (0 <= i < nr and 0 <= j < nc):
                    raise StructuralError(
                        f"entry ({i},{j}) outside {nr}x{nc} block at degree {d}"
                    )
                v = _as_q(v)
                if v:
                    clean[(i, j)] = v
            if clean:
                self.blocks[d] = clean
            else:
                del self.blocks[d]

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, source, target, degree=0) -> "GradedLinearMap":
        return cls(source, target, degree, {})

    @classmethod
    def identity(cls, space: GradedVectorSpace) -> "GradedLinearMap":
        blocks = {
            d: {(i, i): ONE for i in range(space.dim(d))} for d in space.degrees()
        }
        return cls(space, space, 0, blocks)

    # -- basic algebra -----------------------------------------------------

    def block(self, d: int) -> dict[tuple[int, int], Fraction]:
        return self.blocks.get(d, {})

    def is_zero(self) -> bool:
        return not self.blocks

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedLinearMap):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.source.basis == other.source.basis
            and self.target.basis == other.target.basis
            and self.blocks == other.blocks
        )

    def add(self, other: "GradedLinearMap") -> "GradedLinearMap":
        if self.degree != other.degree:
            raise StructuralError("degree mismatch in add")
        blocks: dict[int, dict] = {}
        for d in set(self.blocks) | set(other.blocks):
            blk = dict(self.block(d))
            for k, v in other.block(d).items():
                blk[k] = blk.get(k, ZERO) + v
            blocks[d] = {k: v for k, v in blk.items() if v}
        return GradedLinearMap(self.source, self.target, self.degree, blocks)

    def scale(self, c) -> "GradedLinearMap":
        c = _as_q(c)
        return GradedLinearMap(
            self.source,
            self.target,
            self.degree,
            {d: {k: c * v for k, v in blk.items()} for d, blk in self.blocks.items()},
        )

    def apply(self, d: int, vec: Mapping[int, Fraction]) -> dict[int, Fraction]:
        """Apply the degree-d block to a sparse column vector."""
        out: dict[int, Fraction] = {}
        blk = self.block(d)
        for (i, j), v in blk.items():
            c = vec.get(j)
            if c:
                out[i] = out.get(i, ZERO) + v * c
        return {i: v for i, v in out.items() if v}


def compose(f: GradedLinearMap, g: GradedLinearMap) -> GradedLinearMap:
    """f after g; degree shifts add, blocks are exact products."""
    if g.target.basis != f.source.basis:
        # allow composition on the common degree window
        common = set(g.target.basis) & set(f.source.basis)
        for d in common:
            if g.target.labels(d) != f.source.labels(d):
                raise StructuralError("source/target bases disagree on overlap")
    blocks: dict[int, dict] = {}
    for d, gblk in g.blocks.items():
        fblk = f.block(d + g.degree)
        if not fblk:
            continue
        # index g's block by column for the product
        by_row: dict[int, list] = {}
        for (i, j), v in gblk.items():
            by_row.setdefault(i, []).append((j, v))
        out: dict[tuple[int, int], Fraction] = {}
        for (i, k), fv in fblk.items():
            for j, gv in by_row.get(k, ()):
                key = (i, j)
                out[key] = out.get(key, ZERO) + fv * gv
        out = {k: v for k, v in out.items() if v}
        if out:
            blocks[d] = out
    return GradedLinearMap(g.source, f.target, f.degree + g.degree, blocks)


def tensor_space(v: GradedVectorSpace, w: GradedVectorSpace) -> GradedVectorSpace:
    basis: dict[int, list[str]] = {}
    for d1 in v.degrees():
        for d2 in w.degrees():
            basis.setdefault(d1 + d2, []).extend(
                f"{a}(x){b}" for a in v.labels(d1) for b in w.labels(d2)
            )
    return GradedVectorSpace({d: tuple(ls) for d, ls in basis.items()})


def _tensor_index(v: GradedVectorSpace, w: GradedVectorSpace):
    """Position of (d1,i,d2,j) inside tensor_space(v,w) at degree d1+d2."""
    offsets: dict[tuple[int, int], int] = {}
    for d in sorted(set(d1 + d2 for d1 in v.degrees() for d2 in w.degrees())):
        pos = 0
        for d1 in v.degrees():
            d2 = d - d1
            if w.dim(d2):
                offsets[(d1, d2)] = pos
                pos += v.dim(d1) * w.dim(d2)
    return offsets


def tensor(f: GradedLinearMap, g: GradedLinearMap) -> GradedLinearMap:
    """(f(x)g)(x(x)y) = (-1)^{|g||x|} f(x)(x)g(y)."""
    src = tensor_space(f.source, g.source)
    tgt = tensor_space(f.target, g.target)
    src_off = _tensor_index(f.source, g.source)
    tgt_off = _tensor_index(f.target, g.target)
    blocks: dict[int, dict] = {}
    for d1, fblk in f.blocks.items():
        for d2, gblk in g.blocks.items():
            d = d1 + d2
            sign = ONE if (g.degree * d1) % 2 == 0 else -ONE
            so = src_off[(d1, d2)]
            to = tgt_off[(d1 + f.degree, d2 + g.degree)]
            gcols = g.source.dim(d2)
            grows = g.target.dim(d2 + g.degree)
            out = blocks.setdefault(d, {})
            for (fi, fj), fv in fblk.items():
                for (gi, gj), gv in gblk.items():
                    key = (to + fi * grows + gi, so + fj * gcols + gj)
                    out[key] = out.get(key, ZERO) + sign * fv * gv
    blocks = {
        d: {k: v for k, v in blk.items() if v} for d, blk in blocks.items() if blk
    }
    return GradedLinearMap(src, tgt, f.degree + g.degree, blocks)


# --------------------------------------------------------------------------
# sparse elimination over Q (shared by chain complexes and the GS engine)
# --------------------------------------------------------------------------

def sparse_rank(columns: list[dict[int, Fraction]]) -> int:
    """Rank of the matrix whose columns are sparse {row: coeff} dicts."""
    return _eliminate(columns, want_kernel=False)[0]


def sparse_rank_kernel(
    columns: list[dict[int, Fraction]],
) -> tuple[int, list[dict[int, Fraction]]]:
    """Rank and a basis of the kernel in column coordinates."""
    return _eliminate(columns, want_kernel=True)


def _eliminate(columns, want_kernel):
    # Fraction-free on integers: scale each column to integer content first.
    cols = []
    for ci, col in enumerate(columns):
        ic = {}
        denlcm = 1
        for v in col.values():
            f = _as_q(v)
            denlcm = denlcm * f.denominator // _gcd(denlcm, f.denominator)
        for r, v in col.items():
            f = _as_q(v)
            if f:
                ic[r] = int(f * denlcm)
        cols.append(ic)
    n = len(cols)
    combo = [{ci: ONE} for ci in range(n)] if want_kernel else None
    # row -> set of live column indices containing it
    row_use: dict[int, set[int]] = {}
    for ci, col in enumerate(cols):
        for r in col:
            row_use.setdefault(r, set()).add(ci)
    live = set(i for i in range(n) if cols[i])
    rank = 0
    kernel = []
    while live:
        # pivot: shortest live column, tie-break deterministically
        pc = min(live, key=lambda i: (len(cols[i]), i))
        col = cols[pc]
        if not col:
            live.discard(pc)
            continue
        # pivot row: fewest other columns touch it, then smallest id
        pr = min(col, key=lambda r: (len(row_use.get(r, ())), r))
        pv = col[pr]
        rank += 1
        live.discard(pc)
        users = [ci for ci in row_use.get(pr, ()) if ci in live]
        for ci in users:
            other = cols[ci]
            ov = other.get(pr)
            if not ov:
                continue
            g = _gcd(abs(pv), abs(ov))
            a, b = pv // g, ov // g
            new = {}
            for r, v in other.items():
                nv = a * v
                if r in col:
                    nv -= b * col[r]
                if nv:
                    new[r] = nv
                else:
                    row_use.get(r, set()).discard(ci)
            for r in col:
                if r not in other:
                    nv = -b * col[r]
                    if nv:
                        new[r] = nv
                        row_use.setdefault(r, set()).add(ci)
            content = 0
            for v in new.values():
                content = _gcd(content, abs(v))
                if content == 1:
                    break
            if content > 1:
                new = {r: v // content for r, v in new.items()}
            else:
                content = 1
            cols[ci] = new
            if want_kernel:
                cmb = combo[ci]
                upd = {k: a * v for k, v in cmb.items()}
                for k, v in combo[pc].items():
                    upd[k] = upd.get(k, ZERO) - b * v
                if content > 1:
                    upd = {k: v / content for k, v in upd.items() if v}
                else:
                    upd = {k: v for k, v in upd.items() if v}
                combo[ci] = upd
        for r in col:
            row_use.get(r, set()).discard(pc)
    if want_kernel:
        kernel = [combo[ci] for ci in range(n) if not cols[ci]]
        # normalize: clear denominators, make deterministic leading sign
        normed = []
        for vec in kernel:
            denlcm = 1
            for v in vec.values():
                denlcm = denlcm * v.denominator // _gcd(denlcm, v.denominator)
            ints = {k: int(v * denlcm) for k, v in vec.items()}
            content = 0
            for v in ints.values():
                content = _gcd(content, abs(v))
            if content > 1:
                ints = {k: v // content for k, v in ints.items()}
            lead = min(ints)
            if ints[lead] < 0:
                ints = {k: -v for k, v in ints.items()}
            normed.append({k: Fraction(v) for k, v in sorted(ints.items())})
        kernel = normed
    return rank, kernel


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


# --------------------------------------------------------------------------
# chain complexes and cohomology with contraction data
# --------------------------------------------------------------------------

@dataclass
class ChainComplex:
    space: GradedVectorSpace
    differential: GradedLinearMap

    def __post_init__(self):
        if self.differential.degree != 1:
            raise StructuralError("differential must have degree +1")
        dd = compose(self.differential, self.differential)
        if not dd.is_zero():
            d = min(dd.blocks)
            (i, j) = min(dd.blocks[d])
            raise IntegrityError(
                f"d^2 != 0: degree {d}, basis pair "
                f"({self.space.labels(d)[j]!r} -> row {i})"
            )

    def betti(self) -> dict[int, int]:
        return {d: r.betti[d] for r in [self.cohomology()] for d in r.betti}

    def cohomology(self) -> "CohomologyReport":
        return _contract(self)


@dataclass
class CohomologyReport:
    """Betti numbers plus exact contraction data (p, i, h).

    Identities (all exact): p i = id, i p - id = d h + h d, h h = 0,
    h i = 0, p h = 0.
    """

    complex: ChainComplex
    homology_space: GradedVectorSpace
    betti: dict[int, int]
    cocycles: dict[int, list[dict[int, Fraction]]]
    projection: GradedLinearMap      # p : C -> H
    inclusion: GradedLinearMap       # i : H -> C
    homotopy: GradedLinearMap        # h : C -> C, degree -1

    def verify(self) -> None:
        p, i, h = self.projection, self.inclusion, self.homotopy
        d = self.complex.differential
        if not _eq(compose(p, i), GradedLinearMap.identity(self.homology_space)):
            raise IntegrityError("p i != id")
        lhs = compose(i, p).add(GradedLinearMap.identity(self.complex.space).scale(-1))
        rhs = compose(d, h).add(compose(h, d))
        if not _eq(lhs, rhs):
            raise IntegrityError("i p - id != d h + h d")
        for name, m in [("h h", compose(h, h)), ("h i", compose(h, i)),
                        ("p h", compose(p, h))]:
            if not m.is_zero():
                raise IntegrityError(f"{name} != 0")


def _eq(a: GradedLinearMap, b: GradedLinearMap) -> bool:
    return a.add(b.scale(-1)).is_zero()


def _dense_columns(m: GradedLinearMap, d: int) -> list[dict[int, Fraction]]:
    cols = [dict() for _ in range(m.source.dim(d))]
    for (i, j), v in m.block(d).items():
        cols[j][i] = v
    return cols


def _contract(cx: ChainComplex) -> CohomologyReport:
    """Pivot-based exact splitting C = im(d) + reps + U with d|_U injective."""
    space, d = cx.space, cx.differential
    degrees = space.degrees()
    ker: dict[int, list[dict[int, Fraction]]] = {}
    u_cols: dict[int, list[int]] = {}      # column indices spanning a complement of ker
    for deg in degrees:
        cols = _dense_columns(d, deg)
        rank, kernel = sparse_rank_kernel(cols)
        ker[deg] = kernel
        u_cols[deg] = _complement_columns(space.dim(deg), kernel)
    # image basis in degree deg+1 with chosen preimages from U
    betti: dict[int, int] = {}
    reps: dict[int, list[dict[int, Fraction]]] = {}
    h_blocks: dict[int, dict[tuple[int, int], Fraction]] = {}
    p_blocks: dict[int, dict[tuple[int, int], Fraction]] = {}
    i_blocks: dict[int, dict[tuple[int, int], Fraction]] = {}
    hbasis: dict[int, tuple[str, ...]] = {}
    for deg in degrees:
        n = space.dim(deg)
        prev = deg - 1
        # image vectors with preimages: d(e_j) for j in U_{deg-1}
        img_pairs = []
        for j in u_cols.get(prev, []):
            img_pairs.append((j, d.apply(prev, {j: ONE})))
        # choose representatives: extend img vectors to a basis of ker
        kerv = ker.get(deg, [])
        img_vecs = [v for _, v in img_pairs]
        rep_vecs, rep_ids = _extend_basis(img_vecs, kerv)
        betti[deg] = len(rep_vecs)
        reps[deg] = rep_vecs
        if rep_vecs:
            hbasis[deg] = tuple(f"h{deg}_{k}" for k in range(len(rep_vecs)))
        # solve the full decomposition: every basis vector e_t = img + rep + u
        # via one echelon with columns [img | rep | u] (all independent, span C)
        u_vecs = [{j: ONE} for j in u_cols.get(deg, [])]
        full = img_vecs + rep_vecs + u_vecs
        if len(full) != n:
            raise IntegrityError(
                f"decomposition dimension mismatch in degree {deg}: "
                f"{len(full)} != {n}"
            )
        coords = _solve_in_basis(full, n)
        n_img, n_rep = len(img_vecs), len(rep_vecs)
        for t in range(n):
            c = coords[t]
            for k, v in c.items():
                if not v:
                    continue
                if k < n_img:
                    # h: minus the chosen preimage of the image part
                    j = img_pairs[k][0]
                    h_blocks.setdefault(deg, {})[(j, t)] = (
                        h_blocks.get(deg, {}).get((j, t), ZERO) - v
                    )
                elif k < n_img + n_rep:
                    p_blocks.setdefault(deg, {})[(k - n_img, t)] = v
        for k in range(n_rep):
            for r, v in rep_vecs[k].items():
                i_blocks.setdefault(deg, {})[(r, k)] = v
    hspace = GradedVectorSpace(hbasis)
    report = CohomologyReport(
        complex=cx,
        homology_space=hspace,
        betti={d: betti.get(d, 0) for d in degrees},
        cocycles=reps,
        projection=GradedLinearMap(space, hspace, 0, p_blocks),
        inclusion=GradedLinearMap(hspace, space, 0, i_blocks),
        homotopy=GradedLinearMap(space, space, -1, h_blocks),
    )
    report.verify()
    return report


def _complement_columns(dim, kernel) -> list[int]:
    """Deterministic column indices J with span{e_j} a complement of ker."""
    # echelonize the kernel; its pivot coordinates cannot be in the complement
    piv = set()
    reduced: list[tuple[int, dict]] = []
    for vec in kernel:
        vec = dict(vec)
        for pcoord, pvec in reduced:
            c = vec.get(pcoord)
            if c:
                f = c / pvec[pcoord]
                for k, v in pvec.items():
                    nv = vec.get(k, ZERO) - f * v
                    if nv:
                        vec[k] = nv
                    else:
                        vec.pop(k, None)
        if vec:
            pc = min(vec)
            reduced.append((pc, vec))
            piv.add(pc)
    return [j for j in range(dim) if j not in piv]


def _extend_basis(base: list[dict[int, Fraction]], ambient: list[dict[int, Fraction]]):
    """Vectors from `ambient` extending span(base) to span(ambient)."""
    reduced: list[tuple[int, dict]] = []

    def _reduce(vec):
        vec = dict(vec)
        for pc, pv in reduced:
            c = vec.get(pc)
            if c:
                f = c / pv[pc]
                for k, v in pv.items():
                    nv = vec.get(k, ZERO) - f * v
                    if nv:
                        vec[k] = nv
                    else:
                        vec.pop(k, None)
        return vec

    for v in base:
        r = _reduce(v)
        if not r:
            raise IntegrityError("image vectors dependent; d^2 != 0 upstream?")
        reduced.append((min(r), r))
    chosen, ids = [], []
    for idx, v in enumerate(ambient):
        r = _reduce(v)
        if r:
            reduced.append((min(r), r))
            chosen.append(v)
            ids.append(idx)
    return chosen, ids


def _solve_in_basis(basis_vecs: list[dict[int, Fraction]], n: int):
    """Coordinates of each standard e_t in the given basis (dense inversion)."""
    dense = [[ZERO] * n for _ in range(n)]
    for j, col in enumerate(basis_vecs):
        for i, v in col.items():
            dense[i][j] = v
    inv = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for c in range(n):
        pr = None
        for r in range(c, n):
            if dense[r][c]:
                pr = r
                break
        if pr is None:
            raise IntegrityError("basis vectors not independent")
        dense[c], dense[pr] = dense[pr], dense[c]
        inv[c], inv[pr] = inv[pr], inv[c]
        pv = dense[c][c]
        if pv != ONE:
            dense[c] = [x / pv for x in dense[c]]
            inv[c] = [x / pv for x in inv[c]]
        for r in range(n):
            if r != c and dense[r][c]:
                f = dense[r][c]
                dense[r] = [a - f * b for a, b in zip(dense[r], dense[c])]
                inv[r] = [a - f * b for a, b in zip(inv[r], inv[c])]
    # x = M^{-1} e_t = column t of inv
    return [
        {k: inv[k][t] for k in range(n) if inv[k][t]}
        for t in range(n)
    ]


# --------------------------------------------------------------------------
# JSON for maps (exact integers as strings)
# --------------------------------------------------------------------------

def map_to_json(m: GradedLinearMap) -> dict:
    return {
        "degree": m.degree,
        "source": m.source.to_json(),
        "target": m.target.to_json(),
        "blocks": [
            {
                "src_degree": d,
                "entries": [
                    {"row": i, "col": j,
                     "num": str(v.numerator), "den": str(v.denominator)}
                    for (i, j), v in sorted(blk.items())
                ],
            }
            for d, blk in sorted(m.blocks.items())
        ],
    }


def map_from_json(doc: dict) -> GradedLinearMap:
    src = GradedVectorSpace.from_json(doc["source"])
    tgt = GradedVectorSpace.from_json(doc["target"])
    blocks = {}
    for b in doc["blocks"]:
        blocks[int(b["src_degree"])] = {
            (int(e["row"]), int(e["col"])): Fraction(int(e["num"]), int(e["den"]))
            for e in b["entries"]
        }
    return GradedLinearMap(src, tgt, int(doc["degree"]), blocks)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
