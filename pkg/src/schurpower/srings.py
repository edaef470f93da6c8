"""S-rings over a group or a direct power: closure, structure constants,
extensions, quotients, tensor products, and the distinguished subsets of the
diagonal extension ring.

An SRing wraps a canonical partition of a PowerContext domain whose classes
satisfy S1 ({identity} is a class), S2 (classwise inverses), and S3 (constant
representation counts).  compute_Am builds the smallest S-ring containing the
tensor-power partition and the diagonal; its rank-5 shape at m=2 and its
distinguished subgroups are what the verification harnesses exercise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TheoremViolationError, ValidationError
from .groups import (
    ColoredGroup,
    FiniteGroup,
    PowerContext,
    direct_product,
    group_from_dict,
    group_from_table,
    group_to_dict,
    power,
)
from .partitions import Partition, from_class_of, meet, project
from .refinement import ClosureStats, schur_refine

_PAIR_OP_CAP = 1 << 26  # max sum |X||Y| for exhaustive S3 verification


def _as_context(carrier: FiniteGroup | PowerContext, cap=None) -> PowerContext:
    if isinstance(carrier, PowerContext):
        return carrier
    return power(carrier, 1, cap=cap)


# ---------------------------------------------------------------------------
# axioms


@dataclass
class AxiomReport:
    """Outcome of the direct S1-S3 check on a partition."""

    s1: bool
    s2: bool
    s3: bool | None  # None = not checked (size cap)
    witness: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.s1 and self.s2 and self.s3 is True


def _pair_counts(ctx: PowerContext, x_codes, y_codes) -> np.ndarray:
    """counts[g] = #{(x,y) in X x Y : xy = g}, dense over the domain."""
    counts = np.zeros(ctx.size, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, len(y_codes)))
    for s in range(0, len(x_codes), chunk):
        prods = ctx.mul_codes(x_codes[s : s + chunk, None], y_codes[None, :])
        counts += np.bincount(prods.ravel(), minlength=ctx.size)
    return counts


def verify_axioms(
    partition: Partition, carrier: FiniteGroup | PowerContext, s3_cap: int = _PAIR_OP_CAP
) -> AxiomReport:
    """Directly check S1-S3 by definition; independent of the closure engine."""
    ctx = _as_context(carrier)
    if partition.size != ctx.size:
        raise ValidationError("partition does not live on the carrier domain")
    cls = partition.class_of
    s1 = len(partition.classes[cls[0]]) == 1
    witness: dict = {}
    if not s1:
        witness["s1"] = "identity class is not a singleton"
    invtab = ctx.inverse_table()
    s2 = True
    for i, x_codes in enumerate(partition.classes):
        img_labels = cls[invtab[x_codes]]
        if img_labels.min() != img_labels.max():
            s2 = False
            witness["s2"] = {"class": i, "inverse_hits": sorted(set(img_labels.tolist()))}
            break
    s3: bool | None = None
    if ctx.size * ctx.size <= s3_cap:
        s3 = True
        for xi, x_codes in enumerate(partition.classes):
            if s3 is False:
                break
            for yi, y_codes in enumerate(partition.classes):
                counts = _pair_counts(ctx, x_codes, y_codes)
                for zi, z_codes in enumerate(partition.classes):
                    vals = counts[z_codes]
                    if vals.min() != vals.max():
                        lo = int(z_codes[int(np.argmin(vals))])
                        hi = int(z_codes[int(np.argmax(vals))])
                        witness["s3"] = {
                            "X": xi,
                            "Y": yi,
                            "Z": zi,
                            "z": lo,
                            "z_prime": hi,
                            "counts": [int(vals.min()), int(vals.max())],
                        }
                        s3 = False
                        break
                if s3 is False:
                    break
    return AxiomReport(s1, s2, s3, witness)


# ---------------------------------------------------------------------------
# the SRing type


@dataclass
class StructureConstantTensor:
    """Sparse structure constants c_{X,Y}^Z of an S-ring."""

    rank: int
    class_sizes: np.ndarray
    constants: dict  # (x_class, y_class, z_class) -> positive int

    def c(self, x: int, y: int, z: int) -> int:
        return self.constants.get((x, y, z), 0)

    def verify_identities(self, inverse_class: np.ndarray) -> None:
        """Row sums and the inverse symmetry; raises on violation."""
        sums = np.zeros((self.rank, self.rank), dtype=np.int64)
        for (x, y, z), c in self.constants.items():
            sums[x, y] += c * int(self.class_sizes[z])
            if c != self.constants.get(
                (int(inverse_class[y]), int(inverse_class[x]), int(inverse_class[z])), 0
            ):
                raise TheoremViolationError(
                    f"c symmetry fails at ({x},{y},{z})"
                )
        expected = self.class_sizes[:, None] * self.class_sizes[None, :]
        if not np.array_equal(sums, expected):
            x, y = (int(v) for v in np.argwhere(sums != expected)[0])
            raise TheoremViolationError(f"sum-rule fails for classes ({x},{y})")


@dataclass
class SRing:
    """A partition of a group domain satisfying S1-S3, with lazy constants."""

    ctx: PowerContext
    partition: Partition
    closure_stats: ClosureStats | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_tensor_cache", None)

    @property
    def rank(self) -> int:
        return self.partition.rank

    @property
    def classes(self) -> list:
        return self.partition.classes

    @property
    def class_of(self) -> np.ndarray:
        return self.partition.class_of

    @property
    def group(self) -> FiniteGroup:
        return self.ctx.base

    def class_containing(self, code: int) -> int:
        return int(self.partition.class_of[code])

    def inverse_class_map(self) -> np.ndarray:
        invtab = self.ctx.inverse_table()
        firsts = np.fromiter(
            (c[0] for c in self.classes), dtype=np.int64, count=self.rank
        )
        return self.partition.class_of[invtab[firsts]].astype(np.int64)

    def is_class_union(self, codes) -> bool:
        codes = np.asarray(codes, dtype=np.int64)
        if codes.size == 0:
            return True
        labels = self.partition.class_of[codes]
        hit = np.bincount(labels, minlength=self.rank)
        sizes = np.fromiter(
            (len(c) for c in self.classes), dtype=np.int64, count=self.rank
        )
        used = hit > 0
        return bool(np.array_equal(hit[used], sizes[used]))

    def is_subgroup(self, codes) -> bool:
        codes = np.asarray(codes, dtype=np.int64)
        if codes.size == 0 or 0 not in codes:
            return False
        member = np.zeros(self.ctx.size, dtype=bool)
        member[codes] = True
        if not member[self.ctx.inverse_table()[codes]].all():
            return False
        chunk = max(1, (1 << 22) // max(1, len(codes)))
        for s in range(0, len(codes), chunk):
            prods = self.ctx.mul_codes(codes[s : s + chunk, None], codes[None, :])
            if not member[prods].all():
                return False
        return True


def structure_constants(ring: SRing) -> StructureConstantTensor:
    """Exact sparse tensor; S3 constancy is asserted during computation."""
    cached = getattr(ring, "_tensor_cache", None)
    if cached is not None:
        return cached
    ctx = ring.ctx
    sizes = np.fromiter((len(c) for c in ring.classes), dtype=np.int64, count=ring.rank)
    constants: dict = {}
    for xi, x_codes in enumerate(ring.classes):
        for yi, y_codes in enumerate(ring.classes):
            counts = _pair_counts(ctx, x_codes, y_codes)
            for zi, z_codes in enumerate(ring.classes):
                vals = counts[z_codes]
                c = int(vals[0])
                if vals.min() != vals.max():
                    raise TheoremViolationError(
                        f"S3 violated for classes X={xi}, Y={yi}, Z={zi}: "
                        f"counts range [{int(vals.min())}, {int(vals.max())}] "
                        f"(witnesses z={int(z_codes[int(np.argmin(vals))])}, "
                        f"z'={int(z_codes[int(np.argmax(vals))])})"
                    )
                if c:
                    constants[(xi, yi, zi)] = c
    tensor = StructureConstantTensor(ring.rank, sizes, constants)
    object.__setattr__(ring, "_tensor_cache", tensor)
    return tensor


# ---------------------------------------------------------------------------
# construction


def schur_closure(
    carrier: FiniteGroup | PowerContext,
    initial: Partition,
    *,
    engine: str = "auto",
    symmetry: str | bool = "auto",
    round_budget: int | None = None,
    time_budget: float | None = None,
) -> SRing:
    """Smallest S-ring over the carrier whose partition refines `initial`."""
    ctx = _as_context(carrier)
    part, stats = schur_refine(
        ctx,
        initial,
        engine=engine,
        symmetry=symmetry,
        round_budget=round_budget,
        time_budget=time_budget,
    )
    return SRing(ctx, part, closure_stats=stats)


def tensor_power_partition(group: FiniteGroup, m: int, cap=None) -> Partition:
    """Basic sets of the m-fold tensor power of the trivial S-ring.

    Classes are indexed by the support pattern { i : x_i = identity }.
    """
    ctx = power(group, m, cap=cap)
    digits = ctx.digits()
    labels = ((digits == 0).astype(np.int64) * (1 << np.arange(m))).sum(axis=1)
    return from_class_of(labels)


def diagonal_codes(ctx: PowerContext) -> np.ndarray:
    """Codes of the constant tuples (g, ..., g)."""
    step = (ctx.size - 1) // (ctx.n - 1) if ctx.n > 1 else 0
    return np.arange(ctx.n, dtype=np.int64) * step


def _am_initial(ctx: PowerContext, coloring: np.ndarray | None) -> Partition:
    digits = ctx.digits()
    m = ctx.arity
    labels = ((digits == 0).astype(np.int64) * (1 << np.arange(m))).sum(axis=1)
    diag = diagonal_codes(ctx)
    if coloring is None:
        labels[diag] = (1 << (m + 1))
    else:
        labels[diag] = (1 << (m + 1)) + coloring[np.arange(ctx.n)]
    labels[0] = (1 << m)  # identity keeps its own label
    return from_class_of(labels)


def compute_Am(
    group: FiniteGroup | ColoredGroup,
    m: int,
    *,
    cap=None,
    engine: str = "auto",
    symmetry: str | bool = "auto",
    round_budget: int | None = None,
    time_budget: float | None = None,
) -> SRing:
    """The smallest S-ring over G^m containing the tensor power of the
    trivial ring and the diagonal (split per color class when colored)."""
    coloring = None
    if isinstance(group, ColoredGroup):
        coloring = group.coloring
        group = group.group
    ctx = power(group, m, cap=cap)
    initial = _am_initial(ctx, coloring)
    part, stats = schur_refine(
        ctx,
        initial,
        engine=engine,
        symmetry=symmetry,
        round_budget=round_budget,
        time_budget=time_budget,
    )
    return SRing(ctx, part, closure_stats=stats)


def tensor_product(a: SRing, b: SRing) -> SRing:
    """S-ring over the product carrier whose classes are the products X x X'."""
    if a.ctx.base == b.ctx.base:
        ctx = power(a.ctx.base, a.ctx.arity + b.ctx.arity)
    elif a.ctx.arity == 1 and b.ctx.arity == 1:
        prod = direct_product([a.ctx.base, b.ctx.base])
        ctx = power(prod, 1)
    else:
        raise ValidationError(
            "tensor product needs same base group or two plain group carriers"
        )
    codes = np.arange(ctx.size, dtype=np.int64)
    lo = codes % a.ctx.size
    hi = codes // a.ctx.size
    labels = a.class_of[lo].astype(np.int64) * b.rank + b.class_of[hi]
    ring = SRing(ctx, from_class_of(labels))
    if ring.rank != a.rank * b.rank:
        raise TheoremViolationError("tensor product rank is not multiplicative")
    return ring


# ---------------------------------------------------------------------------
# quotients and projections


def quotient_sring(ring: SRing, subgroup_codes) -> tuple[SRing, np.ndarray]:
    """Quotient modulo a normal subgroup that is a class union.

    Returns (quotient ring, coset id per domain element); cosets are numbered
    by minimal representative.
    """
    ctx = ring.ctx
    h = np.asarray(sorted(int(c) for c in subgroup_codes), dtype=np.int64)
    if not ring.is_subgroup(h):
        raise ValidationError("quotient modulus is not a subgroup")
    if not ring.is_class_union(h):
        raise ValidationError("quotient modulus is not a union of basic sets")
    member = np.zeros(ctx.size, dtype=bool)
    member[h] = True
    invtab = ctx.inverse_table()
    codes = np.arange(ctx.size, dtype=np.int64)
    for x in range(ctx.size):
        conj = ctx.mul_codes(ctx.mul_codes(np.full(len(h), x), h), invtab[x])
        if not member[conj].all():
            raise ValidationError(f"subgroup is not normal: witness x={x}")
    reps = np.full(ctx.size, np.iinfo(np.int64).max, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, len(h)))
    for s in range(0, ctx.size, chunk):
        cosets = ctx.mul_codes(codes[s : s + chunk, None], h[None, :])
        reps[s : s + chunk] = cosets.min(axis=1)
    uniq = np.unique(reps)
    coset_id = np.searchsorted(uniq, reps)
    nq = len(uniq)
    qmul = coset_id[ctx.mul_codes(uniq[:, None], uniq[None, :])]
    qgroup = group_from_table(qmul, name=f"{ctx.base.name}^{ctx.arity}/H", max_order=None)
    qctx = power(qgroup, 1)
    qlabels = np.full(nq, -1, dtype=np.int64)
    for i, x_codes in enumerate(ring.classes):
        img = np.unique(coset_id[x_codes])
        if (qlabels[img] != -1).any() and not (qlabels[img] == qlabels[img[0]]).all():
            raise TheoremViolationError(
                "projected classes partially overlap; input was not an S-ring"
            )
        qlabels[img] = i
    qpart = from_class_of(qlabels)
    return SRing(qctx, qpart), coset_id


def project_sring(ring: SRing, k: int) -> SRing:
    """Image of the ring under projection to the first k coordinates.

    Equals the quotient modulo G_{K'} with K = {1..k}, re-expressed on G^k.
    """
    ctx = ring.ctx
    if not 1 <= k <= ctx.arity:
        raise ValidationError(f"projection arity {k} out of range 1..{ctx.arity}")
    if k == ctx.arity:
        return ring
    part, merged = project(ring.partition, ctx, range(1, k + 1))
    if merged:
        raise TheoremViolationError(
            "projected classes partially overlap; input was not an S-ring"
        )
    return SRing(power(ctx.base, k), part)


# ---------------------------------------------------------------------------
# n(X, H) and the distinguished subsets


def n_of(ring: SRing, x_class: int, subgroup_codes) -> int:
    """n(X,H): both the structure-constant sum and |X n Hx|, cross-checked."""
    h = np.asarray(sorted(int(c) for c in subgroup_codes), dtype=np.int64)
    if not (ring.is_subgroup(h) and ring.is_class_union(h)):
        raise ValidationError("H is not an A-group of this S-ring")
    tensor = structure_constants(ring)
    h_classes = set(np.unique(ring.class_of[h]).tolist())
    by_sum = sum(
        c
        for (y, x, z), c in tensor.constants.items()
        if x == x_class and z == x_class and y in h_classes
    )
    x_codes = ring.classes[x_class]
    in_x = np.zeros(ring.ctx.size, dtype=bool)
    in_x[x_codes] = True
    direct = in_x[ring.ctx.mul_codes(h[:, None], x_codes[None, :])].sum(axis=0)
    if direct.min() != direct.max():
        raise TheoremViolationError(
            "|X n Hx| is not constant over x in X; S-ring corrupted"
        )
    if int(direct[0]) != by_sum:
        raise TheoremViolationError(
            f"n(X,H) mismatch: sum formula {by_sum}, direct count {int(direct[0])}"
        )
    return by_sum


def subset_G_K(ctx: PowerContext, K: Sequence[int]) -> np.ndarray:
    """G_K = tuples whose coordinates outside K are the identity (K 1-based)."""
    outside = [i for i in range(1, ctx.arity + 1) if i not in set(K)]
    digits = ctx.digits()
    mask = np.ones(ctx.size, dtype=bool)
    for i in outside:
        mask &= digits[:, i - 1] == 0
    return np.nonzero(mask)[0].astype(np.int64)


def subset_D_K(ctx: PowerContext, K: Sequence[int]) -> np.ndarray:
    """D_K = tuples constant on the coordinate set K (K 1-based)."""
    K = sorted(set(int(i) for i in K))
    digits = ctx.digits()
    mask = np.ones(ctx.size, dtype=bool)
    for i in K[1:]:
        mask &= digits[:, i - 1] == digits[:, K[0] - 1]
    return np.nonzero(mask)[0].astype(np.int64)


def subset_X_ijk(ctx: PowerContext, i: int, j: int, k: int) -> np.ndarray:
    """X_{i,j,k} = tuples with x_i * x_j = x_k (1-based indices)."""
    digits = ctx.digits()
    prod = ctx.base.mul[digits[:, i - 1], digits[:, j - 1]]
    return np.nonzero(prod == digits[:, k - 1])[0].astype(np.int64)


@dataclass
class SubsetEntry:
    name: str
    codes: np.ndarray
    is_class_union: bool
    is_subgroup: bool | None


@dataclass
class DistinguishedSubsets:
    """G_K, D_K for all K and X_{i,j,k} for all triples, with verdicts."""

    entries: list

    @property
    def all_class_unions(self) -> bool:
        return all(e.is_class_union for e in self.entries)

    @property
    def all_groups_are_subgroups(self) -> bool:
        return all(e.is_subgroup for e in self.entries if e.is_subgroup is not None)

    def entry(self, name: str) -> SubsetEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def distinguished_subsets(ring: SRing) -> DistinguishedSubsets:
    """Build every G_K, D_K, X_{i,j,k} and report class-union/subgroup flags."""
    ctx = ring.ctx
    m = ctx.arity
    entries = []
    coords = list(range(1, m + 1))
    for bits in range(1 << m):
        K = [i for i in coords if bits & (1 << (i - 1))]
        gk = subset_G_K(ctx, K)
        entries.append(
            SubsetEntry(
                f"G_{{{','.join(map(str, K))}}}",
                gk,
                ring.is_class_union(gk),
                ring.is_subgroup(gk),
            )
        )
        if K:
            dk = subset_D_K(ctx, K)
            entries.append(
                SubsetEntry(
                    f"D_{{{','.join(map(str, K))}}}",
                    dk,
                    ring.is_class_union(dk),
                    ring.is_subgroup(dk),
                )
            )
    for i in coords:
        for j in coords:
            for k in coords:
                x = subset_X_ijk(ctx, i, j, k)
                entries.append(
                    SubsetEntry(f"X_{{{i},{j},{k}}}", x, ring.is_class_union(x), None)
                )
    return DistinguishedSubsets(entries)


# ---------------------------------------------------------------------------
# word maps


def evaluate_word(ctx: PowerContext, word: Sequence[tuple[int, int]], codes) -> np.ndarray:
    """Evaluate a word in letters (index, +-1), 1-based, on tuple codes."""
    codes = np.asarray(codes, dtype=np.int64)
    digits = ctx.digits()
    out = np.zeros(len(codes), dtype=np.int64)
    for letter, exp in word:
        vals = digits[codes, letter - 1].astype(np.int64)
        if exp == -1:
            vals = ctx.base.inv[vals].astype(np.int64)
        elif exp != 1:
            raise ValidationError("word exponents must be +1 or -1")
        out = ctx.base.mul[out, vals].astype(np.int64)
    return out


def word_constancy_check(
    ring: SRing, x_class: int, ell: int, word: Sequence[tuple[int, int]]
) -> bool:
    """Whether x_ell = w(x_1..x_k) holds on the class; raises if not constant."""
    ctx = ring.ctx
    m = ctx.arity
    k = max((letter for letter, _ in word), default=0)
    if k > m - 2:
        raise ValidationError(f"word uses letter {k}, more than m-2 = {m - 2}")
    if not k + 1 <= ell <= m:
        raise ValidationError(f"target coordinate {ell} not in {k + 1}..{m}")
    codes = ring.classes[x_class]
    values = evaluate_word(ctx, word, codes)
    target = ctx.digits()[codes, ell - 1].astype(np.int64)
    holds = values == target
    if holds.all():
        return True
    if not holds.any():
        return False
    yes = int(codes[int(np.argmax(holds))])
    no = int(codes[int(np.argmin(holds))])
    raise TheoremViolationError(
        f"word predicate not constant on class {x_class}: "
        f"holds at {ctx.decode(yes)}, fails at {ctx.decode(no)}"
    )


# ---------------------------------------------------------------------------
# JSON

def sring_to_dict(ring: SRing, include_constants: bool = False) -> dict:
    d = {
        "carrier": {
            "base": group_to_dict(ring.ctx.base),
            "arity": ring.ctx.arity,
        },
        "class_of": [int(c) for c in ring.class_of],
        "rank": ring.rank,
    }
    if include_constants:
        tensor = structure_constants(ring)
        d["structure_constants"] = sorted(
            [x, y, z, c] for (x, y, z), c in tensor.constants.items()
        )
    return d


def sring_from_dict(d: dict) -> SRing:
    base = group_from_dict(d["carrier"]["base"])
    if isinstance(base, ColoredGroup):
        base = base.group
    ctx = power(base, int(d["carrier"]["arity"]))
    part = from_class_of(np.asarray(d["class_of"]), size=ctx.size)
    report = verify_axioms(part, ctx, s3_cap=0)  # S1/S2 on load; S3 is on-use
    if not (report.s1 and report.s2):
        raise ValidationError(f"stored partition violates S-ring axioms: {report.witness}")
    return SRing(ctx, part)


def save_sring(ring: SRing, path: str, include_constants: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(sring_to_dict(ring, include_constants), fh, sort_keys=True,
                  separators=(",", ":"))
        fh.write("\n")


def load_sring(path: str) -> SRing:
    with open(path) as fh:
        return sring_from_dict(json.load(fh))
