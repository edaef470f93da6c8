"""Finite groups as validated Cayley tables, direct powers, and colorings.

Element ids are 0-based and the identity is always element 0; every family
constructor renumbers to enforce this.  Tuples over a direct power G^m are
packed as mixed-radix integers with coordinate 1 the least significant digit.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceededError, ValidationError

DEFAULT_DOMAIN_CAP = 1 << 20
MAX_GROUP_ORDER = 256


def domain_cap(override: int | None = None) -> int:
    """Return the active tuple-domain cap (env SCHURPOWER_CAP or default)."""
    if override is not None:
        return int(override)
    env = os.environ.get("SCHURPOWER_CAP")
    if env is not None:
        return int(env)
    return DEFAULT_DOMAIN_CAP


# ---------------------------------------------------------------------------
# FiniteGroup


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group given by its full multiplication table.

    Fields:
        order: number of elements n.
        mul:   n x n int array, mul[x, y] = x*y.
        inv:   length-n int array of inverses.
        name:  optional display name (not part of equality).
    """

    order: int
    mul: np.ndarray
    inv: np.ndarray
    name: str = field(default="", compare=False)

    identity: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mul", np.ascontiguousarray(self.mul, dtype=np.int32))
        object.__setattr__(self, "inv", np.ascontiguousarray(self.inv, dtype=np.int32))
        self.mul.setflags(write=False)
        self.inv.setflags(write=False)

    def __eq__(self, other):
        return (
            isinstance(other, FiniteGroup)
            and self.order == other.order
            and np.array_equal(self.mul, other.mul)
        )

    def __hash__(self):
        return hash((self.order, self.mul.tobytes()))

    def elements(self) -> range:
        return range(self.order)

    def element_order(self, x: int) -> int:
        k, y = 1, x
        while y != 0:
            y = int(self.mul[y, x])
            k += 1
        return k

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def conjugate(self, g: int, x: int) -> int:
        """g * x * g^-1."""
        return int(self.mul[self.mul[g, x], self.inv[g]])

    def subgroup_closure(self, gens: Iterable[int]) -> frozenset[int]:
        """Elements of the subgroup generated by `gens`."""
        seen = {0}
        frontier = [0]
        gens = [int(g) for g in gens]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = int(self.mul[x, g])
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return frozenset(seen)

    def renamed(self, name: str) -> "FiniteGroup":
        return FiniteGroup(self.order, self.mul, self.inv, name=name)


def _validate_table(mul: np.ndarray) -> np.ndarray:
    """Check the FiniteGroup invariants on a raw table, return the inv array.

    Raises ValidationError naming the first violated axiom with a witness.
    Associativity is exhaustive for n <= 256 and sampled (1e5 seeded triples)
    above; the standard families never exceed 256, larger tables only arise
    as internal quotient carriers.
    """
    if mul.ndim != 2 or mul.shape[0] != mul.shape[1]:
        raise ValidationError(f"mul table must be square, got shape {mul.shape}")
    n = mul.shape[0]
    if n < 1:
        raise ValidationError("group order must be positive")
    if mul.min() < 0 or mul.max() >= n:
        bad = np.argwhere((mul < 0) | (mul >= n))[0]
        raise ValidationError(
            f"entry out of range: mul[{bad[0]},{bad[1]}] = {mul[bad[0], bad[1]]} not in [0,{n})"
        )
    ar = np.arange(n)
    if not np.array_equal(mul[0], ar):
        x = int(np.nonzero(mul[0] != ar)[0][0])
        raise ValidationError(f"identity axiom fails: mul[0,{x}] = {mul[0, x]} != {x}")
    if not np.array_equal(mul[:, 0], ar):
        x = int(np.nonzero(mul[:, 0] != ar)[0][0])
        raise ValidationError(f"identity axiom fails: mul[{x},0] = {mul[x, 0]} != {x}")
    row_sorted = np.sort(mul, axis=1)
    if not np.array_equal(row_sorted, np.broadcast_to(ar, (n, n))):
        x = int(np.nonzero((row_sorted != ar).any(axis=1))[0][0])
        raise ValidationError(f"row {x} of mul is not a permutation of [0,{n})")
    col_sorted = np.sort(mul, axis=0)
    if not np.array_equal(col_sorted, np.broadcast_to(ar[:, None], (n, n))):
        y = int(np.nonzero((col_sorted != ar[:, None]).any(axis=0))[0][0])
        raise ValidationError(f"column {y} of mul is not a permutation of [0,{n})")
    if n <= MAX_GROUP_ORDER:
        # exhaustive associativity, O(n^3) <= ~1.7e7 checks
        left = mul[mul, :]
        right = mul[:, mul]
        if not np.array_equal(left, right):
            a, b, c = (int(v) for v in np.argwhere(left != right)[0])
            raise ValidationError(
                f"associativity fails at ({a},{b},{c}): "
                f"({a}*{b})*{c} = {left[a, b, c]} but {a}*({b}*{c}) = {right[a, b, c]}"
            )
    else:
        rng = np.random.default_rng(0)
        a, b, c = rng.integers(0, n, size=(3, 100_000))
        bad = np.nonzero(mul[mul[a, b], c] != mul[a, mul[b, c]])[0]
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"associativity fails at ({a[i]},{b[i]},{c[i]})"
            )
    inv = np.empty(n, dtype=np.int32)
    rows, cols = np.nonzero(mul == 0)
    inv[rows] = cols
    if not (np.array_equal(mul[ar, inv], np.zeros(n, int)) and np.array_equal(mul[inv, ar], np.zeros(n, int))):
        x = int(np.nonzero(mul[inv, ar] != 0)[0][0])
        raise ValidationError(f"inverse axiom fails for element {x}")
    return inv


def group_from_table(
    mul, name: str = "", max_order: int | None = MAX_GROUP_ORDER
) -> FiniteGroup:
    mul = np.asarray(mul, dtype=np.int32)
    if max_order is not None and mul.shape[0] > max_order:
        raise ValidationError(f"order bound exceeded: {mul.shape[0]} > {max_order}")
    inv = _validate_table(mul)
    return FiniteGroup(mul.shape[0], mul, inv, name=name)


# ---------------------------------------------------------------------------
# standard families


def cyclic_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValidationError("cyclic: order must be >= 1")
    ar = np.arange(n)
    return group_from_table((ar[:, None] + ar[None, :]) % n, name=f"Z{n}")


def dihedral_group(k: int) -> FiniteGroup:
    """Dihedral group of order 2k: rotations 0..k-1 then reflections k..2k-1."""
    if k < 1:
        raise ValidationError("dihedral: k must be >= 1")
    n = 2 * k
    mul = np.empty((n, n), dtype=np.int32)
    for a in range(n):
        ia, ra = a % k, a >= k
        for b in range(n):
            ib, rb = b % k, b >= k
            if not ra and not rb:
                mul[a, b] = (ia + ib) % k
            elif not ra and rb:
                mul[a, b] = k + (ia + ib) % k
            elif ra and not rb:
                mul[a, b] = k + (ia - ib) % k
            else:
                mul[a, b] = (ia - ib) % k
    return group_from_table(mul, name=f"D{k}")


_QUAT_AXIS = np.array(
    [  # axis multiplication for 1,i,j,k: (result axis, sign)
        [(0, 1), (1, 1), (2, 1), (3, 1)],
        [(1, 1), (0, -1), (3, 1), (2, -1)],
        [(2, 1), (3, -1), (0, -1), (1, 1)],
        [(3, 1), (2, 1), (1, -1), (0, -1)],
    ],
    dtype=object,
)


def quaternion_group() -> FiniteGroup:
    """Q8 with numbering 0:1, 1:-1, 2:i, 3:-i, 4:j, 5:-j, 6:k, 7:-k."""
    mul = np.empty((8, 8), dtype=np.int32)
    for a in range(8):
        ax_a, sg_a = a // 2, -1 if a % 2 else 1
        for b in range(8):
            ax_b, sg_b = b // 2, -1 if b % 2 else 1
            ax, sg = _QUAT_AXIS[ax_a][ax_b]
            sg = sg * sg_a * sg_b
            mul[a, b] = ax * 2 + (0 if sg > 0 else 1)
    return group_from_table(mul, name="Q8")


def symmetric_group(degree: int) -> FiniteGroup:
    """S_degree with elements numbered by lexicographic rank of the permutation."""
    if not 1 <= degree <= 5:
        raise ValidationError("symmetric: degree must be in 1..5")
    perms = list(itertools.permutations(range(degree)))
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    mul = np.empty((n, n), dtype=np.int32)
    for a, p in enumerate(perms):
        for b, q in enumerate(perms):
            mul[a, b] = index[tuple(p[q[i]] for i in range(degree))]
    return group_from_table(mul, name=f"S{degree}")


def direct_product(factors: Sequence[FiniteGroup], name: str = "") -> FiniteGroup:
    """Direct product; element codes are mixed-radix, first factor least significant."""
    if not factors:
        raise ValidationError("direct_product: need at least one factor")
    orders = [g.order for g in factors]
    n = int(np.prod(orders))
    if n > MAX_GROUP_ORDER:
        raise ValidationError(f"order bound exceeded: {n} > {MAX_GROUP_ORDER}")
    mul = np.zeros((n, n), dtype=np.int64)
    a = np.arange(n)
    weight = 1
    for g in factors:
        da = (a // weight) % g.order
        mul += weight * g.mul[np.ix_(da, da)]
        weight *= g.order
    if not name:
        name = " x ".join(g.name or f"G{g.order}" for g in factors)
    return group_from_table(mul, name=name)


def elementary_abelian_group(p: int, k: int) -> FiniteGroup:
    if p < 2 or any(p % q == 0 for q in range(2, p)):
        raise ValidationError(f"elementary_abelian: p = {p} is not prime")
    if k < 1:
        raise ValidationError("elementary_abelian: k must be >= 1")
    g = direct_product([cyclic_group(p)] * k)
    return g.renamed(f"Z{p}^{k}")


def make_group(family: str, params=None) -> FiniteGroup:
    """Build a standard group; see the family constructors for numbering."""
    if family == "cyclic":
        return cyclic_group(int(params))
    if family == "dihedral":
        return dihedral_group(int(params))
    if family == "quaternion8":
        return quaternion_group()
    if family == "symmetric":
        return symmetric_group(int(params))
    if family == "elementary_abelian":
        p, k = params
        return elementary_abelian_group(int(p), int(k))
    if family == "direct_product":
        return direct_product(list(params))
    if family == "from_table":
        return group_from_table(params)
    raise ValidationError(f"unknown group family {family!r}")


# ---------------------------------------------------------------------------
# colorings


@dataclass(frozen=True)
class ColoredGroup:
    """A group whose elements carry colors (contiguous ids starting at 0)."""

    group: FiniteGroup
    coloring: np.ndarray

    def __post_init__(self):
        col = np.ascontiguousarray(self.coloring, dtype=np.int32)
        if col.shape != (self.group.order,):
            raise ValidationError(
                f"coloring length {col.shape} does not match group order {self.group.order}"
            )
        c = int(col.max()) + 1 if col.size else 0
        if col.min() < 0 or not np.array_equal(np.unique(col), np.arange(c)):
            raise ValidationError("color ids must be contiguous integers starting at 0")
        object.__setattr__(self, "coloring", col)
        self.coloring.setflags(write=False)

    @property
    def num_colors(self) -> int:
        return int(self.coloring.max()) + 1

    def color_classes(self) -> list[np.ndarray]:
        return [np.nonzero(self.coloring == c)[0] for c in range(self.num_colors)]


def monochrome(group: FiniteGroup) -> ColoredGroup:
    return ColoredGroup(group, np.zeros(group.order, dtype=np.int32))


def as_colored(g: FiniteGroup | ColoredGroup) -> ColoredGroup:
    return g if isinstance(g, ColoredGroup) else monochrome(g)


def individualize(cg: ColoredGroup, x: int) -> ColoredGroup:
    """Recolor so that x gets a fresh color; other classes are preserved."""
    n = cg.group.order
    if not 0 <= x < n:
        raise ValidationError(f"element {x} not in [0,{n})")
    raw = cg.coloring.astype(np.int64).copy()
    raw[x] = raw.max() + 1
    # renumber contiguously, original color order first, the fresh color last
    _, contiguous = np.unique(raw, return_inverse=True)
    return ColoredGroup(cg.group, contiguous.astype(np.int32))


def product_coloring(cg: ColoredGroup, cg2: ColoredGroup) -> ColoredGroup:
    """Coloring of G x G' keeping the axes' colors and a fresh color elsewhere.

    The two inputs' color-id spaces are kept disjoint: G keeps its ids,
    G' ids are shifted past them, and every remaining pair (including the
    identity) gets the fresh color after both.
    """
    g, g2 = cg.group, cg2.group
    prod = direct_product([g, g2])
    c1 = cg.num_colors
    c2 = cg2.num_colors
    eps = c1 + c2
    col = np.full(prod.order, eps, dtype=np.int32)
    a = np.arange(prod.order)
    xs, ys = a % g.order, a // g.order
    on_g = (ys == 0) & (xs != 0)
    on_g2 = (xs == 0) & (ys != 0)
    col[on_g] = cg.coloring[xs[on_g]]
    col[on_g2] = c1 + cg2.coloring[ys[on_g2]]
    # colors present may not be contiguous (e.g. |G| = 1); compress
    _, contiguous = np.unique(col, return_inverse=True)
    return ColoredGroup(prod, contiguous.astype(np.int32))


# ---------------------------------------------------------------------------
# direct powers


@dataclass(frozen=True)
class PowerContext:
    """The domain G^m with a mixed-radix tuple codec.

    Coordinate 1 is the least significant digit, so pr_{1..k} of a code is
    simply code % n^k.
    """

    base: FiniteGroup
    arity: int
    size: int

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    @property
    def n(self) -> int:
        return self.base.order

    @property
    def m(self) -> int:
        return self.arity

    def encode(self, tup: Sequence[int]) -> int:
        if len(tup) != self.arity:
            raise ValidationError(f"tuple length {len(tup)} != arity {self.arity}")
        code, w = 0, 1
        for x in tup:
            if not 0 <= x < self.n:
                raise ValidationError(f"coordinate {x} not in [0,{self.n})")
            code += int(x) * w
            w *= self.n
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        if not 0 <= code < self.size:
            raise ValidationError(f"code {code} not in [0,{self.size})")
        out = []
        for _ in range(self.arity):
            out.append(code % self.n)
            code //= self.n
        return tuple(out)

    def digits(self) -> np.ndarray:
        """(N, m) array of all tuple digits; cached."""
        cache = self._cache
        if "digits" not in cache:
            a = np.arange(self.size, dtype=np.int64)
            cols = []
            for i in range(self.arity):
                cols.append(((a // self.n**i) % self.n).astype(np.int32))
            cache["digits"] = np.stack(cols, axis=1)
            cache["digits"].setflags(write=False)
        return cache["digits"]

    def weights(self) -> np.ndarray:
        return self.n ** np.arange(self.arity, dtype=np.int64)

    def mul_codes(self, a, b) -> np.ndarray:
        """Componentwise product of tuple codes (arrays broadcast)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for i in range(self.arity):
            da = (a // self.n**i) % self.n
            db = (b // self.n**i) % self.n
            out += self.base.mul[da, db].astype(np.int64) * self.n**i
        return out

    def inv_codes(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        for i in range(self.arity):
            da = (a // self.n**i) % self.n
            out += self.base.inv[da].astype(np.int64) * self.n**i
        return out

    def inverse_table(self) -> np.ndarray:
        """inv code for every code; cached."""
        cache = self._cache
        if "invtab" not in cache:
            cache["invtab"] = self.inv_codes(np.arange(self.size))
            cache["invtab"].setflags(write=False)
        return cache["invtab"]

    def permute_coordinates(self, codes, sigma: np.ndarray) -> np.ndarray:
        """Apply a coordinate map: out_i = x_{sigma[i]} (sigma need not be injective)."""
        codes = np.asarray(codes, dtype=np.int64)
        digits = self.digits()
        return (
            digits[codes][..., np.asarray(sigma, dtype=np.int64)]
            .astype(np.int64)
            .dot(self.weights())
        )

    def project_codes(self, codes, K: Sequence[int]) -> np.ndarray:
        """pr_K of codes; K is a sorted 1-based coordinate set."""
        codes = np.asarray(codes, dtype=np.int64)
        out = np.zeros(codes.shape, dtype=np.int64)
        for pos, i in enumerate(K):
            out += ((codes // self.n ** (i - 1)) % self.n) * self.n**pos
        return out

    @property
    def identity(self) -> int:
        return 0


def power(group: FiniteGroup, m: int, cap: int | None = None) -> PowerContext:
    """Build the domain G^m, guarded by the tuple-domain cap."""
    if m < 1:
        raise ValidationError("arity must be >= 1")
    n = group.order
    size = n**m
    cap_val = domain_cap(cap)
    if size > cap_val:
        raise CapExceededError(f"power(n={n}, m={m})", size, cap_val)
    return PowerContext(group, m, size)


# ---------------------------------------------------------------------------
# tuple profiles


@dataclass(frozen=True)
class TupleProfile:
    """Coordinate-equality pattern and multiplication triples of one tuple."""

    rho: tuple[int, ...]
    mu: tuple[tuple[int, int, int], ...]


def rho_of(tup: Sequence[int]) -> tuple[int, ...]:
    """Equality pattern of the coordinates, normalized by first occurrence."""
    labels: dict[int, int] = {}
    out = []
    for x in tup:
        if x not in labels:
            labels[x] = len(labels)
        out.append(labels[x])
    return tuple(out)


def mu_of(group: FiniteGroup, tup: Sequence[int]) -> tuple[tuple[int, int, int], ...]:
    """Sorted 1-based triples (i,j,k) with x_i * x_j = x_k."""
    m = len(tup)
    out = []
    for i in range(m):
        for j in range(m):
            prod = int(group.mul[tup[i], tup[j]])
            for k in range(m):
                if tup[k] == prod:
                    out.append((i + 1, j + 1, k + 1))
    return tuple(out)


def tuple_profile(ctx: PowerContext, code: int) -> TupleProfile:
    tup = ctx.decode(code)
    return TupleProfile(rho_of(tup), mu_of(ctx.base, tup))


# ---------------------------------------------------------------------------
# generation


def minimal_generating_number(group: FiniteGroup) -> int:
    """Least d such that some d-tuple generates the group (0 for trivial)."""
    n = group.order
    if n == 1:
        return 0
    full = frozenset(range(n))

    def extends(current: frozenset[int], depth: int, start: int) -> bool:
        if depth == 0:
            return current == full
        for g in range(start, n):
            if g in current:
                continue
            nxt = group.subgroup_closure(current | {g})
            if len(nxt) == n and depth == 1:
                return True
            if depth > 1 and extends(nxt, depth - 1, g + 1):
                return True
        return False

    d = 1
    while True:
        if extends(frozenset({0}), d, 1):
            return d
        d += 1


# ---------------------------------------------------------------------------
# JSON format


def group_to_dict(g: FiniteGroup | ColoredGroup) -> dict:
    if isinstance(g, ColoredGroup):
        d = group_to_dict(g.group)
        d["coloring"] = [int(c) for c in g.coloring]
        return d
    return {"order": g.order, "mul": [[int(v) for v in row] for row in g.mul]}


def group_from_dict(d: dict) -> FiniteGroup | ColoredGroup:
    if not isinstance(d, dict) or "order" not in d or "mul" not in d:
        raise ValidationError('group JSON must have "order" and "mul" keys')
    mul = np.asarray(d["mul"], dtype=np.int64)
    if mul.shape != (d["order"], d["order"]):
        raise ValidationError(
            f'"mul" shape {mul.shape} does not match "order" {d["order"]}'
        )
    g = group_from_table(mul, name=str(d.get("name", "")))
    if "coloring" in d and d["coloring"] is not None:
        return ColoredGroup(g, np.asarray(d["coloring"]))
    return g


def save_group(g: FiniteGroup | ColoredGroup, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(group_to_dict(g), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_group(path: str) -> FiniteGroup | ColoredGroup:
    with open(path) as fh:
        return group_from_dict(json.load(fh))
