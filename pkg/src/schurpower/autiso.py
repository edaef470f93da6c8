"""Automorphism groups, orbit S-rings, holomorph generators, and isomorphism
searches between S-rings and between colored groups.

All searches are deterministic backtracking state machines with node-count
budgets: candidate images are ordered by (color, element order, product-order
spectrum) and smallest id first, so returned witnesses are reproducible.
Budget exhaustion raises; it is never reported as "no witness".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, TheoremViolationError, ValidationError
from .groups import (
    ColoredGroup,
    FiniteGroup,
    PowerContext,
    as_colored,
    direct_product,
    individualize,
    power,
)
from .partitions import from_class_of
from .srings import SRing, structure_constants, verify_axioms

DEFAULT_NODE_BUDGET = 10_000_000
_AUT_ORDER_LIMIT = 64


class _Budget:
    def __init__(self, nodes: int):
        self.left = nodes

    def spend(self, k: int = 1):
        self.left -= k
        if self.left < 0:
            raise BudgetExceededError("search node budget exhausted")


# ---------------------------------------------------------------------------
# permutation groups


@dataclass
class PermutationGroup:
    """A small permutation group stored by generators, enumerated on demand."""

    degree: int
    generators: list

    def __post_init__(self):
        self._elements: list | None = None

    def elements(self) -> list:
        if self._elements is None:
            identity = np.arange(self.degree, dtype=np.int64)
            seen = {identity.tobytes(): identity}
            frontier = [identity]
            while frontier:
                nxt = []
                for p in frontier:
                    for g in self.generators:
                        q = p[g]
                        key = q.tobytes()
                        if key not in seen:
                            seen[key] = q
                            nxt.append(q)
                frontier = nxt
            self._elements = sorted(seen.values(), key=lambda p: p.tolist())
        return self._elements

    @property
    def order(self) -> int:
        return len(self.elements())

    def orbits(self) -> list:
        label = np.arange(self.degree, dtype=np.int64)
        changed = True
        while changed:
            changed = False
            for g in self.generators:
                merged = np.minimum(label, label[g])
                # propagate to fixpoint per generator pass
                while not np.array_equal(merged, label):
                    label = merged
                    merged = np.minimum(label, label[g])
                    changed = True
        # canonical orbit ids
        return [np.nonzero(label == v)[0] for v in np.unique(label)]

    def same_orbit(self, a: int, b: int) -> bool:
        for orbit in self.orbits():
            hit = np.isin([a, b], orbit)
            if hit.all():
                return True
            if hit.any():
                return False
        return False


def reduce_generators(perms: list, degree: int) -> list:
    """Greedy generating subset of an explicit element list."""
    gens: list = []
    closure = {np.arange(degree, dtype=np.int64).tobytes()}
    for p in perms:
        if p.tobytes() in closure:
            continue
        gens.append(p)
        group = PermutationGroup(degree, gens)
        closure = {q.tobytes() for q in group.elements()}
    return gens


# ---------------------------------------------------------------------------
# automorphisms of (colored) groups


def _element_invariants(cg: ColoredGroup) -> list:
    """Per element: (color, order, sorted spectrum of product orders)."""
    g = cg.group
    n = g.order
    orders = np.array([g.element_order(x) for x in range(n)])
    out = []
    for x in range(n):
        spec = tuple(sorted(zip(orders[g.mul[x]].tolist(), cg.coloring[g.mul[x]].tolist())))
        out.append((int(cg.coloring[x]), int(orders[x]), spec))
    return out


def _greedy_generating_sequence(g: FiniteGroup, first: int | None = None) -> list:
    gens: list = [] if first is None else [int(first)]
    closure = g.subgroup_closure(gens) if gens else frozenset({0})
    while len(closure) < g.order:
        nxt = min(x for x in range(g.order) if x not in closure)
        gens.append(nxt)
        closure = g.subgroup_closure(gens)
    return gens


def _extend_hom(
    src: FiniteGroup,
    dst: FiniteGroup,
    gens: list,
    images: list,
    require_full: bool = True,
) -> np.ndarray | None:
    """Map determined by generator images, or None on any inconsistency.

    Propagates phi(x * g) = phi(x) * phi(g) by BFS from the identity over the
    subgroup the assigned generators span; unreached elements stay -1 unless
    require_full.  The caller still has to validate the final result on all
    generator pairs.
    """
    phi = np.full(src.order, -1, dtype=np.int64)
    phi[0] = 0
    frontier = [0]
    while frontier:
        x = frontier.pop()
        for g, img in zip(gens, images):
            y = int(src.mul[x, g])
            val = int(dst.mul[phi[x], img])
            if phi[y] == -1:
                phi[y] = val
                frontier.append(y)
            elif phi[y] != val:
                return None
    if require_full and (phi == -1).any():
        return None
    return phi


def _is_hom_on_generators(
    src: FiniteGroup, dst: FiniteGroup, gens: list, phi: np.ndarray
) -> bool:
    for g in gens:
        if not np.array_equal(phi[src.mul[:, g]], dst.mul[phi, phi[g]]):
            return False
    return True


def _search_isos(
    cga: ColoredGroup,
    cgb: ColoredGroup,
    budget: _Budget,
    find_all: bool,
    first_gen_filter=None,
    first_generator: int | None = None,
) -> list:
    """All (or the first) color-preserving isomorphisms G -> G'.

    first_generator overrides the start of the greedy generating sequence
    and first_gen_filter restricts its candidate images; the axis-swap
    search of via_aut and the pinned orbit tests of via_cyc1 use these.
    """
    ga, gb = cga.group, cgb.group
    if ga.order != gb.order:
        return []
    if sorted(_element_invariants(cga)) != sorted(_element_invariants(cgb)):
        return []
    if ga.order == 1:
        return [np.zeros(1, dtype=np.int64)]
    gens = _greedy_generating_sequence(ga, first=first_generator)
    inv_a = _element_invariants(cga)
    inv_b = _element_invariants(cgb)
    candidates = [
        [y for y in range(gb.order) if inv_b[y] == inv_a[g]] for g in gens
    ]
    if first_gen_filter is not None:
        candidates[0] = [y for y in candidates[0] if first_gen_filter(y)]
    found: list = []

    def backtrack(i: int, images: list):
        if i == len(gens):
            phi = _extend_hom(ga, gb, gens, images)
            if phi is None:
                return False
            if len(set(phi.tolist())) != ga.order:
                return False
            if not _is_hom_on_generators(ga, gb, gens, phi):
                return False
            if not np.array_equal(cgb.coloring[phi], cga.coloring):
                return False
            found.append(phi)
            return not find_all
        for y in candidates[i]:
            budget.spend()
            images.append(y)
            partial = _extend_hom(ga, gb, gens[: i + 1], images, require_full=False)
            # the partial map must stay injective and color-preserving on the
            # subgroup the assigned generators span
            if partial is not None:
                mask = partial != -1
                assigned = partial[mask]
                if len(set(assigned.tolist())) != len(assigned) or not np.array_equal(
                    cgb.coloring[assigned], cga.coloring[mask]
                ):
                    partial = None
            if partial is not None and backtrack(i + 1, images):
                images.pop()
                return True
            images.pop()
        return False

    backtrack(0, [])
    return found


def automorphism_group(
    group: FiniteGroup | ColoredGroup,
    max_order: int = _AUT_ORDER_LIMIT,
    budget: int = DEFAULT_NODE_BUDGET,
) -> PermutationGroup:
    """All color-preserving automorphisms, found by generator-image backtracking."""
    cg = as_colored(group)
    if cg.group.order > max_order:
        raise ValidationError(
            f"automorphism enumeration capped at order {max_order}, got {cg.group.order}"
        )
    perms = _search_isos(cg, cg, _Budget(budget), find_all=True)
    if len(perms) <= 256:
        gens = reduce_generators(perms, cg.group.order)
    else:
        gens = perms  # the full element list is a valid generating set
    pg = PermutationGroup(cg.group.order, gens)
    pg._elements = sorted(perms, key=lambda p: p.tolist())
    return pg


def iso_search_direct(
    cga: ColoredGroup, cgb: ColoredGroup, budget: int = DEFAULT_NODE_BUDGET
) -> np.ndarray | None:
    hits = _search_isos(cga, cgb, _Budget(budget), find_all=False)
    return hits[0] if hits else None


def verify_group_iso(cga: ColoredGroup, cgb: ColoredGroup, phi: np.ndarray) -> bool:
    ga, gb = cga.group, cgb.group
    if sorted(phi.tolist()) != list(range(gb.order)):
        return False
    if not np.array_equal(phi[ga.mul], gb.mul[np.ix_(phi, phi)]):
        return False
    return bool(np.array_equal(cgb.coloring[phi], cga.coloring))


# ---------------------------------------------------------------------------
# cyc_m and hol_m


def _componentwise_perm(ctx: PowerContext, perm: np.ndarray) -> np.ndarray:
    """Code permutation of G^m induced by a permutation of G per coordinate."""
    codes = np.arange(ctx.size, dtype=np.int64)
    out = np.zeros(ctx.size, dtype=np.int64)
    for i in range(ctx.arity):
        out += perm[(codes // ctx.n**i) % ctx.n].astype(np.int64) * ctx.n**i
    return out


def cyc_m(
    group: FiniteGroup | ColoredGroup,
    m: int,
    cap=None,
    verify_cap: int = 1 << 12,
) -> SRing:
    """Orbit S-ring of Aut(G) acting componentwise on G^m.

    Schurian by construction; S1-S3 are re-verified exhaustively whenever the
    domain is at most verify_cap.
    """
    cg = as_colored(group)
    ctx = power(cg.group, m, cap=cap)
    aut = automorphism_group(cg)
    label = np.arange(ctx.size, dtype=np.int64)
    tables = [_componentwise_perm(ctx, p) for p in aut.generators]
    changed = True
    while changed:
        changed = False
        for tab in tables:
            merged = np.minimum(label, label[tab])
            while not np.array_equal(merged, label):
                label = merged
                merged = np.minimum(label, label[tab])
                changed = True
    ring = SRing(ctx, from_class_of(label))
    if ctx.size <= verify_cap:
        report = verify_axioms(ring.partition, ctx)
        if not (report.s1 and report.s2 and report.s3 is not False):
            raise TheoremViolationError(
                f"orbit partition failed S-ring axioms: {report.witness}"
            )
    return ring


def hol_m_generators(
    group: FiniteGroup, m: int, cap=None, assert_order: bool = False
) -> PermutationGroup:
    """Right multiplications of G^m plus componentwise Aut(G), as generators.

    With assert_order the group is enumerated and its order checked against
    n^m * |Aut(G)| via orbit-stabilizer at the identity tuple.
    """
    ctx = power(group, m, cap=cap)
    gens: list = []
    codes = np.arange(ctx.size, dtype=np.int64)
    for g in _greedy_generating_sequence(group) or [0]:
        for i in range(m):
            shift = int(g) * ctx.n**i
            gens.append(ctx.mul_codes(codes, np.full(ctx.size, shift)))
    aut = automorphism_group(group)
    for p in aut.generators:
        gens.append(_componentwise_perm(ctx, p))
    pg = PermutationGroup(ctx.size, gens)
    if assert_order:
        elements = pg.elements()
        stab = [p for p in elements if p[0] == 0]
        orbit0 = {int(p[0]) for p in elements}
        if len(orbit0) != ctx.size or len(stab) * ctx.size != len(elements):
            raise TheoremViolationError("orbit-stabilizer bookkeeping failed")
        if len(elements) != ctx.size * aut.order:
            raise TheoremViolationError(
                f"|hol_m| = {len(elements)} != n^m * |Aut| = {ctx.size * aut.order}"
            )
    return pg


def is_sring_automorphism(f: np.ndarray, ring: SRing) -> bool:
    """Check (Xy)^f = X y^f for every basic set X and every y."""
    ctx = ring.ctx
    f = np.asarray(f, dtype=np.int64)
    if sorted(f.tolist()) != list(range(ctx.size)):
        raise ValidationError("f is not a permutation of the carrier")
    allc = np.arange(ctx.size, dtype=np.int64)
    for x_codes in ring.classes:
        translates = ctx.mul_codes(x_codes[:, None], allc[None, :])
        lhs = np.sort(f[translates], axis=0)
        rhs = np.sort(ctx.mul_codes(x_codes[:, None], f[None, :]), axis=0)
        if not np.array_equal(lhs, rhs):
            return False
    return True


# ---------------------------------------------------------------------------
# algebraic isomorphisms of S-rings


@dataclass
class ClassBijection:
    """A structure-constant-preserving bijection of basic sets."""

    source: SRing
    target: SRing
    mapping: np.ndarray  # class id -> class id

    def verify(self) -> None:
        a, b = self.source, self.target
        phi = self.mapping
        if sorted(phi.tolist()) != list(range(b.rank)):
            raise ValidationError("class map is not a bijection")
        if phi[a.class_of[0]] != b.class_of[0]:
            raise TheoremViolationError("identity class not preserved")
        sizes_a = [len(c) for c in a.classes]
        sizes_b = [len(c) for c in b.classes]
        for x in range(a.rank):
            if sizes_a[x] != sizes_b[int(phi[x])]:
                raise TheoremViolationError(f"class {x} size not preserved")
        inv_a, inv_b = a.inverse_class_map(), b.inverse_class_map()
        for x in range(a.rank):
            if int(phi[inv_a[x]]) != int(inv_b[phi[x]]):
                raise TheoremViolationError(f"inverse pairing broken at class {x}")
        ta, tb = structure_constants(a), structure_constants(b)
        mapped = {
            (int(phi[x]), int(phi[y]), int(phi[z])): c
            for (x, y, z), c in ta.constants.items()
        }
        if mapped != tb.constants:
            raise TheoremViolationError("structure constants not preserved")


def _class_color_refinement(a: SRing, b: SRing, budget: _Budget):
    """Joint WL-style refinement of class colors driven by the two tensors.

    Returns per-ring color arrays in a shared id space, or None when the
    color multisets diverge (then no algebraic isomorphism exists).
    """
    ta, tb = structure_constants(a), structure_constants(b)
    inv_a, inv_b = a.inverse_class_map(), b.inverse_class_map()

    def initial(ring, inv_map):
        sizes = [len(c) for c in ring.classes]
        return [
            (sizes[x], x == ring.class_of[0], sizes[int(inv_map[x])] == sizes[x] and int(inv_map[x]) == x)
            for x in range(ring.rank)
        ]

    sig_a = initial(a, inv_a)
    sig_b = initial(b, inv_b)
    while True:
        budget.spend(len(sig_a) + len(sig_b))
        palette = sorted(set(sig_a) | set(sig_b))
        index = {s: i for i, s in enumerate(palette)}
        col_a = [index[s] for s in sig_a]
        col_b = [index[s] for s in sig_b]
        if sorted(col_a) != sorted(col_b):
            return None
        def step(ring, tensor, cols, inv_map):
            by_class = [[] for _ in range(ring.rank)]
            for (x, y, z), c in tensor.constants.items():
                by_class[z].append((cols[x], cols[y], c))
            return [
                (cols[x], cols[int(inv_map[x])], tuple(sorted(by_class[x])))
                for x in range(ring.rank)
            ]
        nsig_a = step(a, ta, col_a, inv_a)
        nsig_b = step(b, tb, col_b, inv_b)
        stable = len(set(nsig_a)) == len(set(sig_a)) and len(set(nsig_b)) == len(
            set(sig_b)
        )
        sig_a, sig_b = nsig_a, nsig_b
        if stable:
            palette = sorted(set(sig_a) | set(sig_b))
            index = {s: i for i, s in enumerate(palette)}
            col_a = [index[s] for s in sig_a]
            col_b = [index[s] for s in sig_b]
            if sorted(col_a) != sorted(col_b):
                return None
            return col_a, col_b


def _algebraic_iso_iter(a: SRing, b: SRing, genuine, bud: _Budget):
    """Yield structure-constant-preserving class bijections, lazily."""
    if a.rank != b.rank or a.ctx.size != b.ctx.size:
        return
    colors = _class_color_refinement(a, b, bud)
    if colors is None:
        return
    col_a, col_b = colors
    candidates = [
        [y for y in range(b.rank) if col_b[y] == col_a[x]] for x in range(a.rank)
    ]
    if genuine is not None:
        subs_a, subs_b = genuine
        if len(subs_a) != len(subs_b):
            raise ValidationError("genuine subset lists differ in length")
        for sa, sb in zip(subs_a, subs_b):
            in_a = set(np.unique(a.class_of[np.asarray(sa, dtype=np.int64)]).tolist())
            in_b = set(np.unique(b.class_of[np.asarray(sb, dtype=np.int64)]).tolist())
            for x in range(a.rank):
                if x in in_a:
                    candidates[x] = [y for y in candidates[x] if y in in_b]
                else:
                    candidates[x] = [y for y in candidates[x] if y not in in_b]
    ta, tb = structure_constants(a), structure_constants(b)
    inv_a, inv_b = a.inverse_class_map(), b.inverse_class_map()
    by_pair_a: dict = {}
    for (x, y, z), c in ta.constants.items():
        by_pair_a.setdefault((x, y), {})[z] = c
    by_pair_b: dict = {}
    for (x, y, z), c in tb.constants.items():
        by_pair_b.setdefault((x, y), {})[z] = c

    def pair_spectrum(d: dict) -> tuple:
        return tuple(sorted(d.values()))

    order = sorted(range(a.rank), key=lambda x: (len(candidates[x]), x))
    phi = np.full(a.rank, -1, dtype=np.int64)
    used = np.zeros(b.rank, dtype=bool)

    def consistent(x: int) -> bool:
        for y in range(a.rank):
            if phi[y] == -1:
                continue
            for (p, q) in ((x, y), (y, x), (x, x)):
                if phi[p] == -1 or phi[q] == -1:
                    continue
                da = by_pair_a.get((p, q), {})
                db = by_pair_b.get((int(phi[p]), int(phi[q])), {})
                if pair_spectrum(da) != pair_spectrum(db):
                    return False
                for z, c in da.items():
                    fz = int(phi[z])
                    if fz != -1 and db.get(fz, 0) != c:
                        return False
        return True

    def backtrack(i: int):
        if i == a.rank:
            cb = ClassBijection(a, b, phi.copy())
            cb.verify()
            yield cb
            return
        x = order[i]
        for y in candidates[x]:
            if used[y]:
                continue
            bud.spend()
            if phi[inv_a[x]] != -1 and int(phi[inv_a[x]]) != int(inv_b[y]):
                continue
            phi[x] = y
            used[y] = True
            if consistent(x):
                yield from backtrack(i + 1)
            phi[x] = -1
            used[y] = False

    yield from backtrack(0)


def algebraic_iso_search(
    a: SRing,
    b: SRing,
    genuine: tuple | None = None,
    budget: int = DEFAULT_NODE_BUDGET,
    find_all: bool = False,
):
    """Backtracking over class bijections preserving all structure constants.

    genuine, when given, is a pair (subsets_a, subsets_b) of lists of code
    arrays (distinguished subgroups); the map must send the classes inside
    subsets_a[i] onto the classes inside subsets_b[i].

    Returns a ClassBijection (or a list with find_all), None when the
    exhaustive pruned search ends empty; raises BudgetExceededError.
    """
    bud = _Budget(budget)
    it = _algebraic_iso_iter(a, b, genuine, bud)
    if find_all:
        return list(it)
    return next(it, None)


# ---------------------------------------------------------------------------
# combinatorial isomorphisms of S-rings


def combinatorial_iso_search(
    a: SRing,
    b: SRing,
    normalized: bool = True,
    budget: int = DEFAULT_NODE_BUDGET,
) -> np.ndarray | None:
    """Search a bijection f with (Xy)^f = X' f(y) for a class pairing X -> X'.

    The search runs over normalized maps (f(1) = 1), which is complete: a
    combinatorial isomorphism exists iff a normalized one does (compose with
    the right translation by f(1)^{-1}).  Every candidate class pairing comes
    from the algebraic search; for each pairing the point map is built by
    constraint propagation over the translate equations.

    Returns the bijection as an array, or None after exhausting the pruned
    search; raises BudgetExceededError when the node budget runs out.
    """
    bud = _Budget(budget)
    n = a.ctx.size
    allc = np.arange(n, dtype=np.int64)
    mul_a = [a.ctx.mul_codes(cls[:, None], allc[None, :]) for cls in a.classes]
    for pairing in _algebraic_iso_iter(a, b, None, bud):
        phi = pairing.mapping
        target_members = [b.classes[int(phi[x])] for x in range(a.rank)]
        cand = np.zeros((n, n), dtype=bool)
        for x in range(a.rank):
            cand[np.ix_(a.classes[x], target_members[x])] = True
        f = np.full(n, -1, dtype=np.int64)
        hit = _point_search(a, b, phi, cand, f, bud, mul_a)
        if hit is not None:
            if normalized and hit[0] != 0:
                raise TheoremViolationError("point search broke normalization")
            return hit
    return None


def _point_search(a, b, phi, cand, f, bud, mul_a) -> np.ndarray | None:
    # normalized start: f(identity) = identity
    if not cand[0, 0]:
        return None
    n = a.ctx.size
    f[0] = 0
    cand[0, :] = False
    cand[0, 0] = True
    cand[np.arange(n) != 0, 0] = False
    if not _propagate_from(a, b, phi, cand, f, [(0, 0)], mul_a):
        return None
    return _point_backtrack(a, b, phi, cand, f, bud, mul_a)


def _point_backtrack(a, b, phi, cand, f, bud, mul_a) -> np.ndarray | None:
    n = a.ctx.size
    unassigned = [y for y in range(n) if f[y] == -1]
    if not unassigned:
        out = f.copy()
        if _verify_combinatorial(a, b, phi, out):
            return out
        return None
    counts = cand.sum(axis=1)
    y = min(unassigned, key=lambda v: (int(counts[v]), v))
    options = np.nonzero(cand[y])[0]
    for fy in options:
        bud.spend()
        f2 = f.copy()
        cand2 = cand.copy()
        f2[y] = int(fy)
        cand2[y, :] = False
        cand2[y, fy] = True
        cand2[np.arange(n) != y, fy] = False
        ok = _propagate_from(a, b, phi, cand2, f2, [(y, int(fy))], mul_a)
        if ok:
            hit = _point_backtrack(a, b, phi, cand2, f2, bud, mul_a)
            if hit is not None:
                return hit
    return None


def _propagate_from(a, b, phi, cand, f, assignments, mul_a) -> bool:
    n = a.ctx.size
    ctx_b = b.ctx
    queue = list(assignments)
    while queue:
        y, fy = queue.pop()
        for x in range(a.rank):
            src = mul_a[x][:, y]
            dst = ctx_b.mul_codes(
                b.classes[int(phi[x])], np.full(len(b.classes[int(phi[x])]), fy)
            )
            dst_mask = np.zeros(n, dtype=bool)
            dst_mask[dst] = True
            sub = cand[src] & dst_mask[None, :]
            if (sub.sum(axis=1) == 0).any():
                return False
            cand[src] = sub
            for s in src.tolist():
                if f[s] == -1 and cand[s].sum() == 1:
                    val = int(np.nonzero(cand[s])[0][0])
                    f[s] = val
                    cand[np.arange(n) != s, val] = False
                    cand[s, :] = False
                    cand[s, val] = True
                    queue.append((s, val))
    return True


def _verify_combinatorial(a: SRing, b: SRing, phi, f) -> bool:
    n = a.ctx.size
    if sorted(f.tolist()) != list(range(n)):
        return False
    allc = np.arange(n, dtype=np.int64)
    for x in range(a.rank):
        lhs = np.sort(f[a.ctx.mul_codes(a.classes[x][:, None], allc[None, :])], axis=0)
        rhs = np.sort(
            b.ctx.mul_codes(b.classes[int(phi[x])][:, None], f[None, :]), axis=0
        )
        if not np.array_equal(lhs, rhs):
            return False
    return True


# ---------------------------------------------------------------------------
# colored-group isomorphism oracles


def aligned_product_coloring(cga: ColoredGroup, cgb: ColoredGroup) -> ColoredGroup:
    """Product coloring in a shared color-id space (the reduction variant).

    Unlike the public product_coloring, the two inputs' color ids are kept
    as-is so an axis swap can be color-preserving; the fresh color comes
    after both palettes.
    """
    ga, gb = cga.group, cgb.group
    prod = direct_product([ga, gb])
    eps = max(cga.num_colors, cgb.num_colors)
    col = np.full(prod.order, eps, dtype=np.int64)
    codes = np.arange(prod.order)
    xs, ys = codes % ga.order, codes // ga.order
    on_a = (ys == 0) & (xs != 0)
    on_b = (xs == 0) & (ys != 0)
    col[on_a] = cga.coloring[xs[on_a]]
    col[on_b] = cgb.coloring[ys[on_b]]
    _, contiguous = np.unique(col, return_inverse=True)
    return ColoredGroup(prod, contiguous.astype(np.int32))


def iso_via_aut(
    cga: ColoredGroup, cgb: ColoredGroup, budget: int = DEFAULT_NODE_BUDGET
) -> np.ndarray | None:
    """Group isomorphism via the index-2 test on Aut of the colored product.

    [Aut : Aut_0] = 2 iff some automorphism moves the first axis onto the
    second, so the test searches for one automorphism of the colored product
    whose first generator image (the first axis generator) lies on the other
    axis; the product structure forces the whole axis across.  Exhausting
    that search certifies index 1.
    """
    ga, gb = cga.group, cgb.group
    if ga.order != gb.order:
        return None
    if ga.order == 1:
        phi = np.zeros(1, dtype=np.int64)
        return phi if verify_group_iso(cga, cgb, phi) else None
    prod = aligned_product_coloring(cga, cgb)
    # the greedy generating sequence of the product starts with code 1, i.e.
    # the first non-identity element of the first axis
    swaps = _search_isos(
        prod,
        prod,
        _Budget(budget),
        find_all=False,
        first_gen_filter=lambda y: y % ga.order == 0,
    )
    if not swaps:
        return None
    p = swaps[0]
    axis_a = np.arange(1, ga.order, dtype=np.int64)  # codes of (g, 1), g != 1
    imgs = p[axis_a]
    if (imgs % ga.order != 0).any():
        raise TheoremViolationError("swap automorphism does not map axis to axis")
    phi = np.zeros(ga.order, dtype=np.int64)
    phi[1:] = imgs // ga.order
    if not verify_group_iso(cga, cgb, phi):
        raise TheoremViolationError("extracted swap map failed verification")
    return phi


def _coloring_is_discrete(cg: ColoredGroup) -> bool:
    return cg.num_colors == cg.group.order


def _stable_refinement(cg: ColoredGroup) -> np.ndarray:
    """Iterated invariant refinement of the coloring (orbit upper bound)."""
    g = cg.group
    colors = cg.coloring.astype(np.int64)
    n = g.order
    while True:
        sigs = []
        for x in range(n):
            row = tuple(sorted(zip(colors[g.mul[x]].tolist(), colors.tolist())))
            sigs.append((int(colors[x]), row))
        palette = sorted(set(sigs))
        new = np.array([palette.index(s) for s in sigs], dtype=np.int64)
        if np.array_equal(new, colors):
            return colors
        colors = new


def _canonical_colored_form(cg: ColoredGroup) -> tuple[bytes, np.ndarray]:
    """Memo key plus relabeling order (canonical element i = original order[i]).

    The key is canonical (isomorphism-invariant) when the stable color
    refinement is discrete, and the exact table bytes otherwise; both are
    sound, canonical keys just hit the memo across isomorphic subproblems.
    """
    g = cg.group
    n = g.order
    colors = _stable_refinement(cg)
    if len(set(colors.tolist())) == n:
        order = np.argsort(colors, kind="stable")
        pos = np.argsort(order)
        table = pos[g.mul[np.ix_(order, order)]]
        recolor = cg.coloring[order]
        return table.tobytes() + bytes(recolor.astype(np.int32)), order
    identity = np.arange(n, dtype=np.int64)
    return g.mul.tobytes() + bytes(cg.coloring.astype(np.int32)), identity


def aut_orbit_partition(cg: ColoredGroup, budget: int = DEFAULT_NODE_BUDGET) -> np.ndarray:
    """Orbit labels of Aut(cg) acting on the group (the cyc_1 basic sets).

    Computed by union-find over pinned automorphism searches: a found
    automorphism f(p) = q merges the whole permutation's orbit pairs, an
    exhausted search certifies that p and q lie in different orbits.  This
    avoids enumerating the automorphism group element by element.
    """
    g = cg.group
    n = g.order
    parent = np.arange(n, dtype=np.int64)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = int(parent[a])
        return a

    def union(a: int, b: int):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    # the stable refinement is Aut-invariant and is preserved by exactly the
    # same maps as the original coloring, so searching against it both
    # pre-separates orbits and shrinks every candidate set
    refined = _stable_refinement(cg)
    _, contiguous = np.unique(refined, return_inverse=True)
    cg_refined = ColoredGroup(g, contiguous.astype(np.int32))
    for p in range(1, n):
        for q in range(p + 1, n):
            if refined[p] != refined[q] or find(p) == find(q):
                continue
            hits = _search_isos(
                cg_refined,
                cg_refined,
                _Budget(budget),
                find_all=False,
                first_generator=p,
                first_gen_filter=lambda y, qq=q: y == qq,
            )
            if hits:
                f = hits[0]
                for i in range(n):
                    union(i, int(f[i]))
    labels = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    return labels


def iso_via_cyc1(
    cga: ColoredGroup,
    cgb: ColoredGroup,
    budget: int = DEFAULT_NODE_BUDGET,
    _memo: dict | None = None,
) -> np.ndarray | None:
    """Group isomorphism via the orbit test of the individualization recursion.

    At each level one non-singleton element of G is individualized and
    matched against candidates x' of G' by testing whether (x,1) and (1,x')
    lie in the same orbit of Aut of the aligned colored product, read off the
    orbit partition of Aut(K) acting on K (the orbit S-ring of Aut(K)).  The
    recursion bottoms out on discrete colorings, where the color matching is
    the only candidate bijection.  Aut groups are memoized by canonical
    colored-table form.
    """
    memo = _memo if _memo is not None else {}
    ga, gb = cga.group, cgb.group
    if ga.order != gb.order:
        return None
    if sorted(np.bincount(cga.coloring).tolist()) != sorted(
        np.bincount(cgb.coloring).tolist()
    ):
        return None
    if _coloring_is_discrete(cga):
        if not np.array_equal(np.bincount(cga.coloring), np.bincount(cgb.coloring)):
            return None
        phi = np.empty(ga.order, dtype=np.int64)
        pos_b = np.argsort(cgb.coloring, kind="stable")
        phi[np.argsort(cga.coloring, kind="stable")] = pos_b
        return phi if verify_group_iso(cga, cgb, phi) else None
    counts = np.bincount(cga.coloring)
    color = int(np.nonzero(counts >= 2)[0][0])
    members = np.nonzero(cga.coloring == color)[0]
    # individualizing the identity never constrains anything; skip it
    non_id = members[members != 0]
    x = int(non_id[0]) if non_id.size else int(members[0])
    cga_x = individualize(cga, x)
    ord_x = ga.element_order(x)
    for x2 in np.nonzero(cgb.coloring == color)[0].tolist():
        if gb.element_order(int(x2)) != ord_x:
            continue
        cgb_x2 = individualize(cgb, int(x2))
        prod = aligned_product_coloring(cga_x, cgb_x2)
        code_x = x  # (x, 1)
        code_x2 = ga.order * int(x2)  # (1, x')
        if _same_aut_orbit(prod, code_x, code_x2, memo, budget):
            phi = iso_via_cyc1(cga_x, cgb_x2, budget=budget, _memo=memo)
            if phi is not None and verify_group_iso(cga, cgb, phi):
                return phi
    return None


def _same_aut_orbit(
    prod: ColoredGroup, p: int, q: int, memo: dict, budget: int
) -> bool:
    """Orbit membership in the cyc_1 partition of Aut(prod), resolved lazily.

    Memoized in canonical coordinates (orbit relations are isomorphism
    invariants); a pinned search either produces an automorphism moving p to
    q or certifies by exhaustion that none exists.
    """
    key, order = _canonical_colored_form(prod)
    pos = np.argsort(order)
    pair = (key, min(int(pos[p]), int(pos[q])), max(int(pos[p]), int(pos[q])))
    if pair in memo:
        return memo[pair]
    refined = _stable_refinement(prod)
    if refined[p] != refined[q]:
        memo[pair] = False
        return False
    _, contiguous = np.unique(refined, return_inverse=True)
    prod_refined = ColoredGroup(prod.group, contiguous.astype(np.int32))
    hits = _search_isos(
        prod_refined,
        prod_refined,
        _Budget(budget),
        find_all=False,
        first_generator=int(p),
        first_gen_filter=lambda y, qq=int(q): y == qq,
    )
    memo[pair] = bool(hits)
    return memo[pair]


def iso_colored_groups(
    a: FiniteGroup | ColoredGroup,
    b: FiniteGroup | ColoredGroup,
    oracle: str = "direct",
    budget: int = DEFAULT_NODE_BUDGET,
) -> np.ndarray | None:
    """Color-preserving group isomorphism via one of the three oracles."""
    cga, cgb = as_colored(a), as_colored(b)
    if cga.group.order > _AUT_ORDER_LIMIT:
        raise ValidationError("iso_colored_groups capped at order 64")
    if oracle == "direct":
        return iso_search_direct(cga, cgb, budget=budget)
    if oracle == "via_aut":
        return iso_via_aut(cga, cgb, budget=budget)
    if oracle == "via_cyc1":
        return iso_via_cyc1(cga, cgb, budget=budget)
    raise ValidationError(f"unknown oracle {oracle!r}")
