"""m-ary rainbows and coherent configurations over group domains.

The initial group rainbow partitions G^m by the pair (rho, mu) of every
tuple: the coordinate-equality pattern and the multiplication triples
(optionally extended by per-coordinate colors).  The refinement operator
re-keys every tuple by its class plus the multiset, over all substituted
values, of the class vector of the one-coordinate substitutions; its
fixpoint is the smallest m-ary coherent configuration above the input.

Canonical colors are assigned in sorted-signature order each round, which
makes runs deterministic and lets two structures share one signature
dictionary: the joint fingerprint of two groups is equal exactly when the
stable colorings admit a color-matching class bijection preserving all
substitution counts, rho, and mu.  Fingerprint colors are only comparable
within one shared run; exports elide the dictionary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .errors import BudgetExceededError, CapExceededError, TheoremViolationError, ValidationError
from .groups import ColoredGroup, FiniteGroup, PowerContext, as_colored, power
from .partitions import Partition, from_class_of, is_coarser_equal, project
from .srings import SRing, compute_Am, verify_axioms

# ---------------------------------------------------------------------------
# tuple profile matrices


def _rho_matrix(ctx: PowerContext) -> np.ndarray:
    """(N, m) first-occurrence coordinate-equality labels."""
    d = ctx.digits()
    eq = d[:, None, :] == d[:, :, None]  # eq[x, i, j] = (x_j == x_i)
    return np.argmax(eq, axis=2).astype(np.int8)


def _mu_matrix(ctx: PowerContext) -> np.ndarray:
    """(N, m^3) booleans: x_i * x_j = x_k in lexicographic (i,j,k) order."""
    d = ctx.digits()
    m = ctx.arity
    cols = []
    for i in range(m):
        for j in range(m):
            prod = ctx.base.mul[d[:, i], d[:, j]]
            for k in range(m):
                cols.append(prod == d[:, k])
    return np.stack(cols, axis=1)


def rho_tuple(ctx: PowerContext, code: int) -> tuple:
    labels: dict[int, int] = {}
    out = []
    for x in ctx.decode(code):
        labels.setdefault(x, len(labels))
        out.append(labels[x])
    return tuple(out)


def mu_tuple(ctx: PowerContext, code: int) -> tuple:
    tup = ctx.decode(code)
    m = ctx.arity
    mul = ctx.base.mul
    return tuple(
        (i + 1, j + 1, k + 1)
        for i in range(m)
        for j in range(m)
        for k in range(m)
        if int(mul[tup[i], tup[j]]) == tup[k]
    )


# ---------------------------------------------------------------------------
# rainbow / coherent configuration types


@dataclass
class Rainbow:
    """A partition of G^m with verified per-class rho (C1) and map closure (C2)."""

    ctx: PowerContext
    partition: Partition
    rho: list = field(default_factory=list)  # per class
    mu: list = field(default_factory=list)  # per class, None when not constant
    c1_verified: bool = False
    c2_verified: bool = False

    @property
    def rank(self) -> int:
        return self.partition.rank


@dataclass
class CoherentConfig(Rainbow):
    c3_verified: bool = False

    def __post_init__(self):
        self._nk_cache: dict = {}

    def n_K(self, class_id: int, K) -> int:
        """Constant fiber count n_K(X) of the class over pr_K; cached."""
        key = (class_id, tuple(sorted(K)))
        if key in self._nk_cache:
            return self._nk_cache[key]
        cls = self.partition.classes[class_id]
        pr = self.ctx.project_codes(cls, sorted(K))
        _, counts = np.unique(pr, return_counts=True)
        if counts.min() != counts.max():
            raise TheoremViolationError(
                f"n_K not constant on class {class_id}, K={sorted(K)}"
            )
        self._nk_cache[key] = int(counts[0])
        return self._nk_cache[key]


def _profiles_for(ctx: PowerContext, partition: Partition):
    """Per-class rho (always constant here) and mu (None if not constant)."""
    rho_m = _rho_matrix(ctx)
    mu_m = _mu_matrix(ctx)
    m = ctx.arity
    triples = list(iproduct(range(1, m + 1), repeat=3))
    rho_out, mu_out = [], []
    for cls in partition.classes:
        r0 = rho_m[cls[0]]
        rho_out.append(tuple(int(v) for v in r0))
        rows = mu_m[cls]
        if (rows == rows[0]).all():
            mu_out.append(tuple(t for t, bit in zip(triples, rows[0]) if bit))
        else:
            mu_out.append(None)
    return rho_out, mu_out


# ---------------------------------------------------------------------------
# condition checkers


def check_c1(ctx: PowerContext, partition: Partition):
    """(holds, witness): rho constant on every class."""
    rho_m = _rho_matrix(ctx)
    for i, cls in enumerate(partition.classes):
        rows = rho_m[cls]
        if not (rows == rows[0]).all():
            bad = int(np.nonzero((rows != rows[0]).any(axis=1))[0][0])
            return False, {"class": i, "x": int(cls[0]), "y": int(cls[bad])}
    return True, None


def _c2_generator_maps(m: int, exhaustive: bool):
    """Transpositions and merge maps generate the full transformation monoid."""
    if exhaustive:
        return [np.array(s, dtype=np.int64) for s in iproduct(range(m), repeat=m)]
    maps = []
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            tau = np.arange(m, dtype=np.int64)
            tau[i], tau[j] = tau[j], tau[i]
            maps.append(tau)
            merge = np.arange(m, dtype=np.int64)
            merge[j] = i  # x^merge copies slot i over slot j
            maps.append(merge)
    return maps


def check_c2(ctx: PowerContext, partition: Partition, exhaustive: bool | None = None):
    """(holds, witness): X^sigma is a class for every map sigma: M -> M.

    Checks every one of the m^m maps when feasible (exhaustive), otherwise a
    generating set of the transformation monoid, which implies closure under
    all compositions.
    """
    m = ctx.arity
    if exhaustive is None:
        exhaustive = m**m * partition.rank <= 1 << 16
    cls_of = partition.class_of
    for sigma in _c2_generator_maps(m, exhaustive):
        for i, cls in enumerate(partition.classes):
            img = np.unique(ctx.permute_coordinates(cls, sigma))
            labels = cls_of[img]
            target = int(labels[0])
            if (labels != target).any() or len(img) != len(
                partition.classes[target]
            ):
                return False, {"class": i, "sigma": [int(v) for v in sigma]}
    return True, None


def _c2_closure_maps(ctx: PowerContext) -> list[np.ndarray]:
    """Code tables of a generating set of the transformation monoid on M."""
    m = ctx.arity
    codes = np.arange(ctx.size, dtype=np.int64)
    tabs = []
    for t in range(m - 1):
        tau = np.arange(m, dtype=np.int64)
        tau[t], tau[t + 1] = tau[t + 1], tau[t]
        tabs.append(ctx.permute_coordinates(codes, tau))
    if m >= 2:
        merge = np.arange(m, dtype=np.int64)
        merge[1] = 0
        tabs.append(ctx.permute_coordinates(codes, merge))
    return tabs


def rainbow_c2_closure(ctx: PowerContext, start: Partition) -> Partition:
    """Minimal partition refining `start` whose class images under every
    coordinate map are again classes.

    Alternates two forced splits to a fixpoint: key every element by the
    classes of its generator-map images, and cut every class that properly
    meets some class image.  Any rainbow refining `start` is stable under
    both, so the fixpoint is the minimal one; closure under the generating
    maps implies closure under all their compositions, i.e. all maps.
    """
    tabs = _c2_closure_maps(ctx)
    part = start
    while True:
        lab = part.class_of.astype(np.int64)
        r = part.rank
        key = lab.copy()
        for tab in tabs:
            key = key * r + lab[tab]
        refined = from_class_of(key)
        lab2 = refined.class_of.astype(np.int64)
        cuts: dict[int, list] = {}
        for si, tab in enumerate(tabs):
            for ci, cls in enumerate(refined.classes):
                img = np.unique(tab[cls])
                target = int(lab2[img[0]])
                if len(img) != len(refined.classes[target]):
                    for z in img.tolist():
                        cuts.setdefault(z, []).append((si, ci))
        if cuts:
            keys2 = [
                (int(lab2[z]), tuple(cuts.get(z, ()))) for z in range(ctx.size)
            ]
            uniq = sorted(set(keys2))
            index = {k: i for i, k in enumerate(uniq)}
            refined = from_class_of(np.array([index[k] for k in keys2]))
        if refined == part:
            return part
        part = refined


def _substitution_labels(
    ctx: PowerContext, class_of: np.ndarray, r: int | None = None
) -> np.ndarray:
    """(N, n) packed class vectors of the one-coordinate substitutions.

    Entry [x, alpha] packs (cls(x_{1<-alpha}), ..., cls(x_{m<-alpha})) in one
    int64 word, base r (r must cover the label space; it is shared between
    two structures in a joint run).
    """
    n, m, N = ctx.n, ctx.arity, ctx.size
    if r is None:
        r = int(class_of.max()) + 1
    if m * np.log2(max(r, 2)) > 62:
        raise CapExceededError("wl substitution packing", r**m, 1 << 62)
    codes = np.arange(N, dtype=np.int64)
    d = ctx.digits()
    packed = np.zeros((N, n), dtype=np.int64)
    weight = 1
    alphas = np.arange(n, dtype=np.int64)
    for i in range(m):
        base_i = codes - d[:, i].astype(np.int64) * n**i
        subs = base_i[:, None] + alphas[None, :] * n**i
        packed += class_of[subs].astype(np.int64) * weight
        weight *= r
    return packed


def wl_step(ctx: PowerContext, partition: Partition) -> Partition:
    """One refinement round: split by class plus substitution-count multiset."""
    packed = _substitution_labels(ctx, partition.class_of)
    packed.sort(axis=1)
    keys = np.concatenate(
        (partition.class_of[:, None].astype(np.int64), packed), axis=1
    )
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    return from_class_of(labels)


def check_c3(ctx: PowerContext, partition: Partition):
    """(holds, witness): substitution counts constant per class."""
    refined = wl_step(ctx, partition)
    if refined == partition:
        return True, None
    # find a split class as witness
    for i, cls in enumerate(partition.classes):
        labels = refined.class_of[cls]
        if labels.min() != labels.max():
            return False, {"class": i}
    return False, {}


@dataclass
class RegularityEntry:
    class_id: int
    K: tuple
    constant: bool
    value: int | None
    witness: dict | None


def check_regular(ctx: PowerContext, partition: Partition) -> list[RegularityEntry]:
    """Fiber-count constancy n_K(x;X) for every class and every K."""
    m = ctx.arity
    out = []
    subsets = []
    for bits in range(1, 1 << m):
        subsets.append([i + 1 for i in range(m) if bits & (1 << i)])
    for i, cls in enumerate(partition.classes):
        if len(cls) == 1:
            for K in subsets:
                out.append(RegularityEntry(i, tuple(K), True, 1, None))
            continue
        for K in subsets:
            pr = ctx.project_codes(cls, K)
            fibers, counts = np.unique(pr, return_counts=True)
            if counts.min() == counts.max():
                out.append(RegularityEntry(i, tuple(K), True, int(counts[0]), None))
            else:
                out.append(
                    RegularityEntry(
                        i,
                        tuple(K),
                        False,
                        None,
                        {
                            "min_fiber": int(fibers[int(np.argmin(counts))]),
                            "max_fiber": int(fibers[int(np.argmax(counts))]),
                            "counts": [int(counts.min()), int(counts.max())],
                        },
                    )
                )
    return out


# ---------------------------------------------------------------------------
# construction


def initial_rainbow(
    group: FiniteGroup | ColoredGroup, m: int, cap=None
) -> Rainbow:
    """The minimal m-ary rainbow with constant rho and mu per class.

    With a coloring, the per-coordinate color vector joins the fiber key.
    """
    cg = as_colored(group)
    ctx = power(cg.group, m, cap=cap)
    rho_m = _rho_matrix(ctx)
    mu_m = _mu_matrix(ctx)
    parts = [rho_m.astype(np.int64), mu_m.astype(np.int64)]
    if cg.num_colors > 1:
        parts.append(cg.coloring[ctx.digits()].astype(np.int64))
    keys = np.concatenate(parts, axis=1)
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    # the raw fibers need not be closed under non-injective coordinate maps
    partition = rainbow_c2_closure(ctx, from_class_of(labels))
    rho, mu = _profiles_for(ctx, partition)
    ok1, w1 = check_c1(ctx, partition)
    ok2, w2 = check_c2(ctx, partition)
    if not (ok1 and ok2):
        raise TheoremViolationError(f"initial rainbow violates C1/C2: {w1 or w2}")
    return Rainbow(ctx, partition, rho, mu, c1_verified=True, c2_verified=True)


def wl_fixpoint(
    ctx: PowerContext, start: Partition, round_budget: int | None = None
) -> tuple[CoherentConfig, dict]:
    """Iterate the refinement to stabilization and verify C1-C3."""
    budget = round_budget if round_budget is not None else ctx.size
    partition = start
    counts = [partition.rank]
    rounds = 0
    while True:
        if rounds > budget:
            raise BudgetExceededError(f"WL did not stabilize in {budget} rounds")
        refined = wl_step(ctx, partition)
        if refined == partition:
            # the count fixpoint must also be map-closed; re-close and keep
            # iterating if the closure still refines (minimality preserved:
            # both operators fix every coherent configuration above start)
            closed = rainbow_c2_closure(ctx, partition)
            if closed == partition:
                break
            refined = closed
        if refined.rank <= partition.rank:
            raise TheoremViolationError("WL round did not strictly refine")
        partition = refined
        counts.append(partition.rank)
        rounds += 1
    ok1, w1 = check_c1(ctx, partition)
    if not ok1:
        raise TheoremViolationError(f"WL fixpoint violates C1: {w1}")
    ok2, w2 = check_c2(ctx, partition)
    if not ok2:
        raise TheoremViolationError(f"WL fixpoint violates C2: {w2}")
    rho, mu = _profiles_for(ctx, partition)
    cc = CoherentConfig(
        ctx, partition, rho, mu, c1_verified=True, c2_verified=True, c3_verified=True
    )
    return cc, {"rounds": rounds, "class_counts": counts}


def wl_m_group(
    group: FiniteGroup | ColoredGroup, m: int, cap=None, round_budget=None
) -> CoherentConfig:
    """The smallest m-ary coherent configuration above the group rainbow."""
    rb = initial_rainbow(group, m, cap=cap)
    cc, _ = wl_fixpoint(rb.ctx, rb.partition, round_budget=round_budget)
    return cc


# ---------------------------------------------------------------------------
# joint fingerprints


@dataclass
class ColorFingerprint:
    """Stable-coloring summary: sorted multiset of (color, size, rho, mu)."""

    entries: list

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "color": int(c),
                    "size": int(s),
                    "rho": list(rho),
                    "mu": [list(t) for t in mu],
                }
                for (c, s, rho, mu) in self.entries
            ]
        }


@dataclass
class FingerprintResult:
    equal: bool
    fingerprint_a: ColorFingerprint
    fingerprint_b: ColorFingerprint
    rounds: int
    diverged_at: int | None
    transcript: list
    labels_a: np.ndarray | None = None  # stable shared coloring of G^m
    labels_b: np.ndarray | None = None


def _initial_keys(cg: ColoredGroup, ctx: PowerContext) -> np.ndarray:
    parts = [
        _rho_matrix(ctx).astype(np.int64),
        _mu_matrix(ctx).astype(np.int64),
        cg.coloring[ctx.digits()].astype(np.int64),
    ]
    return np.concatenate(parts, axis=1)


def _multiset_signature(labels: np.ndarray) -> tuple:
    vals, counts = np.unique(labels, return_counts=True)
    return tuple(zip(vals.tolist(), counts.tolist()))


def joint_fingerprint(
    a: FiniteGroup | ColoredGroup,
    b: FiniteGroup | ColoredGroup,
    m: int,
    cap=None,
) -> FingerprintResult:
    """Run the WL iteration on both groups with one shared signature space.

    Fingerprint equality is the WL_m-equivalence verdict: it holds iff the
    stable colorings admit a color-matching bijection of classes preserving
    all substitution counts, rho, and mu.  Divergent color multisets
    short-circuit the iteration.
    """
    cga, cgb = as_colored(a), as_colored(b)
    ctxa = power(cga.group, m, cap=cap)
    ctxb = power(cgb.group, m, cap=cap)
    keys_a, keys_b = _initial_keys(cga, ctxa), _initial_keys(cgb, ctxb)
    stacked = np.concatenate((keys_a, keys_b), axis=0)
    _, labels = np.unique(stacked, axis=0, return_inverse=True)
    la, lb = labels[: ctxa.size].copy(), labels[ctxa.size :].copy()
    transcript = []
    rounds = 0
    diverged = None
    while True:
        transcript.append(
            {
                "round": rounds,
                "colors_a": int(len(np.unique(la))),
                "colors_b": int(len(np.unique(lb))),
            }
        )
        if _multiset_signature(la) != _multiset_signature(lb):
            diverged = rounds
            break
        # equal color multisets force equal domain sizes, hence equal orders
        shared_r = int(max(la.max(), lb.max())) + 1
        pa = _substitution_labels(ctxa, la, r=shared_r)
        pb = _substitution_labels(ctxb, lb, r=shared_r)
        pa.sort(axis=1)
        pb.sort(axis=1)
        ka = np.concatenate((la[:, None].astype(np.int64), pa), axis=1)
        kb = np.concatenate((lb[:, None].astype(np.int64), pb), axis=1)
        stacked = np.concatenate((ka, kb), axis=0)
        _, labels = np.unique(stacked, axis=0, return_inverse=True)
        na, nb = labels[: ctxa.size], labels[ctxa.size :]
        stable = len(np.unique(na)) == len(np.unique(la)) and len(
            np.unique(nb)
        ) == len(np.unique(lb))
        la, lb = na.copy(), nb.copy()
        rounds += 1
        if stable:
            break
        if rounds > ctxa.size + ctxb.size:
            raise BudgetExceededError("joint WL did not stabilize")

    def fingerprint(ctx, lab):
        part = from_class_of(lab)
        rho, mu = _profiles_for(ctx, part)
        entries = []
        for i, cls in enumerate(part.classes):
            if mu[i] is None:
                raise TheoremViolationError("stable class has non-constant mu")
            entries.append((int(lab[cls[0]]), len(cls), rho[i], mu[i]))
        return ColorFingerprint(sorted(entries))

    fa, fb = fingerprint(ctxa, la), fingerprint(ctxb, lb)
    equal = diverged is None and fa.entries == fb.entries
    return FingerprintResult(equal, fa, fb, rounds, diverged, transcript, la, lb)


def confirm_equivalence(
    a: FiniteGroup | ColoredGroup,
    b: FiniteGroup | ColoredGroup,
    m: int,
    result: FingerprintResult,
    cap=None,
) -> bool:
    """Re-verify a positive fingerprint verdict by independent recounting.

    Matches classes of the two stable colorings by color and recomputes the
    substitution-count dictionaries, sizes, rho, and mu from scratch with
    plain per-element counting (no shared interning, no packing).  Also
    cross-checks that the joint run reproduced each group's own WL fixpoint.
    Raises TheoremViolationError on any discrepancy; the open question of
    fingerprint equality versus genuine-equivalence existence is flagged this
    way, never assumed.
    """
    if not result.equal:
        return False
    cga, cgb = as_colored(a), as_colored(b)
    ctxa = power(cga.group, m, cap=cap)
    ctxb = power(cgb.group, m, cap=cap)
    la, lb = result.labels_a, result.labels_b
    part_a, part_b = from_class_of(la), from_class_of(lb)
    solo_a = wl_m_group(a, m, cap=cap)
    solo_b = wl_m_group(b, m, cap=cap)
    if solo_a.partition != part_a or solo_b.partition != part_b:
        raise TheoremViolationError("joint run disagrees with the solo WL fixpoint")

    def class_by_color(ctx, lab, part):
        out = {}
        for cls in part.classes:
            color = int(lab[cls[0]])
            if color in out:
                raise TheoremViolationError("two classes share a stable color")
            out[color] = cls
        return out

    def count_dict(ctx, lab, x):
        counts: dict[tuple, int] = {}
        n, mm = ctx.n, ctx.arity
        d = [int(v) for v in ctx.digits()[x]]
        for alpha in range(n):
            vec = tuple(
                int(lab[x + (alpha - d[i]) * n**i]) for i in range(mm)
            )
            counts[vec] = counts.get(vec, 0) + 1
        return counts

    by_a = class_by_color(ctxa, la, part_a)
    by_b = class_by_color(ctxb, lb, part_b)
    if set(by_a) != set(by_b):
        raise TheoremViolationError("stable color sets differ despite equal verdict")
    for color, cls_a in by_a.items():
        cls_b = by_b[color]
        if len(cls_a) != len(cls_b):
            raise TheoremViolationError(f"matched color {color} has unequal sizes")
        if rho_tuple(ctxa, int(cls_a[0])) != rho_tuple(ctxb, int(cls_b[0])):
            raise TheoremViolationError(f"matched color {color} has unequal rho")
        if mu_tuple(ctxa, int(cls_a[0])) != mu_tuple(ctxb, int(cls_b[0])):
            raise TheoremViolationError(f"matched color {color} has unequal mu")
        ref = count_dict(ctxa, la, int(cls_a[0]))
        for x in cls_a[1:]:
            if count_dict(ctxa, la, int(x)) != ref:
                raise TheoremViolationError("counts not constant on a stable class")
        for x in cls_b:
            if count_dict(ctxb, lb, int(x)) != ref:
                raise TheoremViolationError(
                    f"matched color {color} has unequal substitution counts"
                )
    return True


@dataclass
class WLDimensionProbe:
    """Per-m WL-equivalence verdicts for a group pair; monotone by assertion."""

    names: tuple
    verdicts: dict = field(default_factory=dict)

    def record(self, m: int, equivalent: bool) -> None:
        self.verdicts[m] = equivalent
        seen = sorted(self.verdicts)
        distinguished = False
        for k in seen:
            if distinguished and self.verdicts[k]:
                raise TheoremViolationError(
                    f"equivalence verdicts not monotone: distinguished below m={k}"
                )
            distinguished = distinguished or not self.verdicts[k]


def probe_wl_dimension(
    a: FiniteGroup | ColoredGroup, b: FiniteGroup | ColoredGroup, ms, cap=None
) -> WLDimensionProbe:
    probe = WLDimensionProbe((as_colored(a).group.name, as_colored(b).group.name))
    for m in sorted(ms):
        res = joint_fingerprint(a, b, m, cap=cap)
        probe.record(m, res.equal)
    return probe


# ---------------------------------------------------------------------------
# the two projection constructions


def sring_from_wl3m(group: FiniteGroup, m: int, cap=None) -> tuple[SRing, dict]:
    """Project WL_{3m}(G) to G^m and verify the result is an S-ring >= A_m."""
    big = wl_m_group(group, 3 * m, cap=cap)
    part, merged = project(big.partition, big.ctx, range(1, m + 1))
    if merged:
        raise TheoremViolationError("projected WL classes partially overlap")
    ctx = power(group, m)
    report = verify_axioms(part, ctx)
    if not report.all_pass:
        raise TheoremViolationError(
            f"pr_m(WL_3m) failed S-ring axioms: {report.witness}"
        )
    ring = SRing(ctx, part)
    am = compute_Am(group, m)
    contains_am = is_coarser_equal(am.partition, part)
    if not contains_am:
        raise TheoremViolationError("pr_m(WL_3m) does not contain A_m(G)")
    return ring, {
        "wl_classes": big.rank,
        "ring_rank": ring.rank,
        "axioms": {"s1": report.s1, "s2": report.s2, "s3": report.s3},
        "contains_Am": contains_am,
    }


def cc_from_sring(group: FiniteGroup, m: int, cap=None) -> tuple[CoherentConfig, dict]:
    """Project S(A_{m+1}(G)) to G^m and verify C1-C3 (and >= WL_m for m >= 2)."""
    ring = compute_Am(group, m + 1, cap=cap)
    part, merged = project(ring.partition, ring.ctx, range(1, m + 1))
    if merged:
        raise TheoremViolationError("projected S-ring classes partially overlap")
    ctx = power(group, m)
    ok1, w1 = check_c1(ctx, part)
    ok2, w2 = check_c2(ctx, part)
    ok3, w3 = check_c3(ctx, part)
    if not (ok1 and ok2 and ok3):
        raise TheoremViolationError(
            f"pr_m(S_{m + 1}) failed C1/C2/C3: {w1 or w2 or w3}"
        )
    rho, mu = _profiles_for(ctx, part)
    cc = CoherentConfig(ctx, part, rho, mu, True, True, True)
    report = {"source_rank": ring.rank, "cc_rank": cc.rank, "c1": ok1, "c2": ok2, "c3": ok3}
    if m >= 2:
        wl = wl_m_group(group, m)
        report["contains_WLm"] = bool(is_coarser_equal(wl.partition, part))
        if not report["contains_WLm"]:
            raise TheoremViolationError("pr_m(S_{m+1}) does not contain WL_m(G)")
    return cc, report


# ---------------------------------------------------------------------------
# JSON


def cc_to_dict(cc: CoherentConfig) -> dict:
    m = cc.ctx.arity
    subsets = [
        [i + 1 for i in range(m) if bits & (1 << i)] for bits in range(1, 1 << m)
    ]
    classes = []
    for i in range(cc.rank):
        classes.append(
            {
                "rho": list(cc.rho[i]),
                "mu": [list(t) for t in (cc.mu[i] or ())],
                "n_K": {
                    ",".join(map(str, K)): cc.n_K(i, K) for K in subsets
                },
            }
        )
    return {
        "domain": cc.ctx.size,
        "arity": m,
        "base_order": cc.ctx.n,
        "class_of": [int(c) for c in cc.partition.class_of],
        "classes": classes,
    }


def save_cc(cc: CoherentConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(cc_to_dict(cc), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
