"""Schur-closure partition refinement engine.

The closure of an initial partition of a group domain is the coarsest
partition refining it that satisfies S1-S3.  It is computed by alternating
two invariant-driven splits until a round changes nothing:

  (a) split each class by the class id of the elements' inverses;
  (b) split each class by the exact vector of representation counts
      r_{Y,Z}(g) = #{(y,z) in Y x Z : yz = g} over all ordered class pairs,
      realized per element g as the multiset over u of the label pair
      (cls(u^-1), cls(u*g)).

Both split keys are constant on the classes of any S-ring partition refining
the current one, so the fixpoint is the closure and is independent of split
order.  Keys are exact sorted association lists, never hashes.

Both keys are also equivariant under the coordinate Sym(m)-action on G^m:
for a coordinate permutation sigma, key(x^sigma) is key(x) with both label
components relabeled by the induced class permutation.  A Sym(m)-stable
partition therefore stays stable through every round, and the engine
exploits this twice when the initial partition is stable (compute_Am's
always is):

  * classes: exact keys are computed for one representative class per
    Sym(m)-orbit of classes and the split is transported to the rest of the
    orbit by the connecting coordinate permutation;
  * elements: within a representative class, keys are computed only for one
    element per in-class Sym(m)-orbit and relabeled for the others.

The orbit structure is rediscovered from the adjacent transpositions before
each split and the stability claim is re-verified on the full domain every
time; every transported split is checked for exact set equality.  Any
failure raises instead of silently corrupting the closure.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, TheoremViolationError, ValidationError
from .groups import PowerContext
from .partitions import Partition, from_class_of

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*a, **k):  # pragma: no cover
        def wrap(f):
            return f

        return wrap


_VAL_BUFFER_CAP = 1 << 22  # int64 entries per kernel invocation (32 MiB)
_COUNT_BITS = 21  # counts <= N <= 2^20 pack under the pair code


@dataclass
class ClosureStats:
    """Per-round bookkeeping of a closure run."""

    engine: str
    symmetry: bool = False
    rounds: int = 0
    class_counts: list = field(default_factory=list)
    round_seconds: list = field(default_factory=list)
    kernel_columns: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# product-split key kernel


@njit(cache=True)
def _product_vals_numba(cols, A, uord, bstarts, mul_lvl, lvl_off, levels,
                        n, m, N, r, out_vals, out_offsets, prev_digits, cnt, touched):
    """Emit the packed (pair-code, count) association list for each column.

    cols must be sorted by reversed-digit order so consecutive columns share
    low translate levels.  Returns (columns_done, values_written); the
    caller re-invokes when the output buffer fills up.
    """
    cap = out_vals.shape[0]
    pos = 0
    ncols = cols.shape[0]
    for ci in range(ncols):
        if pos + N > cap:
            return ci, pos
        g = cols[ci]
        # locate the lowest digit that differs from the previous column
        first = m
        gg = g
        for k in range(m):
            d = gg % n
            gg //= n
            if d != prev_digits[k] and k < first:
                first = k
            prev_digits[k] = d
        if ci == 0:
            first = 0
        # rebuild translate levels first..m-1; level k maps u mod n^(k+1) to
        # sum_{i<=k} mulbase[u_i, g_i] * n^i, so level m-1 is u -> code(u*g)
        for k in range(first, m):
            d = (g // n**k) % n
            size_prev = n**k
            base_off = lvl_off[k]
            if k == 0:
                for hi in range(n):
                    levels[hi] = mul_lvl[0, hi, d]
            else:
                prev_off = lvl_off[k - 1]
                for hi in range(n):
                    add = mul_lvl[k, hi, d]
                    dst = base_off + hi * size_prev
                    for lo in range(size_prev):
                        levels[dst + lo] = add + levels[prev_off + lo]
        t_off = lvl_off[m - 1]
        out_offsets[ci] = pos
        for b in range(r):
            lo = bstarts[b]
            hi = bstarts[b + 1]
            if lo == hi:
                continue
            if hi - lo == 1:
                a = A[levels[t_off + uord[lo]]]
                out_vals[pos] = ((b * r + a) << _COUNT_BITS) | 1
                pos += 1
                continue
            ntouch = 0
            for idx in range(lo, hi):
                u = uord[idx]
                a = A[levels[t_off + u]]
                if cnt[a] == 0:
                    touched[ntouch] = a
                    ntouch += 1
                cnt[a] += 1
            if ntouch <= 32:
                for i in range(1, ntouch):
                    key = touched[i]
                    j = i - 1
                    while j >= 0 and touched[j] > key:
                        touched[j + 1] = touched[j]
                        j -= 1
                    touched[j + 1] = key
            else:
                tsl = touched[:ntouch]
                tsl.sort()
            for t in range(ntouch):
                a = touched[t]
                out_vals[pos] = ((b * r + a) << _COUNT_BITS) | cnt[a]
                cnt[a] = 0
                pos += 1
    return ncols, pos


class _Engine:
    def __init__(self, ctx: PowerContext, engine: str):
        self.ctx = ctx
        n, m = ctx.n, ctx.arity
        if engine == "auto":
            engine = "numba" if HAVE_NUMBA else "numpy"
        if engine == "numba" and not HAVE_NUMBA:
            raise ValidationError("numba engine requested but numba is unavailable")
        self.engine = engine
        self.mul_lvl = np.ascontiguousarray(
            ctx.base.mul.astype(np.int64)[None, :, :]
            * (n ** np.arange(m, dtype=np.int64))[:, None, None]
        )
        self.lvl_off = np.zeros(m + 1, dtype=np.int64)
        for k in range(m):
            self.lvl_off[k + 1] = self.lvl_off[k] + n ** (k + 1)
        self.levels = np.zeros(int(self.lvl_off[m]), dtype=np.int64)
        self.invtab = ctx.inverse_table()
        # adjacent-transposition coordinate maps and their code permutations
        self.transpositions: list[tuple[np.ndarray, np.ndarray]] = []
        codes = np.arange(ctx.size, dtype=np.int64)
        for t in range(m - 1):
            tau = np.arange(m, dtype=np.int64)
            tau[t], tau[t + 1] = tau[t + 1], tau[t]
            self.transpositions.append((tau, ctx.permute_coordinates(codes, tau)))

    def product_key_vals(self, A: np.ndarray, cols: np.ndarray) -> list[np.ndarray]:
        """Packed exact association list per column code, aligned with cols."""
        n, m, N = self.ctx.n, self.ctx.arity, self.ctx.size
        r = int(A.max()) + 1
        Ainv = A[self.invtab]
        rev = np.zeros(len(cols), dtype=np.int64)
        c64 = np.asarray(cols, dtype=np.int64)
        for k in range(m):
            rev += ((c64 // n**k) % n) * n ** (m - 1 - k)
        order = np.argsort(rev, kind="stable")
        sorted_cols = c64[order]
        vals_sorted: list[np.ndarray] = []
        if self.engine == "numba":
            A64 = A.astype(np.int64)
            uord = np.argsort(Ainv, kind="stable").astype(np.int64)
            bstarts = np.searchsorted(Ainv[uord], np.arange(r + 1)).astype(np.int64)
            cap = int(min(_VAL_BUFFER_CAP, max(N, 1024) * 256))
            out_vals = np.empty(cap, np.int64)
            prev_digits = np.full(m, -1, dtype=np.int64)
            cnt = np.zeros(r, dtype=np.int64)
            touched = np.empty(r, dtype=np.int64)
            base = 0
            while base < len(sorted_cols):
                remaining = sorted_cols[base:]
                offsets = np.empty(len(remaining), dtype=np.int64)
                done, nvals = _product_vals_numba(
                    remaining, A64, uord, bstarts,
                    self.mul_lvl, self.lvl_off, self.levels,
                    n, m, N, r, out_vals, offsets, prev_digits, cnt, touched,
                )
                if done == 0:
                    raise BudgetExceededError("product key buffer too small for one column")
                ends = np.concatenate((offsets[1:done], [nvals]))
                for i in range(done):
                    vals_sorted.append(out_vals[int(offsets[i]) : int(ends[i])].copy())
                base += done
                prev_digits[:] = -1
        else:
            self._product_vals_numpy(sorted_cols, A, Ainv, r, vals_sorted)
        vals: list[np.ndarray] = [None] * len(cols)  # type: ignore[list-item]
        for i, v in enumerate(vals_sorted):
            vals[int(order[i])] = v
        return vals

    def _product_vals_numpy(self, cols, A, Ainv, r, out: list):
        """Vectorized second route: association lists via sort + run length."""
        n, m, N = self.ctx.n, self.ctx.arity, self.ctx.size
        A64 = A.astype(np.int64)
        base = Ainv.astype(np.int64) * r
        levels: list = [None] * m
        prev = [-1] * m
        for g in cols:
            gg = int(g)
            first = m
            for k in range(m):
                d = gg % n
                gg //= n
                if d != prev[k] and k < first:
                    first = k
                prev[k] = d
            if levels[m - 1] is None:
                first = 0
            for k in range(first, m):
                d = (int(g) // n**k) % n
                term = self.mul_lvl[k, :, d]
                if k == 0:
                    levels[0] = term.copy()
                else:
                    levels[k] = (term[:, None] + levels[k - 1][None, :]).ravel()
            pair_codes = np.sort(base + A64[levels[m - 1]])
            cuts = np.flatnonzero(pair_codes[1:] != pair_codes[:-1]) + 1
            starts = np.concatenate(([0], cuts))
            ends = np.concatenate((cuts, [N]))
            out.append((pair_codes[starts] << _COUNT_BITS) | (ends - starts))


# ---------------------------------------------------------------------------
# Sym(m)-orbit discovery


def _compose(sig: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Coordinate-map composition: x^(compose(sig,tau)) = (x^sig)^tau."""
    return sig[tau]


class _SymView:
    """Sym(m)-orbit structure of a (verified) Sym(m)-stable partition."""

    def __init__(self, engine: _Engine, A, classes):
        self.engine = engine
        self.A = A
        r = len(classes)
        m = engine.ctx.arity
        self.member0 = np.fromiter((c[0] for c in classes), dtype=np.int64, count=r)
        sizes = np.fromiter((len(c) for c in classes), dtype=np.int64, count=r)
        self.maps = []
        for tau, perm_codes in engine.transpositions:
            B = A[perm_codes]  # B[x] = A[x^tau]
            pi = B[self.member0].astype(np.int64)
            if not np.array_equal(B, pi[A]):
                raise TheoremViolationError(
                    "partition lost Sym(m)-stability; refinement bookkeeping is broken"
                )
            if not np.array_equal(sizes[pi], sizes):
                raise TheoremViolationError("Sym(m) image class has a different size")
            self.maps.append((tau, pi, perm_codes))
        identity = np.arange(m, dtype=np.int64)
        rep_of = np.full(r, -1, dtype=np.int64)
        sigma_of: list = [None] * r
        for c in range(r):
            if rep_of[c] != -1:
                continue
            rep_of[c] = c
            sigma_of[c] = identity
            stack = [c]
            while stack:
                d = stack.pop()
                for tau, pi, _ in self.maps:
                    e = int(pi[d])
                    if rep_of[e] == -1:
                        rep_of[e] = c
                        sigma_of[e] = _compose(sigma_of[d], tau)
                        stack.append(e)
        self.rep_of = rep_of
        self.sigma_of = sigma_of
        self._pi_cache: dict[bytes, np.ndarray] = {}

    def label_perm(self, sigma: np.ndarray) -> np.ndarray:
        """Induced permutation of class labels: c -> label of class-c image."""
        key = sigma.tobytes()
        got = self._pi_cache.get(key)
        if got is None:
            got = self.A[
                self.engine.ctx.permute_coordinates(self.member0, sigma)
            ].astype(np.int64)
            self._pi_cache[key] = got
        return got

    def element_orbits_in_class(self, cls: np.ndarray, class_id: int):
        """In-class Sym(m)-orbits: per position (rep position, sigma).

        Only moves that stay inside the class are followed, which is sound
        (possibly incomplete, costing speed not correctness).
        """
        k = len(cls)
        m = self.engine.ctx.arity
        rep_pos = np.full(k, -1, dtype=np.int64)
        sig_pos: list = [None] * k
        identity = np.arange(m, dtype=np.int64)
        edges = []
        for tau, _, perm_codes in self.maps:
            img = perm_codes[cls]
            inside = self.A[img] == class_id
            tgt = np.searchsorted(cls, img)
            edges.append((tau, inside, tgt))
        for p in range(k):
            if rep_pos[p] != -1:
                continue
            rep_pos[p] = p
            sig_pos[p] = identity
            stack = [p]
            while stack:
                q = stack.pop()
                for tau, inside, tgt in edges:
                    if not inside[q]:
                        continue
                    e = int(tgt[q])
                    if rep_pos[e] == -1:
                        rep_pos[e] = rep_pos[p]
                        sig_pos[e] = _compose(sig_pos[q], tau)
                        stack.append(e)
        return rep_pos, sig_pos


def _is_sym_stable(engine: _Engine, A, member0) -> bool:
    for _, perm_codes in engine.transpositions:
        B = A[perm_codes]
        if not np.array_equal(B, B[member0][A]):
            return False
    return True


# ---------------------------------------------------------------------------
# the refinement loop


class _State:
    """Sorted member arrays per class, canonically ordered by minimal member."""

    def __init__(self, ctx, classes):
        self.ctx = ctx
        self.classes = classes
        self.canonical_sort()

    @property
    def rank(self) -> int:
        return len(self.classes)

    def canonical_sort(self):
        self.classes.sort(key=lambda cls: int(cls[0]))

    def labels(self) -> np.ndarray:
        A = np.empty(self.ctx.size, dtype=np.int32)
        for i, cls in enumerate(self.classes):
            A[cls] = i
        return A

    def member0(self) -> np.ndarray:
        return np.fromiter(
            (cls[0] for cls in self.classes), dtype=np.int64, count=self.rank
        )

    def split(self, rep_of, sigma_of, keys_by_rep: dict) -> bool:
        """Split representative classes by key and transport along the orbits."""
        orbit_members = defaultdict(list)
        for i in range(self.rank):
            orbit_members[int(rep_of[i])].append(i)
        new_classes = []
        changed = False
        for rep in sorted(orbit_members):
            idxs = orbit_members[rep]
            keys = keys_by_rep.get(rep)
            children = None
            if keys is not None:
                groups: dict = {}
                for posn, kv in enumerate(keys):
                    groups.setdefault(kv, []).append(posn)
                if len(groups) > 1:
                    X = self.classes[rep]
                    children = [
                        X[np.asarray(poss, dtype=np.int64)]
                        for poss in sorted(groups.values(), key=lambda p: p[0])
                    ]
            if children is None:
                for idx in idxs:
                    new_classes.append(self.classes[idx])
                continue
            changed = True
            for idx in idxs:
                if idx == rep:
                    new_classes.extend(children)
                    continue
                sig = sigma_of[idx]
                imgs = [
                    np.sort(self.ctx.permute_coordinates(ch, sig)) for ch in children
                ]
                whole = np.sort(np.concatenate(imgs))
                if not np.array_equal(whole, self.classes[idx]):
                    raise TheoremViolationError(
                        "Sym(m)-transported split does not partition the sibling class"
                    )
                new_classes.extend(imgs)
        self.classes = new_classes
        self.canonical_sort()
        return changed


class _KeyInterner:
    def __init__(self):
        self.ids: dict[bytes, int] = {}

    def intern(self, key: bytes) -> int:
        got = self.ids.get(key)
        if got is None:
            got = len(self.ids)
            self.ids[key] = got
        return got


def _relabel_vals(vals: np.ndarray, pi: np.ndarray, r: int) -> np.ndarray:
    codes = vals >> _COUNT_BITS
    counts = vals & ((1 << _COUNT_BITS) - 1)
    out = ((pi[codes // r] * r + pi[codes % r]) << _COUNT_BITS) | counts
    out.sort()
    return out


def _trivial_orbits(rank: int, m: int):
    return np.arange(rank, dtype=np.int64), [np.arange(m, dtype=np.int64)] * rank


def schur_refine(
    ctx: PowerContext,
    initial: Partition,
    *,
    engine: str = "auto",
    symmetry: str | bool = "auto",
    round_budget: int | None = None,
    time_budget: float | None = None,
) -> tuple[Partition, ClosureStats]:
    """Refine `initial` to the smallest S-ring partition above it.

    symmetry: "auto" enables Sym(m)-orbit compression iff the initial
    partition is Sym(m)-stable; True requires stability (raises otherwise);
    False always computes exact keys for every element of every class.

    Raises BudgetExceededError when the round or time budget runs out
    (worst case is N rounds of N^2 key work each).
    """
    if initial.size != ctx.size:
        raise ValidationError("initial partition does not live on the carrier")
    if ctx.size == 1:
        return initial, ClosureStats(engine="trivial", rounds=0, class_counts=[1])
    # S1 first: split off the identity
    classes = [np.asarray(c, dtype=np.int64) for c in initial.classes]
    idx0 = int(initial.class_of[0])
    if len(classes[idx0]) > 1:
        rest = classes[idx0][classes[idx0] != 0]
        classes = [np.array([0], dtype=np.int64), rest] + [
            c for i, c in enumerate(classes) if i != idx0
        ]
    state = _State(ctx, classes)
    eng = _Engine(ctx, engine)
    if symmetry == "auto":
        use_sym = ctx.arity > 1 and _is_sym_stable(eng, state.labels(), state.member0())
    elif symmetry:
        use_sym = ctx.arity > 1
        if use_sym and not _is_sym_stable(eng, state.labels(), state.member0()):
            raise ValidationError(
                "symmetry=True requires a Sym(m)-stable initial partition"
            )
    else:
        use_sym = False
    stats = ClosureStats(engine=eng.engine, symmetry=use_sym)
    max_rounds = round_budget if round_budget is not None else ctx.size
    t_start = time.perf_counter()
    invtab = eng.invtab

    while True:
        t0 = time.perf_counter()
        if stats.rounds >= max_rounds:
            raise BudgetExceededError(
                f"closure did not stabilize within {max_rounds} rounds"
            )
        if time_budget is not None and t0 - t_start > time_budget:
            raise BudgetExceededError(
                f"closure exceeded time budget of {time_budget:.1f}s "
                f"after {stats.rounds} rounds"
            )
        before = state.rank
        # (a) inverse split
        A = state.labels()
        view = _SymView(eng, A, state.classes) if use_sym else None
        rep_of, sigma_of = (
            (view.rep_of, view.sigma_of)
            if view
            else _trivial_orbits(state.rank, ctx.arity)
        )
        inv_keys = {
            i: A[invtab[state.classes[i]]].tolist()
            for i in range(state.rank)
            if rep_of[i] == i and len(state.classes[i]) > 1
        }
        changed_a = state.split(rep_of, sigma_of, inv_keys)
        # (b) product split, keyed against the post-(a) snapshot
        A = state.labels()
        view = _SymView(eng, A, state.classes) if use_sym else None
        rep_of, sigma_of = (
            (view.rep_of, view.sigma_of)
            if view
            else _trivial_orbits(state.rank, ctx.arity)
        )
        r = state.rank
        rep_idxs = [
            i for i in range(r) if rep_of[i] == i and len(state.classes[i]) > 1
        ]
        changed_b = False
        ncols = 0
        if rep_idxs:
            interner = _KeyInterner()
            prod_keys = {}
            # element-level compression inside each representative class
            plans = []
            all_cols = []
            for i in rep_idxs:
                X = state.classes[i]
                if view is not None:
                    rep_pos, sig_pos = view.element_orbits_in_class(X, i)
                else:
                    rep_pos = np.arange(len(X), dtype=np.int64)
                    sig_pos = None
                col_pos = np.flatnonzero(rep_pos == np.arange(len(X)))
                col_slice = slice(ncols, ncols + len(col_pos))
                plans.append((i, X, rep_pos, sig_pos, col_pos, col_slice))
                all_cols.append(X[col_pos])
                ncols += len(col_pos)
            cols = np.concatenate(all_cols)
            vals = eng.product_key_vals(A, cols)
            for i, X, rep_pos, sig_pos, col_pos, col_slice in plans:
                cvals = vals[col_slice]
                by_pos = {int(p): v for p, v in zip(col_pos, cvals)}
                ids = []
                for p in range(len(X)):
                    rp = int(rep_pos[p])
                    if rp == p:
                        ids.append(interner.intern(by_pos[p].tobytes()))
                    else:
                        pi = view.label_perm(sig_pos[p])
                        ids.append(
                            interner.intern(
                                _relabel_vals(by_pos[rp], pi, r).tobytes()
                            )
                        )
                prod_keys[i] = ids
            changed_b = state.split(rep_of, sigma_of, prod_keys)
        stats.rounds += 1
        stats.class_counts.append(state.rank)
        stats.kernel_columns.append(ncols)
        stats.round_seconds.append(time.perf_counter() - t0)
        if not (changed_a or changed_b):
            break
        if state.rank <= before:
            raise TheoremViolationError(
                "class count did not increase in a changing round"
            )
    return from_class_of(state.labels()), stats
