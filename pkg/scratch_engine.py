"""Scratch: engine smoke test vs naive reference closure."""
import sys, time
sys.path.insert(0, "src")
import numpy as np
from collections import Counter

from schurpower.groups import cyclic_group, power
from schurpower.partitions import from_class_of, one_class
from schurpower.refinement import schur_refine


def reference_closure(ctx, labels):
    """Naive fixpoint: inverse split then full count-vector split, dict based."""
    N = ctx.size
    mul = np.empty((N, N), dtype=np.int64)
    codes = np.arange(N)
    for y in range(N):
        mul[y] = ctx.mul_codes(np.full(N, y), codes)
    inv = ctx.inverse_table()
    lab = from_class_of(labels).class_of.copy()
    # split off identity
    lab = lab.astype(np.int64)
    lab = lab * 2 + (np.arange(N) == 0)
    lab = from_class_of(lab).class_of.astype(np.int64)
    while True:
        before = lab.max() + 1
        # inverse split
        key = [(int(lab[x]), int(lab[inv[x]])) for x in range(N)]
        uniq = sorted(set(key))
        lab = from_class_of(np.array([uniq.index(k) for k in key])).class_of.astype(np.int64)
        # product split
        cnts = [Counter() for _ in range(N)]
        for y in range(N):
            for z in range(N):
                cnts[mul[y, z]][(int(lab[y]), int(lab[z]))] += 1
        key2 = [(int(lab[g]), tuple(sorted(cnts[g].items()))) for g in range(N)]
        uniq2 = sorted(set(key2))
        lab = from_class_of(np.array([uniq2.index(k) for k in key2])).class_of.astype(np.int64)
        if lab.max() + 1 == before:
            break
    return from_class_of(lab)


def am_initial_labels(ctx):
    """T_m support patterns meet diagonal split (monochrome)."""
    N, n, m = ctx.size, ctx.n, ctx.arity
    digits = ctx.digits()
    pattern = ((digits == 0).astype(np.int64) * (2 ** np.arange(m))).sum(1)
    diag_codes = np.array([g * (N - 1) // (n - 1) for g in range(n)]) if n > 1 else np.array([0])
    isdiag = np.zeros(N, dtype=np.int64)
    isdiag[diag_codes] = 1
    return pattern * 2 + isdiag


for (n, m) in [(2, 2), (3, 2), (4, 2), (3, 3), (2, 4)]:
    G = cyclic_group(n)
    ctx = power(G, m)
    labels = am_initial_labels(ctx)
    t0 = time.time()
    p_engine, stats = schur_refine(ctx, from_class_of(labels), engine="numba")
    t1 = time.time()
    p_np, _ = schur_refine(ctx, from_class_of(labels), engine="numpy")
    p_ref = reference_closure(ctx, labels)
    print(f"Z{n}^{m}: engine rank={p_engine.rank} numpy rank={p_np.rank} ref rank={p_ref.rank} "
          f"match={p_engine == p_ref and p_np == p_ref} rounds={stats.rounds} t={t1-t0:.2f}s")
