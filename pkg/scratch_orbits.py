"""Scratch: orbit-compressed closure at stabilization scale."""
import sys, time
sys.path.insert(0, "src")
import numpy as np

from schurpower.groups import (cyclic_group, elementary_abelian_group, symmetric_group,
                               dihedral_group, quaternion_group, power)
from schurpower.partitions import from_class_of
from schurpower.refinement import schur_refine


def am_initial(ctx):
    """Monochrome A_m initial partition labels."""
    N, n, m = ctx.size, ctx.n, ctx.arity
    digits = ctx.digits()
    pattern = ((digits == 0).astype(np.int64) * (2 ** np.arange(m))).sum(1)
    labels = pattern.copy()
    if n > 1:
        diag_codes = np.array([g * (N - 1) // (n - 1) for g in range(1, n)])
        labels[diag_codes] = 1 << (m + 1)
    return from_class_of(labels)


cases = [
    ("Z3^4", cyclic_group(3), 4),
    ("Z2^6", cyclic_group(2), 6),
    ("S3^3", symmetric_group(3), 3),
    ("Z4^3", cyclic_group(4), 3),
]
print("== correctness: symmetry vs plain ==")
for name, G, m in cases:
    ctx = power(G, m)
    P = am_initial(ctx)
    p1, s1 = schur_refine(ctx, P, symmetry=True)
    p2, s2 = schur_refine(ctx, P, symmetry=False)
    print(f"{name}: rank={p1.rank} match={p1 == p2} rounds={s1.rounds} "
          f"cols_sym={s1.kernel_columns} cols_plain={s2.kernel_columns}")

print("== scale ==")
big = [
    ("Z5^6", cyclic_group(5), 6),
    ("D4^5", dihedral_group(4), 5),
    ("Q8^5", quaternion_group(), 5),
    ("Z2^16", cyclic_group(2), 16),
    ("Z6^6", cyclic_group(6), 6),
    ("S3^6", symmetric_group(3), 6),
    ("Z3^10", cyclic_group(3), 10),
    ("(Z2^2)^8", elementary_abelian_group(2, 2), 8),
    ("Z4^8", cyclic_group(4), 8),
]
for name, G, m in big:
    ctx = power(G, m)
    t0 = time.time()
    P = am_initial(ctx)
    p1, s1 = schur_refine(ctx, P, time_budget=600)
    t1 = time.time()
    print(f"{name}: N={ctx.size} rank={p1.rank} rounds={s1.rounds} t={t1-t0:.1f}s sym={s1.symmetry} cols={s1.kernel_columns}", flush=True)
