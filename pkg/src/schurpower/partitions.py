"""Canonical partitions of indexed domains and the order/projection operations.

A partition is stored in canonical form: class ids are contiguous and ordered
by minimal member, so two partitions are equal iff their class_of arrays are
equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .groups import PowerContext


@dataclass(frozen=True)
class Partition:
    """A partition of [0, N) with class-of lookup and sorted member lists."""

    size: int
    class_of: np.ndarray
    classes: list = field(compare=False)

    def __post_init__(self):
        self.class_of.setflags(write=False)

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.size == other.size
            and np.array_equal(self.class_of, other.class_of)
        )

    def __hash__(self):
        return hash((self.size, self.class_of.tobytes()))

    @property
    def rank(self) -> int:
        return len(self.classes)

    def class_sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    def is_discrete(self) -> bool:
        return self.rank == self.size


def from_class_of(labels, size: int | None = None) -> Partition:
    """Canonicalize an arbitrary labeling into a Partition."""
    labels = np.asarray(labels)
    if size is not None and labels.shape != (size,):
        raise ValidationError(f"class_of length {labels.shape} != domain {size}")
    n = labels.shape[0]
    if n == 0:
        raise ValidationError("empty domain")
    uniq, inverse = np.unique(labels, return_inverse=True)
    # rank labels by minimal member so ids are canonical
    firsts = np.full(len(uniq), n, dtype=np.int64)
    np.minimum.at(firsts, inverse, np.arange(n))
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(firsts, kind="stable")] = np.arange(len(uniq))
    class_of = rank[inverse].astype(np.int32)
    members = np.argsort(class_of, kind="stable")
    bounds = np.searchsorted(class_of[members], np.arange(len(uniq) + 1))
    classes = [members[bounds[i] : bounds[i + 1]] for i in range(len(uniq))]
    return Partition(n, class_of, classes)


def from_classes(classes: Sequence[Sequence[int]], size: int) -> Partition:
    labels = np.full(size, -1, dtype=np.int64)
    for i, cls in enumerate(classes):
        cls = np.asarray(cls, dtype=np.int64)
        if cls.size == 0:
            raise ValidationError(f"class {i} is empty")
        if (labels[cls] != -1).any():
            raise ValidationError(f"class {i} overlaps an earlier class")
        labels[cls] = i
    if (labels == -1).any():
        missing = int(np.nonzero(labels == -1)[0][0])
        raise ValidationError(f"element {missing} not covered by any class")
    return from_class_of(labels)


def discrete(size: int) -> Partition:
    return from_class_of(np.arange(size))


def one_class(size: int) -> Partition:
    return from_class_of(np.zeros(size, dtype=np.int64))


def meet(p: Partition, q: Partition) -> Partition:
    """Common refinement: same class iff same class in both inputs."""
    if p.size != q.size:
        raise ValidationError(f"domain mismatch: {p.size} != {q.size}")
    combined = p.class_of.astype(np.int64) * q.rank + q.class_of
    return from_class_of(combined)


def is_coarser_equal(p: Partition, q: Partition) -> bool:
    """True iff every class of p is a union of classes of q (p <= q)."""
    if p.size != q.size:
        raise ValidationError(f"domain mismatch: {p.size} != {q.size}")
    # p is coarser-or-equal iff p's label is constant on each q-class
    qfirst = np.fromiter((cls[0] for cls in q.classes), dtype=np.int64, count=q.rank)
    return bool(np.array_equal(p.class_of, p.class_of[qfirst][q.class_of]))


def project(
    p: Partition, ctx: PowerContext, K: Sequence[int]
) -> tuple[Partition, bool]:
    """Project a partition of G^m to G^{|K|} along pr_K.

    Classes are the images pr_K(X); images that coincide as sets become one
    class, and partially overlapping images are merged transitively so the
    result is a partition.  Returns (partition, merged) where merged reports
    whether any two distinct images ended up in the same output class.
    """
    K = sorted(int(i) for i in K)
    if not K:
        raise ValidationError("projection index set K must be nonempty")
    if K[0] < 1 or K[-1] > ctx.arity:
        raise ValidationError(f"K = {K} out of range 1..{ctx.arity}")
    if p.size != ctx.size:
        raise ValidationError("partition does not live on the given power context")
    k = len(K)
    out_size = ctx.n**k
    proj = ctx.project_codes(np.arange(ctx.size), K)
    # union-find over the projected domain; union within each image set
    parent = np.arange(out_size, dtype=np.int64)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return int(a)

    image_sets = []
    for cls in p.classes:
        img = np.unique(proj[cls])
        image_sets.append(img)
        r0 = find(int(img[0]))
        for v in img[1:]:
            r = find(int(v))
            if r != r0:
                parent[r] = r0
    labels = np.fromiter((find(int(v)) for v in range(out_size)), dtype=np.int64)
    out = from_class_of(labels)
    distinct_images = len({img.tobytes() for img in image_sets})
    merged = out.rank < distinct_images
    return out, merged


def coordinate_map_image(ctx: PowerContext, codes, sigma: Sequence[int]) -> np.ndarray:
    """Image {x^sigma : x in codes} for a total map sigma on 1..m (1-based)."""
    sig = np.asarray(sigma, dtype=np.int64) - 1
    if sig.shape != (ctx.arity,) or sig.min() < 0 or sig.max() >= ctx.arity:
        raise ValidationError(f"sigma must be a total map on 1..{ctx.arity}")
    return np.unique(ctx.permute_coordinates(np.asarray(codes, dtype=np.int64), sig))


def full_preimage(ctx: PowerContext, K: Sequence[int], codes) -> np.ndarray:
    """All x in G^m with pr_K(x) in codes; size |codes| * n^(m-|K|)."""
    K = sorted(int(i) for i in K)
    if not K:
        raise ValidationError("K must be nonempty")
    if K[0] < 1 or K[-1] > ctx.arity:
        raise ValidationError(f"K = {K} out of range 1..{ctx.arity}")
    codes = np.asarray(codes, dtype=np.int64)
    rest = [i for i in range(1, ctx.arity + 1) if i not in K]
    n = ctx.n
    # spread each projected code back over the K digit positions
    out = np.zeros(len(codes), dtype=np.int64)
    for pos, i in enumerate(K):
        out += ((codes // n**pos) % n) * n ** (i - 1)
    for i in rest:
        out = (out[:, None] + (np.arange(n) * n ** (i - 1))[None, :]).ravel()
    return np.sort(out)


def partition_to_dict(p: Partition) -> dict:
    return {"domain": p.size, "class_of": [int(c) for c in p.class_of]}


def partition_from_dict(d: dict) -> Partition:
    if not isinstance(d, dict) or "domain" not in d or "class_of" not in d:
        raise ValidationError('partition JSON must have "domain" and "class_of" keys')
    return from_class_of(np.asarray(d["class_of"]), size=int(d["domain"]))


def save_partition(p: Partition, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(partition_to_dict(p), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_partition(path: str) -> Partition:
    with open(path) as fh:
        return partition_from_dict(json.load(fh))
