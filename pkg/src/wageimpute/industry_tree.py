"""Regression-tree classing of numeric NAICS codes.

Codes are split greedily on a single continuous axis so that each class is
a contiguous NAICS range, which keeps hierarchical prefixes (52xxxx,
5241xx, ...) together. Leaves become baseline-hazard strata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptyInput

REL_TOL = 1e-4


@dataclass(frozen=True)
class Node:
    """Either an internal split (``split`` set) or a leaf (``leaf_id`` set)."""

    count: int
    mean: float
    split: float | None = None
    left: "Node | None" = None
    right: "Node | None" = None
    leaf_id: int | None = None
    lo: float = -np.inf
    hi: float = np.inf

    @property
    def is_leaf(self) -> bool:
        return self.split is None


@dataclass(frozen=True)
class IndustryTree:
    root: Node
    min_leaf: int
    rel_tol: float = REL_TOL

    def leaves(self) -> list[Node]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return sorted(out, key=lambda n: n.leaf_id)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def splits(self) -> list[float]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.append(node.split)
                stack.extend((node.left, node.right))
        return sorted(out)

    def to_dict(self) -> dict:
        def enc(node):
            if node.is_leaf:
                return {"leaf_id": node.leaf_id, "count": node.count, "mean": node.mean}
            return {"split": node.split, "count": node.count, "mean": node.mean,
                    "left": enc(node.left), "right": enc(node.right)}
        return {"min_leaf": self.min_leaf, "rel_tol": self.rel_tol, "root": enc(self.root)}

    @classmethod
    def from_dict(cls, d: dict) -> "IndustryTree":
        def dec(n, lo, hi):
            if "leaf_id" in n:
                return Node(count=n["count"], mean=n["mean"], leaf_id=n["leaf_id"], lo=lo, hi=hi)
            s = float(n["split"])
            return Node(count=n["count"], mean=n["mean"], split=s,
                        left=dec(n["left"], lo, s), right=dec(n["right"], s, hi), lo=lo, hi=hi)
        return cls(dec(d["root"], -np.inf, np.inf), int(d["min_leaf"]), float(d.get("rel_tol", REL_TOL)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def best_split(codes: np.ndarray, y: np.ndarray, min_leaf: int):
    """SSE-optimal admissible split of ``(codes, y)`` sorted by code.

    Returns ``(split_value, sse_reduction, n_left)`` or ``None`` when no
    admissible split exists. Ties go to the smallest split value.
    """
    n = len(y)
    if n < 2 * min_leaf:
        return None
    yc = y - y.mean()
    csum = np.cumsum(yc)
    csq = np.cumsum(yc * yc)
    total_sse = csq[-1] - csum[-1] ** 2 / n
    # candidate k = size of left child; split must fall between distinct codes
    k = np.arange(1, n)
    ok = (codes[1:] != codes[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
    if not ok.any():
        return None
    k = k[ok]
    left_sse = csq[k - 1] - csum[k - 1] ** 2 / k
    right_sse = (csq[-1] - csq[k - 1]) - (csum[-1] - csum[k - 1]) ** 2 / (n - k)
    gain = total_sse - (left_sse + right_sse)
    # near-equal gains are ties; the first one has the smallest split value
    j = int(np.flatnonzero(gain >= gain.max() - 1e-12 * max(total_sse, 1.0))[0])
    kk = int(k[j])
    return 0.5 * (codes[kk - 1] + codes[kk]), float(gain[j]), kk


def fit_industry_tree(pairs: Iterable[tuple[float, float]], min_leaf: int = 80,
                      rel_tol: float = REL_TOL) -> IndustryTree:
    """Greedy binary partitioning of NAICS codes on the response.

    A node splits at the midpoint maximising the SSE reduction among those
    leaving at least ``min_leaf`` members on each side, provided the
    reduction exceeds ``rel_tol`` times the node SSE.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no (naics, response) pairs to fit")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    arr = np.asarray(pairs, dtype=float)
    # sort on (code, response) so the result is input-order insensitive
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    codes, y = arr[order, 0], arr[order, 1]

    next_id = [0]

    def grow(lo_i, hi_i, lo, hi):
        c, r = codes[lo_i:hi_i], y[lo_i:hi_i]
        n = hi_i - lo_i
        mean = float(r.mean())
        sse = float(((r - mean) ** 2).sum())
        found = best_split(c, r, min_leaf) if sse > 0 else None
        if found is None or found[1] <= rel_tol * sse:
            leaf = Node(count=n, mean=mean, leaf_id=next_id[0], lo=lo, hi=hi)
            next_id[0] += 1
            return leaf
        s, _, k = found
        left = grow(lo_i, lo_i + k, lo, s)
        right = grow(lo_i + k, hi_i, s, hi)
        return Node(count=n, mean=mean, split=s, left=left, right=right, lo=lo, hi=hi)

    return IndustryTree(grow(0, len(y), -np.inf, np.inf), min_leaf, rel_tol)


def assign_class(tree: IndustryTree, naics: float) -> int:
    node = tree.root
    while not node.is_leaf:
        node = node.left if naics < node.split else node.right
    return node.leaf_id
