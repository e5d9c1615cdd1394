"""Exact maximum clique via branch-and-bound with greedy coloring bounds.

Vertex sets are Python integers used as bitmasks, which keeps the inner loop
allocation-free; graphs in this project stay below a few thousand nodes.
"""

from __future__ import annotations

import time

from .graph import Graph


def _greedy_clique(masks: list[int], order: list[int]) -> int:
    best = 0
    for start in order[: max(8, len(order) // 16)]:
        size = 1
        candidates = masks[start]
        while candidates:
            # pick the candidate with most neighbors inside the candidate set
            best_v, best_deg = -1, -1
            m = candidates
            while m:
                v = (m & -m).bit_length() - 1
                m &= m - 1
                d = (masks[v] & candidates).bit_count()
                if d > best_deg:
                    best_v, best_deg = v, d
            size += 1
            candidates &= masks[best_v]
        best = max(best, size)
    return best


def _color_order(p: int, masks: list[int]) -> tuple[list[int], list[int]]:
    """Greedy coloring of the candidate set; returns vertices and color bounds
    in nondecreasing color order."""
    order: list[int] = []
    bounds: list[int] = []
    color = 0
    remaining = p
    while remaining:
        color += 1
        available = remaining
        while available:
            v = (available & -available).bit_length() - 1
            available &= available - 1
            order.append(v)
            bounds.append(color)
            remaining &= ~(1 << v)
            available &= ~masks[v]
    return order, bounds


def max_clique(g: Graph, time_budget: float = 10.0) -> tuple[int, bool]:
    """Maximum clique size and whether the search finished exactly.

    On budget expiry the best clique found so far is returned with the exact
    flag cleared (it is still a valid lower bound).
    """
    n = g.n
    if n == 0:
        return 0, True
    masks = [0] * n
    for i, nbrs in enumerate(g.adj):
        m = 0
        for j in nbrs:
            m |= 1 << int(j)
        masks[i] = m
    if all(m == 0 for m in masks):
        return 1, True

    order = sorted(range(n), key=lambda v: masks[v].bit_count(), reverse=True)
    best = max(1, _greedy_clique(masks, order))
    deadline = time.monotonic() + time_budget
    timed_out = False

    def expand(r_size: int, p: int) -> None:
        nonlocal best, timed_out
        if timed_out:
            return
        if time.monotonic() > deadline:
            timed_out = True
            return
        verts, bounds = _color_order(p, masks)
        for idx in range(len(verts) - 1, -1, -1):
            if r_size + bounds[idx] <= best:
                return
            v = verts[idx]
            best = max(best, r_size + 1)
            nxt = p & masks[v]
            if nxt:
                expand(r_size + 1, nxt)
                if timed_out:
                    return
            p &= ~(1 << v)

    expand(0, (1 << n) - 1)
    return best, not timed_out
