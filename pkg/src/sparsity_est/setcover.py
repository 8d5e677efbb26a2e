"""Exact minimum set cover over packed-int universes, by branch and bound."""

from __future__ import annotations

from typing import Sequence


def greedy_cover(universe: int, sets: Sequence[int]) -> list[int] | None:
    """Classic greedy cover; returns chosen set indices or None if infeasible."""
    chosen: list[int] = []
    left = universe
    while left:
        best, gain = -1, 0
        for k, s in enumerate(sets):
            g = (s & left).bit_count()
            if g > gain:
                best, gain = k, g
        if best < 0:
            return None
        chosen.append(best)
        left &= ~sets[best]
    return chosen


def min_cover(universe: int, sets: Sequence[int], limit: int | None = None) -> list[int] | None:
    """Smallest list of set indices whose union contains ``universe``.

    Branches on the uncovered element with the fewest covering sets and
    prunes with ``ceil(|uncovered| / max set size)``.  When ``limit`` is given
    only covers of size <= ``limit`` are searched; None means none exists.
    """
    sets = [s & universe for s in sets]
    if not universe:
        return []
    greedy = greedy_cover(universe, sets)
    if greedy is None:
        return None
    best: list[int] | None = greedy
    bound = len(greedy)
    if limit is not None and bound > limit:
        best, bound = None, limit + 1

    covering: dict[int, list[int]] = {}
    rest = universe
    while rest:
        low = rest & -rest
        bit = low.bit_length() - 1
        covering[bit] = [k for k, s in enumerate(sets) if s & low]
        rest ^= low

    def search(left: int, chosen: list[int]) -> None:
        nonlocal best, bound
        if not left:
            if len(chosen) < bound:
                best, bound = list(chosen), len(chosen)
            return
        widest = max((s & left).bit_count() for s in sets)
        need = -(-left.bit_count() // widest)
        if len(chosen) + need >= bound:
            return
        options = None
        rest = left
        while rest:
            low = rest & -rest
            bit = low.bit_length() - 1
            cand = covering[bit]
            if options is None or len(cand) < len(options):
                options = cand
                if len(cand) == 1:
                    break
            rest ^= low
        assert options is not None
        for k in sorted(options, key=lambda k: -(sets[k] & left).bit_count()):
            chosen.append(k)
            search(left & ~sets[k], chosen)
            chosen.pop()

    search(universe, [])
    return best
