"""Brute-force reference implementations of every power index.

These are deliberately dumb: they enumerate permutations or subsets over
distinct player slots with no multiset shortcuts, so they can serve as ground
truth for the fast engines. Size guards raise instead of truncating.

Slot layout used throughout: big players occupy slots 0..r-1 (weights sorted
non-increasing), small players occupy slots r..n-1. Small players are distinct
slots inside the oracle even though a Game treats them as interchangeable;
their per-slot results are cross-checked equal before one is returned.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .games import AnyGame, Big, Exact, Game, PlayerId, Small

PERMUTATION_GUARD = 10
SUBSET_SHAPLEY_GUARD = 16
SUBSET_GUARD = 20


@dataclass(frozen=True)
class Coalition:
    """A subset of player slots with its cached weight sum."""

    members: tuple[int, ...]
    weight: int


def _slot_weights(g: AnyGame) -> tuple[int, ...]:
    if isinstance(g, Game):
        return g.big + (1,) * g.small_count
    return g.big + g.small


def _check_guard(g: AnyGame, max_players: int, what: str) -> None:
    n = g.num_players
    if n > max_players:
        raise ValueError(
            f"game has {n} players, the {what} guard is {max_players}"
            " (pass max_players to raise it)"
        )


def _small_slots(g: AnyGame) -> range:
    return range(g.num_big, g.num_players)


def _resolve_slot(g: AnyGame, p: PlayerId) -> int:
    """Slot index of p; for a Game's Small any slot works (they are checked equal)."""
    if isinstance(p, Big):
        if not 0 <= p.index < g.num_big:
            raise ValueError(f"no big player with index {p.index}")
        return p.index
    if isinstance(g, Game):
        if p.index is not None:
            raise ValueError("small players in a unit-small game are interchangeable; use Small()")
        if g.small_count == 0:
            raise ValueError("game has no small players")
        return g.num_big
    if p.index is None or not 0 <= p.index < g.num_small:
        raise ValueError(f"no small player with index {p.index}")
    return g.num_big + p.index


# Per-game result caches. The enumerations stay dumb; caching only avoids
# redoing the identical pass when several players of one game are queried.
_pivot_cache: dict[tuple[tuple[int, ...], int], tuple[int, ...]] = {}
_subset_shapley_cache: dict[tuple[tuple[int, ...], int], tuple[int, ...]] = {}
_ap_cache: dict[tuple[tuple[int, ...], int], list[Coalition]] = {}


def _pivot_counts(g: AnyGame) -> tuple[int, ...]:
    """Per-slot pivot counts over all n! permutations of the slot list."""
    weights = _slot_weights(g)
    key = (weights, g.threshold)
    cached = _pivot_cache.get(key)
    if cached is not None:
        return cached
    n = len(weights)
    t = g.threshold
    counts = [0] * n
    for perm in itertools.permutations(range(n)):
        prefix = 0
        pivot = -1
        pivots_seen = 0
        for slot in perm:
            nxt = prefix + weights[slot]
            if prefix < t <= nxt:
                pivot = slot
                pivots_seen += 1
            prefix = nxt
        # every admissible game has exactly one pivotal player per permutation
        if pivots_seen != 1:
            raise AssertionError(f"{pivots_seen} pivots in permutation {perm} of {weights}, T={t}")
        counts[pivot] += 1
    if isinstance(g, Game) and g.small_count > 1:
        small = [counts[s] for s in _small_slots(g)]
        if len(set(small)) != 1:
            raise AssertionError(f"small-player pivot counts differ: {small}")
    result = tuple(counts)
    _pivot_cache[key] = result
    return result


def shapley_bruteforce(g: AnyGame, p: PlayerId, max_players: int = PERMUTATION_GUARD) -> Exact:
    """Shapley-Shubik index by full permutation enumeration."""
    _check_guard(g, max_players, "permutation oracle")
    counts = _pivot_counts(g)
    slot = _resolve_slot(g, p)
    return Fraction(counts[slot], factorial(g.num_players))


def _subset_shapley_counts(g: AnyGame) -> tuple[int, ...]:
    """Per-slot sums of |S|! (n-1-|S|)! over pivotal subsets S of the others."""
    weights = _slot_weights(g)
    key = (weights, g.threshold)
    cached = _subset_shapley_cache.get(key)
    if cached is not None:
        return cached
    n = len(weights)
    t = g.threshold
    fact = [factorial(i) for i in range(n)]
    sums = [0] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + weights[low.bit_length() - 1]
    nums = [0] * n
    for mask in range(1 << n):
        w = sums[mask]
        if w >= t:
            continue
        coeff = fact[mask.bit_count()] * fact[n - 1 - mask.bit_count()]
        for slot in range(n):
            if not mask >> slot & 1 and w + weights[slot] >= t:
                nums[slot] += coeff
    if isinstance(g, Game) and g.small_count > 1:
        small = [nums[s] for s in _small_slots(g)]
        if len(set(small)) != 1:
            raise AssertionError(f"small-player subset sums differ: {small}")
    result = tuple(nums)
    _subset_shapley_cache[key] = result
    return result


def shapley_bruteforce_subsets(
    g: AnyGame, p: PlayerId, max_players: int = SUBSET_SHAPLEY_GUARD
) -> Exact:
    """Shapley-Shubik index by explicit subset enumeration.

    Same definition as shapley_bruteforce, different enumeration: each subset S
    of the other players contributes |S|!(n-1-|S|)!/n! when p completes it.
    Reaches a few more players than the factorial walk does.
    """
    _check_guard(g, max_players, "subset-Shapley oracle")
    nums = _subset_shapley_counts(g)
    slot = _resolve_slot(g, p)
    return Fraction(nums[slot], factorial(g.num_players))


def banzhaf_abs_bruteforce(g: AnyGame, p: PlayerId, max_players: int = SUBSET_GUARD) -> Exact:
    """Absolute Banzhaf index: swing fraction over all subsets of the others."""
    _check_guard(g, max_players, "subset oracle")
    weights = _slot_weights(g)
    n = len(weights)
    t = g.threshold

    def swings(slot: int) -> int:
        others = [weights[i] for i in range(n) if i != slot]
        wp = weights[slot]
        sums = [0] * (1 << (n - 1))
        for mask in range(1, 1 << (n - 1)):
            low = mask & -mask
            sums[mask] = sums[mask ^ low] + others[low.bit_length() - 1]
        return sum(1 for w in sums if w < t <= w + wp)

    slot = _resolve_slot(g, p)
    count = swings(slot)
    if isinstance(g, Game) and isinstance(p, Small) and g.small_count > 1:
        for other in _small_slots(g):
            if other != slot and swings(other) != count:
                raise AssertionError("small-player swing counts differ")
    return Fraction(count, 1 << (n - 1))


def all_pivotal_enumerate(g: AnyGame, max_players: int = SUBSET_GUARD) -> list[Coalition]:
    """All coalitions that win and lose a member's worth by dropping anyone.

    Deterministic order: ascending over the subset bitmask with slot 0 as the
    lowest bit.
    """
    _check_guard(g, max_players, "subset oracle")
    weights = _slot_weights(g)
    key = (weights, g.threshold)
    cached = _ap_cache.get(key)
    if cached is not None:
        return list(cached)
    n = len(weights)
    t = g.threshold
    sums = [0] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + weights[low.bit_length() - 1]
    out = []
    for mask in range(1, 1 << n):
        w = sums[mask]
        if w < t:
            continue
        members = tuple(i for i in range(n) if mask >> i & 1)
        if all(w - weights[i] < t for i in members):
            out.append(Coalition(members=members, weight=w))
    _ap_cache[key] = out
    return list(out)


def deegan_packel_bruteforce(g: AnyGame, p: PlayerId, max_players: int = SUBSET_GUARD) -> Exact:
    """Deegan-Packel index: mean of membership/size over the all-pivotal sets."""
    _check_guard(g, max_players, "subset oracle")
    ap = all_pivotal_enumerate(g, max_players)
    if not ap:
        raise AssertionError("no all-pivotal coalition exists; the game cannot be won")

    def value(slot: int) -> Exact:
        by_size: dict[int, int] = {}
        for coalition in ap:
            if slot in coalition.members:
                size = len(coalition.members)
                by_size[size] = by_size.get(size, 0) + 1
        total = sum(Fraction(count, size) for size, count in sorted(by_size.items()))
        return Fraction(total, len(ap))

    slot = _resolve_slot(g, p)
    result = value(slot)
    if isinstance(g, Game) and isinstance(p, Small) and g.small_count > 1:
        for other in _small_slots(g):
            if other != slot and value(other) != result:
                raise AssertionError("small-player Deegan-Packel values differ")
    return result
