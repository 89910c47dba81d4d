"""Fast exact power-index engines.

The unit-small Shapley value comes from two memoized recursions on the
threshold: a forward one that conditions on the first player of a random
permutation and a dual one that conditions on the last.  Both count the
permutations in which a fixed small player is pivotal, so the memo tables
store plain integers (the count divided by n! is the Shapley value) and no
rational arithmetic happens until the very end.

Individual players go through a coalition-count dynamic program over the
other players' weights.  The Banzhaf count splits the others into weighted
items (knapsack) and a pool of unit items (a window sum of binomial
coefficients, updated incrementally so huge pools stay cheap).  Deegan-Packel
enumerates minimal winning coalitions by class: how many bigs of each
distinct weight are included, with the small top-up count forced by the
threshold.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .games import (
    AnyGame,
    Big,
    Exact,
    Game,
    GeneralizedGame,
    PlayerId,
    Small,
    player_weight,
)

# ---------------------------------------------------------------------------
# unit-small Shapley value: the two threshold recursions


def dual_threshold(g: Game) -> Game:
    """The game whose small Shapley value equals that of g, mirrored in T.

    The dual threshold is m + sum(A) - T + 1; applying this twice gives back
    the original game.
    """
    return Game(g.big, g.small_count, g.small_count + g.big_sum - g.threshold + 1)


def _capped(big: tuple[int, ...], t: int) -> tuple[int, ...]:
    """Cap each weight at t and restore the non-increasing order."""
    if not big or big[0] <= t:
        return big
    return tuple(sorted((min(w, t) for w in big), reverse=True))


def _without_one(big: tuple[int, ...], w: int) -> tuple[int, ...]:
    """big with one copy of weight w removed (order is preserved)."""
    i = big.index(w)
    return big[:i] + big[i + 1 :]


# Memo tables for the two recursions, kept separate so that agreement
# between them is a real check and not a tautology.  Keys are canonical
# (big weights capped at T and sorted, m, T); values are the number of
# permutations of the m + r players in which one fixed small is pivotal.
_FORWARD_COUNTS: dict[tuple[tuple[int, ...], int, int], int] = {}
_DUAL_COUNTS: dict[tuple[tuple[int, ...], int, int], int] = {}


def _pivot_count_forward(big: tuple[int, ...], m: int, t: int) -> int:
    """Permutations (out of (m+r)!) where a fixed small player is pivotal.

    Conditions on the first player of the permutation: a big with weight
    a < T reduces the problem to threshold T - a without it, one of the
    other m - 1 smalls reduces to threshold T - 1, and the fixed small
    itself is pivotal exactly when T = 1.

    Iterative so that deep thresholds do not hit the recursion limit.
    """
    memo = _FORWARD_COUNTS
    start = (_capped(big, t), m, t)
    stack = [start]
    while stack:
        state = stack[-1]
        if state in memo:
            stack.pop()
            continue
        a, mm, tt = state
        r = len(a)
        if tt == 1:
            # pivotal iff the fixed small comes first
            memo[state] = factorial(mm + r - 1)
            stack.pop()
            continue
        deps: list[tuple[tuple[tuple[int, ...], int, int], int]] = []
        for w, cnt in Counter(a).items():
            if w < tt:
                child = (_capped(_without_one(a, w), tt - w), mm, tt - w)
                deps.append((child, cnt))
        if mm > 1:
            deps.append(((_capped(a, tt - 1), mm - 1, tt - 1), mm - 1))
        missing = [s for s, _ in deps if s not in memo]
        if missing:
            stack.extend(missing)
            continue
        memo[state] = sum(c * memo[s] for s, c in deps)
        stack.pop()
    return memo[start]


def _pivot_count_dual(big: tuple[int, ...], m: int, t: int) -> int:
    """Same count as _pivot_count_forward, conditioning on the last player.

    A big whose removal still leaves a winning grand coalition can go last
    (threshold unchanged, weights unchanged); a small going last reduces m
    by one with the threshold unchanged.  The base case is the game where
    only the grand coalition wins.
    """
    memo = _DUAL_COUNTS
    start = (_capped(big, t), m, t)
    stack = [start]
    while stack:
        state = stack[-1]
        if state in memo:
            stack.pop()
            continue
        a, mm, tt = state
        r = len(a)
        total = mm + sum(a)
        if tt == total:
            # pivotal iff the fixed small comes last
            memo[state] = factorial(mm + r - 1)
            stack.pop()
            continue
        deps = []
        for w, cnt in Counter(a).items():
            if total - w >= tt:
                deps.append(((_without_one(a, w), mm, tt), cnt))
        if mm > 1:
            deps.append(((a, mm - 1, tt), mm - 1))
        missing = [s for s, _ in deps if s not in memo]
        if missing:
            stack.extend(missing)
            continue
        memo[state] = sum(c * memo[s] for s, c in deps)
        stack.pop()
    return memo[start]


def shapley_small(g: Game, engine: str = "auto") -> Exact:
    """Shapley value of one small player, exact.

    engine is "auto", "forward" or "dual".  Auto picks whichever recursion
    has the shallower state space: forward depth tracks T, dual depth tracks
    the dual threshold, so the smaller of the two wins.
    """
    if g.small_count == 0:
        raise ValueError("game has no small players")
    if engine == "auto":
        dual_t = g.small_count + g.big_sum - g.threshold + 1
        engine = "dual" if dual_t < g.threshold else "forward"
    if engine == "forward":
        count = _pivot_count_forward(g.big, g.small_count, g.threshold)
    elif engine == "dual":
        count = _pivot_count_dual(g.big, g.small_count, g.threshold)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return Fraction(count, factorial(g.num_players))


def shapley_small_dual(g: Game) -> Exact:
    """Shapley value of one small player via the last-player recursion."""
    return shapley_small(g, engine="dual")


def shapley_aggregate_big(g: Game) -> Exact:
    """Total Shapley power of the big players, exact.

    By efficiency this is 1 - m * shapley_small(g); with no smalls the bigs
    hold everything, and with no bigs nothing.
    """
    if g.num_big == 0:
        return Fraction(0)
    if g.small_count == 0:
        return Fraction(1)
    return 1 - g.small_count * shapley_small(g)


# ---------------------------------------------------------------------------
# individual players: coalition-count dynamic program


def _others(g: AnyGame, p: PlayerId) -> tuple[int, list[int], int]:
    """(own weight, other weighted items, other unit count) for player p.

    For a unit-small Game the m - 1 (or m) remaining smalls come back as the
    unit count; generalized smalls are ordinary weighted items.
    """
    wp = player_weight(g, p)
    if isinstance(g, Game):
        if isinstance(p, Big):
            return wp, list(g.big[: p.index] + g.big[p.index + 1 :]), g.small_count
        return wp, list(g.big), g.small_count - 1
    items = list(g.big) + list(g.small)
    slot = p.index if isinstance(p, Big) else len(g.big) + p.index
    del items[slot]
    return wp, items, 0


def _count_by_size_and_weight(
    items: list[int], units: int, hi: int
) -> list[list[int]]:
    """counts[s][w] = sub-multisets of items plus units with size s, weight w <= hi.

    Items heavier than hi can never appear in such a subset and are skipped;
    their slots still exist in the game, which only matters to the caller's
    permutation coefficients.
    """
    light = [w for w in items if w <= hi]
    counts = [[0] * (hi + 1) for _ in range(len(light) + units + 1)]
    counts[0][0] = 1
    size = 0
    for w in light:
        size += 1
        for s in range(size, 0, -1):
            row, prev = counts[s], counts[s - 1]
            for v in range(hi, w - 1, -1):
                row[v] += prev[v - w]
    for _ in range(units):
        size += 1
        for s in range(size, 0, -1):
            row, prev = counts[s], counts[s - 1]
            for v in range(hi, 0, -1):
                row[v] += prev[v - 1]
    return counts


def shapley_player(g: AnyGame, p: PlayerId) -> Exact:
    """Shapley value of an individual player, exact.

    Counts, for every size s and weight w in [T - w_p, T - 1], the
    coalitions of the other players that p turns winning, and weights each
    count by s! (n - 1 - s)! / n!.
    """
    wp, items, units = _others(g, p)
    t = g.threshold
    lo, hi = max(t - wp, 0), t - 1
    n = g.num_players
    counts = _count_by_size_and_weight(items, units, hi)
    numerator = 0
    for s, row in enumerate(counts):
        swings = sum(row[lo : hi + 1])
        if swings:
            numerator += swings * factorial(s) * factorial(n - 1 - s)
    return Fraction(numerator, factorial(n))


# ---------------------------------------------------------------------------
# Banzhaf


def _comb_window_sum(n: int, a: int, b: int) -> int:
    """Sum of C(n, j) for j in [a, b], clipped to [0, n].

    Walks the window with the ratio update C(n, j+1) = C(n, j) (n - j)/(j + 1)
    so one binomial is computed from scratch no matter how wide the window.
    """
    a, b = max(a, 0), min(b, n)
    if a > b:
        return 0
    term = comb(n, a)
    total = term
    for j in range(a, b):
        term = term * (n - j) // (j + 1)
        total += term
    return total


def _swing_count(items: list[int], units: int, t: int, wp: int) -> int:
    """Subsets of items plus units whose weight lands in [t - wp, t - 1]."""
    lo, hi = max(t - wp, 0), t - 1
    # subsets containing an item heavier than hi can never land in the window
    light = [w for w in items if w <= hi]
    counts = [0] * (hi + 1)
    counts[0] = 1
    for w in light:
        for v in range(hi, w - 1, -1):
            counts[v] += counts[v - w]
    total = 0
    for v, c in enumerate(counts):
        if c:
            total += c * _comb_window_sum(units, lo - v, hi - v)
    return total


def banzhaf_abs(g: AnyGame, p: PlayerId) -> Exact:
    """Absolute Banzhaf index: swings of p over 2^(n-1), exact."""
    wp, items, units = _others(g, p)
    return Fraction(_swing_count(items, units, g.threshold, wp), 2 ** (g.num_players - 1))


def banzhaf_norm(g: AnyGame, p: PlayerId) -> Exact:
    """Normalized Banzhaf index: p's swings over everyone's swings, exact."""
    t = g.threshold
    own = None
    total = 0
    if isinstance(g, Game):
        for i in range(g.num_big):
            wq, items, units = _others(g, Big(i))
            c = _swing_count(items, units, t, wq)
            total += c
            if isinstance(p, Big) and p.index == i:
                own = c
        if g.small_count:
            wq, items, units = _others(g, Small())
            c = _swing_count(items, units, t, wq)
            total += g.small_count * c
            if isinstance(p, Small):
                own = c
    else:
        players = [Big(i) for i in range(len(g.big))] + [
            Small(i) for i in range(len(g.small))
        ]
        for q in players:
            wq, items, units = _others(g, q)
            c = _swing_count(items, units, t, wq)
            total += c
            if q == p:
                own = c
    if own is None:
        # p was not found among the game's players
        player_weight(g, p)
        raise AssertionError("unreachable")
    if total == 0:
        raise RuntimeError(
            "no player has a swing, which cannot happen in a valid game"
        )
    return Fraction(own, total)


# ---------------------------------------------------------------------------
# Deegan-Packel


@dataclass(frozen=True)
class ApTuple:
    """One class of minimal winning coalitions.

    weight_counts pairs each distinct big weight with how many bigs of that
    weight are included; small_count is the number of smalls topping the
    coalition up to the threshold; multiplicity is how many coalitions the
    class contains.
    """

    weight_counts: tuple[tuple[int, int], ...]
    small_count: int
    multiplicity: int

    @property
    def coalition_size(self) -> int:
        return self.small_count + sum(c for _, c in self.weight_counts)


def ap_tuples(g: Game) -> list[ApTuple]:
    """All classes of minimal winning coalitions of g.

    A class picks i_j bigs of each distinct weight; with combined big weight
    sigma < T it needs exactly T - sigma smalls (feasible when that many
    exist), and with sigma >= T it needs none and is minimal exactly when
    every included big outweighs the surplus sigma - T.
    """
    t, m = g.threshold, g.small_count
    distinct = sorted(Counter(g.big).items(), reverse=True)
    out: list[ApTuple] = []

    def extend(j: int, chosen: list[int], sigma: int, min_in: int | None) -> None:
        if j == len(distinct):
            if sigma < t:
                l = t - sigma
                if l > m:
                    return
            else:
                l = 0
                if min_in is None or min_in <= sigma - t:
                    return
            mult = comb(m, l)
            for (_, avail), c in zip(distinct, chosen):
                mult *= comb(avail, c)
            out.append(
                ApTuple(
                    tuple((w, c) for (w, _), c in zip(distinct, chosen)),
                    l,
                    mult,
                )
            )
            return
        w, avail = distinct[j]
        for c in range(avail + 1):
            new_sigma = sigma + c * w
            new_min = w if c else min_in
            if new_min is not None and new_sigma - t >= new_min:
                # adding more weight can only grow the surplus past the
                # smallest included big, so no completion is minimal
                break
            extend(j + 1, chosen + [c], new_sigma, new_min)

    extend(0, [], 0, None)
    return out


def deegan_packel(g: Game, p: PlayerId) -> Exact:
    """Deegan-Packel index of p: across the minimal winning coalitions, the
    expected share 1/|S| that p collects from the ones containing it, exact.

    Players of equal weight split their class's coalitions evenly, so a big
    of weight w included i times out of its r lookalikes collects i/r of the
    class, and a small collects l/m of it.
    """
    if isinstance(g, GeneralizedGame):
        raise TypeError("deegan_packel needs a unit-small Game")
    wp = player_weight(g, p)  # also validates p against g
    tuples = ap_tuples(g)
    total = sum(tp.multiplicity for tp in tuples)
    assert total > 0, "every game has a minimal winning coalition"
    value = Fraction(0)
    if isinstance(p, Big):
        avail = Counter(g.big)[wp]
        for tp in tuples:
            included = dict(tp.weight_counts)[wp]
            if included:
                value += Fraction(
                    tp.multiplicity * included, avail * tp.coalition_size
                )
    else:
        for tp in tuples:
            if tp.small_count:
                value += Fraction(
                    tp.multiplicity * tp.small_count,
                    g.small_count * tp.coalition_size,
                )
    return value / total
