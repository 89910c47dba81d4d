"""The false-name split game: partitions, payoffs, bounds, and the big scan.

A big player may present itself as several fake identities whose weights
form a partition of its own. Splitting changes everyone's power; this module
builds the derived game, evaluates each player's payoff (the sum of its
pieces' index values), checks the proven payoff bounds, and exhaustively
scans a parameter box for the before/after aggregate-power ratio, whose
conjectured range is (0, 2].

The scan treats the base and the split side uniformly: a weight-1 piece (or
a weight-1 strategic player) is indistinguishable from a small player, so
the aggregate strategic power of any weight multiset X is 1 - m * phi1 of
the game whose bigs are X's parts of weight at least 2 and whose smalls are
the original m plus X's weight-1 parts. Ratios are exact; the hot loop runs
on floats and falls back to integer arithmetic near bin edges, near the
extrema, and near the conjectured bound, so nothing reported depends on
floating point.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import factorial
from multiprocessing import get_context

import numpy as np

from .games import Big, Exact, Game, Small, proportional
from .indices import (
    banzhaf_norm,
    deegan_packel,
    shapley_aggregate_big,
    shapley_player,
    shapley_small,
)
from .ratios import aggregate_big_power

PAYOFF_KINDS = ("shapley", "banzhaf_norm", "deegan_packel")


# ---------------------------------------------------------------------------
# partitions and profiles


@dataclass(frozen=True)
class Partition:
    """A multiset of positive integers, stored non-increasing."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = tuple(sorted(self.parts, reverse=True))
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("a partition needs at least one part")
        if parts[-1] < 1:
            raise ValueError(f"partition parts must be positive, got {parts[-1]}")

    @property
    def total(self) -> int:
        return sum(self.parts)


_PARTITION_TUPLES: dict[int, list[tuple[int, ...]]] = {}


def _partition_tuples(n: int) -> list[tuple[int, ...]]:
    """All partitions of n as non-increasing tuples, reverse-lexicographic."""
    got = _PARTITION_TUPLES.get(n)
    if got is not None:
        return got

    def rec(remaining: int, most: int):
        if remaining == 0:
            yield ()
            return
        for first in range(min(most, remaining), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first, *rest)

    out = list(rec(n, n))
    _PARTITION_TUPLES[n] = out
    return out


def partitions(n: int) -> list[Partition]:
    """Every partition of n, in reverse-lexicographic order.

    partitions(4) is [{4}, {3,1}, {2,2}, {2,1,1}, {1,1,1,1}].
    """
    if n < 1:
        raise ValueError(f"partitions are defined for n >= 1, got {n}")
    return [Partition(p) for p in _partition_tuples(n)]


@dataclass(frozen=True)
class StrategyProfile:
    """One partition per big player, in big-index order."""

    partitions: tuple[Partition, ...]


def identity_profile(g: Game) -> StrategyProfile:
    """The profile where every big player keeps its weight whole."""
    return StrategyProfile(tuple(Partition((w,)) for w in g.big))


@dataclass(frozen=True)
class SplitGame:
    """The game after a profile is applied, plus who owns which piece.

    Pieces of weight at least 2 are the derived game's bigs; big_owner[j] is
    the base index of the big that owns derived big j. Weight-1 pieces join
    the small pool; unit_counts[i] is how many of them base big i owns. The
    derived small count is the base count plus all the weight-1 pieces.
    """

    game: Game
    big_owner: tuple[int, ...]
    unit_counts: tuple[int, ...]

    @property
    def base_small_count(self) -> int:
        return self.game.small_count - sum(self.unit_counts)


def apply_profile(g: Game, prof: StrategyProfile) -> SplitGame:
    """Build the derived game for a profile, validating piece totals."""
    if len(prof.partitions) != g.num_big:
        raise ValueError(
            f"profile has {len(prof.partitions)} partitions for "
            f"{g.num_big} big players"
        )
    pieces = []
    units = [0] * g.num_big
    for i, part in enumerate(prof.partitions):
        if part.total != g.big[i]:
            raise ValueError(
                f"partition {part.parts} sums to {part.total}, but big "
                f"player {i} weighs {g.big[i]}"
            )
        for w in part.parts:
            if w >= 2:
                pieces.append((w, i))
            else:
                units[i] += 1
    pieces.sort(key=lambda p: (-p[0], p[1]))
    derived = Game(
        big=tuple(w for w, _ in pieces),
        small_count=g.small_count + sum(units),
        threshold=g.threshold,
    )
    return SplitGame(derived, tuple(i for _, i in pieces), tuple(units))


def payoff(sg: SplitGame, owner: int, kind: str = "shapley") -> Exact:
    """Sum of the owner's pieces' index values in the derived game."""
    if not 0 <= owner < len(sg.unit_counts):
        raise ValueError(
            f"no player {owner} (the base game has {len(sg.unit_counts)} bigs)"
        )
    if kind not in PAYOFF_KINDS:
        raise ValueError(f"unknown payoff kind {kind!r}")
    g = sg.game
    by_weight: dict[int, Exact] = {}
    total = Fraction(0)
    for j, who in enumerate(sg.big_owner):
        if who != owner:
            continue
        w = g.big[j]
        if w not in by_weight:
            by_weight[w] = _piece_value(g, Big(j), kind)
        total += by_weight[w]
    if sg.unit_counts[owner]:
        total += sg.unit_counts[owner] * _piece_value(g, Small(), kind)
    return total


def _piece_value(g: Game, p, kind: str) -> Exact:
    if kind == "shapley":
        if isinstance(p, Small):
            return shapley_small(g)
        return shapley_player(g, p)
    if kind == "banzhaf_norm":
        return banzhaf_norm(g, p)
    return deegan_packel(g, p)


def profile_payoffs(g: Game, prof: StrategyProfile, kind: str = "shapley") -> tuple[Exact, ...]:
    """Every base big's payoff under the profile."""
    sg = apply_profile(g, prof)
    return tuple(payoff(sg, i, kind) for i in range(g.num_big))


def split_ratio(g: Game, prof: StrategyProfile, kind: str = "shapley") -> Exact:
    """Aggregate big power before the split over the total payoff after it.

    The after side is always positive (every piece multiset leaves some
    strategic power), so the ratio is a well-defined exact rational.
    """
    before = aggregate_big_power(g, kind)
    after = sum(profile_payoffs(g, prof, kind), Fraction(0))
    return before / after


# ---------------------------------------------------------------------------
# payoff bounds


@dataclass(frozen=True)
class ProfileBoundReport:
    """The proven payoff bounds evaluated on one (game, profile) pair.

    The total payoff is capped by 2P for Shapley and 3P for Deegan-Packel
    (no cap is known for the normalized Banzhaf, so those fields are None).
    Each big's own payoff is capped by a_i/(m + r + c_i - 1) where c_i is
    how many pieces it split into; that bound is Shapley-only.
    """

    game: Game
    profile: StrategyProfile
    kind: str
    payoffs: tuple[Exact, ...]
    total_payoff: Exact
    proportional: Exact
    cap: Exact | None
    cap_ok: bool
    cap_margin: Exact | None
    player_caps: tuple[tuple[Exact, bool, Exact], ...]

    @property
    def all_ok(self) -> bool:
        return self.cap_ok and all(ok for _, ok, _ in self.player_caps)


def profile_bound_check(
    g: Game, prof: StrategyProfile, kind: str = "shapley"
) -> ProfileBoundReport:
    """Evaluate the aggregate and per-player payoff bounds exactly."""
    payoffs = profile_payoffs(g, prof, kind)
    total = sum(payoffs, Fraction(0))
    prop = proportional(g)
    if kind == "shapley":
        cap = 2 * prop
    elif kind == "deegan_packel":
        cap = 3 * prop
    else:
        cap = None
    cap_ok = total <= cap if cap is not None else True
    cap_margin = cap - total if cap is not None else None
    player_caps = ()
    if kind == "shapley":
        m, r = g.small_count, g.num_big
        caps = []
        for i, u in enumerate(payoffs):
            c = len(prof.partitions[i].parts)
            bound = Fraction(g.big[i], m + r + c - 1)
            caps.append((bound, u <= bound, bound - u))
        player_caps = tuple(caps)
    return ProfileBoundReport(
        g, prof, kind, payoffs, total, prop, cap, cap_ok, cap_margin, player_caps
    )


def big_pivot_probability(g: Game) -> Exact:
    """Probability that the pivotal player of a random permutation is big.

    The pivot is unique in every permutation, so this is the aggregate big
    Shapley power: zero without bigs, one without smalls.
    """
    return shapley_aggregate_big(g)


# ---------------------------------------------------------------------------
# the exhaustive conjecture scan


@dataclass(frozen=True)
class ConjectureSpec:
    """Bounds for the scan: big-weight sums up to max_big_sum (the base
    multiset may contain weight-1 strategic players), small counts from 1 up
    to max_small, every threshold in range. Both bounds are inclusive."""

    max_big_sum: int = 24
    max_small: int = 24
    workers: int = 1

    def __post_init__(self) -> None:
        if self.max_big_sum < 1 or self.max_small < 1:
            raise ValueError("scan bounds must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class SplitWitness:
    """One (game, split) pair: the base big multiset (which may contain
    weight-1 players), the small count, the threshold, the resulting piece
    multiset with a profile producing it, and the exact ratio."""

    base_big: tuple[int, ...]
    small_count: int
    threshold: int
    derived_big: tuple[int, ...]
    profile: StrategyProfile
    ratio: Exact


@dataclass(frozen=True)
class ConjectureReport:
    """Scan outcome: counts, extrema with witnesses, ratio histogram.

    pairs_checked counts distinct (game, piece multiset) pairs, the identity
    split included; pairs_raw counts profiles before collapsing the ones
    that produce the same pieces (reported for comparison, not enumerated).
    infinite_count and out_of_range_count are defensive tallies for ratios
    with zero denominator or exactly 2; both stay 0 on every known scan.
    """

    spec: ConjectureSpec
    games_checked: int
    pairs_checked: int
    pairs_raw: int
    infinite_count: int
    out_of_range_count: int
    histogram: tuple[int, ...]
    max_witness: SplitWitness
    min_witness: SplitWitness

    @property
    def histogram_fractions(self) -> tuple[Fraction, ...]:
        total = sum(self.histogram)
        return tuple(Fraction(c, total) for c in self.histogram)


class ConjectureCounterexample(RuntimeError):
    """Raised when a before/after ratio exceeds 2; carries the witness."""

    def __init__(self, witness: SplitWitness):
        self.witness = witness
        super().__init__(
            f"ratio {witness.ratio} > 2 at base big={witness.base_big}, "
            f"m={witness.small_count}, T={witness.threshold}, "
            f"split={witness.derived_big}"
        )


# Pivot counts for the scan, keyed by (capped big id, small count, T).
# Values are the number of permutations in which one fixed small player is
# pivotal; the Shapley value is that над the player-count factorial.
_CAPPED_IDS: dict[tuple[int, ...], int] = {}
_SCAN_COUNTS: dict[tuple[int, int, int], int] = {}


def _capped_id(c: tuple[int, ...]) -> int:
    got = _CAPPED_IDS.get(c)
    if got is None:
        got = len(_CAPPED_IDS)
        _CAPPED_IDS[c] = got
    return got


def _pivot_count(c: tuple[int, ...], mu: int, t: int) -> int:
    """Pivot-permutation count of one fixed small in ({c}, mu, t), memoized.

    Same first-player recursion as the public engine, kept separate so the
    scan's memo stays compact and the public tables stay testable on their
    own.
    """
    stack = [(c, mu, t)]
    while stack:
        cc, mm, tt = stack[-1]
        key = (_capped_id(cc), mm, tt)
        if key in _SCAN_COUNTS:
            stack.pop()
            continue
        if tt == 1:
            _SCAN_COUNTS[key] = factorial(mm + len(cc) - 1)
            stack.pop()
            continue
        deps = []
        prev = None
        for i, w in enumerate(cc):
            if w == prev or w >= tt:
                prev = w
                continue
            prev = w
            rest = cc[:i] + cc[i + 1 :]
            child = (
                tuple(sorted((min(x, tt - w) for x in rest), reverse=True)),
                mm,
                tt - w,
            )
            deps.append((child, cc.count(w)))
        if mm > 1:
            deps.append(
                (
                    (tuple(min(x, tt - 1) for x in cc), mm - 1, tt - 1),
                    mm - 1,
                )
            )
        missing = []
        total = 0
        for (dc, dm, dt), mult in deps:
            got = _SCAN_COUNTS.get((_capped_id(dc), dm, dt))
            if got is None:
                missing.append((dc, dm, dt))
            else:
                total += mult * got
        if missing:
            stack.extend(missing)
            continue
        _SCAN_COUNTS[key] = total
        stack.pop()
    return _SCAN_COUNTS[(_capped_id(c), mu, t)]


class _NData:
    """Per-n static data: partitions, their refinement pairs, raw counts."""

    def __init__(self, n: int):
        parts = _partition_tuples(n)
        self.parts = parts
        self.ones = [sum(1 for w in p if w == 1) for p in parts]
        self.ge2 = [tuple(w for w in p if w >= 2) for p in parts]
        self.nparts = [len(p) for p in parts]
        index = {p: i for i, p in enumerate(parts)}
        ia = []
        ib = []
        raw = 0
        for a, p in enumerate(parts):
            raw_a = 1
            for w in p:
                raw_a *= len(_partition_tuples(w))
            raw += raw_a
            refs = {(): None}
            acc = [()]
            for w in p:
                nxt = set()
                for left in acc:
                    for q in _partition_tuples(w):
                        nxt.add(tuple(sorted(left + q, reverse=True)))
                acc = list(nxt)
            for b in sorted(index[b] for b in acc):
                ia.append(a)
                ib.append(b)
        self.ia = np.asarray(ia, dtype=np.int32)
        self.ib = np.asarray(ib, dtype=np.int32)
        self.raw_profiles = raw


_NDATA: dict[int, _NData] = {}


def _ndata(n: int) -> _NData:
    got = _NDATA.get(n)
    if got is None:
        got = _NData(n)
        _NDATA[n] = got
    return got


def _first_profile(base: tuple[int, ...], derived: tuple[int, ...]) -> StrategyProfile:
    """The first profile (per-player reverse-lex order) producing derived."""
    target = tuple(sorted(derived, reverse=True))
    for choice in product(*[_partition_tuples(w) for w in base]):
        merged = tuple(sorted((w for q in choice for w in q), reverse=True))
        if merged == target:
            return StrategyProfile(tuple(Partition(q) for q in choice))
    raise AssertionError("derived pieces do not refine the base weights")


def _shard_scan(args: tuple[int, int]) -> dict:
    """Scan one (n, m) shard: all partitions of n as bases, all splits,
    all thresholds. Returns counts, histogram, and local extrema."""
    n, m = args
    if n == 0:
        return {
            "games": m,
            "pairs": 0,
            "raw": 0,
            "infinite": 0,
            "out_of_range": 0,
            "hist": np.zeros(20, dtype=np.int64),
            "best": None,
            "worst": None,
        }
    nd = _ndata(n)
    ia, ib = nd.ia, nd.ib
    npart = len(nd.parts)
    hist = np.zeros(20, dtype=np.int64)
    pairs = 0
    infinite = 0
    out_of_range = 0
    best = None  # (num, den, t, pair_index) with num/den unreduced
    worst = None
    for t in range(1, m + n + 1):
        nums = []
        dens = []
        vals = np.empty(npart, dtype=np.float64)
        for a in range(npart):
            mu = m + nd.ones[a]
            c = tuple(min(w, t) for w in nd.ge2[a])
            cnt = _pivot_count(c, mu, t)
            q = factorial(m + nd.nparts[a])
            p = q - m * cnt
            nums.append(p)
            dens.append(q)
            vals[a] = p / q if p.bit_length() < 1000 else float(p) / float(q)
        before = vals[ia]
        after = vals[ib]
        zero_after = after == 0.0
        if zero_after.any():
            for j in np.nonzero(zero_after)[0]:
                if dens[ib[j]] == nums[ib[j]] * 0 + 0:  # placeholder
                    pass
            exact_zero = [j for j in np.nonzero(zero_after)[0] if nums[ib[j]] == 0]
            infinite += len(exact_zero)
            for j in exact_zero:
                if nums[ia[j]] != 0:
                    raise ConjectureCounterexample(
                        _witness(nd, m, t, int(j), Fraction(1, 0))
                    )
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = before / after
        t10 = ratio * 10.0
        bins = np.floor(t10).astype(np.int64)
        ident = ia == ib
        bins[ident] = 10
        drop = zero_after.copy()
        suspicious = (~ident) & (~drop) & (
            (np.abs(t10 - np.rint(t10)) < 1e-6) | (bins >= 20) | (bins < 0)
        )
        for j in np.nonzero(suspicious)[0]:
            pa, qa = nums[ia[j]], dens[ia[j]]
            pb, qb = nums[ib[j]], dens[ib[j]]
            rn, rd = pa * qb, qa * pb
            if rn > 2 * rd:
                raise ConjectureCounterexample(
                    _witness(nd, m, t, int(j), Fraction(rn, rd))
                )
            b = (10 * rn) // rd
            if b >= 20:
                out_of_range += 1
                drop[j] = True
            else:
                bins[j] = b
        hist += np.bincount(bins[~drop], minlength=20)
        pairs += len(ia)
        best = _update_extremum(best, nd, m, t, ratio, nums, dens, greater=True)
        worst = _update_extremum(worst, nd, m, t, ratio, nums, dens, greater=False)
    return {
        "games": npart * (m + n),
        "pairs": pairs * 0 + pairs,
        "raw": nd.raw_profiles * (m + n),
        "infinite": infinite,
        "out_of_range": out_of_range,
        "hist": hist,
        "best": best,
        "worst": worst,
    }


def _update_extremum(cur, nd, m, t, ratio, nums, dens, greater: bool):
    """Fold this threshold's float extremum into the exact running one."""
    fin = np.isfinite(ratio)
    if not fin.any():
        return cur
    local = np.max(ratio[fin]) if greater else np.min(ratio[fin])
    if cur is not None:
        cur_f = cur[0] / cur[1]
        if greater and local <= cur_f - 1e-6:
            return cur
        if not greater and local >= cur_f + 1e-6:
            return cur
    band = (ratio >= local - 1e-6) if greater else (ratio <= local + 1e-6)
    band &= fin
    ia, ib = nd.ia, nd.ib
    for j in np.nonzero(band)[0]:
        rn = nums[ia[j]] * dens[ib[j]]
        rd = dens[ia[j]] * nums[ib[j]]
        if cur is None:
            cur = (rn, rd, m, t, int(j))
            continue
        cmp = rn * cur[1] - cur[0] * rd
        if (greater and cmp > 0) or (not greater and cmp < 0):
            cur = (rn, rd, m, t, int(j))
    return cur


def _witness(nd: _NData, m: int, t: int, j: int, ratio: Fraction) -> SplitWitness:
    base = nd.parts[nd.ia[j]]
    derived = nd.parts[nd.ib[j]]
    return SplitWitness(
        base, m, t, derived, _first_profile(base, derived), ratio
    )


CONJECTURE_CHECKPOINT_VERSION = 1


def conjecture_scan(
    spec: ConjectureSpec,
    histogram_path: str | None = None,
    checkpoint_path: str | None = None,
    progress=None,
) -> ConjectureReport:
    """Scan every (game, split) pair in the bounds; abort past ratio 2.

    Shards by (base weight sum, small count); witnesses are the first
    attainment of each extremum in (n, m, T, pair) order regardless of the
    worker count. The optional checkpoint resumes an interrupted scan; the
    optional histogram CSV is written once the scan completes.
    """
    shards = [
        (n, m)
        for n in range(0, spec.max_big_sum + 1)
        for m in range(1, spec.max_small + 1)
    ]
    start = 0
    games = pairs = raw = infinite = out_of_range = 0
    hist = np.zeros(20, dtype=np.int64)
    best = worst = None  # (num, den, n, m, t, pair_index)

    if checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path) as f:
            state = json.load(f)
        if state.get("format_version") != CONJECTURE_CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint format {state.get('format_version')!r} is not "
                f"{CONJECTURE_CHECKPOINT_VERSION}"
            )
        stored = state.get("bounds")
        current = {"max_big_sum": spec.max_big_sum, "max_small": spec.max_small}
        if stored != current:
            raise ValueError(f"checkpoint was written for {stored}, not {current}")
        start = state["next_shard"]
        games = state["games_checked"]
        pairs = state["pairs_checked"]
        raw = state["pairs_raw"]
        infinite = state["infinite_count"]
        out_of_range = state["out_of_range_count"]
        hist = np.asarray(state["histogram"], dtype=np.int64)
        best = tuple(state["max"]) if state["max"] else None
        worst = tuple(state["min"]) if state["min"] else None

    def merge(shard_index: int, shard: dict) -> None:
        nonlocal games, pairs, raw, infinite, out_of_range, best, worst, hist
        n, m = shards[shard_index]
        games += shard["games"]
        pairs += shard["pairs"]
        raw += shard["raw"]
        infinite += shard["infinite"]
        out_of_range += shard["out_of_range"]
        hist += shard["hist"]
        for key, greater in (("best", True), ("worst", False)):
            cand = shard[key]
            if cand is None:
                continue
            rn, rd, mm, tt, j = cand
            cur = best if greater else worst
            take = cur is None
            if not take:
                cmp = rn * cur[1] - cur[0] * rd
                take = cmp > 0 if greater else cmp < 0
            if take:
                packed = (rn, rd, n, mm, tt, j)
                if greater:
                    best = packed
                else:
                    worst = packed
        if checkpoint_path:
            payload = {
                "format_version": CONJECTURE_CHECKPOINT_VERSION,
                "kind": "conjecture-scan",
                "bounds": {
                    "max_big_sum": spec.max_big_sum,
                    "max_small": spec.max_small,
                },
                "next_shard": shard_index + 1,
                "games_checked": games,
                "pairs_checked": pairs,
                "pairs_raw": raw,
                "infinite_count": infinite,
                "out_of_range_count": out_of_range,
                "histogram": [int(c) for c in hist],
                "max": [int(x) for x in best] if best else None,
                "min": [int(x) for x in worst] if worst else None,
            }
            tmp = checkpoint_path + ".tmp"
            with open(tmp, "w") as f:
                json.dump(payload, f)
            os.replace(tmp, checkpoint_path)
        if progress is not None:
            progress(shard_index, len(shards), games, pairs)

    todo = list(range(start, len(shards)))
    if spec.workers > 1 and len(todo) > 1:
        with get_context("fork").Pool(spec.workers) as pool:
            for idx, shard in zip(
                todo, pool.imap(_shard_scan, [shards[i] for i in todo])
            ):
                merge(idx, shard)
    else:
        for idx in todo:
            merge(idx, _shard_scan(shards[idx]))

    if best is None or worst is None:
        raise ValueError("scan bounds admit no pairs")

    def unpack(packed) -> SplitWitness:
        rn, rd, n, m, t, j = packed
        nd = _ndata(n)
        return _witness(nd, m, t, j, Fraction(rn, rd))

    report = ConjectureReport(
        spec,
        games,
        pairs,
        raw,
        infinite,
        out_of_range,
        tuple(int(c) for c in hist),
        unpack(best),
        unpack(worst),
    )
    if histogram_path:
        total = sum(report.histogram)
        with open(histogram_path, "w") as f:
            f.write("bin_low,count,fraction\n")
            for b, count in enumerate(report.histogram):
                f.write(f"{b / 10:.1f},{count},{count / total}\n")
    return report
