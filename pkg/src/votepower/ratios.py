"""Power-versus-proportion ratios, bound checks, and parameter scans.

The aggregate big power under an index, divided by the bigs' share of the
total weight, measures how far voting power drifts from proportionality.
This module computes that ratio for single games, checks the proven bounds
(aggregate Shapley ratio at most 2, aggregate Deegan-Packel ratio at most 3,
per-big Shapley value at most its weight share), scans parameter boxes
exhaustively in a deterministic checkpointable order, and evaluates the
single-big family whose Banzhaf ratio grows without bound.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from multiprocessing import get_context

from .games import (
    AnyGame,
    Big,
    Exact,
    Game,
    GeneralizedGame,
    proportional,
    render_game,
)
from .indices import (
    ap_tuples,
    banzhaf_abs,
    banzhaf_norm,
    shapley_aggregate_big,
    shapley_player,
)

INDEX_KINDS = ("shapley", "banzhaf_abs", "banzhaf_norm", "deegan_packel")


@dataclass(frozen=True)
class RatioRecord:
    """Aggregate big power for one game and index, next to proportionality."""

    game: AnyGame
    index_kind: str
    aggregate_big_power: Exact
    proportional: Exact
    ratio: Exact


def _distinct_bigs(g: AnyGame) -> list[tuple[int, int, int]]:
    """(first index, weight, count) for each distinct big weight, descending."""
    out = []
    i = 0
    while i < g.num_big:
        w = g.big[i]
        j = i
        while j < g.num_big and g.big[j] == w:
            j += 1
        out.append((i, w, j - i))
        i = j
    return out


def aggregate_big_power(g: AnyGame, kind: str) -> Exact:
    """Total power of the big players under the given index, exact.

    Equal weights get equal power, so each distinct weight is computed once.
    """
    if kind == "shapley":
        if isinstance(g, Game):
            return shapley_aggregate_big(g)
        total = Fraction(0)
        for i, _, cnt in _distinct_bigs(g):
            total += cnt * shapley_player(g, Big(i))
        return total
    if kind in ("banzhaf_abs", "banzhaf_norm"):
        fn = banzhaf_abs if kind == "banzhaf_abs" else banzhaf_norm
        total = Fraction(0)
        for i, _, cnt in _distinct_bigs(g):
            total += cnt * fn(g, Big(i))
        return total
    if kind == "deegan_packel":
        if not isinstance(g, Game):
            raise ValueError("deegan_packel aggregates need a unit-small Game")
        tuples = ap_tuples(g)
        total = sum(tp.multiplicity for tp in tuples)
        value = Fraction(0)
        for tp in tuples:
            big_members = tp.coalition_size - tp.small_count
            if big_members:
                value += Fraction(tp.multiplicity * big_members, tp.coalition_size)
        return value / total
    raise ValueError(f"unknown index kind {kind!r}")


def ratio_aggregate(g: AnyGame, kind: str) -> RatioRecord:
    """Aggregate big power over the bigs' weight share, exact.

    Errors when the game has no big player (the proportion would be zero).
    """
    if g.num_big == 0:
        raise ValueError("ratio needs at least one big player")
    power = aggregate_big_power(g, kind)
    prop = proportional(g)
    return RatioRecord(g, kind, power, prop, power / prop)


# ---------------------------------------------------------------------------
# bound checks


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the proven bounds on one game.

    The aggregate Shapley ratio is at most 2 and the aggregate Deegan-Packel
    ratio at most 3; each big's Shapley value is at most its weight share
    a_i/(m+r). Ratios are None when the game has no bigs (the bounds hold
    vacuously). No cap is claimed for individual Deegan-Packel values, so
    bigs whose value exceeds their weight share there are listed
    informationally, not as failures.
    """

    game: Game
    shapley_ratio: Exact | None
    shapley_ratio_ok: bool
    dp_ratio: Exact | None
    dp_ratio_ok: bool
    weight_share_failures: tuple[tuple[int, Exact, Exact], ...]
    dp_over_weight_share: tuple[tuple[int, Exact, Exact], ...]

    @property
    def all_ok(self) -> bool:
        return (
            self.shapley_ratio_ok
            and self.dp_ratio_ok
            and not self.weight_share_failures
        )


def check_bounds(g: Game) -> BoundReport:
    """Check the aggregate and per-big bounds on one unit-small game."""
    if not isinstance(g, Game):
        raise TypeError("bound checks are defined for unit-small games")
    if g.num_big == 0:
        return BoundReport(g, None, True, None, True, (), ())
    prop = proportional(g)
    shapley_ratio = shapley_aggregate_big(g) / prop
    distinct = _distinct_bigs(g)
    tuples = ap_tuples(g)
    ap_total = sum(tp.multiplicity for tp in tuples)
    dp_power = Fraction(0)
    for tp in tuples:
        big_members = tp.coalition_size - tp.small_count
        if big_members:
            dp_power += Fraction(tp.multiplicity * big_members, tp.coalition_size)
    dp_ratio = dp_power / ap_total / prop
    n = g.num_players
    failures = []
    dp_over = []
    for d, (i, w, cnt) in enumerate(distinct):
        share = Fraction(w, n)
        phi = shapley_player(g, Big(i))
        if phi > share:
            failures.append((i, phi, share))
        rho = Fraction(0)
        for tp in tuples:
            included = tp.weight_counts[d][1]
            if included:
                rho += Fraction(tp.multiplicity * included, cnt * tp.coalition_size)
        rho /= ap_total
        if rho > share:
            dp_over.append((i, rho, share))
    return BoundReport(
        g,
        shapley_ratio,
        shapley_ratio <= 2,
        dp_ratio,
        dp_ratio <= 3,
        tuple(failures),
        tuple(dp_over),
    )


# ---------------------------------------------------------------------------
# exhaustive scans


@dataclass(frozen=True)
class ScanSpec:
    """Bounds and settings for one exhaustive scan.

    max_big_sum and max_small cap the big-weight sum and the small side (the
    small count when min_small_size is 1, the small-weight sum otherwise),
    both inclusive. For min_small_size > 1 the scan keeps only games whose
    big sum is strictly below the small sum; the rest are tallied in
    skipped_count, since their big proportion is already at least a half and
    the ratio bound is immediate.
    """

    max_big_sum: int
    max_small: int
    min_small_size: int = 1
    index_kind: str = "shapley"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.max_big_sum < 1 or self.max_small < 1:
            raise ValueError("scan bounds must be at least 1")
        if self.min_small_size < 1:
            raise ValueError("min_small_size must be at least 1")
        if self.index_kind not in INDEX_KINDS:
            raise ValueError(f"unknown index kind {self.index_kind!r}")
        if self.index_kind == "deegan_packel" and self.min_small_size > 1:
            raise ValueError("deegan_packel scans need min_small_size 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class ScanReport:
    """Outcome of a scan: how many games, and the ratio extrema with witnesses."""

    spec: ScanSpec
    instance_count: int
    skipped_count: int
    max_record: RatioRecord
    min_record: RatioRecord


def _multisets(total_max: int, low: int, high: int | None):
    """Non-increasing tuples with parts in [low, high], nonempty, sum <= total_max.

    Ordered by (sum, lexicographic), which makes enumeration deterministic
    and resumable by index.
    """
    for total in range(low, total_max + 1):
        for parts in _partitions_into(total, low, high):
            yield parts


def _partitions_into(total: int, low: int, high: int | None):
    """Non-increasing part tuples summing to total, parts in [low, high],
    in ascending lexicographic order of the tuples."""
    cap = total if high is None else min(high, total)

    def rec(remaining: int, most: int):
        if remaining == 0:
            yield ()
            return
        for first in range(low, min(most, remaining) + 1):
            if remaining - first == 0 or remaining - first >= low:
                for rest in rec(remaining - first, first):
                    yield (*rest, first)

    yield from sorted(tuple(sorted(p, reverse=True)) for p in rec(total, cap))


def scan_games(spec: ScanSpec):
    """Yield every game of the scan, in scan order.

    Big-weight multisets go by (sum, lexicographic) order; within one, the
    small side ascends, then the threshold. For unit smalls the enumeration
    covers each canonical form exactly once: only thresholds at or above the
    top weight are generated, and any admissible game below that range is
    the canonical (capped) image of one inside it. Generalized games have no
    capping rule, so every threshold in range appears.
    """
    for big in _multisets(spec.max_big_sum, 2 * spec.min_small_size, None):
        yield from _group_games(spec, big)


def _skipped_in_group(spec: ScanSpec, big: tuple[int, ...]) -> int:
    """Games of one big group dropped by the strict big-sum < small-sum rule."""
    if spec.min_small_size == 1:
        return 0
    s = spec.min_small_size
    dropped = 0
    for small in _multisets(spec.max_small, s, 2 * s - 1):
        if sum(big) >= sum(small):
            dropped += sum(big) + sum(small)
    return dropped


def _csv_row(rec: RatioRecord) -> str:
    g = rec.game
    big = ",".join(str(w) for w in g.big)
    small = str(g.small_count) if isinstance(g, Game) else ",".join(
        str(w) for w in g.small
    )
    return (
        f"{big}|{small}|{g.threshold}|{rec.ratio.numerator}|"
        f"{rec.ratio.denominator}|{float(rec.ratio)}\n"
    )


def _group_games(spec: ScanSpec, big: tuple[int, ...]):
    if spec.min_small_size == 1:
        for m in range(0, spec.max_small + 1):
            for t in range(big[0], sum(big) + m + 1):
                yield Game(big, m, t)
    else:
        s = spec.min_small_size
        for small in _multisets(spec.max_small, s, 2 * s - 1):
            if sum(big) >= sum(small):
                continue
            for t in range(1, sum(big) + sum(small) + 1):
                yield GeneralizedGame(big, small, s, t)


def _scan_group(args: tuple[ScanSpec, int, tuple[int, ...]]):
    """Process one big-weight group: ratios, local extrema, CSV rows."""
    spec, gi, big = args
    count = 0
    best = worst = None
    rows = []
    for g in _group_games(spec, big):
        rec = ratio_aggregate(g, spec.index_kind)
        count += 1
        rows.append(_csv_row(rec))
        if best is None or rec.ratio > best.ratio:
            best = rec
        if worst is None or rec.ratio < worst.ratio:
            worst = rec
    return gi, count, _skipped_in_group(spec, big), best, worst, "".join(rows)


CHECKPOINT_VERSION = 1


def _write_checkpoint(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(payload, f)
    os.replace(tmp, path)


def _record_to_json(rec: RatioRecord | None) -> dict | None:
    if rec is None:
        return None
    return {
        "game": render_game(rec.game),
        "num": rec.ratio.numerator,
        "den": rec.ratio.denominator,
    }


def _record_from_json(data: dict | None, spec: ScanSpec) -> RatioRecord | None:
    if data is None:
        return None
    from .games import parse_game

    g = parse_game(data["game"])
    rec = ratio_aggregate(g, spec.index_kind)
    if (rec.ratio.numerator, rec.ratio.denominator) != (data["num"], data["den"]):
        raise ValueError("checkpoint witness does not re-evaluate to its ratio")
    return rec


def scan(
    spec: ScanSpec,
    csv_path: str | None = None,
    checkpoint_path: str | None = None,
    progress=None,
) -> ScanReport:
    """Run a full scan, optionally streaming CSV rows and checkpointing.

    The checkpoint file is JSON, written atomically after each completed
    big-weight group; resuming validates that the stored spec matches and
    truncates the CSV stream back to the last completed group, so an
    interrupted scan continues to a byte-identical result.
    """
    groups = list(_multisets(spec.max_big_sum, 2 * spec.min_small_size, None))
    start = 0
    instance_count = 0
    skipped_count = 0
    best: RatioRecord | None = None
    worst: RatioRecord | None = None
    csv_bytes = 0

    if checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path) as f:
            state = json.load(f)
        if state.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint format {state.get('format_version')!r} is not "
                f"{CHECKPOINT_VERSION}"
            )
        stored = state.get("spec", {})
        current = {
            "max_big_sum": spec.max_big_sum,
            "max_small": spec.max_small,
            "min_small_size": spec.min_small_size,
            "index_kind": spec.index_kind,
        }
        if stored != current:
            raise ValueError(
                f"checkpoint was written for {stored}, not {current}"
            )
        start = state["next_group"]
        instance_count = state["instance_count"]
        skipped_count = state["skipped_count"]
        best = _record_from_json(state["max"], spec)
        worst = _record_from_json(state["min"], spec)
        csv_bytes = state["csv_bytes"]

    out = None
    if csv_path:
        if csv_bytes:
            with open(csv_path, "r+b") as f:
                f.truncate(csv_bytes)
            out = open(csv_path, "ab")
        else:
            out = open(csv_path, "wb")

    def finish_group(gi, count, skipped, gbest, gworst, rows):
        nonlocal instance_count, skipped_count, best, worst, csv_bytes
        instance_count += count
        skipped_count += skipped
        if gbest is not None and (best is None or gbest.ratio > best.ratio):
            best = gbest
        if gworst is not None and (worst is None or gworst.ratio < worst.ratio):
            worst = gworst
        if out is not None:
            data = rows.encode()
            out.write(data)
            out.flush()
            csv_bytes += len(data)
        if checkpoint_path:
            _write_checkpoint(
                checkpoint_path,
                {
                    "format_version": CHECKPOINT_VERSION,
                    "kind": "ratio-scan",
                    "spec": {
                        "max_big_sum": spec.max_big_sum,
                        "max_small": spec.max_small,
                        "min_small_size": spec.min_small_size,
                        "index_kind": spec.index_kind,
                    },
                    "next_group": gi + 1,
                    "instance_count": instance_count,
                    "skipped_count": skipped_count,
                    "max": _record_to_json(best),
                    "min": _record_to_json(worst),
                    "csv_bytes": csv_bytes,
                },
            )
        if progress is not None:
            progress(gi, instance_count)

    work = [(spec, gi, big) for gi, big in enumerate(groups) if gi >= start]
    try:
        if spec.workers > 1 and len(work) > 1:
            with get_context("fork").Pool(spec.workers) as pool:
                for result in pool.imap(_scan_group, work):
                    finish_group(*result)
        else:
            for item in work:
                finish_group(*_scan_group(item))
    finally:
        if out is not None:
            out.close()

    if best is None:
        raise ValueError("scan bounds admit no games")
    return ScanReport(spec, instance_count, skipped_count, best, worst)


# ---------------------------------------------------------------------------
# the unbounded-Banzhaf family


@dataclass(frozen=True)
class BanzhafFamilyRecord:
    """One member of the family A={2k}, m=k^1.5, T=(2k+k^1.5)/2.

    Carries both the absolute and the normalized ratio record; k must be the
    square of an even integer so that m and T are integers.
    """

    k: int
    absolute: RatioRecord
    normalized: RatioRecord

    @property
    def game(self) -> Game:
        return self.absolute.game


def family_game(k: int) -> Game:
    """The family member at k, validating the integrality condition on k."""
    root = isqrt(k)
    if root * root != k or root % 2 != 0:
        raise ValueError(f"k must be the square of an even integer, got {k}")
    m = k * root
    return Game((2 * k,), m, (2 * k + m) // 2)


def banzhaf_family(ks: list[int]) -> list[BanzhafFamilyRecord]:
    """Evaluate the family exactly at each k, with both Banzhaf flavors.

    The single big's swing count and a small's swing count are each computed
    once and shared between the absolute and normalized records.
    """
    from .indices import _swing_count

    out = []
    for k in ks:
        g = family_game(k)
        m, t = g.small_count, g.threshold
        big_swings = _swing_count([], m, t, 2 * k)
        small_swings = _swing_count([2 * k], m - 1, t, 1)
        prop = proportional(g)
        abs_power = Fraction(big_swings, 2 ** (g.num_players - 1))
        norm_power = Fraction(big_swings, big_swings + m * small_swings)
        out.append(
            BanzhafFamilyRecord(
                k,
                RatioRecord(g, "banzhaf_abs", abs_power, prop, abs_power / prop),
                RatioRecord(g, "banzhaf_norm", norm_power, prop, norm_power / prop),
            )
        )
    return out
