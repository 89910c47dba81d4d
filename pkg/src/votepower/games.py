"""Weighted voting game representations and exact arithmetic helpers.

A game has big players (integer weights >= 2), m interchangeable small players
of weight 1, and an integer threshold T. A coalition wins iff its weight sum
reaches T. The generalized variant replaces the unit smalls with a multiset of
small weights in [s, 2s) where s is the minimum small size; big weights are
then >= 2s.

All values that matter are exact rationals (fractions.Fraction); floats appear
only as convenience fields in serialized output.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

Exact = Fraction


@dataclass(frozen=True)
class Big:
    """A big player, addressed by index into the sorted weight tuple."""

    index: int


@dataclass(frozen=True)
class Small:
    """A small player.

    In a Game all smalls are interchangeable, so the id carries no index.
    In a GeneralizedGame smalls have individual weights and the index is
    required (it addresses the sorted small-weight tuple).
    """

    index: int | None = None


PlayerId = Big | Small


@dataclass(frozen=True)
class Game:
    """A weighted voting game with unit-weight small players.

    big is stored sorted non-increasing (multiset semantics: two games with
    the same weights in different order compare equal). Big(i) indexes this
    sorted order.
    """

    big: tuple[int, ...]
    small_count: int
    threshold: int

    def __post_init__(self) -> None:
        big = tuple(sorted(self.big, reverse=True))
        object.__setattr__(self, "big", big)
        for w in big:
            if w < 2:
                raise ValueError(f"big weight {w} is below 2; weight-1 players go in small_count")
        if self.small_count < 0:
            raise ValueError(f"small_count {self.small_count} is negative")
        if len(big) + self.small_count < 1:
            raise ValueError("game needs at least one player")
        total = self.small_count + sum(big)
        if not 1 <= self.threshold <= total:
            raise ValueError(
                f"threshold {self.threshold} out of range: must be between 1 and the total weight {total}"
            )

    @property
    def num_big(self) -> int:
        return len(self.big)

    @property
    def num_players(self) -> int:
        return len(self.big) + self.small_count

    @property
    def big_sum(self) -> int:
        return sum(self.big)

    @property
    def total_weight(self) -> int:
        return self.small_count + sum(self.big)


@dataclass(frozen=True)
class GeneralizedGame:
    """A voting game whose small players have weights in [s, 2s).

    min_small is s; big weights are >= 2s (anything below 2s could not split
    into two viable pieces, which is what makes a player "small"). A Game is
    the s = 1 case with small = m copies of 1.
    """

    big: tuple[int, ...]
    small: tuple[int, ...]
    min_small: int
    threshold: int

    def __post_init__(self) -> None:
        big = tuple(sorted(self.big, reverse=True))
        small = tuple(sorted(self.small, reverse=True))
        object.__setattr__(self, "big", big)
        object.__setattr__(self, "small", small)
        s = self.min_small
        if s < 1:
            raise ValueError(f"min_small {s} must be at least 1")
        for w in small:
            if not s <= w < 2 * s:
                raise ValueError(f"small weight {w} outside [{s}, {2 * s - 1}]")
        for w in big:
            if w < 2 * s:
                raise ValueError(f"big weight {w} is below 2*min_small = {2 * s}")
        if len(big) + len(small) < 1:
            raise ValueError("game needs at least one player")
        total = sum(big) + sum(small)
        if not 1 <= self.threshold <= total:
            raise ValueError(
                f"threshold {self.threshold} out of range: must be between 1 and the total weight {total}"
            )

    @property
    def num_big(self) -> int:
        return len(self.big)

    @property
    def num_small(self) -> int:
        return len(self.small)

    @property
    def num_players(self) -> int:
        return len(self.big) + len(self.small)

    @property
    def big_sum(self) -> int:
        return sum(self.big)

    @property
    def total_weight(self) -> int:
        return sum(self.big) + sum(self.small)


AnyGame = Game | GeneralizedGame


def as_generalized(g: Game) -> GeneralizedGame:
    """Embed a unit-small game as a GeneralizedGame with s=1."""
    return GeneralizedGame(
        big=g.big, small=(1,) * g.small_count, min_small=1, threshold=g.threshold
    )


def player_weight(g: AnyGame, p: PlayerId) -> int:
    """Weight of player p, validating that p exists in g."""
    if isinstance(p, Big):
        if not 0 <= p.index < g.num_big:
            raise ValueError(f"no big player with index {p.index} (game has {g.num_big})")
        return g.big[p.index]
    if isinstance(g, Game):
        if p.index is not None:
            raise ValueError("small players in a unit-small game are interchangeable; use Small()")
        if g.small_count == 0:
            raise ValueError("game has no small players")
        return 1
    if p.index is None:
        raise ValueError("generalized small players carry weights; use Small(index)")
    if not 0 <= p.index < g.num_small:
        raise ValueError(f"no small player with index {p.index} (game has {g.num_small})")
    return g.small[p.index]


def all_players(g: AnyGame) -> list[PlayerId]:
    """Every player id of g, bigs first."""
    ids: list[PlayerId] = [Big(i) for i in range(g.num_big)]
    if isinstance(g, Game):
        if g.small_count:
            ids.append(Small())
    else:
        ids.extend(Small(i) for i in range(g.num_small))
    return ids


def canonicalize(g: Game) -> Game:
    """Sort big weights non-increasing and cap each at the threshold.

    Capping is value-preserving: a weight at or above T wins alone either way,
    and no index computed downstream can tell the difference. The canonical
    form is the cache key for every game-keyed memo table.
    """
    return Game(
        big=tuple(min(w, g.threshold) for w in g.big),
        small_count=g.small_count,
        threshold=g.threshold,
    )


def coalition_value(g: AnyGame, weight_sum: int) -> int:
    """1 iff a coalition with the given total weight wins."""
    if weight_sum < 0:
        raise ValueError(f"weight sum {weight_sum} is negative")
    return 1 if weight_sum >= g.threshold else 0


def proportional(g: AnyGame) -> Exact:
    """Aggregate big weight over total weight."""
    total = g.total_weight
    return Fraction(g.big_sum, total)


def exact_str(x: Exact) -> str:
    """Canonical num/den rendering (denominator always present)."""
    return f"{x.numerator}/{x.denominator}"


def parse_exact(text: str) -> Exact:
    return Fraction(text)


# --- text format ---------------------------------------------------------
#
# Unit-small games:   A=<w1>,<w2>,...;m=<int>;T=<int>     (empty A: "A=;m=..;T=..")
# Generalized games:  A=...;M=<w1>,...;T=<int>;s=<int>


def _parse_weights(value: str, what: str) -> tuple[int, ...]:
    value = value.strip()
    if not value:
        return ()
    out = []
    for part in value.split(","):
        part = part.strip()
        try:
            out.append(int(part))
        except ValueError:
            raise ValueError(f"bad {what} weight {part!r}: expected an integer") from None
    return tuple(out)


def _parse_int(value: str, what: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise ValueError(f"bad {what} {value.strip()!r}: expected an integer") from None


def parse_game(text: str) -> AnyGame:
    """Parse the canonical text format into a Game or GeneralizedGame.

    Raises ValueError with a human-readable reason on syntax errors or
    invariant violations (threshold out of range, weights too low, ...).
    """
    fields: dict[str, str] = {}
    for segment in text.strip().split(";"):
        segment = segment.strip()
        if not segment:
            continue
        if "=" not in segment:
            raise ValueError(f"bad segment {segment!r}: expected key=value")
        key, _, value = segment.partition("=")
        key = key.strip()
        if key in fields:
            raise ValueError(f"duplicate field {key!r}")
        fields[key] = value

    if "A" not in fields:
        raise ValueError("missing field A (big weights; use 'A=;' for none)")
    if "T" not in fields:
        raise ValueError("missing field T (threshold)")
    big = _parse_weights(fields.pop("A"), "big")
    threshold = _parse_int(fields.pop("T"), "threshold T")

    if "M" in fields:
        if "m" in fields:
            raise ValueError("fields m and M are mutually exclusive")
        if "s" not in fields:
            raise ValueError("generalized games need field s (minimum small size)")
        small = _parse_weights(fields.pop("M"), "small")
        min_small = _parse_int(fields.pop("s"), "minimum small size s")
        if fields:
            raise ValueError(f"unknown field {next(iter(fields))!r}")
        return GeneralizedGame(big=big, small=small, min_small=min_small, threshold=threshold)

    if "m" not in fields:
        raise ValueError("missing field m (small-player count) or M (small weights)")
    small_count = _parse_int(fields.pop("m"), "small count m")
    if fields:
        raise ValueError(f"unknown field {next(iter(fields))!r}")
    return Game(big=big, small_count=small_count, threshold=threshold)


def render_game(g: AnyGame) -> str:
    """Inverse of parse_game: parse_game(render_game(g)) == g."""
    a = ",".join(str(w) for w in g.big)
    if isinstance(g, Game):
        return f"A={a};m={g.small_count};T={g.threshold}"
    m = ",".join(str(w) for w in g.small)
    return f"A={a};M={m};T={g.threshold};s={g.min_small}"


def render_player(p: PlayerId) -> str:
    if isinstance(p, Big):
        return f"big:{p.index}"
    return "small" if p.index is None else f"small:{p.index}"


def parse_player(text: str) -> PlayerId:
    """Parse 'big:<i>', 'small', or 'small:<i>'."""
    text = text.strip()
    if text == "small":
        return Small()
    kind, _, idx = text.partition(":")
    kind = kind.strip()
    if kind not in ("big", "small") or not idx.strip():
        raise ValueError(f"bad player {text!r}: expected big:<i>, small, or small:<i>")
    try:
        index = int(idx.strip())
    except ValueError:
        raise ValueError(f"bad player index {idx.strip()!r}: expected an integer") from None
    if index < 0:
        raise ValueError(f"player index {index} is negative")
    return Big(index) if kind == "big" else Small(index)


# --- JSON mirror ----------------------------------------------------------


def game_to_json(g: AnyGame) -> dict:
    if isinstance(g, Game):
        return {"big": list(g.big), "small": g.small_count, "threshold": g.threshold}
    return {
        "big": list(g.big),
        "small_weights": list(g.small),
        "threshold": g.threshold,
        "min_small": g.min_small,
    }


def game_from_json(data: dict) -> AnyGame:
    if "small_weights" in data or "min_small" in data:
        return GeneralizedGame(
            big=tuple(data["big"]),
            small=tuple(data["small_weights"]),
            min_small=data["min_small"],
            threshold=data["threshold"],
        )
    return Game(
        big=tuple(data["big"]), small_count=data["small"], threshold=data["threshold"]
    )
