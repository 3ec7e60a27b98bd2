"""Sequences, position weights, and the position-weighted sequential objective.

The objective over an ordered selection pi is

    F(pi) = sum_{j=1..k} lambda_j * f_j(set of the first j items of pi),

where each f_j is a set-function oracle and prefixes saturate: once j exceeds
len(pi), position j sees the full selection.  Nothing here assumes
monotonicity, and oracles are not required to vanish on the empty set.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

SetOracle = Callable[[frozenset], float]


class OracleEvaluationError(RuntimeError):
    """An oracle raised while being evaluated; ``position`` is the 1-based j."""

    def __init__(self, position: int, message: str):
        super().__init__(f"oracle at position {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class Sequence:
    """An ordered selection of distinct item ids.

    Immutable; all mutating-looking operations return new sequences.
    """

    items: tuple[int, ...] = ()

    def __post_init__(self):
        items = tuple(int(i) for i in self.items)
        if len(set(items)) != len(items):
            raise ValueError(f"sequence has repeated items: {items}")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, idx):
        return self.items[idx]

    def __contains__(self, item) -> bool:
        return item in self.items

    def prefix(self, j: int) -> "Sequence":
        """First ``j`` items; saturates at the full sequence for large ``j``."""
        if j < 0:
            raise ValueError("prefix length must be nonnegative")
        if j >= len(self.items):
            return self
        return Sequence(self.items[:j])

    def concat(self, item: int) -> "Sequence":
        """Return a new sequence with ``item`` appended."""
        return Sequence(self.items + (int(item),))

    def to_set(self) -> frozenset:
        return frozenset(self.items)


def as_sequence(seq) -> Sequence:
    """Coerce a Sequence or an iterable of ids into a Sequence."""
    if isinstance(seq, Sequence):
        return seq
    return Sequence(tuple(seq))


@dataclass(frozen=True)
class WeightProfile:
    """Nonnegative per-position weights lambda_1..lambda_k (1-based positions)."""

    lambdas: tuple[float, ...]
    _suffix: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        if not lams:
            raise ValueError("weight profile must have at least one position")
        for j, lam in enumerate(lams, start=1):
            if not lam >= 0.0:
                raise ValueError(f"lambda_{j} = {lam} is not nonnegative")
        # suffix[t-1] = sum of lambda_j for j >= t, with a trailing zero.
        suffix = [0.0] * (len(lams) + 1)
        for t in range(len(lams) - 1, -1, -1):
            suffix[t] = suffix[t + 1] + lams[t]
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "_suffix", tuple(suffix))

    @property
    def k(self) -> int:
        return len(self.lambdas)

    def weight(self, j: int) -> float:
        """lambda_j for 1 <= j <= k."""
        return self.lambdas[j - 1]

    def suffix_sum(self, t: int) -> float:
        """Sum of lambda_j over j in {t..k}; zero once t > k."""
        if t < 1:
            raise ValueError("positions are 1-based")
        if t > self.k:
            return 0.0
        return self._suffix[t - 1]


def as_weights(weights) -> WeightProfile:
    if isinstance(weights, WeightProfile):
        return weights
    return WeightProfile(tuple(weights))


class EvalCounter:
    """Counts oracle evaluations; each value or marginal computation adds one.

    Increment-only.  Updates are plain int additions (atomic under the GIL),
    which is as much thread-safety as the single-threaded solvers need.
    """

    __slots__ = ("calls",)

    def __init__(self):
        self.calls = 0

    def add(self, amount: int = 1) -> None:
        if amount < 0:
            raise ValueError("counter only moves forward")
        self.calls += amount

    def __repr__(self):
        return f"EvalCounter(calls={self.calls})"


@dataclass(frozen=True)
class ObjectiveBundle:
    """A problem instance: weights, one oracle per position, and the ground set.

    ``homogeneous`` marks that every position shares one oracle object, which
    unlocks suffix-weight shortcuts (all positions j >= t see the same set, so
    their contribution collapses to suffix_sum(t) times one evaluation).
    """

    weights: WeightProfile
    oracles: tuple[SetOracle, ...]
    ground: tuple[int, ...]
    homogeneous: bool
    counter: EvalCounter = field(default_factory=EvalCounter, compare=False, repr=False)

    def __post_init__(self):
        ground = tuple(sorted(int(i) for i in self.ground))
        if len(set(ground)) != len(ground):
            raise ValueError("ground set has repeated item ids")
        if not ground:
            raise ValueError("ground set is empty")
        if len(self.oracles) != self.weights.k:
            raise ValueError(
                f"need one oracle per position: got {len(self.oracles)} "
                f"for k={self.weights.k}"
            )
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "oracles", tuple(self.oracles))

    @property
    def k(self) -> int:
        return self.weights.k

    @property
    def n(self) -> int:
        return len(self.ground)

    @property
    def base_oracle(self) -> SetOracle:
        """The shared oracle of a homogeneous bundle."""
        if not self.homogeneous:
            raise ValueError("bundle is not homogeneous")
        return self.oracles[0]

    def ground_set(self) -> frozenset:
        return frozenset(self.ground)

    def suffix_weight(self, t: int) -> float:
        return self.weights.suffix_sum(t)

    def oracle_value(self, j: int, items: frozenset) -> float:
        """Evaluate f_j on a set, counting the call and wrapping failures."""
        self.counter.add(1)
        try:
            return float(self.oracles[j - 1](items))
        except OracleEvaluationError:
            raise
        except Exception as exc:
            raise OracleEvaluationError(j, str(exc)) from exc


def homogeneous_bundle(oracle, weights, n=None, ground=None, counter=None) -> ObjectiveBundle:
    """Bundle where every position uses the same oracle.

    Exactly one of ``n`` (ground = 0..n-1) or ``ground`` must be given.
    """
    profile = as_weights(weights)
    ground = _resolve_ground(n, ground)
    return ObjectiveBundle(
        weights=profile,
        oracles=(oracle,) * profile.k,
        ground=ground,
        homogeneous=True,
        counter=counter if counter is not None else EvalCounter(),
    )


def heterogeneous_bundle(oracles, weights, n=None, ground=None, counter=None) -> ObjectiveBundle:
    """Bundle with an explicit oracle per position."""
    profile = as_weights(weights)
    ground = _resolve_ground(n, ground)
    return ObjectiveBundle(
        weights=profile,
        oracles=tuple(oracles),
        ground=ground,
        homogeneous=False,
        counter=counter if counter is not None else EvalCounter(),
    )


def _resolve_ground(n, ground) -> tuple[int, ...]:
    if (n is None) == (ground is None):
        raise ValueError("give exactly one of n or ground")
    if ground is not None:
        return tuple(ground)
    if n < 1:
        raise ValueError("n must be positive")
    return tuple(range(n))


def _checked_items(bundle: ObjectiveBundle, seq: Sequence) -> tuple[int, ...]:
    extra = set(seq.items) - set(bundle.ground)
    if extra:
        raise ValueError(f"items {sorted(extra)} are outside the ground set")
    return seq.items


def evaluate_F(bundle: ObjectiveBundle, seq) -> float:
    """Total weighted value sum_j lambda_j * f_j(prefix_j).

    Positions beyond len(seq) see the full selection (prefix saturation);
    positions beyond k never contribute.  Homogeneous bundles reuse the
    saturated value instead of re-evaluating it per position.
    """
    seq = as_sequence(seq)
    items = _checked_items(bundle, seq)
    k = bundle.k
    lams = bundle.weights.lambdas
    limit = min(len(items), k)
    total = 0.0
    running: set = set()
    if bundle.homogeneous:
        value = None
        for j in range(1, limit + 1):
            running.add(items[j - 1])
            value = bundle.oracle_value(j, frozenset(running))
            total += lams[j - 1] * value
        if limit < k:
            if value is None:
                value = bundle.oracle_value(limit + 1, frozenset(running))
            total += bundle.suffix_weight(limit + 1) * value
        return total
    for j in range(1, k + 1):
        if j <= limit:
            running.add(items[j - 1])
        total += lams[j - 1] * bundle.oracle_value(j, frozenset(running))
    return total


def marginal_gain(bundle: ObjectiveBundle, seq, item: int, t: int) -> float:
    """Gain of appending ``item`` at position ``t``: sum_{j>=t} lambda_j * f_j(item | set(seq)).

    With t = len(seq) + 1 this equals evaluate_F(seq + item) - evaluate_F(seq).
    """
    seq = as_sequence(seq)
    _checked_items(bundle, seq)
    item = int(item)
    if item in seq.items:
        raise ValueError(f"item {item} is already in the sequence")
    if item not in set(bundle.ground):
        raise ValueError(f"item {item} is outside the ground set")
    if not 1 <= t <= bundle.k:
        raise ValueError(f"position t={t} outside 1..{bundle.k}")
    base = frozenset(seq.items)
    grown = base | {item}
    if bundle.homogeneous:
        w = bundle.suffix_weight(t)
        if w == 0.0:
            return 0.0
        return w * (bundle.oracle_value(t, grown) - bundle.oracle_value(t, base))
    lams = bundle.weights.lambdas
    total = 0.0
    for j in range(t, bundle.k + 1):
        lam = lams[j - 1]
        if lam == 0.0:
            continue
        total += lam * (bundle.oracle_value(j, grown) - bundle.oracle_value(j, base))
    return total


def telescoping_value(bundle: ObjectiveBundle, seq) -> float:
    """F rebuilt from per-step gains: sum_t sum_{j>=t} lambda_j * f_j(pi_t | prefix_{t-1}).

    Equals evaluate_F whenever every oracle vanishes on the empty set (the
    difference is exactly sum_j lambda_j * f_j(empty) otherwise).
    """
    seq = as_sequence(seq)
    items = _checked_items(bundle, seq)
    k = bundle.k
    lams = bundle.weights.lambdas
    total = 0.0
    grown: set = set()
    for t in range(1, min(len(items), k) + 1):
        base = frozenset(grown)
        grown.add(items[t - 1])
        larger = frozenset(grown)
        if bundle.homogeneous:
            w = bundle.suffix_weight(t)
            if w != 0.0:
                total += w * (bundle.oracle_value(t, larger) - bundle.oracle_value(t, base))
            continue
        for j in range(t, k + 1):
            lam = lams[j - 1]
            if lam == 0.0:
                continue
            total += lam * (bundle.oracle_value(j, larger) - bundle.oracle_value(j, base))
    return total
