"""Solvers for position-weighted sequential selection.

The randomized greedy family shares one mechanic: repeatedly take the
candidate with the largest positive weighted marginal, keep it only with
probability p, and never reconsider a rejected item.  On top of that sit the
fixed-length variant (random backup fill), the two-block strategy for
homogeneous objectives on large k (forward greedy on the first half versus a
complement greedy assembled back-to-front), exhaustive search for small
instances, and the two comparison baselines.

Randomness policy: every solver derives its coin stream from
``Random(f"{seed}:coins")`` and its backup stream from
``Random(f"{seed}:backup")``, so runs are reproducible cross-platform and the
coin sequences of different solvers can be matched seed-for-seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from .core import (
    EvalCounter,
    ObjectiveBundle,
    Sequence,
    as_sequence,
    evaluate_F,
    homogeneous_bundle,
    marginal_gain,
)
from .functions import ComplementFn

P_STAR = (math.sqrt(3.0) - 1.0) / 2.0
FLEXIBLE = "flexible"
FIXED = "fixed"

ENUMERATION_LIMIT = 10_000_000


class InfeasibleError(ValueError):
    """The requested selection length cannot be met on this ground set."""


class EnumerationTooLargeError(ValueError):
    """Exhaustive search would exceed the sequence-count guard."""


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling probability and master seed for one solver run."""

    p: float = P_STAR
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")


class CoinStream:
    """Bernoulli(p) bit source with an optional forced-bit override for tests.

    Forced bits are consumed in order; running past the end raises rather than
    silently falling back to randomness.
    """

    def __init__(self, p: float, rng: random.Random | None = None, forced=None):
        self.p = float(p)
        self._rng = rng
        self._forced = list(forced) if forced is not None else None
        self._pos = 0
        if self._forced is None and rng is None:
            raise ValueError("coin stream needs an rng or a forced bit list")

    def draw(self) -> int:
        if self._forced is not None:
            if self._pos >= len(self._forced):
                raise RuntimeError("forced coin stream exhausted")
            bit = 1 if self._forced[self._pos] else 0
            self._pos += 1
            return bit
        return 1 if self._rng.random() < self.p else 0


def _coin_stream(cfg: SamplerConfig, coins) -> CoinStream:
    if coins is None:
        return CoinStream(cfg.p, rng=random.Random(f"{cfg.seed}:coins"))
    if isinstance(coins, CoinStream):
        return coins
    return CoinStream(cfg.p, forced=coins)


def _backup_rng(cfg: SamplerConfig) -> random.Random:
    return random.Random(f"{cfg.seed}:backup")


def derive_seed(base_seed: int, tag: str) -> int:
    """Deterministic 63-bit child seed for a named sub-stream."""
    return random.Random(f"{base_seed}:{tag}").getrandbits(63)


@dataclass(frozen=True)
class GreedyTrace:
    """Audit log of one greedy run.

    ``considered`` holds (item, weighted marginal at its step, coin) in
    consideration order; items with coin 1 are exactly the output, in order.
    """

    considered: tuple[tuple[int, float, int], ...]
    output: Sequence


# ---------------------------------------------------------------------------
# Marginal engines.  One greedy step needs the weighted marginal
# sum_{j>=t} lambda_j * f_j(i | pi) of every surviving candidate; the engines
# batch that per epoch (the stretch between two accepts, during which the
# marginals of the surviving candidates do not change).


class _HomogeneousEngine:
    """Candidate gains for a single shared oracle.

    Prefers the oracle's batched incremental state, then its marginal method,
    and falls back to paired value calls.
    """

    def __init__(self, bundle: ObjectiveBundle, candidates):
        self.bundle = bundle
        self.members: set = set()
        self.alive = set(int(i) for i in candidates)
        oracle = bundle.base_oracle
        self._oracle = oracle
        self._state = None
        self._marginal = None
        if hasattr(oracle, "incremental"):
            self._state = oracle.incremental()
        elif hasattr(oracle, "marginal"):
            self._marginal = oracle.marginal

    def positive_candidates(self, t: int) -> list[tuple[int, float]]:
        """(item, weighted gain) for gains > 0, sorted by gain desc, id asc."""
        w = self.bundle.suffix_weight(t)
        if w == 0.0 or not self.alive:
            return []
        counter = self.bundle.counter
        if self._state is not None:
            arr = np.fromiter(sorted(self.alive), dtype=int)
            gains = self._state.gains()[arr]
            counter.add(len(arr))
            mask = gains > 0.0
            items = arr[mask]
            vals = w * gains[mask]
            order = np.lexsort((items, -vals))
            return [(int(items[o]), float(vals[o])) for o in order]
        pairs = []
        if self._marginal is not None:
            counter.add(len(self.alive))
            for i in sorted(self.alive):
                m = self._marginal(i, self.members)
                if m > 0.0:
                    pairs.append((i, w * m))
        else:
            base = float(self._oracle(frozenset(self.members)))
            counter.add(len(self.alive) + 1)
            for i in sorted(self.alive):
                m = float(self._oracle(frozenset(self.members | {i}))) - base
                if m > 0.0:
                    pairs.append((i, w * m))
        pairs.sort(key=lambda pair: (-pair[1], pair[0]))
        return pairs

    def remove(self, item: int) -> None:
        self.alive.discard(item)

    def accept(self, item: int) -> None:
        self.alive.discard(item)
        self.members.add(item)
        if self._state is not None:
            self._state.add(item)


class _HeterogeneousEngine:
    """Candidate gains for per-position oracles; one base value per position
    and epoch, then one grown-set value per candidate and position."""

    def __init__(self, bundle: ObjectiveBundle, candidates):
        self.bundle = bundle
        self.members: set = set()
        self.alive = set(int(i) for i in candidates)

    def positive_candidates(self, t: int) -> list[tuple[int, float]]:
        bundle = self.bundle
        lams = bundle.weights.lambdas
        active = [j for j in range(t, bundle.k + 1) if lams[j - 1] != 0.0]
        if not active or not self.alive:
            return []
        base_set = frozenset(self.members)
        bases = {j: bundle.oracle_value(j, base_set) for j in active}
        pairs = []
        for i in sorted(self.alive):
            grown = frozenset(self.members | {i})
            gain = 0.0
            for j in active:
                gain += lams[j - 1] * (bundle.oracle_value(j, grown) - bases[j])
            if gain > 0.0:
                pairs.append((i, gain))
        pairs.sort(key=lambda pair: (-pair[1], pair[0]))
        return pairs

    def remove(self, item: int) -> None:
        self.alive.discard(item)

    def accept(self, item: int) -> None:
        self.alive.discard(item)
        self.members.add(item)


def _make_engine(bundle: ObjectiveBundle, candidates):
    if bundle.homogeneous:
        return _HomogeneousEngine(bundle, candidates)
    return _HeterogeneousEngine(bundle, candidates)


def _check_k(bundle: ObjectiveBundle, k) -> int:
    if k is None:
        k = bundle.k
    if k != bundle.k:
        raise ValueError(f"k={k} must match the weight profile length {bundle.k}")
    if k > bundle.n:
        raise InfeasibleError(f"k={k} exceeds the ground set size {bundle.n}")
    return k


# ---------------------------------------------------------------------------
# Core samplers.


def sampling_greedy(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None,
                    *, coins=None) -> tuple[Sequence, GreedyTrace]:
    """Deferred-coin randomized greedy under the at-most-k constraint.

    Each round considers the surviving candidate with the largest positive
    weighted marginal sum_{j>=t} lambda_j * f_j(i | pi), removes it from the
    pool whatever happens, and appends it only if a Bernoulli(p) coin lands 1.
    Stops when k items are placed or no candidate has positive gain.

    Args:
        bundle: problem instance; k must equal bundle.k if given.
        cfg: sampling probability and seed (defaults to p* and seed 0).
        coins: optional CoinStream or iterable of forced bits (tests).

    Returns:
        (sequence, trace); the trace records every considered item with its
        gain and coin.
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    k = _check_k(bundle, k)
    stream = _coin_stream(cfg, coins)
    engine = _make_engine(bundle, bundle.ground)
    out: list[int] = []
    considered: list[tuple[int, float, int]] = []
    t = 1
    while t <= k:
        batch = engine.positive_candidates(t)
        if not batch:
            break
        advanced = False
        for item, gain in batch:
            engine.remove(item)
            bit = stream.draw()
            considered.append((item, gain, bit))
            if bit:
                out.append(item)
                engine.accept(item)
                t += 1
                advanced = True
                break
        if not advanced:
            break
    seq = Sequence(tuple(out))
    return seq, GreedyTrace(tuple(considered), seq)


def presampled_greedy(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None,
                      *, subset=None) -> Sequence:
    """Two-phase equivalent of sampling_greedy: sample first, then greed.

    Phase one keeps each ground item independently with probability p; phase
    two runs the deterministic positive-marginal greedy on the kept pool until
    min(k, pool size) items are placed.  Output-distribution-identical to the
    deferred-coin form under matching seeds is not promised item-for-item, but
    the two induce the same law.

    ``subset`` forces the phase-one pool (tests).
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    k = _check_k(bundle, k)
    if subset is None:
        rng = random.Random(f"{cfg.seed}:coins")
        pool = [i for i in bundle.ground if rng.random() < cfg.p]
    else:
        pool = sorted(set(int(i) for i in subset))
        if not set(pool) <= set(bundle.ground):
            raise ValueError("forced subset contains items outside the ground set")
    engine = _make_engine(bundle, pool)
    out: list[int] = []
    cap = min(k, len(pool))
    t = 1
    while len(out) < cap:
        batch = engine.positive_candidates(t)
        if not batch:
            break
        item, _ = batch[0]
        engine.accept(item)
        out.append(item)
        t += 1
    return Sequence(tuple(out))


def _draw_backup(rng: random.Random, pool: list[int], m: int, forced) -> list[int]:
    """Uniform m-subset of pool in draw order; forced lists are validated."""
    if m < 0:
        raise InfeasibleError("backup pool smaller than the required fill")
    if forced is not None:
        picked = [int(i) for i in forced]
        if len(picked) != m:
            raise ValueError(f"forced backup must have exactly {m} items")
        if len(set(picked)) != len(picked) or not set(picked) <= set(pool):
            raise ValueError("forced backup must be distinct unused items")
        return picked
    if m > len(pool):
        raise InfeasibleError("backup pool smaller than the required fill")
    return rng.sample(pool, m)


def fixed_length_solve(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None,
                       *, coins=None, backup=None) -> Sequence:
    """Exactly-k variant: run sampling_greedy, then pad with random unused items.

    The pad is a uniform (k - len)-subset of the untouched items, appended in
    ascending id order.  ``backup`` forces the pad set (tests).
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    k = _check_k(bundle, k)
    seq, _ = sampling_greedy(bundle, k, cfg, coins=coins)
    if len(seq) == k:
        return seq
    pool = sorted(set(bundle.ground) - set(seq.items))
    extra = _draw_backup(_backup_rng(cfg), pool, k - len(seq), backup)
    return Sequence(seq.items + tuple(sorted(extra)))


# ---------------------------------------------------------------------------
# Homogeneous objectives with k >= ceil(n/2): two complementary strategies.


def _half(n: int) -> int:
    return (n + 1) // 2


def _require_homogeneous(bundle: ObjectiveBundle, who: str) -> None:
    if not bundle.homogeneous:
        raise ValueError(f"{who} requires a homogeneous bundle")


def homogeneous_first_half(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None,
                           *, coins=None, backup=None) -> Sequence:
    """Optimize the first ceil(n/2) positions, then pad to k.

    Positions past ceil(n/2) are ignored during optimization (their weights
    are dropped), so the core is a fixed-length solve of the truncated
    problem; the pad appends unused items in ascending id order.
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    _require_homogeneous(bundle, "homogeneous_first_half")
    k = _check_k(bundle, k)
    h = _half(bundle.n)
    if k < h:
        raise InfeasibleError(f"k={k} below ceil(n/2)={h}; use the direct fixed-length solver")
    inner = homogeneous_bundle(
        bundle.base_oracle,
        bundle.weights.lambdas[:h],
        ground=bundle.ground,
        counter=bundle.counter,
    )
    core = fixed_length_solve(inner, h, cfg, coins=coins, backup=backup)
    pad = [i for i in bundle.ground if i not in core.to_set()][: k - h]
    return Sequence(core.items + tuple(pad))


def _sampled_set_greedy(fn, ground, cap: int, stream: CoinStream,
                        counter: EvalCounter | None = None) -> list[int]:
    """Deferred-coin positive-marginal greedy on a plain set function.

    Returns accepted items in acceptance order; stops at ``cap`` accepts or
    when no surviving candidate has a strictly positive marginal.
    """
    members: set = set()
    added: list[int] = []
    alive = set(int(i) for i in ground)
    has_marginal = hasattr(fn, "marginal")
    while len(added) < cap:
        pairs = []
        if has_marginal:
            if counter is not None:
                counter.add(len(alive))
            for i in sorted(alive):
                m = float(fn.marginal(i, members))
                if m > 0.0:
                    pairs.append((i, m))
        else:
            base = float(fn(frozenset(members)))
            if counter is not None:
                counter.add(len(alive) + 1)
            for i in sorted(alive):
                m = float(fn(frozenset(members | {i}))) - base
                if m > 0.0:
                    pairs.append((i, m))
        if not pairs:
            break
        pairs.sort(key=lambda pair: (-pair[1], pair[0]))
        advanced = False
        for item, _ in pairs:
            alive.discard(item)
            if stream.draw():
                members.add(item)
                added.append(item)
                advanced = True
                break
        if not advanced:
            break
    return added


def alg2_second_half(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None,
                     *, coins=None, forced_accepted=None, forced_backup=None) -> Sequence:
    """Back-to-front assembly via the complement function.

    Runs the sampled greedy on g(S) = f(V minus S), capped at ceil(n/2)
    accepts, collecting acceptance order U.  The output places the accepts
    made after the first n-k at the very end in reverse acceptance order,
    preceded by a uniform random fill B (in draw order) that tops the accepted
    block up to ceil(n/2), preceded by everything else in ascending order:

        rest (ascending)  +  B (draw order)  +  reversed(U[n-k:])

    ``forced_accepted`` bypasses the greedy phase and ``forced_backup`` the
    fill draw (tests; pass ordered iterables when the order matters).
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    _require_homogeneous(bundle, "alg2_second_half")
    k = _check_k(bundle, k)
    n = bundle.n
    h = _half(n)
    if k < h:
        raise InfeasibleError(f"k={k} below ceil(n/2)={h}")
    if forced_accepted is not None:
        added = [int(i) for i in forced_accepted]
        if len(set(added)) != len(added) or not set(added) <= set(bundle.ground):
            raise ValueError("forced accepted items must be distinct ground items")
        if len(added) > h:
            raise ValueError(f"at most ceil(n/2)={h} accepted items")
    else:
        comp = ComplementFn(bundle.base_oracle, bundle.ground)
        stream = _coin_stream(cfg, coins)
        added = _sampled_set_greedy(comp, bundle.ground, h, stream, bundle.counter)
    tail = list(reversed(added[n - k:]))
    pool = sorted(set(bundle.ground) - set(added))
    fill = _draw_backup(_backup_rng(cfg), pool, h - len(added), forced_backup)
    rest = sorted(set(bundle.ground) - set(added) - set(fill))
    return Sequence(tuple(rest + fill + tail))


def sampling_greedy_j(oracle, n: int, j: int, cfg: SamplerConfig | None = None,
                      *, ground=None, coins=None, forced_backup=None) -> frozenset:
    """The (n-j)-item complement-greedy set used to analyze suffix positions.

    Runs the sampled greedy on g(S) = f(V minus S) capped at n-j accepts, then
    tops up to exactly n-j with a uniform random fill.  Returns the resulting
    set S^j; the construction matters for j in {ceil(n/2)+1..k}, where the
    prefix sets of alg2_second_half are distributed as V minus S^j, but any
    1 <= j <= n is accepted (j = n degenerates to the empty set).
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    ids = tuple(sorted(int(i) for i in (ground if ground is not None else range(n))))
    if len(ids) != n or len(set(ids)) != n:
        raise ValueError("ground must hold n distinct ids")
    if not 1 <= j <= n:
        raise ValueError(f"j={j} outside 1..{n}")
    cap = n - j
    comp = ComplementFn(oracle, ids)
    stream = _coin_stream(cfg, coins)
    added = _sampled_set_greedy(comp, ids, cap, stream)
    pool = sorted(set(ids) - set(added))
    fill = _draw_backup(_backup_rng(cfg), pool, cap - len(added), forced_backup)
    return frozenset(added) | frozenset(fill)


def homogeneous_solve(bundle: ObjectiveBundle, k=None, cfg: SamplerConfig | None = None) -> Sequence:
    """Best-of-two solver for homogeneous objectives, always returning k items.

    Below k = ceil(n/2) the plain fixed-length solver already carries the
    guarantee; from ceil(n/2) on, run both the first-half strategy and the
    back-to-front complement assembly on independently derived sub-seeds and
    keep whichever sequence scores higher (ties favor the first-half
    strategy), truncated to exactly k positions.
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    _require_homogeneous(bundle, "homogeneous_solve")
    k = _check_k(bundle, k)
    if k < _half(bundle.n):
        return fixed_length_solve(bundle, k, cfg)
    first = homogeneous_first_half(
        bundle, k, SamplerConfig(cfg.p, derive_seed(cfg.seed, "first")))
    second = alg2_second_half(
        bundle, k, SamplerConfig(cfg.p, derive_seed(cfg.seed, "second")))
    best = first if evaluate_F(bundle, first) >= evaluate_F(bundle, second) else second
    return best.prefix(k)


# ---------------------------------------------------------------------------
# Exhaustive search and baselines.


def brute_force(bundle: ObjectiveBundle, k=None, constraint: str = FLEXIBLE) -> tuple[Sequence, float]:
    """Optimal sequence by enumeration; ties go to the lexicographically
    smallest item tuple.

    Flexible enumerates all ordered selections of length 0..k, fixed exactly
    k.  Guarded: more than ten million sequences raises instead of running.
    """
    k = _check_k(bundle, k)
    if constraint not in (FLEXIBLE, FIXED):
        raise ValueError(f"unknown constraint {constraint!r}")
    ids = bundle.ground
    n = len(ids)
    lengths = range(k, k + 1) if constraint == FIXED else range(0, k + 1)
    total = sum(math.perm(n, length) for length in lengths)
    if total > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"{total} sequences exceed the {ENUMERATION_LIMIT} enumeration guard")
    best_items: tuple[int, ...] | None = None
    best_value = -math.inf
    for length in lengths:
        for perm in itertools.permutations(ids, length):
            value = evaluate_F(bundle, perm)
            if value > best_value or (value == best_value and
                                      (best_items is None or perm < best_items)):
                best_value = value
                best_items = perm
    return Sequence(best_items), best_value


def baseline_covdiv(fn, bundle: ObjectiveBundle, k=None, constraint: str = FLEXIBLE,
                    cfg: SamplerConfig | None = None, *, backup=None) -> Sequence:
    """Diversity-only greedy: ignores ratings and the position weights.

    Adds the item with the largest positive marginal of the coverage-minus-
    similarity term until k items are placed or no positive marginal remains;
    under the fixed constraint the shortfall is padded like fixed_length_solve.
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    k = _check_k(bundle, k)
    if constraint not in (FLEXIBLE, FIXED):
        raise ValueError(f"unknown constraint {constraint!r}")
    state = fn.incremental()
    alive = sorted(bundle.ground)
    out: list[int] = []
    while len(out) < k and alive:
        arr = np.fromiter(alive, dtype=int)
        gains = state.diversity_gains()[arr]
        bundle.counter.add(len(arr))
        best = int(np.argmax(gains))  # argmax takes the first, i.e. lowest id
        if not gains[best] > 0.0:
            break
        item = int(arr[best])
        out.append(item)
        state.add(item)
        alive.remove(item)
    if constraint == FIXED and len(out) < k:
        pool = sorted(set(bundle.ground) - set(out))
        extra = _draw_backup(_backup_rng(cfg), pool, k - len(out), backup)
        out.extend(sorted(extra))
    return Sequence(tuple(out))


def baseline_quality(ratings, k: int) -> Sequence:
    """Top-k item ids by rating, descending; ties go to the lowest id.

    Always returns exactly k items regardless of constraint mode.
    """
    scores = [float(r) for r in ratings]
    if k > len(scores):
        raise InfeasibleError(f"k={k} exceeds the {len(scores)} rated items")
    if k < 0:
        raise ValueError("k must be nonnegative")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return Sequence(tuple(order[:k]))


def verify_trace(bundle: ObjectiveBundle, trace: GreedyTrace, tol: float = 1e-9) -> None:
    """Replay a GreedyTrace against first principles; raises on any mismatch.

    Checks, step by step, that every considered item had the maximum weighted
    marginal among surviving candidates with positive gain (lowest id on
    ties), that the recorded gain matches a fresh marginal_gain computation,
    and that the accepted items reproduce the output sequence.
    """
    alive = set(bundle.ground)
    accepted: list[int] = []
    t = 1
    for item, gain, coin in trace.considered:
        if t > bundle.k:
            raise ValueError("trace considers items after the sequence was full")
        gains = {i: marginal_gain(bundle, accepted, i, t) for i in sorted(alive)}
        positive = [(i, g) for i, g in gains.items() if g > 0.0]
        if not positive:
            raise ValueError(f"trace considers {item} but no candidate had positive gain")
        positive.sort(key=lambda pair: (-pair[1], pair[0]))
        want_item, want_gain = positive[0]
        if item != want_item:
            raise ValueError(f"trace considered {item}, expected argmax {want_item}")
        if abs(gain - want_gain) > tol * (1.0 + abs(want_gain)):
            raise ValueError(f"recorded gain {gain} != recomputed {want_gain}")
        alive.discard(item)
        if coin:
            accepted.append(item)
            t += 1
    if tuple(accepted) != trace.output.items:
        raise ValueError("coin-1 items do not reproduce the recorded output")
    if t <= bundle.k:
        leftovers = [i for i in sorted(alive)
                     if marginal_gain(bundle, accepted, i, t) > 0.0]
        if leftovers:
            raise ValueError(f"trace ended with positive candidates {leftovers} unconsidered")
