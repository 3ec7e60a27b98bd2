"""Monte Carlo machinery: weight-profile builders, the seeded experiment
runner, and empirical verification of the approximation guarantees.

Every round r of an experiment runs under its own derived seed, so reruns are
bit-identical, rounds are order-independent, and two algorithms can be run on
matched per-round randomness by sharing the base seed.  Wall-clock time is
measured but kept out of all comparisons and serialized output.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

from .algorithms import (
    FIXED,
    FLEXIBLE,
    P_STAR,
    SamplerConfig,
    baseline_covdiv,
    baseline_quality,
    brute_force,
    derive_seed,
    fixed_length_solve,
    homogeneous_solve,
    sampling_greedy,
)
from .core import EvalCounter, Sequence, WeightProfile, evaluate_F, homogeneous_bundle

HOMOGENEOUS = "homogeneous"

EXPERIMENT_ALGORITHMS = ("sg", "fixed", "homog", "covdiv", "quality")


@dataclass(frozen=True)
class UserTypeDistribution:
    """How the per-position weights lambda_1..lambda_k are generated.

    kinds: "uniform" (equal mass), "normal" (discretized bell over positions
    1..k centered at mu; mass falling outside 1..k is dropped, not folded),
    "explicit" (verbatim values).
    """

    kind: str
    k: int
    mu: float | None = None
    sigma: float | None = None
    values: tuple[float, ...] | None = None

    @staticmethod
    def uniform(k: int) -> "UserTypeDistribution":
        return UserTypeDistribution(kind="uniform", k=k)

    @staticmethod
    def normal(k: int, mu: float, sigma: float) -> "UserTypeDistribution":
        return UserTypeDistribution(kind="normal", k=k, mu=float(mu), sigma=float(sigma))

    @staticmethod
    def explicit(values) -> "UserTypeDistribution":
        vals = tuple(float(v) for v in values)
        return UserTypeDistribution(kind="explicit", k=len(vals), values=vals)

    @property
    def label(self) -> str:
        if self.kind == "uniform":
            return "UNIFORM"
        if self.kind == "normal":
            mu = self.mu
            return f"M-{int(mu)}" if float(mu).is_integer() else f"M-{mu}"
        return "EXPLICIT"


def make_weights(dist: UserTypeDistribution) -> WeightProfile:
    """Materialize a distribution into a WeightProfile.

    Normal profiles use unnormalized bell values exp(-(j-mu)^2 / (2 sigma^2))
    renormalized over positions 1..k; if every position underflows to zero
    there is no profile to build and a ValueError is raised.
    """
    if dist.k < 1:
        raise ValueError("profiles need at least one position")
    if dist.kind == "uniform":
        return WeightProfile((1.0 / dist.k,) * dist.k)
    if dist.kind == "explicit":
        return WeightProfile(dist.values)
    if dist.kind == "normal":
        if dist.sigma is None or not dist.sigma > 0:
            raise ValueError("normal profiles need sigma > 0")
        raw = [math.exp(-((j - dist.mu) ** 2) / (2.0 * dist.sigma ** 2))
               for j in range(1, dist.k + 1)]
        total = sum(raw)
        if total == 0.0:
            raise ValueError(
                f"normal(mu={dist.mu}, sigma={dist.sigma}) puts no mass on positions 1..{dist.k}")
        return WeightProfile(tuple(w / total for w in raw))
    raise ValueError(f"unknown distribution kind {dist.kind!r}")


def round_seed(base_seed: int, round_index: int) -> int:
    """Deterministic, pairwise-distinct per-round seed."""
    return derive_seed(base_seed, f"round-{round_index}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One in-memory experiment: an instance, the contenders, and the sweep.

    ``oracle`` is the shared set function (a CoverageDiversityFn when the
    covdiv baseline is among the algorithms); ``ratings`` feed the quality
    baseline.  The ground set is 0..n-1.
    """

    oracle: object
    ratings: tuple[float, ...]
    n: int
    k: int
    algorithms: tuple[str, ...]
    distributions: tuple[UserTypeDistribution, ...]
    constraint: str = FLEXIBLE
    rounds: int = 100
    base_seed: int = 0
    p: float = P_STAR

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k={self.k} outside 1..{self.n}")
        for name in self.algorithms:
            if name not in EXPERIMENT_ALGORITHMS:
                raise ValueError(f"unknown algorithm {name!r}")
        if self.constraint not in (FLEXIBLE, FIXED):
            raise ValueError(f"unknown constraint {self.constraint!r}")


@dataclass(frozen=True)
class CellStats:
    """Aggregate of one (algorithm, distribution, constraint) cell.

    Per-round values are kept so aggregates can always be recomputed;
    wall_time never participates in equality.
    """

    algorithm: str
    distribution: str
    constraint: str
    values: tuple[float, ...]
    lengths: tuple[int, ...]
    oracle_calls: tuple[int, ...]
    wall_time: float = field(compare=False, default=0.0)

    @property
    def rounds(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)

    @property
    def std(self) -> float:
        """Sample standard deviation; zero for a single round."""
        if len(self.values) < 2:
            return 0.0
        m = self.mean
        return math.sqrt(sum((v - m) ** 2 for v in self.values) / (len(self.values) - 1))

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(len(self.values))

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)

    @property
    def mean_length(self) -> float:
        return sum(self.lengths) / len(self.lengths)

    @property
    def mean_oracle_calls(self) -> float:
        return sum(self.oracle_calls) / len(self.oracle_calls)


@dataclass(frozen=True)
class RunStats:
    cells: tuple[CellStats, ...]

    def cell(self, algorithm: str, distribution: str, constraint: str | None = None) -> CellStats:
        found = [c for c in self.cells
                 if c.algorithm == algorithm and c.distribution == distribution
                 and (constraint is None or c.constraint == constraint)]
        if len(found) != 1:
            raise KeyError(
                f"{len(found)} cells match ({algorithm}, {distribution}, {constraint})")
        return found[0]


def _dispatch(name: str, bundle, oracle, ratings, k: int, constraint: str,
              cfg: SamplerConfig) -> Sequence:
    if name == "sg":
        if constraint == FIXED:
            return fixed_length_solve(bundle, k, cfg)
        return sampling_greedy(bundle, k, cfg)[0]
    if name == "fixed":
        return fixed_length_solve(bundle, k, cfg)
    if name == "homog":
        return homogeneous_solve(bundle, k, cfg)
    if name == "covdiv":
        return baseline_covdiv(oracle, bundle, k, constraint, cfg)
    if name == "quality":
        return baseline_quality(ratings, k)
    raise ValueError(f"unknown algorithm {name!r}")


def run_monte_carlo(spec: ExperimentSpec) -> RunStats:
    """Run every (distribution, algorithm) cell for ``spec.rounds`` rounds.

    Round r of every cell uses SamplerConfig(spec.p, round_seed(base_seed, r)),
    so cells see matched randomness and the whole table is reproducible from
    (spec, base_seed) alone.
    """
    cells: list[CellStats] = []
    for dist in spec.distributions:
        weights = make_weights(dist)
        if weights.k != spec.k:
            raise ValueError(f"distribution {dist.label} has k={weights.k}, expected {spec.k}")
        counter = EvalCounter()
        bundle = homogeneous_bundle(spec.oracle, weights, n=spec.n, counter=counter)
        for name in spec.algorithms:
            t0 = time.perf_counter()
            values: list[float] = []
            lengths: list[int] = []
            calls: list[int] = []
            for r in range(spec.rounds):
                cfg = SamplerConfig(spec.p, round_seed(spec.base_seed, r))
                before = counter.calls
                seq = _dispatch(name, bundle, spec.oracle, spec.ratings,
                                spec.k, spec.constraint, cfg)
                calls.append(counter.calls - before)
                values.append(evaluate_F(bundle, seq))
                lengths.append(len(seq))
            cells.append(CellStats(
                algorithm=name,
                distribution=dist.label,
                constraint=spec.constraint,
                values=tuple(values),
                lengths=tuple(lengths),
                oracle_calls=tuple(calls),
                wall_time=time.perf_counter() - t0,
            ))
    return RunStats(tuple(cells))


def comparative_experiment(spec: ExperimentSpec,
                           constraints: tuple[str, ...] = (FLEXIBLE, FIXED)) -> RunStats:
    """run_monte_carlo once per constraint, merged into one table."""
    cells: list[CellStats] = []
    for constraint in constraints:
        cells.extend(run_monte_carlo(replace(spec, constraint=constraint)).cells)
    return RunStats(tuple(cells))


# ---------------------------------------------------------------------------
# Bound verification.


def bound_factor(p: float, mode: str, k: int | None = None, n: int | None = None,
                 monotone: bool = False) -> float:
    """Guaranteed fraction of OPT for the given solver mode.

    flexible: p(1-p)/(2p+1); fixed: the same scaled by (1-k/n); homogeneous
    (k >= ceil(n/2)): a flat 0.134/4.  Monotone instances solved with p=1 get
    the deterministic 1/2.
    """
    if monotone and p == 1.0:
        return 0.5
    if mode == FLEXIBLE:
        return p * (1.0 - p) / (2.0 * p + 1.0)
    if mode == FIXED:
        if k is None or n is None:
            raise ValueError("fixed-mode factor needs k and n")
        return (1.0 - k / n) * p * (1.0 - p) / (2.0 * p + 1.0)
    if mode == HOMOGENEOUS:
        return 0.134 / 4.0
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class BoundVerdict:
    """Outcome of one empirical guarantee check.

    ``margin`` is empirical_mean - (factor * opt_value - 3 * stderr); the
    check passes when it is nonnegative.
    """

    passed: bool
    empirical_mean: float
    stderr: float
    opt_value: float
    optimum: Sequence
    factor: float
    margin: float
    rounds: int


def bound_check(bundle, k, mode: str, cfg: SamplerConfig, rounds: int,
                *, factor: float | None = None, monotone: bool = False) -> BoundVerdict:
    """Empirically test a guarantee: Monte Carlo mean >= factor * OPT - 3 stderr.

    OPT comes from brute_force (flexible mode enumerates all lengths up to k,
    the other modes exactly k), the mean from ``rounds`` runs of the solver
    the mode names, on seeds derived from cfg.seed.  ``factor`` overrides the
    formula value of bound_factor.
    """
    if mode not in (FLEXIBLE, FIXED, HOMOGENEOUS):
        raise ValueError(f"unknown mode {mode!r}")
    opt_constraint = FLEXIBLE if mode == FLEXIBLE else FIXED
    opt_seq, opt_value = brute_force(bundle, k, opt_constraint)
    values = []
    for r in range(rounds):
        run_cfg = SamplerConfig(cfg.p, round_seed(cfg.seed, r))
        if mode == FLEXIBLE:
            seq = sampling_greedy(bundle, k, run_cfg)[0]
        elif mode == FIXED:
            seq = fixed_length_solve(bundle, k, run_cfg)
        else:
            seq = homogeneous_solve(bundle, k, run_cfg)
        values.append(evaluate_F(bundle, seq))
    mean = sum(values) / len(values)
    if len(values) > 1:
        var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
        stderr = math.sqrt(var) / math.sqrt(len(values))
    else:
        stderr = 0.0
    fac = factor if factor is not None else bound_factor(cfg.p, mode, k, bundle.n, monotone)
    margin = mean - (fac * opt_value - 3.0 * stderr)
    return BoundVerdict(
        passed=margin >= 0.0,
        empirical_mean=mean,
        stderr=stderr,
        opt_value=opt_value,
        optimum=opt_seq,
        factor=fac,
        margin=margin,
        rounds=rounds,
    )
