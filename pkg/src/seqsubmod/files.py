"""Plain-text formats: problem instances, experiment specs, and result tables.

Instances and specs are `key value` line files (``#`` starts a comment);
matrices are headerless whitespace-separated float rows, either inline after
their introducing key or in a companion file.  All floats are written with
``repr``, so write -> read round-trips bit-exactly and rerunning a seeded
experiment reproduces its output file byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .algorithms import P_STAR
from .core import EvalCounter, ObjectiveBundle, as_weights, heterogeneous_bundle, homogeneous_bundle
from .functions import (
    CoverageDiversityFn,
    ModularPenaltyFn,
    auto_scale,
    similarity_from_tags,
    tiny_instance,
)
from .harness import CellStats, RunStats, UserTypeDistribution

FAMILIES = ("covdiv", "modular-penalty")


class InstanceFormatError(ValueError):
    """An instance or spec file violates the format contract."""


class ScaledOracle:
    """f_j = scale * f_base; the per-position oracle behind `scales` lines."""

    __slots__ = ("base", "scale")

    def __init__(self, base, scale: float):
        self.base = base
        self.scale = float(scale)

    def __call__(self, items) -> float:
        return self.scale * float(self.base(items))

    def marginal(self, item, items) -> float:
        return self.scale * float(self.base.marginal(item, items))


@dataclass
class Instance:
    """One on-disk problem instance.

    ``ratings`` double as the rewards of the modular-penalty family.  A
    non-None ``scales`` tuple makes bundles heterogeneous with f_j = scales[j]
    times the base function.
    """

    family: str
    n: int
    ratings: tuple[float, ...]
    alpha: float | None = None
    beta: float | None = None
    eta: float | None = None
    similarity: np.ndarray | None = None
    penalties: np.ndarray | None = None
    scales: tuple[float, ...] | None = None

    def oracle(self):
        if self.family == "covdiv":
            return CoverageDiversityFn(self.ratings, self.similarity,
                                       self.alpha, self.beta, self.eta)
        if self.family == "modular-penalty":
            return ModularPenaltyFn(self.ratings, self.penalties.tolist())
        raise InstanceFormatError(f"unknown family {self.family!r}")

    def bundle(self, weights, counter: EvalCounter | None = None) -> ObjectiveBundle:
        profile = as_weights(weights)
        base = self.oracle()
        if self.scales is None:
            return homogeneous_bundle(base, profile, n=self.n, counter=counter)
        if len(self.scales) != profile.k:
            raise InstanceFormatError(
                f"{len(self.scales)} scales cannot serve k={profile.k} positions")
        oracles = tuple(ScaledOracle(base, s) for s in self.scales)
        return heterogeneous_bundle(oracles, profile, n=self.n, counter=counter)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        def arr_eq(a, b):
            if a is None or b is None:
                return (a is None) == (b is None)
            return np.array_equal(a, b)
        return (self.family == other.family and self.n == other.n
                and self.ratings == other.ratings
                and self.alpha == other.alpha and self.beta == other.beta
                and self.eta == other.eta and self.scales == other.scales
                and arr_eq(self.similarity, other.similarity)
                and arr_eq(self.penalties, other.penalties))


# ---------------------------------------------------------------------------
# Matrices.


def write_matrix(path: str, matrix) -> None:
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w") as fh:
        for row in np.atleast_2d(matrix):
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_matrix(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, ndmin=2)
    except Exception as exc:
        raise InstanceFormatError(f"{path}: not a float matrix ({exc})") from exc


# ---------------------------------------------------------------------------
# Instances.


def _tokenize(path: str) -> list[list[str]]:
    rows = []
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    rows.append(line.split())
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    return rows


def _floats(tokens, where: str) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise InstanceFormatError(f"{where}: expected numbers, got {tokens}") from exc


def read_instance(path: str) -> Instance:
    """Parse an instance file; matrix companions resolve relative to it."""
    rows = _tokenize(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    fields: dict = {}
    matrix_key: str | None = None
    matrix_rows: list[list[float]] = []
    i = 0
    while i < len(rows):
        key, *rest = rows[i]
        i += 1
        if key in ("similarity", "penalties", "tags"):
            if not rest:
                raise InstanceFormatError(f"{key}: expected 'inline' or 'file PATH'")
            if rest[0] == "inline":
                n = fields.get("n")
                if n is None:
                    raise InstanceFormatError("n must come before inline matrices")
                want = n if key != "tags" else None
                collected = []
                while i < len(rows) and (want is None or len(collected) < want):
                    probe = rows[i]
                    try:
                        collected.append([float(t) for t in probe])
                    except ValueError:
                        break
                    i += 1
                if want is not None and len(collected) != want:
                    raise InstanceFormatError(f"{key}: expected {want} inline rows")
                fields[key] = np.array(collected)
            elif rest[0] == "file":
                if len(rest) != 2:
                    raise InstanceFormatError(f"{key}: expected 'file PATH'")
                fields[key] = read_matrix(os.path.join(base_dir, rest[1]))
            else:
                raise InstanceFormatError(f"{key}: expected 'inline' or 'file', got {rest[0]!r}")
            matrix_key = key
            continue
        if key == "family":
            if len(rest) != 1 or rest[0] not in FAMILIES:
                raise InstanceFormatError(f"family must be one of {FAMILIES}")
            fields["family"] = rest[0]
        elif key == "n":
            try:
                fields["n"] = int(rest[0])
            except (IndexError, ValueError) as exc:
                raise InstanceFormatError("n: expected one integer") from exc
        elif key in ("alpha", "beta", "eta"):
            vals = _floats(rest, key)
            if len(vals) != 1:
                raise InstanceFormatError(f"{key}: expected one number")
            fields[key] = vals[0]
        elif key in ("ratings", "rewards"):
            fields["ratings"] = tuple(_floats(rest, key))
        elif key == "scales":
            fields["scales"] = tuple(_floats(rest, key))
        else:
            raise InstanceFormatError(f"unknown key {key!r}")
    family = fields.get("family")
    n = fields.get("n")
    ratings = fields.get("ratings")
    if family is None or n is None or ratings is None:
        raise InstanceFormatError("instance needs family, n, and ratings/rewards")
    if len(ratings) != n:
        raise InstanceFormatError(f"{len(ratings)} ratings for n={n}")
    similarity = fields.get("similarity")
    if similarity is None and "tags" in fields:
        tags = fields["tags"]
        if tags.shape[0] != n:
            raise InstanceFormatError(f"tags have {tags.shape[0]} rows for n={n}")
        similarity = similarity_from_tags(tags)
    penalties = fields.get("penalties")
    inst = Instance(
        family=family, n=n, ratings=ratings,
        alpha=fields.get("alpha"), beta=fields.get("beta"), eta=fields.get("eta"),
        similarity=similarity, penalties=penalties, scales=fields.get("scales"),
    )
    _validate_instance(inst, matrix_key)
    return inst


def _validate_instance(inst: Instance, matrix_key) -> None:
    if inst.family == "covdiv":
        if inst.similarity is None:
            raise InstanceFormatError("covdiv instances need similarity or tags")
        if inst.similarity.shape != (inst.n, inst.n):
            raise InstanceFormatError(
                f"similarity is {inst.similarity.shape}, expected ({inst.n}, {inst.n})")
        if inst.alpha is None or inst.beta is None or inst.eta is None:
            raise InstanceFormatError("covdiv instances need alpha, beta, and eta")
    elif inst.family == "modular-penalty":
        if inst.penalties is None:
            raise InstanceFormatError("modular-penalty instances need penalties")
        if inst.penalties.shape != (inst.n, inst.n):
            raise InstanceFormatError(
                f"penalties are {inst.penalties.shape}, expected ({inst.n}, {inst.n})")
    try:
        inst.oracle()
    except InstanceFormatError:
        raise
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def write_instance(path: str, inst: Instance) -> None:
    """Write an instance with its matrix inline; read_instance inverts this."""
    lines = [f"family {inst.family}", f"n {inst.n}"]
    if inst.family == "covdiv":
        for key in ("alpha", "beta", "eta"):
            lines.append(f"{key} {repr(float(getattr(inst, key)))}")
    key = "ratings" if inst.family == "covdiv" else "rewards"
    lines.append(f"{key} " + " ".join(repr(float(r)) for r in inst.ratings))
    if inst.scales is not None:
        lines.append("scales " + " ".join(repr(float(s)) for s in inst.scales))
    matrix = inst.similarity if inst.family == "covdiv" else inst.penalties
    matrix_name = "similarity" if inst.family == "covdiv" else "penalties"
    lines.append(f"{matrix_name} inline")
    for row in np.asarray(matrix, dtype=float):
        lines.append(" ".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Synthetic generators (shared by the CLI and the test benches).


def synthetic_modular_instance(n: int, seed: int = 0, penalty_prob: float = 0.5,
                               penalty_scale: float = 2.0) -> Instance:
    """Random rewards-minus-penalties instance, nonnegative on every subset.

    Each reward is a base draw plus half the item's total penalty row, which
    keeps all set values nonnegative while leaving marginals free to go
    negative.  ``n=3, seed=0`` is reserved for the canonical 3-item demo
    instance (rewards 3,2,2; penalties c01=2, c12=3).
    """
    if n == 3 and seed == 0:
        demo = tiny_instance()
        return Instance(family="modular-penalty", n=3,
                        ratings=tuple(demo.rewards),
                        penalties=np.array(demo.penalties))
    rng = np.random.default_rng(seed)
    pen = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < penalty_prob:
                pen[i, j] = pen[j, i] = rng.uniform(0.0, penalty_scale)
    base = rng.uniform(0.0, 3.0, n)
    rewards = base + 0.5 * pen.sum(axis=1)
    return Instance(family="modular-penalty", n=n,
                    ratings=tuple(float(r) for r in rewards), penalties=pen)


def synthetic_covdiv_instance(n: int, d: int = 25, seed: int = 0,
                              density: float = 0.15, eta: float = 35.0) -> Instance:
    """Random rated catalog with sparse tag vectors and l2-of-min similarity.

    alpha/beta follow the auto-scale rule, so the rating and diversity terms
    arrive balanced regardless of n.
    """
    rng = np.random.default_rng(seed)
    ratings = rng.uniform(0.0, 5.0, n)
    tags = np.where(rng.random((n, d)) < density, rng.uniform(0.0, 1.0, (n, d)), 0.0)
    similarity = similarity_from_tags(tags)
    alpha, beta = auto_scale(ratings, similarity)
    return Instance(family="covdiv", n=n,
                    ratings=tuple(float(r) for r in ratings),
                    alpha=alpha, beta=beta, eta=float(eta), similarity=similarity)


# ---------------------------------------------------------------------------
# Experiment specs.


@dataclass
class ExperimentFile:
    """Parsed experiment spec: which instance, contenders, and sweep to run."""

    instance_path: str
    k: int
    p: float = P_STAR
    seed: int = 0
    rounds: int = 100
    constraints: tuple[str, ...] = ("flexible", "fixed")
    algorithms: tuple[str, ...] = ("sg", "covdiv", "quality")
    distributions: tuple[UserTypeDistribution, ...] = field(default_factory=tuple)


def read_experiment(path: str) -> ExperimentFile:
    rows = _tokenize(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    fields: dict = {"distributions": []}
    for row in rows:
        key, *rest = row
        if key == "instance":
            if len(rest) != 1:
                raise InstanceFormatError("instance: expected one path")
            fields["instance_path"] = os.path.join(base_dir, rest[0])
        elif key == "k":
            fields["k"] = int(rest[0])
        elif key == "p":
            fields["p"] = _floats(rest, "p")[0]
        elif key == "seed":
            fields["seed"] = int(rest[0])
        elif key == "rounds":
            fields["rounds"] = int(rest[0])
        elif key == "constraint":
            if rest == ["both"]:
                fields["constraints"] = ("flexible", "fixed")
            elif rest in (["flexible"], ["fixed"]):
                fields["constraints"] = (rest[0],)
            else:
                raise InstanceFormatError("constraint: expected flexible, fixed, or both")
        elif key == "algorithms":
            fields["algorithms"] = tuple(rest)
        elif key == "distribution":
            fields["distributions"].append(rest)
        else:
            raise InstanceFormatError(f"unknown key {key!r}")
    if "instance_path" not in fields or "k" not in fields:
        raise InstanceFormatError("experiment spec needs instance and k")
    k = fields["k"]
    dists = []
    for row in fields["distributions"]:
        if row == ["uniform"]:
            dists.append(UserTypeDistribution.uniform(k))
        elif row and row[0] == "normal":
            vals = _floats(row[1:], "distribution normal")
            if len(vals) != 2:
                raise InstanceFormatError("distribution normal MU SIGMA")
            dists.append(UserTypeDistribution.normal(k, vals[0], vals[1]))
        elif row and row[0] == "explicit":
            vals = _floats(row[1:], "distribution explicit")
            if len(vals) != k:
                raise InstanceFormatError(f"explicit distribution needs {k} values")
            dists.append(UserTypeDistribution.explicit(vals))
        else:
            raise InstanceFormatError(f"unknown distribution {row}")
    if not dists:
        dists = [UserTypeDistribution.uniform(k)]
    return ExperimentFile(
        instance_path=fields["instance_path"], k=k,
        p=fields.get("p", P_STAR), seed=fields.get("seed", 0),
        rounds=fields.get("rounds", 100),
        constraints=fields.get("constraints", ("flexible", "fixed")),
        algorithms=fields.get("algorithms", ("sg", "covdiv", "quality")),
        distributions=tuple(dists),
    )


# ---------------------------------------------------------------------------
# Results.

RESULT_HEADER = "algorithm,distribution,constraint,round,F,length,oracle_calls"
AGGREGATE_HEADER = ("algorithm,distribution,constraint,rounds,mean_F,std_F,"
                    "ci95_low,ci95_high,mean_length,mean_oracle_calls")


def write_results(path: str, stats: RunStats, metadata: dict) -> None:
    """Serialize per-round rows plus a recomputable aggregate footer.

    Output depends only on (stats, metadata): wall time never appears, so a
    rerun with the same seeds produces a byte-identical file.
    """
    lines = ["# seqsubmod-results v1"]
    for key in sorted(metadata):
        lines.append(f"# {key}={metadata[key]}")
    lines.append(RESULT_HEADER)
    for cell in stats.cells:
        for r in range(cell.rounds):
            lines.append(
                f"{cell.algorithm},{cell.distribution},{cell.constraint},{r},"
                f"{repr(cell.values[r])},{cell.lengths[r]},{cell.oracle_calls[r]}")
    lines.append("# aggregates")
    lines.append(f"# {AGGREGATE_HEADER}")
    for cell in stats.cells:
        lo, hi = cell.ci95
        lines.append(
            f"# {cell.algorithm},{cell.distribution},{cell.constraint},{cell.rounds},"
            f"{repr(cell.mean)},{repr(cell.std)},{repr(lo)},{repr(hi)},"
            f"{repr(cell.mean_length)},{repr(cell.mean_oracle_calls)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_results(path: str) -> tuple[RunStats, dict]:
    """Rebuild RunStats (per-round data only) and the metadata dict."""
    meta: dict = {}
    per_cell: dict = {}
    order: list = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and "," not in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if line == RESULT_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise InstanceFormatError(f"bad results row: {line!r}")
            key = (parts[0], parts[1], parts[2])
            if key not in per_cell:
                per_cell[key] = ([], [], [])
                order.append(key)
            try:
                per_cell[key][0].append(float(parts[4]))
                per_cell[key][1].append(int(parts[5]))
                per_cell[key][2].append(int(parts[6]))
            except ValueError as exc:
                raise InstanceFormatError(f"bad results row: {line!r}") from exc
    cells = tuple(
        CellStats(algorithm=a, distribution=d, constraint=c,
                  values=tuple(vals), lengths=tuple(lens), oracle_calls=tuple(calls))
        for (a, d, c), (vals, lens, calls) in ((key, per_cell[key]) for key in order)
    )
    return RunStats(cells), meta
