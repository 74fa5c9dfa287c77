"""Synthetic population generation: iterative proportional fitting over an
n-dimensional contingency table, largest-remainder integerization, and
weighted sampling of attribute bundles from microdata.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FEATURE_NAMES = [
    "household_car_share",
    "individual_senior",
    "household_income_high",
    "individual_employed",
    "individual_college",
]

MARGINAL_FEASIBILITY_RTOL = 1e-9


class SynthesisError(ValueError):
    """Raised on infeasible or inconsistent synthesis inputs."""


@dataclass
class ContingencyTable:
    """Non-negative cell counts over categorical attributes.

    ``cells`` is stored as an ndarray of shape ``dim_sizes``; the flat
    row-major view is what file formats carry.
    """

    dim_sizes: list[int]
    axis_labels: list[list[str]]
    cells: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float).reshape(self.dim_sizes)
        if any(s <= 0 for s in self.dim_sizes):
            raise SynthesisError("dimension sizes must be positive")
        if len(self.axis_labels) != len(self.dim_sizes):
            raise SynthesisError("axis_labels must match number of dimensions")
        for d, labels in enumerate(self.axis_labels):
            if len(labels) != self.dim_sizes[d]:
                raise SynthesisError(f"axis_labels[{d}] length != dim_sizes[{d}]")
        if np.any(self.cells < 0):
            raise SynthesisError("contingency table cells must be non-negative")

    @property
    def ndim(self) -> int:
        return len(self.dim_sizes)

    def grand_total(self) -> float:
        return float(self.cells.sum())

    def marginal(self, dim: int) -> np.ndarray:
        axes = tuple(d for d in range(self.ndim) if d != dim)
        return self.cells.sum(axis=axes)


@dataclass
class MarginalSet:
    """Per-dimension target vectors for IPF."""

    targets: list[np.ndarray]

    def __post_init__(self):
        self.targets = [np.asarray(t, dtype=float) for t in self.targets]
        for t in self.targets:
            if np.any(t < 0):
                raise SynthesisError("marginal targets must be non-negative")

    def check_compatible(self, table: ContingencyTable):
        if len(self.targets) != table.ndim:
            raise SynthesisError(
                f"marginal set has {len(self.targets)} dimensions, "
                f"table has {table.ndim}"
            )
        for d, t in enumerate(self.targets):
            if len(t) != table.dim_sizes[d]:
                raise SynthesisError(
                    f"marginal for dimension {d} has {len(t)} categories, "
                    f"table has {table.dim_sizes[d]}"
                )

    def check_feasible(self):
        totals = np.array([t.sum() for t in self.targets])
        ref = totals[0]
        scale = max(abs(ref), 1.0)
        if np.any(np.abs(totals - ref) > MARGINAL_FEASIBILITY_RTOL * scale):
            raise SynthesisError(
                f"marginal dimension totals disagree: {totals.tolist()}"
            )


@dataclass
class SyntheticPerson:
    zone_id: str
    household_car_share: bool
    individual_senior: bool
    household_income_high: bool
    individual_employed: bool
    individual_college: bool

    def feature_vector(self) -> np.ndarray:
        return np.array(
            [int(getattr(self, name)) for name in FEATURE_NAMES], dtype=int
        )


@dataclass
class MicrodataSample:
    """Weighted microdata records; bundles are integer category indices
    matching the contingency table's axes."""

    bundles: np.ndarray  # (n_records, n_dims) int
    weights: np.ndarray  # (n_records,) float >= 0

    def __post_init__(self):
        self.bundles = np.asarray(self.bundles, dtype=int)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.bundles.ndim != 2 or len(self.bundles) != len(self.weights):
            raise SynthesisError("bundles and weights must align")
        if np.any(self.weights < 0):
            raise SynthesisError("microdata weights must be non-negative")


def ipf_fit(
    seed: ContingencyTable,
    targets: MarginalSet,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> ContingencyTable:
    """Fit ``seed`` to ``targets`` by alternating proportional scaling.

    Sweeps dimensions in ascending index order each iteration and stops when
    the maximum absolute marginal deviation over all dimensions is <= tol.
    Structural zeros of the seed are preserved. A positive target over an
    all-zero seed slice is unreachable and raises.
    """
    targets.check_compatible(seed)
    targets.check_feasible()

    cells = seed.cells.astype(float).copy()
    ndim = seed.ndim
    for d, u in enumerate(targets.targets):
        axes = tuple(a for a in range(ndim) if a != d)
        slice_sums = cells.sum(axis=axes)
        bad = (slice_sums == 0) & (u > 0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SynthesisError(
                f"positive target marginal over all-zero seed slice "
                f"(dimension {d}, category {k})"
            )

    def max_marginal_dev(arr):
        dev = 0.0
        for d, u in enumerate(targets.targets):
            axes = tuple(a for a in range(ndim) if a != d)
            dev = max(dev, float(np.abs(arr.sum(axis=axes) - u).max()))
        return dev

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for d, u in enumerate(targets.targets):
            axes = tuple(a for a in range(ndim) if a != d)
            slice_sums = cells.sum(axis=axes)
            factor = np.ones_like(u)
            nz = slice_sums > 0
            factor[nz] = u[nz] / slice_sums[nz]
            shape = [1] * ndim
            shape[d] = seed.dim_sizes[d]
            cells *= factor.reshape(shape)
        if max_marginal_dev(cells) <= tol:
            converged = True
            break

    return ContingencyTable(
        dim_sizes=list(seed.dim_sizes),
        axis_labels=[list(a) for a in seed.axis_labels],
        cells=cells,
        converged=converged,
        iterations=it,
    )


def integerize(fitted: ContingencyTable) -> ContingencyTable:
    """Largest-remainder rounding preserving the rounded grand total.

    Cells are floored, then the remaining units (grand total minus floor sum)
    go to the cells with the largest fractional parts; ties break by
    ascending flat cell index. Idempotent on integer tables.
    """
    flat = fitted.cells.ravel()
    if not np.all(np.isfinite(flat)):
        raise SynthesisError("non-finite cell in table to integerize")
    floors = np.floor(flat)
    fracs = flat - floors
    total = int(round(float(flat.sum())))
    remainder = total - int(floors.sum())
    out = floors.copy()
    if remainder > 0:
        # stable sort on -frac keeps ascending index order among ties
        order = np.argsort(-fracs, kind="stable")
        out[order[:remainder]] += 1
    return ContingencyTable(
        dim_sizes=list(fitted.dim_sizes),
        axis_labels=[list(a) for a in fitted.axis_labels],
        cells=out.reshape(fitted.dim_sizes),
        converged=fitted.converged,
        iterations=fitted.iterations,
    )


def sample_population(
    counts: ContingencyTable,
    microdata: MicrodataSample,
    zone_id: str,
    rng_seed: int,
) -> list[SyntheticPerson]:
    """Draw attribute bundles for every integer cell count.

    For each cell, exactly ``counts[cell]`` persons are emitted whose bundle
    matches the cell; when several microdata records match, records are drawn
    with probability proportional to their sampling weight. Deterministic for
    a fixed ``rng_seed``.
    """
    flat = counts.cells.ravel()
    if np.any(np.abs(flat - np.round(flat)) > 1e-9):
        raise SynthesisError("sample_population requires an integer table")
    if len(microdata.bundles) == 0:
        raise SynthesisError("microdata is empty")
    if counts.ndim != microdata.bundles.shape[1]:
        raise SynthesisError("microdata bundle arity does not match table")

    rng = np.random.default_rng(rng_seed)
    persons: list[SyntheticPerson] = []
    for flat_idx in range(flat.size):
        n = int(round(flat[flat_idx]))
        if n == 0:
            continue
        cell = tuple(int(c) for c in np.unravel_index(flat_idx, counts.dim_sizes))
        for rec in draw_cell_records(microdata, cell, n, rng):
            bundle = microdata.bundles[rec]
            # tables narrower than the five features leave the rest False
            attrs = {name: False for name in FEATURE_NAMES}
            for i, v in enumerate(bundle):
                attrs[FEATURE_NAMES[i]] = bool(v)
            persons.append(SyntheticPerson(zone_id=zone_id, **attrs))
    return persons


def draw_cell_records(
    microdata: MicrodataSample, cell: tuple, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Indices of n microdata records matching the cell, drawn with
    probability proportional to sampling weight."""
    match = np.all(microdata.bundles == np.array(cell), axis=1)
    w = microdata.weights[match]
    if w.sum() <= 0:
        raise SynthesisError(
            f"cell {cell} has count {n} but no positively weighted "
            f"microdata record matches it"
        )
    idx = np.flatnonzero(match)
    return rng.choice(idx, size=n, replace=True, p=w / w.sum())


# ---------------------------------------------------------------------------
# file formats


def load_marginals(path) -> dict[str, MarginalSet]:
    """Read per-zone marginal targets.

    One row per (zone_id, dimension, category, target_count); dimensions are
    the five binary features, categories "0"/"1".
    """
    per_zone: dict[str, dict[str, dict[str, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            z = row["zone_id"]
            per_zone.setdefault(z, {}).setdefault(row["dimension"], {})[
                row["category"]
            ] = float(row["target_count"])
    out = {}
    for z, dims in per_zone.items():
        targets = []
        for name in FEATURE_NAMES:
            if name not in dims:
                raise SynthesisError(f"zone {z}: missing dimension {name}")
            cats = dims[name]
            targets.append(np.array([cats.get("0", 0.0), cats.get("1", 0.0)]))
        out[z] = MarginalSet(targets)
    return out


def load_microdata(path) -> MicrodataSample:
    """Read microdata records: the five 0/1 feature columns plus a weight."""
    bundles, weights = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            bundles.append([int(row[name]) for name in FEATURE_NAMES])
            weights.append(float(row["weight"]))
    if not bundles:
        raise SynthesisError(f"microdata file {path} has no records")
    return MicrodataSample(np.array(bundles), np.array(weights))


def seed_from_microdata(microdata: MicrodataSample) -> ContingencyTable:
    """Weighted microdata contingency table over the five binary features."""
    dim_sizes = [2] * len(FEATURE_NAMES)
    cells = np.zeros(dim_sizes)
    for bundle, w in zip(microdata.bundles, microdata.weights):
        cells[tuple(bundle)] += w
    return ContingencyTable(
        dim_sizes=dim_sizes,
        axis_labels=[["0", "1"] for _ in FEATURE_NAMES],
        cells=cells,
    )


def synthesize_zone(
    marginals: MarginalSet,
    microdata: MicrodataSample,
    zone_id: str,
    rng_seed: int,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> list[SyntheticPerson]:
    """IPF + integerize + sample for one zone."""
    seed = seed_from_microdata(microdata)
    fitted = ipf_fit(seed, marginals, tol=tol, max_iter=max_iter)
    counts = integerize(fitted)
    return sample_population(counts, microdata, zone_id, rng_seed)


def write_persons(persons: list[SyntheticPerson], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zone_id"] + FEATURE_NAMES)
        for p in persons:
            w.writerow([p.zone_id] + [int(getattr(p, n)) for n in FEATURE_NAMES])


def load_persons(path) -> list[SyntheticPerson]:
    persons = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            persons.append(
                SyntheticPerson(
                    zone_id=row["zone_id"],
                    **{n: bool(int(row[n])) for n in FEATURE_NAMES},
                )
            )
    return persons
