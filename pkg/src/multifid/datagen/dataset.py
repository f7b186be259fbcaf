"""Fidelity dataset container, directory IO, and the generation pipelines.

Directory layout:

    meta.json        benchmark id, level count, per-level sizes, bounds, seed,
                     generator version (and the field shape for PDE outputs)
    inputs_f{m}.csv  header x1..xl, one row per sample of level m
    outputs_f{m}.csv header y1..yd, rows aligned with inputs_f{m}.csv
    inputs_test.csv / outputs_test.csv   held-out evaluation points

Floats are serialized with 17 significant digits, so write/read round trips
are value-exact for 64-bit floats.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DatasetFormatError
from .analytic import evaluate_batch, input_spec, sample_inputs
from .pde import FieldGrid, solve_burgers, solve_poisson, upscale_bilinear

GENERATOR_VERSION = "1"
UPSCALE_NODES = 100

PDE_MESHES = {
    # benchmark -> (low mesh, high mesh); tuples are (n_space, n_time) for
    # the transport fields, ints are square grid sizes for the potentials
    "burgers": ((16, 16), (32, 32)),
    "poisson": (8, 32),
}

PDE_BOUNDS = {
    "burgers": np.array([[0.001, 0.1]]),
    "poisson": np.array([[0.1, 0.9]] * 5),
}

BENCHMARKS = ("borehole", "currin", "park", "burgers", "poisson")


@dataclass
class FidelityLevel:
    x: np.ndarray  # (N_m, l)
    y: np.ndarray  # (N_m, d_m)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.y = np.atleast_2d(np.asarray(self.y, dtype=np.float64))
        if self.x.shape[0] != self.y.shape[0]:
            raise ConfigError(f"row mismatch: {self.x.shape[0]} inputs vs {self.y.shape[0]} outputs")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]


@dataclass
class FidelityDataset:
    """Ordered fidelity levels (1 = lowest) plus optional held-out test data.

    Output dimensions must be non-decreasing and sample counts non-increasing
    across levels; violations are hard errors, checked on construction and
    therefore on every load.
    """

    benchmark: str
    seed: int
    levels: list
    bounds: np.ndarray
    test_x: np.ndarray = None
    test_y: np.ndarray = None
    field_shape: tuple = None  # (rows, cols) when outputs are flattened fields
    generator_version: str = GENERATOR_VERSION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("dataset needs at least one fidelity level")
        dims = [lv.d for lv in self.levels]
        counts = [lv.n for lv in self.levels]
        if any(a > b for a, b in zip(dims, dims[1:])):
            raise ConfigError(f"output dims must be non-decreasing across levels, got {dims}")
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise ConfigError(f"sample counts must be non-increasing across levels, got {counts}")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, m: int) -> FidelityLevel:
        if not 1 <= m <= len(self.levels):
            raise ConfigError(f"fidelity level {m} not in 1..{len(self.levels)}")
        return self.levels[m - 1]

    @property
    def lowest(self) -> FidelityLevel:
        return self.levels[0]

    @property
    def highest(self) -> FidelityLevel:
        return self.levels[-1]

    def subset_high(self, n_hf: int) -> "FidelityDataset":
        """Same dataset with the highest level truncated to its first n_hf rows."""
        if n_hf < 1 or n_hf > self.highest.n:
            raise ConfigError(f"n_hf={n_hf} not available (have {self.highest.n})")
        levels = list(self.levels[:-1]) + [FidelityLevel(self.highest.x[:n_hf],
                                                         self.highest.y[:n_hf])]
        return FidelityDataset(self.benchmark, self.seed, levels, self.bounds,
                               self.test_x, self.test_y, self.field_shape,
                               self.generator_version, dict(self.extra))


# ---------------------------------------------------------------------------
# CSV helpers: 17 significant digits, LF newlines, deterministic output.
# ---------------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _read_csv(path, expected_cols=None):
    if not os.path.exists(path):
        raise DatasetFormatError(f"missing file {path}")
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if expected_cols is not None and len(header) != expected_cols:
        raise DatasetFormatError(
            f"{path}: header has {len(header)} columns, expected {expected_cols}")
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise DatasetFormatError(f"{path}: row {r} has {len(parts)} columns, "
                                     f"expected {len(header)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            bad = next(i for i, p in enumerate(parts, start=1)
                       if not _is_float(p))
            raise DatasetFormatError(f"{path}: row {r}, column {bad}: "
                                     f"not a number") from exc
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_dataset(ds: FidelityDataset, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    meta = {
        "benchmark": ds.benchmark,
        "seed": ds.seed,
        "n_levels": ds.n_levels,
        "levels": [{"n": lv.n, "d": lv.d} for lv in ds.levels],
        "bounds": [[float(a), float(b)] for a, b in ds.bounds],
        "n_test": 0 if ds.test_x is None else int(ds.test_x.shape[0]),
        "generator_version": ds.generator_version,
    }
    if ds.field_shape is not None:
        meta["field_shape"] = list(ds.field_shape)
    if ds.extra:
        meta["extra"] = ds.extra
    with open(os.path.join(out_dir, "meta.json"), "w", newline="\n") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for m, lv in enumerate(ds.levels, start=1):
        _write_csv(os.path.join(out_dir, f"inputs_f{m}.csv"),
                   [f"x{i+1}" for i in range(lv.x.shape[1])], lv.x)
        _write_csv(os.path.join(out_dir, f"outputs_f{m}.csv"),
                   [f"y{i+1}" for i in range(lv.d)], lv.y)
    if ds.test_x is not None:
        _write_csv(os.path.join(out_dir, "inputs_test.csv"),
                   [f"x{i+1}" for i in range(ds.test_x.shape[1])], ds.test_x)
        _write_csv(os.path.join(out_dir, "outputs_test.csv"),
                   [f"y{i+1}" for i in range(ds.test_y.shape[1])], ds.test_y)


def read_dataset(in_dir) -> FidelityDataset:
    meta_path = os.path.join(in_dir, "meta.json")
    if not os.path.exists(meta_path):
        raise DatasetFormatError(f"missing file {meta_path}")
    with open(meta_path) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{meta_path}: invalid JSON: {exc}") from exc
    levels = []
    for m in range(1, meta["n_levels"] + 1):
        xpath = os.path.join(in_dir, f"inputs_f{m}.csv")
        ypath = os.path.join(in_dir, f"outputs_f{m}.csv")
        if not os.path.exists(ypath):
            raise DatasetFormatError(f"fidelity level {m}: missing outputs file {ypath}")
        x = _read_csv(xpath)
        y = _read_csv(ypath, expected_cols=meta["levels"][m - 1]["d"])
        if x.shape[0] != meta["levels"][m - 1]["n"]:
            raise DatasetFormatError(f"{xpath}: {x.shape[0]} rows, meta says "
                                     f"{meta['levels'][m - 1]['n']}")
        levels.append(FidelityLevel(x, y))
    test_x = test_y = None
    if meta.get("n_test", 0):
        test_x = _read_csv(os.path.join(in_dir, "inputs_test.csv"))
        test_y = _read_csv(os.path.join(in_dir, "outputs_test.csv"))
    return FidelityDataset(
        benchmark=meta["benchmark"],
        seed=meta["seed"],
        levels=levels,
        bounds=np.array(meta["bounds"], dtype=np.float64),
        test_x=test_x,
        test_y=test_y,
        field_shape=tuple(meta["field_shape"]) if "field_shape" in meta else None,
        generator_version=meta.get("generator_version", "unknown"),
        extra=meta.get("extra", {}),
    )


# ---------------------------------------------------------------------------
# Generation pipelines.
# ---------------------------------------------------------------------------


def _streams(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _solve_field(benchmark: str, x: np.ndarray, mesh) -> FieldGrid:
    if benchmark == "burgers":
        return solve_burgers(float(x[0]), mesh[0], mesh[1])
    return solve_poisson(x[:4], float(x[4]), mesh)


def _pde_outputs(benchmark: str, xs: np.ndarray, mesh) -> np.ndarray:
    rows = []
    for x in xs:
        grid = _solve_field(benchmark, x, mesh)
        up = upscale_bilinear(grid, UPSCALE_NODES, UPSCALE_NODES)
        rows.append(up.values.reshape(-1))
    return np.array(rows)


def generate_dataset(benchmark: str, n_lf: int, n_hf: int, n_test: int,
                     seed: int) -> FidelityDataset:
    """Draw inputs and evaluate both fidelity levels plus a held-out test set.

    Low-fidelity, high-fidelity, and test inputs come from independent seeded
    streams (no subset structure).  Test outputs are high fidelity.
    """
    if benchmark not in BENCHMARKS:
        raise ConfigError(f"unknown benchmark {benchmark!r}")
    if n_lf < n_hf:
        raise ConfigError(f"need n_lf >= n_hf, got {n_lf} < {n_hf}")
    if min(n_lf, n_hf, n_test) < 1:
        raise ConfigError("sample counts must be >= 1")
    rng_lf, rng_hf, rng_test = _streams(seed, 3)

    if benchmark in ("borehole", "currin", "park"):
        spec = input_spec(benchmark)
        x_lf = sample_inputs(spec, n_lf, rng_lf)
        x_hf = sample_inputs(spec, n_hf, rng_hf)
        x_test = sample_inputs(spec, n_test, rng_test)
        levels = [FidelityLevel(x_lf, evaluate_batch(benchmark, x_lf, "low")),
                  FidelityLevel(x_hf, evaluate_batch(benchmark, x_hf, "high"))]
        return FidelityDataset(benchmark, seed, levels, spec.bounds,
                               test_x=x_test,
                               test_y=evaluate_batch(benchmark, x_test, "high"))

    bounds = PDE_BOUNDS[benchmark]
    lo, hi = bounds[:, 0], bounds[:, 1]
    dim = bounds.shape[0]
    x_lf = lo + rng_lf.random((n_lf, dim)) * (hi - lo)
    x_hf = lo + rng_hf.random((n_hf, dim)) * (hi - lo)
    x_test = lo + rng_test.random((n_test, dim)) * (hi - lo)
    low_mesh, high_mesh = PDE_MESHES[benchmark]
    levels = [FidelityLevel(x_lf, _pde_outputs(benchmark, x_lf, low_mesh)),
              FidelityLevel(x_hf, _pde_outputs(benchmark, x_hf, high_mesh))]
    return FidelityDataset(benchmark, seed, levels, bounds,
                           test_x=x_test,
                           test_y=_pde_outputs(benchmark, x_test, high_mesh),
                           field_shape=(UPSCALE_NODES, UPSCALE_NODES))
