"""Analytic two-fidelity benchmark functions: borehole, currin, park.

All evaluations are pure (same input, same output, no global state) and
reentrant, so parallel sample evaluation is safe.  The low-fidelity variants
are the standard informative distortions of the high-fidelity formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError

#: Park's first coordinate is clamped to this floor; the formula has a
#: removable 0/0 at x1 = 0 and the limit exists.
PARK_X1_FLOOR = 1e-6

BOREHOLE_BOUNDS = np.array([
    [0.05, 0.15],       # borehole radius
    [100.0, 50000.0],   # radius of influence
    [63070.0, 115600.0],  # upper-aquifer transmissivity
    [990.0, 1110.0],    # upper-aquifer potentiometric head
    [63.1, 116.0],      # lower-aquifer transmissivity
    [700.0, 820.0],     # lower-aquifer potentiometric head
    [1120.0, 1680.0],   # borehole length
    [9855.0, 12045.0],  # borehole hydraulic conductivity
])


@dataclass
class InputSpec:
    """A benchmark's input box: one (lower, upper) pair per dimension."""

    benchmark: str
    bounds: np.ndarray  # (l, 2)

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=np.float64)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ConfigError("bounds must be an (l, 2) array")
        if not np.all(self.bounds[:, 0] < self.bounds[:, 1]):
            raise ConfigError("each lower bound must be below its upper bound")

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    def check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DomainError(f"{self.benchmark}: expected {self.dim} inputs, got shape {x.shape}")
        if np.any(x < self.bounds[:, 0]) or np.any(x > self.bounds[:, 1]):
            raise DomainError(f"{self.benchmark}: input {x.tolist()} outside bounds")
        return x


def input_spec(benchmark: str) -> InputSpec:
    if benchmark == "borehole":
        return InputSpec("borehole", BOREHOLE_BOUNDS)
    if benchmark == "currin":
        return InputSpec("currin", np.array([[0.0, 1.0]] * 2))
    if benchmark == "park":
        bounds = np.array([[PARK_X1_FLOOR, 1.0]] + [[0.0, 1.0]] * 3)
        return InputSpec("park", bounds)
    raise ConfigError(f"unknown analytic benchmark {benchmark!r}")


def _check_fidelity(fidelity: str):
    if fidelity not in ("low", "high"):
        raise ConfigError(f"fidelity must be 'low' or 'high', got {fidelity!r}")


def eval_borehole(x, fidelity: str = "high") -> float:
    """Water-flow response; the low variant swaps the 2*pi and +1 constants
    for 5 and +1.5."""
    _check_fidelity(fidelity)
    rw, r, tu, hu, tl, hl, length, kw = input_spec("borehole").check(x)
    log_ratio = np.log(r / rw)
    denom = log_ratio * ((1.0 if fidelity == "high" else 1.5)
                         + 2.0 * length * tu / (log_ratio * rw * rw * kw)
                         + tu / tl)
    numer = (2.0 * np.pi if fidelity == "high" else 5.0) * tu * (hu - hl)
    return float(numer / denom)


def _currin_high(x1: float, x2: float) -> float:
    # the exponential factor has limit 1 as x2 -> 0+; take the limit at 0
    factor = 1.0 if x2 == 0.0 else 1.0 - np.exp(-1.0 / (2.0 * x2))
    ratio = ((2300.0 * x1**3 + 1900.0 * x1**2 + 2092.0 * x1 + 60.0)
             / (100.0 * x1**3 + 500.0 * x1**2 + 4.0 * x1 + 20.0))
    return float(factor * ratio)


def eval_currin(x, fidelity: str = "high") -> float:
    """Two-dimensional benchmark on the unit square; the low variant averages
    four +/-0.05-shifted high evaluations with x2 clamped at 0."""
    _check_fidelity(fidelity)
    x1, x2 = input_spec("currin").check(x)
    if fidelity == "high":
        return _currin_high(x1, x2)
    up, down = x2 + 0.05, max(0.0, x2 - 0.05)
    return 0.25 * (_currin_high(x1 + 0.05, up) + _currin_high(x1 + 0.05, down)
                   + _currin_high(x1 - 0.05, up) + _currin_high(x1 - 0.05, down))


def _park_high(x1: float, x2: float, x3: float, x4: float) -> float:
    x1 = max(x1, PARK_X1_FLOOR)
    term1 = x1 / 2.0 * (np.sqrt(1.0 + (x2 + x3 * x3) * x4 / (x1 * x1)) - 1.0)
    term2 = (x1 + 3.0 * x4) * np.exp(1.0 + np.sin(x3))
    return float(term1 + term2)


def eval_park(x, fidelity: str = "high") -> float:
    """Four-dimensional benchmark; low = (1 + sin(x1)/10) high - 2 x1 + x2^2 + x3^2 + 0.5."""
    _check_fidelity(fidelity)
    x1, x2, x3, x4 = input_spec("park").check(x)
    high = _park_high(x1, x2, x3, x4)
    if fidelity == "high":
        return high
    return float((1.0 + np.sin(x1) / 10.0) * high - 2.0 * x1 + x2 * x2 + x3 * x3 + 0.5)


ANALYTIC_BENCHMARKS = {
    "borehole": eval_borehole,
    "currin": eval_currin,
    "park": eval_park,
}


def evaluate_batch(benchmark: str, x: np.ndarray, fidelity: str) -> np.ndarray:
    """Evaluate one analytic benchmark row-wise; returns an (n, 1) column."""
    fn = ANALYTIC_BENCHMARKS.get(benchmark)
    if fn is None:
        raise ConfigError(f"unknown analytic benchmark {benchmark!r}")
    x = np.asarray(x, dtype=np.float64)
    return np.array([[fn(row, fidelity)] for row in x])


def sample_inputs(spec: InputSpec, n: int, seed) -> np.ndarray:
    """n i.i.d. uniform draws over the benchmark box, deterministic per seed.

    Low- and high-fidelity sets are drawn from independent seeds by callers;
    no subset relation is imposed between them.
    """
    if n < 1:
        raise ConfigError("sample count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo = spec.bounds[:, 0]
    hi = spec.bounds[:, 1]
    return lo + rng.random((n, spec.dim)) * (hi - lo)
