"""Multimodal benchmark functions with their usual domains.

All functions accept a single point (shape ``(d,)``) or a batch of points
(shape ``(n, d)``) and return a float or an array of length ``n``.

=============  ================  =========================================
name           domain            known minimum
=============  ================  =========================================
eggholder      [-512, 512]^2     -959.6407 at (512, 404.2319)
rastrigin      [-5.12, 5.12]^n   0 at the origin
schaffer4      [-100, 100]^2     0.292579 at (0, +-1.253132) and permutations
crossintray    [-10, 10]^2       -2.06261 at (+-1.3491, +-1.3491)
griewank       [-600, 600]^n     0 at the origin
=============  ================  =========================================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, ConfigurationError, ObjectiveSpec

__all__ = [
    "eggholder",
    "rastrigin",
    "schaffer4",
    "crossintray",
    "griewank",
    "sphere",
    "BenchmarkId",
    "make_benchmark",
    "parse_benchmark",
    "BENCHMARKS",
]


def _split2(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def eggholder(x):
    a, b = _split2(x)
    b47 = b + 47.0
    return -b47 * np.sin(np.sqrt(np.abs(a / 2.0 + b47))) - a * np.sin(np.sqrt(np.abs(a - b47)))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    return 10.0 * n + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def schaffer4(x):
    a, b = _split2(x)
    num = np.cos(np.sin(np.abs(a**2 - b**2))) ** 2 - 0.5
    den = (1.0 + 0.001 * (a**2 + b**2)) ** 2
    return 0.5 + num / den


def crossintray(x):
    a, b = _split2(x)
    inner = np.abs(np.sin(a) * np.sin(b) * np.exp(np.abs(100.0 - np.sqrt(a**2 + b**2) / np.pi)))
    return -0.0001 * (inner + 1.0) ** 0.1


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1) + 1.0


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x**2, axis=-1)


@dataclass(frozen=True)
class _Entry:
    func: object
    low: float
    high: float
    fixed_dim: int | None
    optimum: float


BENCHMARKS = {
    "eggholder": _Entry(eggholder, -512.0, 512.0, 2, -959.6406627106155),
    "rastrigin": _Entry(rastrigin, -5.12, 5.12, None, 0.0),
    "schaffer4": _Entry(schaffer4, -100.0, 100.0, 2, 0.29257863203598045),
    "crossintray": _Entry(crossintray, -10.0, 10.0, 2, -2.0626118708227392),
    "griewank": _Entry(griewank, -600.0, 600.0, None, 0.0),
    "sphere": _Entry(sphere, -5.0, 5.0, None, 0.0),
}


@dataclass(frozen=True)
class BenchmarkId:
    name: str
    dimension: int = 2

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ConfigurationError(
                f"unknown benchmark {self.name!r}; choose from {sorted(BENCHMARKS)}"
            )
        fixed = BENCHMARKS[self.name].fixed_dim
        if self.dimension < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.dimension}")
        if fixed is not None and self.dimension != fixed:
            raise ConfigurationError(f"{self.name} is defined for {fixed}D only")

    @property
    def label(self) -> str:
        """Short label such as ``rastrigin5``."""
        return f"{self.name}{self.dimension}"


def make_benchmark(bid: BenchmarkId | str, dimension: int | None = None) -> ObjectiveSpec:
    """Objective for a named benchmark on its standard domain."""
    if isinstance(bid, str):
        bid = BenchmarkId(bid, dimension if dimension is not None else 2)
    e = BENCHMARKS[bid.name]
    return ObjectiveSpec(
        Bounds.uniform(e.low, e.high, bid.dimension),
        e.func,
        name=bid.label,
        optimum=e.optimum,
        vectorized=True,
    )


def parse_benchmark(label: str, default_dim: int = 2) -> BenchmarkId:
    """Parse ``griewank5`` / ``griewank`` / ``schaffer4`` style labels.

    The longest benchmark name prefixing the label wins; any digits after
    it give the dimension.
    """
    label = label.strip().lower()
    for name in sorted(BENCHMARKS, key=len, reverse=True):
        rest = label[len(name):]
        if label.startswith(name) and (rest == "" or rest.isdigit()):
            dim = int(rest) if rest else BENCHMARKS[name].fixed_dim or default_dim
            return BenchmarkId(name, dim)
    raise ConfigurationError(f"unknown benchmark label {label!r}; choose from {sorted(BENCHMARKS)}")
