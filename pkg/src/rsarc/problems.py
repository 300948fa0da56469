"""Unconstrained test problems with analytic derivatives and low-rank variants.

Each problem bundles value/gradient/Hessian callables with its standard
start point and (where known) the optimal objective value.  Low-rank
problems of ambient dimension d are manufactured from an r-dimensional
base problem f via g(x) = f(Q^T x) for a random column-orthonormal
Q in R^{d x r}; by the chain rule the Hessian of g has rank at most r
everywhere, so r acts as the effective rank of g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidDimensionError, UnsupportedProblemError

BUILTIN_NAMES = (
    "ARWHEAD",
    "COSINE",
    "ENGVAL1",
    "POWER",
    "NONDQUAR",
    "QUADRANK",
    "ROSENCHAIN",
)

# Best objective values for ENGVAL1, computed to full precision with a
# second-order trust-region method from several starts (all converge to
# ||grad|| < 1e-14 with positive definite Hessian, min eigenvalue ~2.06).
# Catalogued "solution" values of 0 for this function are lower bounds
# that are not attained, so the computed minima are used instead.
_ENGVAL1_MIN = {
    50: 53.58221488520761,
    100: 109.08813614309213,
}


@dataclass
class ObjectiveProblem:
    """Callable bundle (f, grad f, hess f) plus problem metadata.

    Attributes:
        name: registry identifier, e.g. "ARWHEAD" or "l-ARWHEAD:d=1000:seed=1".
        dim: number of variables d.
        x0: standard start point, shape (d,).
        f_star: known optimal objective value, or None if unknown.
        known_rank: upper bound on rank(hess f(x)) valid at every x, or None.
        value / gradient / hessian: evaluators; pure functions of x.
    """

    name: str
    dim: int
    x0: np.ndarray
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    f_star: Optional[float] = None
    known_rank: Optional[int] = None


@dataclass
class LowRankAugmentation:
    """A base problem embedded into a higher dimension via g(x) = f(Q^T x)."""

    base: ObjectiveProblem
    embedding: np.ndarray  # d x r, orthonormal columns
    seed: int
    problem: ObjectiveProblem = field(init=False)

    def __post_init__(self):
        self.problem = _augmented_problem(self.base, self.embedding, self.seed)


def make_orthogonal_embedding(d: int, r: int, seed) -> np.ndarray:
    """Return a d x r matrix Q with orthonormal columns, Q^T Q = I_r.

    Q is the orthonormalization (thin QR) of a d x r standard-Gaussian
    matrix, deterministic for a given seed.
    """
    if r < 1 or r > d:
        raise InvalidDimensionError(f"need 1 <= r <= d, got r={r}, d={d}")
    rng = np.random.default_rng(seed)
    q, rmat = np.linalg.qr(rng.standard_normal((d, r)))
    # fix the sign convention so Q does not depend on QR implementation details
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return q * signs


def _augmented_problem(base: ObjectiveProblem, q: np.ndarray, seed) -> ObjectiveProblem:
    qt = q.T.copy()

    def value(x):
        return base.value(qt @ x)

    def gradient(x):
        return q @ base.gradient(qt @ x)

    def hessian(x):
        return q @ base.hessian(qt @ x) @ qt

    rank = base.known_rank if base.known_rank is not None else base.dim
    head = base.name.split(":")[0]
    label = f"l-{head}:N={base.dim}"
    if head == "QUADRANK" and base.known_rank != base.dim:
        label += f":rank={base.known_rank}"
    label += f":d={q.shape[0]}:seed={seed}"
    return ObjectiveProblem(
        name=label,
        dim=q.shape[0],
        x0=q @ base.x0,
        value=value,
        gradient=gradient,
        hessian=hessian,
        f_star=base.f_star,
        known_rank=rank,
    )


def augment(base: ObjectiveProblem, d: int, seed) -> ObjectiveProblem:
    """Embed ``base`` (dimension r) into dimension d >= r as g(x) = f(Q^T x).

    The start point is lifted as x0 = Q @ base.x0, so g(x0) = f(base.x0)
    exactly and the optimal value carries over unchanged.
    """
    if d < base.dim:
        raise InvalidDimensionError(
            f"ambient dimension {d} smaller than base dimension {base.dim}"
        )
    q = make_orthogonal_embedding(d, base.dim, seed)
    return _augmented_problem(base, q, seed)


# ---------------------------------------------------------------------------
# Built-in problems.  Closed forms follow the standard SIF definitions;
# start values of the four anchored problems (ARWHEAD, COSINE, ENGVAL1,
# POWER) are pinned by tests.
# ---------------------------------------------------------------------------


def _arwhead(n: int) -> ObjectiveProblem:
    # f(x) = sum_{i<n} ((x_i^2 + x_n^2)^2 - 4 x_i + 3), x0 = ones, f* = 0

    def value(x):
        u = x[:-1] ** 2 + x[-1] ** 2
        return float(np.sum(u**2 - 4.0 * x[:-1] + 3.0))

    def gradient(x):
        u = x[:-1] ** 2 + x[-1] ** 2
        g = np.zeros_like(x)
        g[:-1] = 4.0 * x[:-1] * u - 4.0
        g[-1] = 4.0 * x[-1] * np.sum(u)
        return g

    def hessian(x):
        u = x[:-1] ** 2 + x[-1] ** 2
        h = np.zeros((n, n))
        idx = np.arange(n - 1)
        h[idx, idx] = 4.0 * u + 8.0 * x[:-1] ** 2
        h[idx, -1] = h[-1, idx] = 8.0 * x[:-1] * x[-1]
        h[-1, -1] = 4.0 * np.sum(u) + 8.0 * (n - 1) * x[-1] ** 2
        return h

    return ObjectiveProblem("ARWHEAD", n, np.ones(n), value, gradient, hessian, f_star=0.0)


def _cosine(n: int) -> ObjectiveProblem:
    # f(x) = sum_{i<n} cos(x_i^2 - 0.5 x_{i+1}), x0 = ones, f* = -(n-1)

    def value(x):
        return float(np.sum(np.cos(x[:-1] ** 2 - 0.5 * x[1:])))

    def gradient(x):
        t = x[:-1] ** 2 - 0.5 * x[1:]
        s = np.sin(t)
        g = np.zeros_like(x)
        g[:-1] -= 2.0 * x[:-1] * s
        g[1:] += 0.5 * s
        return g

    def hessian(x):
        t = x[:-1] ** 2 - 0.5 * x[1:]
        s, c = np.sin(t), np.cos(t)
        h = np.zeros((n, n))
        idx = np.arange(n - 1)
        h[idx, idx] += -4.0 * x[:-1] ** 2 * c - 2.0 * s
        h[idx, idx + 1] = h[idx + 1, idx] = x[:-1] * c
        h[idx + 1, idx + 1] += -0.25 * c
        return h

    return ObjectiveProblem(
        "COSINE", n, np.ones(n), value, gradient, hessian, f_star=-(n - 1.0)
    )


def _engval1(n: int) -> ObjectiveProblem:
    # f(x) = sum_{i<n} ((x_i^2 + x_{i+1}^2)^2 - 4 x_i + 3), x0 = 2*ones

    def value(x):
        u = x[:-1] ** 2 + x[1:] ** 2
        return float(np.sum(u**2 - 4.0 * x[:-1] + 3.0))

    def gradient(x):
        u = x[:-1] ** 2 + x[1:] ** 2
        g = np.zeros_like(x)
        g[:-1] += 4.0 * x[:-1] * u - 4.0
        g[1:] += 4.0 * x[1:] * u
        return g

    def hessian(x):
        u = x[:-1] ** 2 + x[1:] ** 2
        h = np.zeros((n, n))
        idx = np.arange(n - 1)
        h[idx, idx] += 4.0 * u + 8.0 * x[:-1] ** 2
        h[idx + 1, idx + 1] += 4.0 * u + 8.0 * x[1:] ** 2
        h[idx, idx + 1] = h[idx + 1, idx] = 8.0 * x[:-1] * x[1:]
        return h

    return ObjectiveProblem(
        "ENGVAL1",
        n,
        2.0 * np.ones(n),
        value,
        gradient,
        hessian,
        f_star=_ENGVAL1_MIN.get(n),
    )


def _power(n: int) -> ObjectiveProblem:
    # f(x) = (sum_i i x_i^2)^2, x0 = ones, f* = 0 at the origin
    w = np.arange(1.0, n + 1.0)

    def value(x):
        return float(np.dot(w, x**2) ** 2)

    def gradient(x):
        return 4.0 * np.dot(w, x**2) * (w * x)

    def hessian(x):
        t = np.dot(w, x**2)
        v = w * x
        return 4.0 * t * np.diag(w) + 8.0 * np.outer(v, v)

    return ObjectiveProblem("POWER", n, np.ones(n), value, gradient, hessian, f_star=0.0)


def _nondquar(n: int) -> ObjectiveProblem:
    # f(x) = (x_1-x_2)^2 + (x_{n-1}-x_n)^2 + sum_{i<=n-2} (x_i+x_{i+1}+x_n)^4
    # x0 alternates +1/-1, f* = 0

    def value(x):
        t = x[:-2] + x[1:-1] + x[-1]
        return float((x[0] - x[1]) ** 2 + (x[-2] - x[-1]) ** 2 + np.sum(t**4))

    def gradient(x):
        t = x[:-2] + x[1:-1] + x[-1]
        g = np.zeros_like(x)
        g[0] += 2.0 * (x[0] - x[1])
        g[1] -= 2.0 * (x[0] - x[1])
        g[-2] += 2.0 * (x[-2] - x[-1])
        g[-1] -= 2.0 * (x[-2] - x[-1])
        c = 4.0 * t**3
        g[:-2] += c
        g[1:-1] += c
        g[-1] += np.sum(c)
        return g

    def hessian(x):
        t = x[:-2] + x[1:-1] + x[-1]
        h = np.zeros((n, n))
        h[0, 0] += 2.0
        h[1, 1] += 2.0
        h[0, 1] -= 2.0
        h[1, 0] -= 2.0
        h[-2, -2] += 2.0
        h[-1, -1] += 2.0
        h[-2, -1] -= 2.0
        h[-1, -2] -= 2.0
        c = 12.0 * t**2
        for i in range(n - 2):
            for a in (i, i + 1, n - 1):
                for b in (i, i + 1, n - 1):
                    h[a, b] += c[i]
        return h

    x0 = np.ones(n)
    x0[1::2] = -1.0
    return ObjectiveProblem("NONDQUAR", n, x0, value, gradient, hessian, f_star=0.0)


def _rosenchain(n: int) -> ObjectiveProblem:
    # chained Rosenbrock: sum_{i<n} (100 (x_{i+1}-x_i^2)^2 + (1-x_i)^2)

    def value(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def gradient(x):
        r = x[1:] - x[:-1] ** 2
        g = np.zeros_like(x)
        g[:-1] += -400.0 * x[:-1] * r - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * r
        return g

    def hessian(x):
        r = x[1:] - x[:-1] ** 2
        h = np.zeros((n, n))
        idx = np.arange(n - 1)
        h[idx, idx] += -400.0 * r + 800.0 * x[:-1] ** 2 + 2.0
        h[idx + 1, idx + 1] += 200.0
        h[idx, idx + 1] = h[idx + 1, idx] = -400.0 * x[:-1]
        return h

    x0 = np.ones(n)
    x0[0::2] = -1.2
    return ObjectiveProblem("ROSENCHAIN", n, x0, value, gradient, hessian, f_star=0.0)


def _quadrank(n: int, rank: int) -> ObjectiveProblem:
    # f(x) = 0.5 x^T D x - b^T x with D = diag(1..rank, 0..0) and b the
    # indicator of the first `rank` coordinates; minimizer x_i = 1/i on the
    # support, f* = -0.5 * H_rank (harmonic number).  Exact Hessian rank
    # equal to `rank` everywhere makes this the workhorse for rank tests.
    if rank < 1 or rank > n:
        raise InvalidDimensionError(f"need 1 <= rank <= N, got rank={rank}, N={n}")
    d = np.zeros(n)
    d[:rank] = np.arange(1.0, rank + 1.0)
    b = np.zeros(n)
    b[:rank] = 1.0
    f_star = -0.5 * float(np.sum(1.0 / np.arange(1.0, rank + 1.0)))

    def value(x):
        return float(0.5 * np.dot(x, d * x) - np.dot(b, x))

    def gradient(x):
        return d * x - b

    def hessian(x):
        return np.diag(d)

    return ObjectiveProblem(
        f"QUADRANK:d={n}:rank={rank}",
        n,
        np.zeros(n),
        value,
        gradient,
        hessian,
        f_star=f_star,
        known_rank=rank,
    )


def quadrank_minimizer(n: int, rank: int) -> np.ndarray:
    """Closed-form minimizer of the QUADRANK problem (zero off the support)."""
    x = np.zeros(n)
    x[:rank] = 1.0 / np.arange(1.0, rank + 1.0)
    return x


def builtin_problem(name: str, n: int, rank: Optional[int] = None) -> ObjectiveProblem:
    """Construct a built-in problem by name with dimension parameter N.

    ``rank`` applies to QUADRANK only (defaults to N, i.e. a positive
    definite quadratic).
    """
    if n < 2:
        raise InvalidDimensionError(f"need N >= 2, got {n}")
    key = name.upper()
    if key == "QUADRANK":
        return _quadrank(n, n if rank is None else rank)
    if rank is not None:
        raise UnsupportedProblemError(f"rank parameter not supported for {key}")
    factories = {
        "ARWHEAD": _arwhead,
        "COSINE": _cosine,
        "ENGVAL1": _engval1,
        "POWER": _power,
        "NONDQUAR": _nondquar,
        "ROSENCHAIN": _rosenchain,
    }
    if key not in factories:
        raise UnsupportedProblemError(f"unknown problem {name!r}")
    return factories[key](n)


def get_problem(selector: str) -> ObjectiveProblem:
    """Resolve a problem selector string from the registry.

    Built-ins: ``NAME[:N=<n>][:rank=<r>]`` (``d=`` is accepted as an alias
    for ``N=``), e.g. ``QUADRANK:d=10:rank=10``.

    Low-rank variants: ``l-NAME[:N=<n>]:d=<d>[:seed=<s>]``, e.g.
    ``l-ARWHEAD:d=1000:seed=1`` (N defaults to 100, seed to 0).
    """
    parts = selector.split(":")
    name = parts[0]
    params = {}
    for part in parts[1:]:
        if "=" not in part:
            raise UnsupportedProblemError(f"malformed selector component {part!r}")
        k, v = part.split("=", 1)
        try:
            params[k.strip()] = int(v)
        except ValueError as exc:
            raise UnsupportedProblemError(f"non-integer parameter {part!r}") from exc

    if name.lower().startswith("l-"):
        base_name = name[2:]
        n = params.pop("N", 100)
        d = params.pop("d", None)
        seed = params.pop("seed", 0)
        rank = params.pop("rank", None)
        if params:
            raise UnsupportedProblemError(f"unknown parameters {sorted(params)}")
        if d is None:
            raise UnsupportedProblemError(f"selector {selector!r} needs d=<dim>")
        return augment(builtin_problem(base_name, n, rank), d, seed)

    n = params.pop("N", params.pop("d", None))
    rank = params.pop("rank", None)
    if params:
        raise UnsupportedProblemError(f"unknown parameters {sorted(params)}")
    if n is None:
        raise UnsupportedProblemError(f"selector {selector!r} needs N=<dim>")
    return builtin_problem(name, n, rank)
