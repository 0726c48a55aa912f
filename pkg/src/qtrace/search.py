"""Adaptive exponential search, minimum finding, and false-negative estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qcore import (
    ConfigurationError,
    MeasureRng,
    OracleSpec,
    apply_grover,
    measure,
    prepare_uniform,
)

BACKENDS = ("subspace", "statevector")


@dataclass(frozen=True)
class QSearchConfig:
    """Growth constant of the exponential schedule.

    ``schedule(N)`` is the set of run sizes ``round(c**l)``, ``l = 0, 1, ...``,
    taken while ``c**l`` stays below ``ceil(sqrt(N))``; the false-negative
    estimate multiplies over it. ``run_schedule(N)`` is what a search actually
    executes: the same runs followed by one run at the cap when the last
    scheduled size has not reached it.
    """

    c: float = 1.8

    def __post_init__(self):
        if not 1.0 < self.c < 2.0:
            raise ConfigurationError(f"growth constant must lie in (1, 2), got {self.c}")

    @staticmethod
    def m_cap(N: int) -> int:
        return math.isqrt(N - 1) + 1 if N > 1 else 1

    def schedule(self, N: int) -> list[int]:
        cap = self.m_cap(N)
        out = []
        x = 1.0
        while x < cap:
            out.append(math.floor(x + 0.5))
            x *= self.c
        return out

    def run_schedule(self, N: int) -> list[int]:
        out = self.schedule(N)
        cap = self.m_cap(N)
        if not out or out[-1] < cap:
            out.append(cap)
        return out


@dataclass
class SearchOutcome:
    index: int
    found: bool
    eval_count: int = 0
    classical_checks: int = 0
    grover_runs: int = 0


def _as_predicate(f, oracle: OracleSpec) -> Callable[[int], bool]:
    if f is None:
        return oracle
    if isinstance(f, np.ndarray):
        return lambda i: bool(f[i])
    return f


def qsearch(
    oracle: OracleSpec,
    f: Optional[Callable[[int], bool]] = None,
    cfg: QSearchConfig | None = None,
    rng: MeasureRng | None = None,
    backend: str = "subspace",
) -> SearchOutcome:
    """Search for an index with f(index) == 1 when the number of solutions is unknown.

    Every measured index is checked with the classical predicate ``f`` (the
    oracle itself when omitted), so a found outcome is never a false positive.
    ``backend="statevector"`` evolves the full amplitude vector;
    ``"subspace"`` samples from the exact two-level form of the same state
    (all good amplitudes equal, all bad amplitudes equal), which is what the
    renderer uses per ray.
    """
    if backend not in BACKENDS:
        raise ConfigurationError(f"unknown backend {backend!r}")
    cfg = cfg or QSearchConfig()
    rng = rng or MeasureRng(0)
    check = _as_predicate(f, oracle)
    N = oracle.size
    out = SearchOutcome(index=-1, found=False)
    evals0 = oracle.evaluations

    if backend == "statevector":
        state = prepare_uniform(oracle.n_qubits, oracle)
        i = measure(state, rng)
    else:
        mask = oracle.marking()
        oracle.evaluations += 1
        good = None
        i = rng.below(N)
    out.index = i
    out.classical_checks += 1
    if check(i):
        out.found = True
        out.eval_count = oracle.evaluations - evals0
        return out

    if backend == "subspace":
        good = np.flatnonzero(mask)
        t = good.size
        bad = None
        theta = math.asin(math.sqrt(t / N))

    for M in cfg.run_schedule(N):
        r = rng.integers(1, M)
        out.grover_runs += 1
        if backend == "statevector":
            state = prepare_uniform(oracle.n_qubits, oracle)
            apply_grover(state, r)
            i = measure(state, rng)
        else:
            oracle.evaluations += 1 + r
            p_good = math.sin((2 * r + 1) * theta) ** 2 if 0 < t < N else float(t == N)
            if rng.random() < p_good:
                i = int(good[rng.below(t)])
            else:
                if bad is None:
                    bad = np.flatnonzero(~mask)
                i = int(bad[rng.below(bad.size)])
        out.index = i
        out.classical_checks += 1
        if check(i):
            out.found = True
            break
    out.eval_count = oracle.evaluations - evals0
    return out


@dataclass
class MinimumResult:
    index: Optional[int]
    value: Optional[int]
    eval_count: int = 0
    classical_checks: int = 0
    accepted: list[int] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.index is not None


def find_minimum(
    n_qubits: int,
    f: Sequence[bool] | Callable[[int], bool],
    g: Sequence[int] | Callable[[int], int],
    max_iters: Optional[int] = None,
    rng: MeasureRng | None = None,
    cfg: QSearchConfig | None = None,
    backend: str = "subspace",
) -> MinimumResult:
    """Minimize g over {x : f(x) = 1} by repeated QSearch against the marking
    ``f(x) and g(x) < current minimum``."""
    N = 1 << n_qubits
    if max_iters is None:
        max_iters = n_qubits + 5
    rng = rng or MeasureRng(0)
    f_arr = np.asarray(f, dtype=bool) if not callable(f) else np.fromiter(
        (bool(f(i)) for i in range(N)), dtype=bool, count=N)
    g_arr = np.asarray(g, dtype=np.int64) if not callable(g) else np.fromiter(
        (int(g(i)) if f_arr[i] else 0 for i in range(N)), dtype=np.int64, count=N)

    res = MinimumResult(index=None, value=None)
    for it in range(max_iters):
        if res.value is None:
            marking = f_arr
        else:
            marking = f_arr & (g_arr < res.value)
        oracle = OracleSpec.from_mask(marking)
        outcome = qsearch(oracle, marking, cfg, rng.spawn(it), backend=backend)
        res.eval_count += outcome.eval_count
        res.classical_checks += outcome.classical_checks
        if outcome.found:
            res.index = outcome.index
            res.value = int(g_arr[outcome.index])
            res.accepted.append(res.value)
    return res


def _grover_theta(t: np.ndarray, N: int) -> np.ndarray:
    return np.arcsin(np.sqrt(t / N))


def _linear_theta(t: np.ndarray, N: int) -> np.ndarray:
    return np.arcsin(t / N)


def fn_prob_qs(N: int, cfg: QSearchConfig | None = None, angle: str = "linear") -> float:
    """Schedule-product estimate of the QSearch false-negative probability under a
    uniform prior on t in [1, N], with E[r] = M/2 folded into the angle.

    ``angle="linear"`` evaluates the angle as arcsin(t/N), the convention under
    which the estimate is 0.205 at N=8 and 0.057 at N=64. ``angle="grover"``
    uses the Grover angle arcsin(sqrt(t/N)).
    """
    cfg = cfg or QSearchConfig()
    t = np.arange(1, N + 1, dtype=float)
    if angle == "linear":
        theta = _linear_theta(t, N)
    elif angle == "grover":
        theta = _grover_theta(t, N)
    else:
        raise ValueError(f"unknown angle convention {angle!r}")
    p = 1.0
    for M in cfg.schedule(N):
        p *= float(np.mean(np.cos((M + 1) * theta) ** 2))
    return p


def _prior_vector(N: int, t_prior) -> np.ndarray:
    if t_prior is None:
        return np.full(N, 1.0 / N)
    if isinstance(t_prior, (int, np.integer)):
        if not 1 <= t_prior <= N:
            raise ValueError("fixed t must lie in [1, N]")
        w = np.zeros(N)
        w[t_prior - 1] = 1.0
        return w
    w = np.asarray(t_prior, dtype=float)
    if w.shape != (N,):
        raise ValueError("t_prior must have one weight per t in [1, N]")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("t_prior must sum to 1")
    return w


def fn_prob_exact(N: int, cfg: QSearchConfig | None = None, t_prior=None) -> float:
    """Exact probability that QSearch reports nothing although t >= 1 solutions exist.

    For each t the probability is the product of the failed initial sample,
    (N - t) / N, and for every scheduled run the average of cos^2((2r+1)θ)
    over r uniform in [1, M]; the result is averaged over ``t_prior``
    (uniform on [1, N] by default, or a single fixed t when an int is given).
    """
    cfg = cfg or QSearchConfig()
    w = _prior_vector(N, t_prior)
    t = np.arange(1, N + 1, dtype=float)
    theta = _grover_theta(t, N)
    per_t = (N - t) / N
    for M in cfg.run_schedule(N):
        r = np.arange(1, M + 1, dtype=float)
        per_t = per_t * np.mean(np.cos(np.outer(2 * r + 1, theta)) ** 2, axis=0)
    return float(np.dot(w, per_t))


def fn_prob_iteration_product(N: int, cfg: QSearchConfig | None = None, t_prior=None) -> float:
    """Product over scheduled runs of the prior-averaged per-run failure
    probability (no initial sample). Coincides with ``fn_prob_exact`` up to the
    initial-sample factor when t is fixed; for a spread prior it is the
    iteration-wise approximation."""
    cfg = cfg or QSearchConfig()
    w = _prior_vector(N, t_prior)
    theta = _grover_theta(np.arange(1, N + 1, dtype=float), N)
    p = 1.0
    for M in cfg.run_schedule(N):
        r = np.arange(1, M + 1, dtype=float)
        p *= float(np.dot(w, np.mean(np.cos(np.outer(2 * r + 1, theta)) ** 2, axis=0)))
    return p


def rc_miss_probability(N: int, t: int) -> float:
    """Probability that a uniformly drawn floor(sqrt(N))-subset avoids all t solutions."""
    k = math.isqrt(N)
    p = 1.0
    for n in range(k):
        if N - t - n <= 0:
            return 0.0
        p *= (N - t - n) / (N - n)
    return p


def fn_prob_rc(N: int) -> float:
    """Average subset-miss probability over t in [1, N - floor(sqrt(N))]."""
    if N < 4:
        raise ValueError("randomized classical estimate needs N >= 4")
    k = math.isqrt(N)
    upper = N - k
    return sum(rc_miss_probability(N, t) for t in range(1, upper + 1)) / upper
