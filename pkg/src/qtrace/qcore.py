"""Amplitude-level simulation of Grover search over a classical predicate.

Amplitudes are kept real: sign-flip marking plus inversion about the mean,
started from the uniform state, never introduces a complex phase.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

MAX_QUBITS = 20

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


class ConfigurationError(ValueError):
    """Raised for invalid simulator or renderer parameters."""


class MeasureRng:
    """Deterministic keyed random stream.

    A stream is identified by ``(seed, *stream_id)``; the key is hashed with
    BLAKE2b and the draws come from a SplitMix64 counter, so constructing a
    stream per (pixel, pass, iteration) costs about a microsecond and the
    sequence never depends on which worker consumes it.
    """

    __slots__ = ("seed", "stream_id", "_state")

    def __init__(self, seed: int, *stream_id: int):
        self.seed = int(seed)
        self.stream_id = tuple(int(s) for s in stream_id)
        key = ":".join(str(v) for v in (self.seed,) + self.stream_id).encode()
        self._state = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")

    def spawn(self, *sub_id: int) -> "MeasureRng":
        return MeasureRng(self.seed, *(self.stream_id + sub_id))

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return (self.next_u64() * n) >> 64

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), in draw order (partial Fisher-Yates)."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


@dataclass
class OracleSpec:
    """Marking predicate over [0, 2**n_qubits) with an evaluation counter.

    ``mask`` caches the predicate over the whole domain when it is cheap to
    compute up front (the ray oracles do this); otherwise it is filled lazily.
    """

    n_qubits: int
    predicate: Callable[[int], bool]
    mask: Optional[np.ndarray] = None
    evaluations: int = 0

    @property
    def size(self) -> int:
        return 1 << self.n_qubits

    def marking(self) -> np.ndarray:
        if self.mask is None:
            self.mask = np.fromiter((bool(self.predicate(i)) for i in range(self.size)),
                                    dtype=bool, count=self.size)
        return self.mask

    def __call__(self, i: int) -> bool:
        if self.mask is not None:
            return bool(self.mask[i])
        return bool(self.predicate(i))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "OracleSpec":
        mask = np.asarray(mask, dtype=bool)
        n = mask.size.bit_length() - 1
        if mask.size != 1 << n:
            raise ConfigurationError(f"oracle domain {mask.size} is not a power of two")
        return cls(n_qubits=n, predicate=lambda i: bool(mask[i]), mask=mask)

    @classmethod
    def from_indices(cls, n_qubits: int, good) -> "OracleSpec":
        mask = np.zeros(1 << n_qubits, dtype=bool)
        mask[list(good)] = True
        return cls.from_mask(mask)


@dataclass
class GroverState:
    n_qubits: int
    amplitudes: np.ndarray
    good_mask: np.ndarray
    oracle: Optional[OracleSpec] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return 1 << self.n_qubits

    @property
    def n_good(self) -> int:
        return int(np.count_nonzero(self.good_mask))

    def good_probability(self) -> float:
        return float(np.sum(self.amplitudes[self.good_mask] ** 2))

    def norm(self) -> float:
        return float(np.sum(self.amplitudes ** 2))


def _check_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def prepare_uniform(n_qubits: int, oracle: OracleSpec | Callable[[int], bool]) -> GroverState:
    """Uniform superposition with the oracle's marking attached (one oracle call)."""
    _check_qubits(n_qubits)
    if not isinstance(oracle, OracleSpec):
        oracle = OracleSpec(n_qubits, oracle)
    elif oracle.n_qubits != n_qubits:
        raise ConfigurationError("oracle domain does not match n_qubits")
    n = 1 << n_qubits
    oracle.evaluations += 1
    return GroverState(
        n_qubits=n_qubits,
        amplitudes=np.full(n, 1.0 / math.sqrt(n)),
        good_mask=oracle.marking().copy(),
        oracle=oracle,
    )


def apply_grover(state: GroverState, r: int) -> GroverState:
    """Apply the Grover iterate r times in place: sign flip on good states, then
    inversion about the mean amplitude."""
    if r < 0:
        raise ValueError("r must be non-negative")
    amp = state.amplitudes
    good = state.good_mask
    for _ in range(r):
        amp[good] *= -1.0
        np.subtract(2.0 * amp.mean(), amp, out=amp)
    if state.oracle is not None:
        state.oracle.evaluations += r
    return state


def grover_angle(N: int, t: int) -> float:
    return math.asin(math.sqrt(t / N))


def success_probability(N: int, t: int, r: int) -> float:
    """Probability of measuring a good state after r iterations: sin^2((2r+1)θ)."""
    if not 0 <= t <= N:
        raise ValueError("need 0 <= t <= N")
    if t == 0:
        return 0.0
    if t == N:
        return 1.0
    return math.sin((2 * r + 1) * grover_angle(N, t)) ** 2


def optimal_r(N: int, t: int) -> int:
    """floor(pi / (4θ)), the iteration count that maximizes the success probability."""
    if not 1 <= t <= N:
        raise ValueError("optimal r is undefined unless 1 <= t <= N")
    return math.floor(math.pi / (4.0 * grover_angle(N, t)))


def closed_form_amplitudes(N: int, t: int, r: int) -> tuple[float, float]:
    """(good, bad) amplitude after r iterations from the uniform state."""
    if t == 0:
        return 0.0, 1.0 / math.sqrt(N)
    theta = grover_angle(N, t)
    angle = (2 * r + 1) * theta
    good = math.sin(angle) / math.sqrt(t)
    bad = math.cos(angle) / math.sqrt(N - t) if t < N else 0.0
    return good, bad


def measure(state: GroverState, rng: MeasureRng) -> int:
    """Sample a basis index with probability amplitude**2 (state is left intact)."""
    probs = np.cumsum(state.amplitudes ** 2)
    u = rng.random() * probs[-1]
    i = int(np.searchsorted(probs, u, side="right"))
    return min(i, state.size - 1)
