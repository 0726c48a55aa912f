import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtrace.qcore import ConfigurationError, MeasureRng, OracleSpec
from qtrace.search import (
    QSearchConfig,
    find_minimum,
    fn_prob_exact,
    fn_prob_iteration_product,
    fn_prob_qs,
    fn_prob_rc,
    qsearch,
    rc_miss_probability,
)

# schedule sets and estimates for c = 1.8
TABLE = [
    (8, [1, 2], 0.205), (16, [1, 2, 3], 0.113), (32, [1, 2, 3, 6], 0.055),
    (64, [1, 2, 3, 6], 0.057), (128, [1, 2, 3, 6, 10], 0.029),
    (256, [1, 2, 3, 6, 10], 0.029), (512, [1, 2, 3, 6, 10, 19], 0.015),
]

# frozen from an independent enumeration of every r-sequence with statevector evolution
EXACT_FIXED_T = {(8, 1): 0.008228868246078509, (8, 3): 0.02106651663780217,
                 (64, 1): 0.04726151943463788, (64, 3): 0.014977292836254824,
                 (16, 2): 0.0039727995499561075, (4, 1): 0.0}
EXACT_UNIFORM = {8: 0.03908203542232516, 64: 0.012014864736463121}


@pytest.mark.parametrize("N,sched,p", TABLE)
def test_estimate_table(N, sched, p):
    cfg = QSearchConfig(1.8)
    assert cfg.schedule(N) == sched
    assert fn_prob_qs(N, cfg) == pytest.approx(p, abs=1e-3)


@pytest.mark.parametrize("c", [1.0, 2.0, 0.5])
def test_growth_constant_range(c):
    with pytest.raises(ConfigurationError):
        QSearchConfig(c)


@given(n=st.integers(1, 16), c=st.floats(1.05, 1.95))
def test_schedule_invariants(n, c):
    N = 1 << n
    cfg = QSearchConfig(c)
    runs = cfg.run_schedule(N)
    cap = math.isqrt(N - 1) + 1
    assert cap == math.ceil(math.sqrt(N))
    assert all(1 <= m <= cap for m in runs)
    assert runs == sorted(runs)
    assert runs[-1] == cap
    assert runs[:len(cfg.schedule(N))] == cfg.schedule(N)


def test_all_solutions_found_on_first_sample():
    out = qsearch(OracleSpec.from_indices(3, range(8)), rng=MeasureRng(0))
    assert out.found and out.eval_count == 1 and out.classical_checks == 1


@pytest.mark.parametrize("backend", ["subspace", "statevector"])
@pytest.mark.parametrize("n", [3, 6, 9])
def test_no_solution_exhausts_schedule(backend, n):
    N = 1 << n
    runs = QSearchConfig().run_schedule(N)
    for seed in range(20):
        out = qsearch(OracleSpec.from_indices(n, []), rng=MeasureRng(seed), backend=backend)
        assert not out.found
        assert out.classical_checks == len(runs) + 1
        assert out.grover_runs == len(runs)
        assert len(runs) + 1 + len(runs) <= out.eval_count <= 1 + sum(m + 1 for m in runs)


@given(n=st.integers(2, 7), seed=st.integers(0, 10**6), data=st.data())
def test_no_false_positives(n, seed, data):
    N = 1 << n
    good = data.draw(st.sets(st.integers(0, N - 1)))
    oracle = OracleSpec.from_indices(n, good)
    for backend in ("subspace", "statevector"):
        out = qsearch(oracle, rng=MeasureRng(seed), backend=backend)
        assert out.found == (out.index in good) or not out.found
        if out.found:
            assert out.index in good


@pytest.mark.parametrize("key", sorted(EXACT_FIXED_T))
def test_exact_fixed_t_matches_enumeration(key):
    N, t = key
    assert fn_prob_exact(N, t_prior=t) == pytest.approx(EXACT_FIXED_T[key], abs=1e-12)


@pytest.mark.parametrize("N", sorted(EXACT_UNIFORM))
def test_exact_uniform_matches_enumeration(N):
    assert fn_prob_exact(N) == pytest.approx(EXACT_UNIFORM[N], abs=1e-12)


def test_exact_all_solutions_is_zero():
    assert fn_prob_exact(4, t_prior=4) == 0.0


def test_iteration_product_is_exact_without_first_sample():
    for N, t in [(8, 1), (64, 3), (16, 2)]:
        lhs = fn_prob_exact(N, t_prior=t)
        rhs = (N - t) / N * fn_prob_iteration_product(N, t_prior=t)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_iteration_product_near_table_estimate():
    ratio = fn_prob_iteration_product(64) / fn_prob_qs(64)
    assert 0.5 <= ratio <= 2.0


@pytest.mark.parametrize("backend", ["subspace", "statevector"])
def test_empirical_false_negatives_small(backend):
    N, n, trials = 16, 4, 4000
    rng = MeasureRng(99, 1)
    misses = 0
    for i in range(trials):
        t = rng.integers(1, N)
        out = qsearch(OracleSpec.from_indices(n, range(t)), rng=MeasureRng(5, i), backend=backend)
        misses += not out.found
    p = fn_prob_exact(N)
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(misses / trials - p) <= 3 * sigma + 1 / trials


def test_rc_estimate_values():
    assert fn_prob_rc(64) == pytest.approx(0.1111, abs=1e-4)
    assert 0.11 <= fn_prob_rc(64) <= 0.13
    assert fn_prob_rc(16) == pytest.approx(1 / 5, abs=1e-12)  # subset enumeration
    assert fn_prob_rc(8) == pytest.approx(1 / 3, abs=1e-12)
    assert rc_miss_probability(64, 64 - 8 + 1) == 0.0
    with pytest.raises(ValueError):
        fn_prob_rc(2)


def test_find_minimum_single_solution_then_nothing():
    f = np.zeros(64, bool)
    f[17] = True
    g = np.arange(64)
    res = find_minimum(6, f, g, max_iters=8, rng=MeasureRng(1))
    assert res.index == 17 and res.accepted == [17]


def test_find_minimum_without_solution():
    res = find_minimum(5, np.zeros(32, bool), np.zeros(32, int), rng=MeasureRng(0))
    assert not res.found and res.value is None


def test_find_minimum_converges():
    ok = 0
    for seed in range(1000):
        rng = MeasureRng(seed, 77)
        sol = rng.sample(64, 8)
        values = rng.sample(1000, 8)
        f = np.zeros(64, bool)
        g = np.zeros(64, int)
        f[sol] = True
        g[sol] = values
        res = find_minimum(6, f, g, max_iters=16, rng=MeasureRng(seed))
        ok += res.value == min(values)
    assert ok >= 990


@given(seed=st.integers(0, 10**6))
def test_find_minimum_accepts_strictly_decreasing(seed):
    rng = MeasureRng(seed)
    f = np.array([rng.random() < 0.3 for _ in range(32)])
    g = np.array([rng.below(10) for _ in range(32)])
    res = find_minimum(5, f, g, rng=MeasureRng(seed, 1))
    assert all(a > b for a, b in zip(res.accepted, res.accepted[1:]))
    if res.found:
        assert f[res.index] and g[res.index] == res.value


def test_angle_conventions():
    assert fn_prob_qs(64, angle="grover") != fn_prob_qs(64, angle="linear")
    with pytest.raises(ValueError):
        fn_prob_qs(64, angle="other")
