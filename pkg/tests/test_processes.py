import itertools
import math

import numpy as np
import pytest

from repstat import CapabilityError, ConfigError, DomainError, Sequence
from repstat import processes as proc


def two_state_markov(stay=0.7):
    return proc.MarkovProcess([[stay, 1 - stay], [1 - stay, stay]])


def small_hmm():
    t = [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]]
    e = [[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.25, 0.25, 0.5]]
    return proc.HiddenMarkovProcess(t, e)


def enumerate_blocks(s, n):
    return itertools.product(range(s), repeat=n)


def hmm_path_enumeration_log_prob(model, w):
    """Sum P(hidden path) * P(emissions | path) over every hidden path."""
    total = 0.0
    k = len(w)
    for path in itertools.product(range(model.num_states), repeat=k):
        p = model.initial[path[0]] * model.emission[path[0], w[0]]
        for t in range(1, k):
            p *= model.transition[path[t - 1], path[t]] * model.emission[path[t], w[t]]
        total += p
    return math.log(total) if total > 0 else float("-inf")


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------


def test_rejects_non_distribution():
    with pytest.raises(ConfigError):
        proc.IIDProcess([0.5, 0.6])
    with pytest.raises(ConfigError):
        proc.IIDProcess([1.1, -0.1])
    with pytest.raises(ConfigError):
        proc.MarkovProcess([[0.5, 0.5], [0.7, 0.2]])


def test_rejects_nonstationary_initial_when_flagged():
    with pytest.raises(ConfigError):
        proc.MarkovProcess([[0.7, 0.3], [0.3, 0.7]], initial=[0.9, 0.1])
    m = proc.MarkovProcess([[0.7, 0.3], [0.3, 0.7]], initial=[0.9, 0.1], stationary=False)
    assert not m.stationary


def test_rejects_degenerate_dither():
    base = proc.IIDProcess.uniform(2)
    with pytest.raises(ConfigError):
        proc.UniformlyDitheredProcess(base, [1.0, 0.0])
    with pytest.raises(ConfigError):
        proc.UniformlyDitheredProcess(base, [0.8, 0.2], dither_bound=0.5)


def test_stationary_distribution_cyclic_chain():
    # deterministic 3-cycle: damped iteration must still settle
    t = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    pi = proc.stationary_distribution(t)
    assert np.abs(pi - 1 / 3).max() < 1e-9


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_empty_and_deterministic():
    m = proc.IIDProcess.uniform(2)
    assert len(m.sample(0, seed=1)) == 0
    a = m.sample(1000, seed=42)
    b = m.sample(1000, seed=42)
    assert a == b
    assert a != m.sample(1000, seed=43)


def test_periodic_sample_is_rotation():
    m = proc.PeriodicProcess([0, 1, 2])
    x = m.sample(6, seed=7)
    rotations = {(0, 1, 2, 0, 1, 2), (1, 2, 0, 1, 2, 0), (2, 0, 1, 2, 0, 1)}
    assert tuple(x.tolist()) in rotations


def test_markov_marginals_match_stationary():
    m = two_state_markov(0.7)
    n = 100_000
    x = m.sample(n, seed=3)
    freq = np.bincount(x.symbols, minlength=2) / n
    se = math.sqrt(0.5 * 0.5 / n)
    assert abs(freq[0] - 0.5) < 3 * se


def test_permutation_model_preserves_multiset():
    src = Sequence([0, 0, 1, 2, 2, 2], 3)
    m = proc.EmpiricalPermutationProcess(src)
    x = m.sample(6, seed=5)
    assert sorted(x.tolist()) == sorted(src.tolist())


def test_sampler_oracle_consistency_small_blocks():
    # empirical k-block frequencies vs exact probabilities, k <= 4
    models = {
        "iid": proc.IIDProcess([0.3, 0.7]),
        "markov": two_state_markov(0.7),
        "dithered": proc.UniformlyDitheredProcess(two_state_markov(0.8), [0.75, 0.25]),
    }
    n = 1_000_000
    for name, m in models.items():
        x = m.sample(n, seed=11).symbols
        for k in (1, 2, 3, 4):
            codes = np.zeros(n - k + 1, dtype=np.int64)
            for j in range(k):
                codes = codes * 2 + x[j : j + n - k + 1]
            counts = np.bincount(codes, minlength=2**k)
            total = n - k + 1
            for code in range(2**k):
                digits = [(code >> (k - 1 - j)) & 1 for j in range(k)]
                p = math.exp(m.block_log_prob(Sequence(digits, 2)))
                se = math.sqrt(max(p * (1 - p), 1e-12) / total)
                assert abs(counts[code] / total - p) < 4.5 * se, (name, digits)


# ---------------------------------------------------------------------------
# exact probabilities
# ---------------------------------------------------------------------------


def test_iid_block_log_prob():
    m = proc.IIDProcess.uniform(2)
    assert m.block_log_prob(Sequence([0, 1], 2)) == pytest.approx(math.log(0.25))
    assert m.block_log_prob(Sequence([], 2)) == 0.0


def test_markov_block_log_prob():
    m = two_state_markov(0.7)
    got = m.block_log_prob(Sequence([0, 0], 2))
    assert got == pytest.approx(math.log(0.5 * 0.7), abs=1e-12)


def test_block_probs_sum_to_one():
    for m in [
        proc.IIDProcess([0.2, 0.3, 0.5]),
        two_state_markov(0.6),
        small_hmm(),
        proc.UniformlyDitheredProcess(two_state_markov(0.9), [0.6, 0.4]),
        proc.PeriodicProcess([0, 1, 0, 2]),
    ]:
        for n in (1, 2, 4):
            total = sum(
                math.exp(m.block_log_prob(Sequence(w, m.alphabet_size)))
                for w in enumerate_blocks(m.alphabet_size, n)
            )
            assert total == pytest.approx(1.0, abs=1e-9), (m.kind, n)


def test_hmm_forward_matches_path_enumeration():
    m = small_hmm()
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = Sequence(rng.integers(0, 3, size=6), 3)
        assert m.block_log_prob(w) == pytest.approx(
            hmm_path_enumeration_log_prob(m, w), abs=1e-9
        )


def test_dithered_block_prob_matches_convolution_enumeration():
    base = two_state_markov(0.8)
    dither = np.array([0.75, 0.25])
    m = proc.UniformlyDitheredProcess(base, dither)
    for w in enumerate_blocks(2, 4):
        # P(X = w) = sum over base blocks of P(W) * prod P(Z = w - W)
        total = 0.0
        for b in enumerate_blocks(2, 4):
            pw = math.exp(base.block_log_prob(Sequence(b, 2)))
            pz = np.prod([dither[(wi - bi) % 2] for wi, bi in zip(w, b)])
            total += pw * pz
        assert m.block_log_prob(Sequence(w, 2)) == pytest.approx(
            math.log(total), abs=1e-9
        )


def test_periodic_block_prob():
    m = proc.PeriodicProcess([0, 1, 0, 2])
    assert m.block_log_prob(Sequence([0], 3)) == pytest.approx(math.log(0.5))
    assert m.block_log_prob(Sequence([1, 0, 2, 0], 3)) == pytest.approx(math.log(0.25))
    assert m.block_log_prob(Sequence([2, 2], 3)) == float("-inf")


def test_conditional_block_log_prob():
    m = two_state_markov(0.7)
    w = Sequence([0, 1, 1], 2)
    assert m.conditional_block_log_prob(w, Sequence([], 2)) == m.block_log_prob(w)
    # markov: only the last context symbol matters, exactly
    ctxs = [Sequence(c + (1,), 2) for c in enumerate_blocks(2, 3)]
    vals = {m.conditional_block_log_prob(w, c) for c in ctxs}
    assert len(vals) == 1
    # bayes-rule agreement for the hidden-chain model
    h = small_hmm()
    ctx = Sequence([2, 0], 3)
    blk = Sequence([1, 1], 3)
    direct = h.conditional_block_log_prob(blk, ctx)
    joint = hmm_path_enumeration_log_prob(h, Sequence([2, 0, 1, 1], 3))
    marg = hmm_path_enumeration_log_prob(h, ctx)
    assert direct == pytest.approx(joint - marg, abs=1e-9)


def test_zero_probability_context_raises():
    m = proc.PeriodicProcess([0, 1])
    with pytest.raises(DomainError):
        m.conditional_block_log_prob(Sequence([0], 2), Sequence([0, 0], 2))


def test_permutation_has_no_oracle():
    m = proc.EmpiricalPermutationProcess(Sequence([0, 1, 1], 2))
    with pytest.raises(CapabilityError):
        m.block_log_prob(Sequence([0], 2))


# ---------------------------------------------------------------------------
# finite-energy and one-step-bound diagnostics
# ---------------------------------------------------------------------------


def test_finite_energy_constant_deterministic_is_one():
    t = [[0.0, 1.0], [1.0, 0.0]]
    e = [[1.0, 0.0], [0.0, 1.0]]
    m = proc.HiddenMarkovProcess(t, e)
    assert proc.hmm_finite_energy_constant(m) == 1.0


def test_finite_energy_constant_uniform_emission():
    t = [[0.3, 0.7], [0.6, 0.4]]
    e = [[0.25, 0.25, 0.25, 0.25]] * 2
    m = proc.HiddenMarkovProcess(t, e)
    assert proc.hmm_finite_energy_constant(m) == pytest.approx(0.25)


def test_finite_energy_constant_matches_direct_enumeration():
    m = small_hmm()
    c = proc.hmm_finite_energy_constant(m)
    best = max(
        sum(
            m.transition[x, x2] * m.emission[x2, y]
            for x2 in range(m.num_states)
        )
        for x in range(m.num_states)
        for y in range(m.alphabet_size)
    )
    assert c == pytest.approx(best, abs=1e-12)


def test_finite_energy_conditional_bound_exhaustive():
    # c < 1 forces P(w | context) <= c ** len(w) on every enumerable case
    m = small_hmm()
    c = proc.hmm_finite_energy_constant(m)
    assert c < 1
    for nc in range(0, 3):
        for ctx in enumerate_blocks(3, nc):
            context = Sequence(ctx, 3)
            for nw in range(1, 4):
                for w in enumerate_blocks(3, nw):
                    lp = m.conditional_block_log_prob(Sequence(w, 3), context)
                    assert lp <= nw * math.log(c) + 1e-9


def test_dithered_conditional_bound_exhaustive():
    m = proc.UniformlyDitheredProcess(two_state_markov(0.9), [0.7, 0.3])
    logc = math.log(m.dither_bound)
    for nc in range(0, 4):
        for ctx in enumerate_blocks(2, nc):
            context = Sequence(ctx, 2)
            for nw in range(1, 4):
                for w in enumerate_blocks(2, nw):
                    lp = m.conditional_block_log_prob(Sequence(w, 2), context)
                    assert lp <= nw * logc + 1e-9


def test_doeblin_iid_uniform():
    diag = proc.doeblin_check(proc.IIDProcess.uniform(2), r=1)
    assert diag.doeblin_d == diag.doeblin_D == 0.5
    assert diag.lower_bound_holds and diag.upper_bound_holds


def test_doeblin_zero_transition_fails_lower_bound():
    m = proc.MarkovProcess([[0.0, 1.0], [0.5, 0.5]])
    diag = proc.doeblin_check(m, r=1)
    assert diag.doeblin_d == 0.0
    assert not diag.lower_bound_holds


def test_doeblin_two_step_matches_matrix_square():
    m = two_state_markov(0.7)
    diag = proc.doeblin_check(m, r=2)
    t2 = np.array(m.transition) @ np.array(m.transition)
    assert diag.doeblin_d == pytest.approx(t2.min())
    assert diag.doeblin_D == pytest.approx(t2.max())


def test_doeblin_lower_implies_upper_complement():
    rng = np.random.default_rng(8)
    for _ in range(25):
        t = rng.dirichlet(np.ones(3), size=3)
        m = proc.MarkovProcess(t, stationary=True, initial=None)
        for r in (1, 2, 3):
            diag = proc.doeblin_check(m, r)
            if diag.doeblin_d > 0 and m.alphabet_size > 1:
                assert diag.doeblin_D <= 1 - diag.doeblin_d + 1e-12


def test_doeblin_unsupported_kind():
    with pytest.raises(CapabilityError):
        proc.doeblin_check(proc.PeriodicProcess([0, 1]), r=1)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_model_round_trip(tmp_path):
    models = [
        proc.IIDProcess([0.2, 0.3, 0.5]),
        two_state_markov(0.7),
        small_hmm(),
        proc.UniformlyDitheredProcess(two_state_markov(0.8), [0.75, 0.25]),
        proc.PeriodicProcess([0, 1, 0, 2]),
        proc.EmpiricalPermutationProcess(Sequence([0, 1, 1, 0], 2)),
    ]
    for m in models:
        path = tmp_path / f"{m.kind}.json"
        proc.save_model(m, path)
        back = proc.load_model(path)
        assert back.to_dict() == m.to_dict()
        if not isinstance(m, proc.EmpiricalPermutationProcess):
            assert back.sample(50, seed=9) == m.sample(50, seed=9)


def test_model_from_dict_rejects_unknown():
    with pytest.raises(ConfigError):
        proc.model_from_dict({"kind": "quantum"})
    with pytest.raises(ConfigError):
        proc.model_from_dict([1, 2, 3])
