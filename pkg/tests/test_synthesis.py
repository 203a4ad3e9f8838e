import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthcap import BudgetExceeded
from synthcap.channels import bsc, erasure, identity
from synthcap.prob import Channel, Pmf
from synthcap.regions import AuxDecomposition, RatePoint
from synthcap.synthesis import (SynthesisCode, decode_sample, detector_demo,
                                exact_induced_joint, generate_code, key_independence_tv,
                                likelihood_encode, likelihood_ratio_detector, monte_carlo_joint,
                                monte_carlo_tv, product_target, sample_pairs, synthesis_tv,
                                tv_decay_experiment, witness_u_equals_y)
from synthcap.util import rng_for


def brute_induced_joint(code: SynthesisCode, q_x):
    """Loop-by-loop evaluation of the induced joint (independent of the package)."""
    px_u, py_u = code.aux.p_x_given_u.matrix, code.aux.p_y_given_u.matrix
    nx, ny = px_u.shape[1], py_u.shape[1]
    xs = list(itertools.product(range(nx), repeat=code.n))
    ys = list(itertools.product(range(ny), repeat=code.n))
    out = np.zeros((len(xs), len(ys)))
    for a, x in enumerate(xs):
        qx = np.prod([q_x.probs[s] for s in x])
        for k in range(code.M0):
            like = np.array([np.prod([px_u[code.codebook[j, k, t], x[t]] for t in range(code.n)])
                             for j in range(code.M)])
            enc = like / like.sum() if like.sum() > 0 else np.full(code.M, 1 / code.M)
            for j in range(code.M):
                for b, y in enumerate(ys):
                    dec = np.prod([py_u[code.codebook[j, k, t], y[t]] for t in range(code.n)])
                    out[a, b] += qx * enc[j] * dec / code.M0
    return out


def bsc_setup(p=0.1):
    q, ch = bsc(p)
    return q, ch, witness_u_equals_y(q, ch)


def test_generate_code_shapes_and_determinism():
    q, ch, aux = bsc_setup()
    c = generate_code(aux, 3, 0.0, 0.0, seed=1)
    assert (c.M, c.M0) == (1, 1)
    c = generate_code(aux, 4, 0.5, 0.25, seed=1)
    assert c.codebook.shape == (4, 2, 4)
    again = generate_code(aux, 4, 0.5, 0.25, seed=1)
    assert np.array_equal(c.codebook, again.codebook)
    with pytest.raises(ValueError):
        generate_code(aux, 2, -0.1, 0.0, seed=0)


def test_codebook_json_round_trip():
    q, ch, aux = bsc_setup()
    c = generate_code(aux, 3, 0.6, 0.3, seed=4)
    d = SynthesisCode.from_dict(__import__("json").loads(c.to_json()))
    assert np.array_equal(d.codebook, c.codebook)
    assert synthesis_tv(d, q, ch) == synthesis_tv(c, q, ch)


def _code(aux, rows):
    cb = np.asarray(rows, dtype=np.int64)[:, None, :]
    return SynthesisCode(cb.shape[2], 1.0, 0.0, cb, aux)


def test_likelihood_encoder_posteriors():
    # U = X identity: only the matching codeword has positive likelihood
    q, ch = identity(2)
    aux = witness_u_equals_y(q, ch)
    code = _code(aux, [[0, 1], [1, 1]])
    rng = rng_for("t", 0)
    assert all(likelihood_encode(code, [0, 1], 0, rng) == 0 for _ in range(50))
    # identical codewords: uniform choice
    same = _code(aux, [[0, 0], [0, 0]])
    picks = [likelihood_encode(same, [0, 0], 0, rng) for _ in range(4000)]
    assert np.mean(picks) == pytest.approx(0.5, abs=0.03)
    # likelihood ratio 3:1
    aux31 = AuxDecomposition.from_arrays([0.5, 0.5], [[0.75, 0.25], [0.25, 0.75]],
                                         [[1, 0], [0, 1]])
    code = _code(aux31, [[0], [1]])
    picks = [likelihood_encode(code, [0], 0, rng) for _ in range(10_000)]
    assert np.mean(np.array(picks) == 0) == pytest.approx(0.75, abs=0.02)
    with pytest.raises(IndexError):
        likelihood_encode(code, [0], 3, rng)


def test_encoder_zero_likelihood_falls_back_to_uniform():
    q, ch = identity(2)
    aux = witness_u_equals_y(q, ch)
    code = _code(aux, [[0], [0]])
    rng = rng_for("t", 1)
    picks = [likelihood_encode(code, [1], 0, rng) for _ in range(4000)]
    assert np.mean(picks) == pytest.approx(0.5, abs=0.03)


def test_decoder_sampling():
    q, ch = identity(2)
    aux = witness_u_equals_y(q, ch)
    code = _code(aux, [[1, 0, 1]])
    assert decode_sample(code, 0, 0, rng_for("t", 0)).tolist() == [1, 0, 1]
    flip = AuxDecomposition.from_arrays([0.5, 0.5], [[1, 0], [0, 1]], [[0.9, 0.1], [0.1, 0.9]])
    big = SynthesisCode(10_000, 0.0, 0.0, np.zeros((1, 1, 10_000), dtype=np.int64), flip)
    y = decode_sample(big, 0, 0, rng_for("t", 2))
    assert y.mean() == pytest.approx(0.1, abs=0.01)
    flat = AuxDecomposition.from_arrays([0.5, 0.5], [[1, 0], [0, 1]], [[0.3, 0.7], [0.3, 0.7]])
    a = SynthesisCode(2000, 0, 0, np.zeros((1, 1, 2000), dtype=np.int64), flat)
    b = SynthesisCode(2000, 0, 0, np.ones((1, 1, 2000), dtype=np.int64), flat)
    assert np.array_equal(decode_sample(a, 0, 0, rng_for("t", 3)),
                          decode_sample(b, 0, 0, rng_for("t", 3)))
    with pytest.raises(IndexError):
        decode_sample(a, 1, 0, rng_for("t", 3))


@given(st.integers(0, 10_000), st.integers(1, 3), st.floats(0.0, 1.2), st.floats(0.0, 1.0))
def test_exact_joint_matches_brute_force(seed, n, R, R0):
    q, ch = erasure(0.3)
    aux = witness_u_equals_y(q, ch)
    code = generate_code(aux, n, R, R0, seed)
    got = exact_induced_joint(code, q)
    assert got.table == pytest.approx(brute_induced_joint(code, q), abs=1e-12)
    # X-marginal and Markov factorization through (J, K)
    assert got.x_marginal() == pytest.approx(product_target(q.probs[:, None], n).ravel(),
                                             abs=1e-12)


def test_exact_joint_examples():
    q, ch = identity(2)
    aux = witness_u_equals_y(q, ch)
    code = _code(aux, [[0], [1]])
    p = exact_induced_joint(code, q).table
    assert p == pytest.approx(np.eye(2) / 2)
    assert synthesis_tv(code, q, ch) == pytest.approx(0.0, abs=1e-15)
    flat = AuxDecomposition.from_arrays([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]],
                                        [[0.2, 0.8], [0.2, 0.8]])
    code = generate_code(flat, 2, 0.0, 0.0, seed=3)
    p = exact_induced_joint(code, q).table
    assert p == pytest.approx(np.outer(np.full(4, 0.25), product_target(
        np.array([[0.2, 0.8]]), 2).ravel()))


def test_zero_rate_tv_is_single_codeword_oracle():
    q, ch, aux = bsc_setup(0.1)
    code = generate_code(aux, 2, 0.0, 0.0, seed=5)
    target = product_target(q.probs[:, None] * ch.matrix, 2)
    u = code.codebook[0, 0]
    py = np.outer(aux.p_y_given_u.matrix[u[0]], aux.p_y_given_u.matrix[u[1]]).ravel()
    oracle = 0.5 * np.abs(np.outer(product_target(q.probs[:, None], 2).ravel(), py)
                          - target).sum()
    assert synthesis_tv(code, q, ch) == pytest.approx(oracle, abs=1e-12)
    assert synthesis_tv(code, q, ch) > 0.3


def test_tv_shrinks_with_codebook_size_at_n1():
    q, ch, aux = bsc_setup(0.1)
    means = []
    for M in (1, 2, 4, 8, 64):
        vals = [synthesis_tv(generate_code(aux, 1, np.log2(M), 0.0, s), q, ch)
                for s in range(20)]
        means.append(np.mean(vals))
    assert means[-1] < means[0]
    assert means[-1] < 0.1


def test_monotone_in_codebook_doubling():
    q, ch, aux = bsc_setup(0.1)
    n = 3
    for R0 in (0.0, 1 / 3):
        a = [synthesis_tv(generate_code(aux, n, 1 / 3, R0, s), q, ch) for s in range(20)]
        b = [synthesis_tv(generate_code(aux, n, 2 / 3, R0, s), q, ch) for s in range(20)]
        se = np.sqrt(np.var(a, ddof=1) / 20 + np.var(b, ddof=1) / 20)
        assert np.mean(b) <= np.mean(a) + se


def test_key_independence():
    q = Pmf.uniform(2)
    aux = AuxDecomposition.from_arrays([1.0], [[0.5, 0.5]], [[1.0, 0.0]])
    code = generate_code(aux, 3, 0.0, 0.0, 0)
    assert key_independence_tv(code, q) == pytest.approx(0.0, abs=1e-15)
    q, ch, aux = bsc_setup(0.1)
    # R well above I(X;U) = 0.531: with a small margin ceil(2^{nR}) inflates the
    # n = 2 rate enough to reverse the ordering over n <= 6
    small = np.mean([key_independence_tv(generate_code(aux, 6, 1.2, 0.3, s), q)
                     for s in range(20)])
    large = np.mean([key_independence_tv(generate_code(aux, 2, 1.2, 0.3, s), q)
                     for s in range(20)])
    assert small < large
    zero = [np.mean([key_independence_tv(generate_code(aux, n, 0.0, 0.3, s), q)
                     for s in range(10)]) for n in (2, 4, 6)]
    assert min(zero) > 0.2


def test_decay_experiment_table():
    q, ch, aux = bsc_setup(0.1)
    t = tv_decay_experiment(aux, q, ch, RatePoint(0.5, 0.5), [2], seeds=3)
    assert len(t.rows) == 1
    assert t.to_csv().startswith("n,mean_tv,std_tv,trials\n2,")
    low = tv_decay_experiment(aux, q, ch, RatePoint(0.05, 0.0), [1, 2, 3], seeds=10)
    assert all(r[1] >= 0.05 for r in low.rows)
    inside = tv_decay_experiment(aux, q, ch, RatePoint(1.2, 1.2), [1, 2, 3, 4], seeds=10)
    assert inside.log_slope() < 0


def test_sampling_matches_exact_joint():
    q, ch, aux = bsc_setup(0.2)
    code = generate_code(aux, 2, 0.6, 0.4, seed=7)
    exact = exact_induced_joint(code, q).table.ravel()
    trials = 100_000
    emp = monte_carlo_joint(code, q, trials, seed=3).table.ravel()
    sd = np.sqrt(exact * (1 - exact) / trials)
    assert np.all(np.abs(emp - exact) <= 3 * sd + 1e-3)


def test_detector_demo():
    q, ch, aux = bsc_setup(0.1)
    code = generate_code(aux, 2, 0.5, 0.0, seed=2)
    assert detector_demo(code, q, ch, lambda x, y: "genuine", 200) == (0.0, 1.0)
    assert detector_demo(code, q, ch, lambda x, y: "synthetic", 200) == (1.0, 0.0)
    det = likelihood_ratio_detector(code, q, ch)
    alpha, beta = detector_demo(code, q, ch, det, 4000, seed=1)
    tv = synthesis_tv(code, q, ch)
    sigma = np.sqrt((alpha * (1 - alpha) + beta * (1 - beta)) / 4000)
    assert abs(alpha + beta - (1 - tv)) <= 4 * sigma


def test_monte_carlo_tv_modes():
    q, ch, aux = bsc_setup(0.1)
    code = generate_code(aux, 2, 1.0, 1.0, seed=0)
    est = monte_carlo_tv(code, q, ch, 50_000, seed=1)
    assert est.kind == "plug-in"
    assert est.value == pytest.approx(synthesis_tv(code, q, ch), abs=0.02)
    big = generate_code(aux, 5, 0.2, 0.2, seed=0)
    with pytest.raises(BudgetExceeded):
        monte_carlo_tv(big, q, ch, 10)
    est = monte_carlo_tv(big, q, ch, 200, detector=lambda x, y: "genuine")
    assert est.kind == "detector-lower-bound" and est.value == 0.0


def test_sample_pairs_indices():
    q, ch, aux = bsc_setup(0.1)
    code = generate_code(aux, 2, 0.5, 0.5, seed=0)
    idx = sample_pairs(code, q, 100, seed=0)
    assert idx.shape == (100, 2) and idx.max() < 4


def test_exact_budget_guard(monkeypatch):
    q, ch, aux = bsc_setup(0.1)
    code = generate_code(aux, 4, 0.5, 0.5, seed=0)
    monkeypatch.setenv("SYNTHCAP_BUDGET", "1000")
    with pytest.raises(BudgetExceeded):
        synthesis_tv(code, q, ch)
