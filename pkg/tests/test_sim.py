"""Simulator tests: seeded determinism, hand-computed encoder weights,
a brute-force typicality oracle, and exact-metric consistency."""

from fractions import Fraction

import numpy as np
import pytest

from sdwtc.errors import BudgetError, ValidationError
from sdwtc.prob import Auxiliary, CondKernel, FinitePmf, SdWtc
from sdwtc.sim import (
    Codebook,
    EncodingFailure,
    SchemeLaw,
    SimConfig,
    exact_leakage,
    generate_codebook,
    key_uniformity_exact,
    likelihood_encode,
    run_trials,
    typicality_decode,
)
from sdwtc.sim import _kernels_py
from sdwtc.sim._backend import kernels as active_kernels


def micro_wtc(flip=0.25):
    """S ~ Ber(1/2); y = x noiselessly; z = x with crossover ``flip``."""
    rows = np.zeros((4, 4))
    for s in range(2):
        for x in range(2):
            rows[s * 2 + x, x * 2 + x] += 1.0 - flip
            rows[s * 2 + x, x * 2 + (1 - x)] += flip
    return SdWtc(FinitePmf([0.5, 0.5]), CondKernel((2, 2), 4, rows), card_Y=2, card_Z=2)


def micro_aux(corr=0.8):
    """U constant; V = S with probability ``corr``; X = V."""
    table = np.zeros((2, 1, 2, 2))
    for s in range(2):
        for v in range(2):
            table[s, 0, v, v] = corr if v == s else 1.0 - corr
    return Auxiliary(1, 2, CondKernel((2,), 4, table.reshape(2, 4)))


def micro_cfg(**kw):
    base = dict(n=4, rate_m=0.25, rate_k=0.25, rate_1=0.0, rate_2=0.25,
                eps_typ=0.5, trials=200, seed=0)
    base.update(kw)
    return SimConfig(**base)


class TestConfig:
    def test_index_sizes_floor_at_one(self):
        cfg = micro_cfg(rate_1=0.0, rate_2=0.1)
        assert cfg.index_sizes() == (1, 1, 2, 2)

    def test_validation(self):
        with pytest.raises(ValidationError):
            micro_cfg(n=0)
        with pytest.raises(ValidationError):
            micro_cfg(rate_m=-0.1)
        with pytest.raises(ValidationError):
            micro_cfg(eps_typ=1.0)


class TestCodebook:
    def test_point_mass_inner_words_identical(self):
        q_u = FinitePmf([0.0, 1.0])
        q_vgu = CondKernel((2,), 2, [[0.5, 0.5], [0.5, 0.5]])
        cb = generate_codebook(q_u, q_vgu, micro_cfg(rate_1=0.5))
        assert np.all(cb.u_words == 1)

    def test_seeded_determinism(self):
        law = SchemeLaw.from_components(micro_wtc(), micro_aux())
        a = generate_codebook(law.q_u, law.q_vgu, micro_cfg())
        b = generate_codebook(law.q_u, law.q_vgu, micro_cfg())
        assert np.array_equal(a.u_words, b.u_words)
        assert np.array_equal(a.v_words, b.v_words)

    def test_symbol_frequencies_in_binomial_band(self):
        q_u = FinitePmf([0.5, 0.5])
        q_vgu = CondKernel((2,), 2, np.eye(2))
        cfg = SimConfig(n=10_000, rate_m=0.0, rate_k=0.0, rate_1=0.0, rate_2=0.0,
                        eps_typ=0.1, trials=1, seed=42)
        cb = generate_codebook(q_u, q_vgu, cfg)
        ones = int(cb.u_words.sum())
        mean, sigma = 5_000, 50.0
        assert abs(ones - mean) <= 3 * sigma

    def test_budget_enforced(self, monkeypatch):
        law = SchemeLaw.from_components(micro_wtc(), micro_aux())
        monkeypatch.setenv("SDWTC_CELL_BUDGET", "10")
        with pytest.raises(BudgetError):
            generate_codebook(law.q_u, law.q_vgu, micro_cfg())


def hand_codebook():
    """Two-cell codebook (|I|=|K|=|M|=1, |J|=2) with fixed words, n=2."""
    u_words = np.zeros((1, 2), dtype=np.int64)
    v_words = np.zeros((1, 2, 1, 1, 2), dtype=np.int64)
    v_words[0, 0, 0, 0] = [0, 1]
    v_words[0, 1, 0, 0] = [1, 1]
    q_u = FinitePmf([1.0])
    q_vgu = CondKernel((1,), 2, [[0.5, 0.5]])
    return Codebook(u_words=u_words, v_words=v_words, q_u=q_u, q_vgu=q_vgu, seed=0)


def hand_weights():
    """Normalized selection law of the two cells at s = (0, 1), by hand.

    The session law has q(v=0|s=0) = 0.8 and q(v=0|s=1) = 0.3 with a uniform
    state, so the reverse law is q(s=0|v=0) = 8/11 and q(s=0|v=1) = 2/9; the
    cells weigh q(s0|v_1) q(s1|v_2) with v-words (0,1) and (1,1).
    """
    q0 = {0: Fraction(8, 11), 1: Fraction(2, 9)}  # P(S=0 | V=v)
    w_a = q0[0] * (1 - q0[1])
    w_b = q0[1] * (1 - q0[1])
    return float(w_a / (w_a + w_b))


def hand_law():
    """Channel/auxiliary pair realizing the hand weights: V|S as above, X = V."""
    wtc = micro_wtc()
    table = np.zeros((2, 1, 2, 2))
    table[0, 0, 0, 0] = 0.8
    table[0, 0, 1, 1] = 0.2
    table[1, 0, 0, 0] = 0.3
    table[1, 0, 1, 1] = 0.7
    aux = Auxiliary(1, 2, CondKernel((2,), 4, table.reshape(2, 4)))
    return SchemeLaw.from_components(wtc, aux)


class TestLikelihoodEncoder:
    def test_singleton_sets_forced(self):
        law = SchemeLaw.from_components(micro_wtc(), micro_aux())
        cfg = micro_cfg(rate_m=0.0, rate_k=0.0, rate_2=0.0)
        cb = generate_codebook(law.q_u, law.q_vgu, cfg)
        rng = np.random.default_rng(0)
        enc = likelihood_encode(cb, 0, np.array([0, 1, 0, 1]), rng, law)
        assert (enc.i, enc.j, enc.k) == (0, 0, 0)

    def test_two_cell_hand_weights(self):
        cb = hand_codebook()
        law = hand_law()
        want = hand_weights()
        rng = np.random.default_rng(7)
        draws = 100_000
        hits = 0
        s_seq = np.array([0, 1], dtype=np.int64)
        for _ in range(draws):
            enc = likelihood_encode(cb, 0, s_seq, rng, law)
            hits += enc.j == 0
        sigma = (draws * want * (1 - want)) ** 0.5
        assert abs(hits - draws * want) <= 3 * sigma

    def test_deterministic_input_map(self):
        # X = V deterministically: the input block is the outer codeword.
        law = SchemeLaw.from_components(micro_wtc(), micro_aux())
        cb = generate_codebook(law.q_u, law.q_vgu, micro_cfg())
        rng = np.random.default_rng(3)
        s_seq = np.array([0, 1, 1, 0], dtype=np.int64)
        enc = likelihood_encode(cb, 1, s_seq, rng, law)
        np.testing.assert_array_equal(
            enc.x_seq, cb.v_words[enc.i, enc.j, enc.k, 1]
        )

    def test_all_zero_weights_signal_failure(self):
        # V = S exactly: a codebook word that mismatches the state block
        # everywhere has zero likelihood.
        law = SchemeLaw.from_components(micro_wtc(), micro_aux(corr=1.0))
        cb = generate_codebook(law.q_u, law.q_vgu, micro_cfg(rate_m=0.0, rate_k=0.0, rate_2=0.0))
        word = cb.v_words[0, 0, 0, 0]
        bad = (1 - word).astype(np.int64)
        with pytest.raises(EncodingFailure):
            likelihood_encode(cb, 0, bad, np.random.default_rng(0), law)


def oracle_typical(cb, y_seq, eps, q_uvy3, card_y):
    """Literal nested-loop letter-typicality check over all cells."""
    size_i, size_j, size_k, size_m = cb.sizes
    card_v = cb.q_vgu.output_size
    hits = []
    n = cb.n
    for i in range(size_i):
        for j in range(size_j):
            for k in range(size_k):
                for m in range(size_m):
                    counts = {}
                    for t in range(n):
                        trip = (int(cb.u_words[i, t]), int(cb.v_words[i, j, k, m, t]), int(y_seq[t]))
                        counts[trip] = counts.get(trip, 0) + 1
                    ok = True
                    for u in range(cb.u_words.max() + 1):
                        for v in range(card_v):
                            for y in range(card_y):
                                q = q_uvy3[u, v, y]
                                nu = counts.get((u, v, y), 0) / n
                                if abs(nu - q) > eps * q:
                                    ok = False
                    if ok:
                        hits.append((i, j, k, m))
    return hits


class TestTypicalityDecode:
    def test_noiseless_self_typical_codeword(self):
        # Y = V and a balanced codeword: the true cell is uniquely typical.
        law = SchemeLaw.from_components(micro_wtc(flip=0.25), micro_aux(corr=0.5))
        cb = generate_codebook(law.q_u, law.q_vgu, micro_cfg(seed=5))
        target = None
        for idx in np.ndindex(*cb.sizes):
            word = cb.v_words[idx]
            if word.sum() == 2:  # balanced type matches q_V = Ber(1/2) at n=4
                target = idx
                break
        assert target is not None
        y_seq = cb.v_words[target]
        dec = typicality_decode(cb, y_seq, 0.5, law.q_uvy, law.card_Y)
        if dec.unique:
            assert (dec.i, dec.j, dec.k, dec.m) in [
                idx
                for idx in np.ndindex(*cb.sizes)
                if np.array_equal(cb.v_words[idx], y_seq)
            ]

    def test_atypical_output_maps_to_fixed_cell(self):
        law = SchemeLaw.from_components(micro_wtc(), micro_aux(corr=0.5))
        cb = generate_codebook(law.q_u, law.q_vgu, micro_cfg(seed=5))
        dec = typicality_decode(cb, np.array([0, 0, 0, 0]), 0.05, law.q_uvy, law.card_Y)
        assert not dec.unique
        assert (dec.i, dec.j, dec.k, dec.m) == (0, 0, 0, 0)

    def test_matches_bruteforce_oracle(self):
        law = SchemeLaw.from_components(micro_wtc(), micro_aux())
        cb = generate_codebook(law.q_u, law.q_vgu, micro_cfg(seed=9))
        q3 = law.q_uvy.reshape(law.card_U, law.card_V, law.card_Y)
        rng = np.random.default_rng(17)
        for _ in range(200):
            y_seq = rng.integers(0, 2, size=4).astype(np.int64)
            hits = oracle_typical(cb, y_seq, 0.5, q3, law.card_Y)
            dec = typicality_decode(cb, y_seq, 0.5, law.q_uvy, law.card_Y)
            assert dec.matches == len(hits)
            if len(hits) == 1:
                assert dec.unique and (dec.i, dec.j, dec.k, dec.m) == hits[0]
            else:
                assert not dec.unique


class TestRunTrials:
    def test_single_codeword_clean_channel_near_zero_error(self):
        # Singleton index sets over a noiseless decoder channel.
        law_aux = micro_aux(corr=0.5)
        cfg = micro_cfg(rate_m=0.0, rate_k=0.0, rate_2=0.0, n=8, trials=200)
        rep = run_trials(micro_wtc(), law_aux, cfg)
        assert rep.sizes == {"I": 1, "J": 1, "K": 1, "M": 1}
        assert rep.avg_error <= 0.2

    def test_determinism(self):
        cfg = micro_cfg(trials=120, seed=11)
        a = run_trials(micro_wtc(), micro_aux(), cfg)
        b = run_trials(micro_wtc(), micro_aux(), cfg)
        assert a == b

    def test_max_error_dominates_average(self):
        for seed in range(4):
            rep = run_trials(micro_wtc(), micro_aux(), micro_cfg(seed=seed, trials=160))
            assert rep.max_error >= rep.avg_error - 1e-12

    def test_effective_rates_echoed(self):
        rep = run_trials(micro_wtc(), micro_aux(), micro_cfg(trials=40))
        assert rep.effective_rates["rate_m"] == pytest.approx(0.25)
        assert rep.leakage_bits is None

    def test_exact_leakage_of_blind_eavesdropper_is_zero(self):
        # Z ignores both input and state: exactly independent of everything.
        rows = np.zeros((4, 4))
        for s in range(2):
            for x in range(2):
                rows[s * 2 + x, x * 2 + 0] = 0.5
                rows[s * 2 + x, x * 2 + 1] = 0.5
        wtc = SdWtc(FinitePmf([0.5, 0.5]), CondKernel((2, 2), 4, rows), card_Y=2, card_Z=2)
        rep = run_trials(wtc, micro_aux(), micro_cfg(trials=20, exact_mode=True))
        assert rep.leakage_bits == pytest.approx(0.0, abs=1e-9)
        assert rep.divergence_surrogate is not None

    def test_exact_budget_enforced(self, monkeypatch):
        monkeypatch.setenv("SDWTC_CELL_BUDGET", "100")
        with pytest.raises(BudgetError):
            run_trials(micro_wtc(), micro_aux(), micro_cfg(trials=20, exact_mode=True))


class TestExactKeyLaw:
    def test_singleton_key_zero_tv(self):
        cfg = micro_cfg(rate_k=0.0, trials=20)
        tvs = key_uniformity_exact(micro_wtc(), micro_aux(), cfg)
        np.testing.assert_allclose(tvs, 0.0, atol=1e-12)

    def test_identical_codewords_give_uniform_key(self):
        # Deterministic outer law: every cell holds the same word, so the
        # selection weights are equal and the key is exactly uniform.
        law = SchemeLaw.from_components(micro_wtc(), micro_aux(corr=1.0))
        cfg = micro_cfg(trials=20, seed=1)
        tvs = key_uniformity_exact(micro_wtc(), micro_aux(corr=1.0), cfg)
        np.testing.assert_allclose(tvs, 0.0, atol=1e-12)

    def test_monte_carlo_estimator_consistency(self):
        cfg = micro_cfg(trials=40_000, seed=2)
        rep = run_trials(micro_wtc(), micro_aux(), cfg)
        exact = key_uniformity_exact(micro_wtc(), micro_aux(), cfg)
        # 3-sigma multinomial tolerance on the worst-message TV estimate.
        per_m = cfg.trials // rep.sizes["M"]
        sigma = (rep.sizes["K"] / (2 * np.pi * per_m)) ** 0.5 + 1.5 / per_m**0.5
        assert abs(rep.key_tv - float(exact.max())) <= 3 * sigma


class TestBackendParity:
    def test_kernels_agree(self, rng):
        logq = np.log(
            np.maximum(rng.dirichlet(np.ones(3), size=8), 1e-12)
        ).reshape(-1)
        uv = rng.integers(0, 8, size=(40, 6)).astype(np.int64)
        s = rng.integers(0, 3, size=6).astype(np.int64)
        a = active_kernels.cell_log_weights(logq, uv, s, 3)
        b = _kernels_py.cell_log_weights(logq, uv, s, 3)
        np.testing.assert_allclose(a, b, atol=1e-12)
        q = rng.dirichlet(np.ones(16))
        y = rng.integers(0, 2, size=6).astype(np.int64)
        ma = active_kernels.typical_cells(uv, y, 2, q, 0.4)
        mb = _kernels_py.typical_cells(uv, y, 2, q, 0.4)
        np.testing.assert_array_equal(ma, mb)

    def test_reports_identical_across_backends(self):
        import subprocess
        import sys

        code = (
            "import numpy as np\n"
            "from tests_helper import report_fingerprint\n"
            "print(report_fingerprint())\n"
        )
        # Run in-process for the active backend and in a forced-python
        # subprocess; the seeded pipeline must produce the same metrics.
        from tests_helper import report_fingerprint

        here = report_fingerprint()
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={**__import__("os").environ, "SDWTC_FORCE_PY": "1",
                 "PYTHONPATH": __import__("os").path.dirname(__file__)},
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == here
