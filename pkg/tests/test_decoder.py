"""Detector tests: grouped vs exhaustive ML agreement and the closed-form
metric cross-checks."""

import numpy as np
import pytest

from qostbc import decoder
from qostbc.analysis import equivalent_channel, unstack_received
from qostbc.catalog import build
from qostbc.modem import make_qam
from qostbc.simulate import draw_channel, transmit

QAM4 = make_qam(4)


def random_transmission(code, constellation, rng, rho, nr=1):
    h = draw_channel(rng, code.nt, nr)
    bits = rng.integers(0, 2, code.K * constellation.bits_per_symbol)
    s = constellation.modulate(bits)
    r = transmit(code, s, h, rho, rng)
    return h, s, r


class TestNoiselessConsistency:
    @pytest.mark.parametrize("name", ["Q4", "Q4_CR", "Q4_LT", "Q8", "Q8_CR",
                                      "Q8_LT", "T8", "T8_CR", "T8_LT", "G4C"])
    def test_transmitted_recovered(self, name):
        code = build(name)
        rng = np.random.default_rng(997)
        for _ in range(5):
            h = draw_channel(rng, code.nt, 1)
            bits = rng.integers(0, 2, code.K * QAM4.bits_per_symbol)
            s = QAM4.modulate(bits)
            r = transmit(code, s, h, 10.0, rng, noise=False)
            out = decoder.grouped_ml_detect(code, QAM4, h, r, 10.0)
            assert np.allclose(out.real_symbols, s, atol=1e-12)


class TestOracleEquivalence:
    @pytest.mark.parametrize("name", ["Q4", "Q4_CR", "Q4_LT"])
    @pytest.mark.parametrize("nr", [1, 2])
    def test_grouped_equals_exhaustive(self, name, nr):
        code = build(name)
        rng = np.random.default_rng(abs(hash((name, nr))) % 2 ** 32)
        rho = 6.0
        for _ in range(250):
            h, s, r = random_transmission(code, QAM4, rng, rho, nr)
            g = decoder.grouped_ml_detect(code, QAM4, h, r, rho)
            e = decoder.exhaustive_ml_detect(code, QAM4, h, r, rho)
            assert np.array_equal(g.real_symbols, e.real_symbols)

    def test_batch_matches_single(self):
        code = build("Q4_LT")
        rng = np.random.default_rng(5)
        n = 64
        h = (rng.standard_normal((n, 4, 1))
             + 1j * rng.standard_normal((n, 4, 1))) / np.sqrt(2)
        bits = rng.integers(0, 2, (n, 8))
        s = QAM4.modulate(bits)
        rho = 8.0
        received = np.empty((n, 8))
        for i in range(n):
            H = equivalent_channel(code, h[i])
            received[i] = np.sqrt(rho / 4) * (H @ s[i]) \
                + rng.standard_normal(8) * np.sqrt(0.5)
        batch = decoder.grouped_ml_detect_batch(code, QAM4, h, received, rho)
        for i in range(n):
            single = decoder.grouped_ml_detect(code, QAM4, h[i], received[i],
                                               rho)
            assert np.array_equal(batch[i], single.real_symbols)

    def test_exhaustive_budget_guard(self):
        code = build("T8")
        with pytest.raises(ValueError, match="budget"):
            decoder.exhaustive_ml_detect(code, make_qam(16),
                                         np.zeros((8, 1)), np.zeros(32), 1.0)

    def test_zero_channel_tie_break(self):
        # all metrics tie at zero; both detectors must pick the
        # lexicographically smallest candidate
        code = build("Q4")
        h = np.zeros((4, 1), dtype=complex)
        r = np.zeros(8)
        g = decoder.grouped_ml_detect(code, QAM4, h, r, 1.0)
        e = decoder.exhaustive_ml_detect(code, QAM4, h, r, 1.0)
        lowest = np.min(QAM4.pam_levels)
        assert np.all(g.real_symbols == lowest)
        assert np.array_equal(g.real_symbols, e.real_symbols)


class TestCandidateCounts:
    def test_group_candidate_enumeration(self):
        # two real rails -> 4 candidates, four real rails -> 16 at 4-QAM
        assert decoder.group_candidates(QAM4, 2).shape == (4, 2)
        assert decoder.group_candidates(QAM4, 4).shape == (16, 4)

    def test_counts_match_joint_detection_sizes(self):
        for name, count in (("Q4_LT", 4), ("Q4_CR", 16), ("T8_CR", 256)):
            code = build(name)
            size = max(len(g) for g in code.grouping)
            cands = decoder.group_candidates(QAM4, size)
            assert len(cands) == count

    def test_candidates_sorted_lexicographically(self):
        cands = decoder.group_candidates(QAM4, 2)
        as_tuples = [tuple(c) for c in cands]
        assert as_tuples == sorted(as_tuples)


class TestClosedFormMetrics:
    def test_mixed_code_metrics_match_generic_decoder(self):
        code = build("Q4_LT")
        rng = np.random.default_rng(71)
        rho = float(code.nt)  # metric form assumes unit transmit scaling
        for _ in range(1000):
            h, s, r = random_transmission(code, QAM4, rng, rho)
            generic = decoder.grouped_ml_detect(code, QAM4, h, r, rho)
            literal = decoder.q4lt_detect(QAM4, h, unstack_received(r, 4))
            assert np.array_equal(generic.real_symbols, literal)

    def test_rotated_code_metrics_match_generic_decoder(self):
        code = build("Q4_CR")
        rng = np.random.default_rng(73)
        rho = float(code.nt)
        for _ in range(1000):
            h, s, r = random_transmission(code, QAM4, rng, rho)
            generic = decoder.grouped_ml_detect(code, QAM4, h, r, rho)
            literal = decoder.q4cr_detect(QAM4, h, unstack_received(r, 4))
            assert np.array_equal(generic.real_symbols, literal)

    def test_zero_candidate_has_zero_candidate_terms(self):
        rng = np.random.default_rng(79)
        h = rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1))
        r = rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1))
        assert decoder.metric_q4lt(1, (0.0, 0.0), h, r) == 0.0

    def test_unknown_group_index(self):
        with pytest.raises(ValueError, match="group index"):
            decoder.metric_q4lt(5, (0.0, 0.0), np.zeros((4, 1), complex),
                                np.zeros((4, 1), complex))

    def test_metric_decomposes_exact_ml(self):
        # the four group metrics sum to ||r - C h||^2 - ||r||^2
        from qostbc.catalog import encode

        code = build("Q4_LT")
        rng = np.random.default_rng(83)
        for _ in range(100):
            h = rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1))
            bits = rng.integers(0, 2, 8)
            s = QAM4.modulate(bits)
            noise = 0.3 * (rng.standard_normal((4, 1))
                           + 1j * rng.standard_normal((4, 1)))
            r = encode(code, s) @ h + noise
            groups = ((1, 4), (2, 3), (5, 8), (6, 7))
            total = sum(
                decoder.metric_q4lt(gi, (s[g[0] - 1], s[g[1] - 1]), h, r)
                for gi, g in enumerate(groups, start=1)
            )
            exact = np.linalg.norm(r - encode(code, s) @ h) ** 2 \
                - np.linalg.norm(r) ** 2
            assert total == pytest.approx(float(exact), rel=1e-9, abs=1e-9)


class TestOrthogonalBenchmarkDecoding:
    def test_matches_per_symbol_slicing(self):
        # with single-symbol groups the grouped detector reduces to
        # matched-filter slicing rail by rail
        code = build("G4C")
        rng = np.random.default_rng(89)
        rho = 5.0
        for _ in range(200):
            h, s, r = random_transmission(code, QAM4, rng, rho)
            out = decoder.grouped_ml_detect(code, QAM4, h, r, rho)
            H = equivalent_channel(code, h)
            z = H.T @ r
            gram = np.diag(H.T @ H)
            estimate = z / (np.sqrt(rho / code.nt) * gram)
            sliced = QAM4.pam_levels[
                np.argmin(np.abs(estimate[:, None] - QAM4.pam_levels), axis=1)
            ]
            assert np.array_equal(out.real_symbols, sliced)
