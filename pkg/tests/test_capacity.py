"""Capacity closed forms against their brute-force and grid oracles."""

import math

import numpy as np
import pytest

from pdlsic import capacity
from pdlsic.channel import ChannelParams, Model, SnrSpec
from pdlsic.equalize import lmmse_equalizer, stream_statistics
from pdlsic.precode import (
    effective_channel,
    identity_precoder,
    permute_columns,
    precoder_complex,
    precoder_real,
)

ALPHAS = (0.0, 0.1, 0.3, 0.599, 0.9)
SNRS = (0.5, 1.0, 5.0, 20.0, 100.0, 1000.0)


class TestAwgn:
    def test_values(self):
        assert capacity.c_awgn(0.0) == 0.0
        assert capacity.c_awgn(3.0) == pytest.approx(1.0, abs=1e-15)
        assert capacity.c_awgn(20.0) == pytest.approx(0.5 * math.log2(21.0), rel=1e-15)
        assert capacity.c_awgn(20.0) == pytest.approx(2.196, abs=1e-3)

    def test_array_input(self):
        out = capacity.c_awgn(np.array([0.0, 3.0, 15.0]))
        assert np.allclose(out, [0.0, 1.0, 2.0])

    def test_domain(self):
        with pytest.raises(ValueError):
            capacity.c_awgn(-0.5)
        with pytest.raises(ValueError):
            capacity.c_awgn(np.array([1.0, -1.0]))


class TestCompound:
    def test_alpha_zero_is_awgn(self):
        for s in SNRS:
            assert capacity.c_compound(0.0, s) == pytest.approx(capacity.c_awgn(s), rel=1e-15)

    def test_reference_point(self):
        # direct evaluation of [C(31.98) + C(8.02)] / 2
        direct = (0.5 * math.log2(1 + 31.98) + 0.5 * math.log2(1 + 8.02)) / 2.0
        assert capacity.c_compound(0.599, 20.0) == pytest.approx(direct, rel=1e-12)
        assert capacity.c_compound(0.599, 20.0) == pytest.approx(2.05416173178585, rel=1e-12)

    def test_high_snr_gap_approaches_sic_penalty(self):
        # horizontal distance between the compound and AWGN curves
        alpha = 0.599
        s = 1e7
        y = float(capacity.c_compound(alpha, s))
        s_awgn = 2.0 ** (2.0 * y) - 1.0
        gap_db = 10.0 * math.log10(s / s_awgn)
        assert gap_db == pytest.approx(capacity.penalties_db(alpha).sic_db, abs=1e-5)
        assert gap_db == pytest.approx(0.965, abs=1e-3)

    def test_approximation_error_is_one_over_snr(self):
        # dyadic sweep: error decreases monotonically (once past the low-SNR
        # knee at high alpha) and halves per octave
        for alpha in (0.3, 0.599, 0.9):
            snrs = 2.0 ** np.arange(0, 15)
            err = np.array(
                [
                    float(capacity.c_compound(alpha, s) - capacity.c_compound_approx(alpha, s))
                    for s in snrs
                ]
            )
            assert np.all(err > 0)
            assert np.all(np.diff(err[1:]) < 0)
            ratios = err[8:] / err[7:-1]
            assert np.all(np.abs(ratios - 0.5) < 0.05)

    def test_ordering_invariant(self):
        for alpha in ALPHAS:
            for s in SNRS:
                nj = float(capacity.c_nonjoint(alpha, s))
                par = float(capacity.c_parallel(alpha, s))
                comp = float(capacity.c_compound(alpha, s))
                awgn = capacity.c_awgn(s)
                assert nj <= par + 1e-15
                assert par <= comp + 1e-15
                assert comp <= awgn + 1e-15

    def test_parallel_identity(self):
        for alpha in ALPHAS:
            for s in SNRS:
                lhs = float(capacity.c_parallel(alpha, s))
                rhs = 2.0 * float(capacity.c_compound(alpha, s)) - capacity.c_awgn(s)
                assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_inverse_round_trip(self):
        for alpha in ALPHAS:
            for s in SNRS:
                rate = float(capacity.c_compound(alpha, s))
                assert capacity.inverse_c_compound(alpha, rate) == pytest.approx(s, rel=1e-10)

    def test_report_fields(self):
        rep = capacity.capacity_report(0.599, SnrSpec(20.0))
        assert rep.c_nonjoint <= rep.c_parallel <= rep.c_compound <= rep.c_awgn
        assert rep.penalties_db.sic_db == pytest.approx(0.965, abs=1e-3)


class TestPenalties:
    def test_reference_triple(self):
        pen = capacity.penalties_db(0.599)
        assert pen.nonjoint_db == pytest.approx(3.968, abs=1e-3)
        assert pen.parallel_db == pytest.approx(1.931, abs=1e-3)
        assert pen.sic_db == pytest.approx(0.965, abs=1e-3)

    def test_alpha_zero(self):
        pen = capacity.penalties_db(0.0)
        assert pen.nonjoint_db == pen.parallel_db == pen.sic_db == 0.0

    def test_sic_is_half_parallel(self):
        for alpha in (0.1, 0.3, 0.599, 0.9, 0.99):
            pen = capacity.penalties_db(alpha)
            assert pen.sic_db == pytest.approx(pen.parallel_db / 2.0, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            capacity.penalties_db(1.0)


class TestMiTerms:
    def test_gamma_zero_all_equal(self):
        t = capacity.mi_terms(0.0, 1.3, 20.0)
        c = capacity.c_awgn(20.0)
        assert t.i_x1_y == pytest.approx(c, rel=1e-14)
        assert t.i_x2_y_given_x1 == pytest.approx(c, rel=1e-14)
        assert t.i_x2_y == pytest.approx(c, rel=1e-14)

    def test_chain_rule_identity_everywhere(self):
        for g in np.linspace(-0.95, 0.95, 21):
            for th in np.linspace(0, 2 * math.pi, 17):
                for s in (1.0, 20.0, 100.0):
                    t = capacity.mi_terms(g, th, s)
                    total = capacity.c_awgn((1 + g) * s) + capacity.c_awgn((1 - g) * s)
                    assert t.sum_check == pytest.approx(total, abs=1e-12)

    def test_quarter_turn_conditional(self):
        t = capacity.mi_terms(0.5, math.pi / 4, 10.0)
        assert t.i_x2_y_given_x1 == pytest.approx(capacity.c_awgn(10.0), abs=1e-12)

    def test_sum_minimum_at_edge(self):
        alpha, s = 0.599, 20.0
        m = min(
            capacity.mi_terms(g, th, s).sum_check
            for g in np.linspace(-alpha, alpha, 41)
            for th in np.linspace(0, 2 * math.pi, 8)
        )
        assert m == pytest.approx(2.0 * float(capacity.c_compound(alpha, s)), abs=1e-12)

    def test_conditional_minimum_at_cos_sign_boundary(self):
        s = 20.0
        for g in (0.3, -0.3, 0.7, -0.7):
            thetas = np.linspace(0, 2 * math.pi, 257)
            vals = [capacity.mi_terms(g, th, s).i_x2_y_given_x1 for th in thetas]
            # cos(2 theta) = sign(gamma) minimizes (1 - gamma cos 2theta)
            assert min(vals) == pytest.approx(
                capacity.c_awgn((1 - abs(g)) * s), abs=1e-9
            )


class TestWorstCaseSearch:
    def test_recovers_symmetric_split_and_extremal_gamma(self):
        search = capacity.worst_case_search(0.599, 20.0)
        assert search.beta_star == pytest.approx(0.5, abs=1.0 / 200)
        assert search.all_extremal
        assert search.defect_bits < 1e-9

    def test_gamma_star_signs(self):
        search = capacity.worst_case_search(0.599, 20.0)
        betas = search.beta_grid
        g_at = lambda b: search.gamma_star[int(np.argmin(np.abs(betas - b)))]
        assert g_at(0.3) == pytest.approx(+0.599, rel=1e-12)
        assert g_at(0.7) == pytest.approx(-0.599, rel=1e-12)

    def test_alpha_zero_objective_constant(self):
        search = capacity.worst_case_search(0.0, 20.0, n_beta=51, n_gamma=11)
        # the min over gamma is the same function of beta; at alpha=0 the
        # adversary has no freedom, so only beta moves the objective
        assert search.min_value.max() == pytest.approx(search.max_min_bits, rel=1e-15)
        assert search.defect_bits < 1e-12

    def test_matches_closed_form_across_alphas(self):
        for alpha in (0.1, 0.3, 0.599, 0.9):
            search = capacity.worst_case_search(alpha, 20.0)
            assert search.all_extremal
            assert search.defect_bits < 1e-9


class TestStarProperty:
    def test_universal_precoder_real(self):
        rep = capacity.verify_star_property(
            precoder_real(), 0.599, 20.0, n_gamma=41, n_theta=32
        )
        assert rep.passed
        assert rep.gap_bits < 1e-9
        # the min-sum side is the compound capacity for any orthogonal precoder
        assert rep.lhs_bits == pytest.approx(float(capacity.c_compound(0.599, 20.0)), abs=1e-12)

    def test_universal_precoder_complex_small_grid(self):
        rep = capacity.verify_star_property(
            precoder_complex(), 0.599, 20.0, n_gamma=21, n_theta=16, n_phi=8
        )
        assert rep.passed
        assert rep.lhs_bits == pytest.approx(float(capacity.c_compound(0.599, 20.0)), abs=1e-12)

    def test_column_swap_fails(self):
        swapped = permute_columns(precoder_real(), (0, 2, 1, 3))
        rep = capacity.verify_star_property(swapped, 0.5, 20.0, n_gamma=41, n_theta=32)
        assert not rep.passed
        assert rep.gap_bits > 0.01
        # chain rule still pins the min-sum side
        assert rep.lhs_bits == pytest.approx(float(capacity.c_compound(0.5, 20.0)), abs=1e-12)

    def test_identity_precoder_fails(self):
        rep = capacity.verify_star_property(
            identity_precoder(Model.REAL), 0.599, 20.0, n_gamma=41, n_theta=32
        )
        assert not rep.passed
        assert rep.gap_bits > 0.01

    def test_gap_nonnegative(self):
        rng = np.random.default_rng(0)
        # random orthogonal precoders: gap can be anything >= 0
        for _ in range(5):
            q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
            from pdlsic.precode import Precoder

            rep = capacity.verify_star_property(
                Precoder(q, Model.REAL), 0.4, 10.0, n_gamma=11, n_theta=8
            )
            assert rep.gap_bits >= -1e-12

    def test_successive_snrs_match_equalizer_route(self):
        # stage engine vs explicit LMMSE equalizer statistics on the
        # interference channel with leading streams removed
        rng = np.random.default_rng(1)
        snr = SnrSpec(20.0)
        for model, pre in ((Model.REAL, precoder_real()), (Model.COMPLEX, precoder_complex())):
            phi = rng.uniform(0, 2 * math.pi) if model is Model.COMPLEX else None
            params = ChannelParams(rng.uniform(-0.9, 0.9), rng.uniform(0, 2 * math.pi), phi)
            eff = effective_channel(params, pre, snr)
            h = eff.matrix
            gram = capacity.gram_matrix(params, pre)
            assert np.abs(gram - h.T @ h).max() < 1e-14
            succ = capacity.successive_stream_snrs(gram, 20.0)
            first = stream_statistics(eff, lmmse_equalizer(eff)).snr_per_stream[0]
            assert succ[0] == pytest.approx(first, rel=1e-10)
            for i in range(1, h.shape[1]):
                sub = h[:, i:]
                e = sub.T @ np.linalg.inv(sub @ sub.T + np.eye(h.shape[0]) / 20.0)
                from pdlsic.equalize import _statistics

                ref = _statistics(sub, e, 20.0).snr_per_stream[0]
                assert succ[i] == pytest.approx(ref, rel=1e-10)


class TestMeanIdentity:
    def test_pdl_pair(self):
        rep = capacity.mean_identity_check(1.599, 0.401)
        assert rep.arithmetic == pytest.approx(1.0, abs=1e-15)
        assert rep.product_defect < 1e-15

    def test_equal_inputs(self):
        rep = capacity.mean_identity_check(3.0, 3.0)
        assert rep.arithmetic == rep.geometric == rep.harmonic == 3.0
        assert rep.product_defect == 0.0

    def test_textbook_values(self):
        rep = capacity.mean_identity_check(2.0, 8.0)
        assert rep.arithmetic == 5.0
        assert rep.geometric == pytest.approx(4.0, rel=1e-15)
        assert rep.harmonic == pytest.approx(3.2, rel=1e-15)
        assert rep.product_defect < 1e-14

    def test_chain_defect_small(self):
        for g in np.linspace(-0.99, 0.99, 67):
            for s in (1.0, 20.0, 1000.0):
                rep = capacity.mean_identity_check(1.0 + g, 1.0 - g, snr=s)
                assert rep.chain_defect_bits < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            capacity.mean_identity_check(0.0, 1.0)
        with pytest.raises(ValueError):
            capacity.mean_identity_check(1.0, -2.0)
