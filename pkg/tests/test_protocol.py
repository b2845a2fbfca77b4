import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardyamp.bell import CHSH, ConditionalBox, DomainError, StructuralError, hardy_frame_222, mdl_functional, pr_box
from hardyamp.data import PAPER_N, table1_counts
from hardyamp.protocol import (
    BoxSequenceModel, EntropyCertificate, SVParams, azuma_bound, best_deterministic_model, certify,
    delta_exp_from_counts, entropy_objective, good_run_count, h_bound, input_distribution, max_threads,
    min_entropy_product, run_protocol, sample_sv_inputs,
)
from hardyamp.quantum import THETA_STAR, hardy_box

FRAME = hardy_frame_222()
HONEST = BoxSequenceModel("honest", theta=THETA_STAR)


def expected_L(box, eps, mode="iid"):
    nu = input_distribution(SVParams(eps), mode)
    return float(np.einsum("xy,xyab,xyab->", nu, mdl_functional(FRAME, eps).coeff, box.p))


class TestInputs:
    def test_domain(self):
        with pytest.raises(DomainError):
            SVParams(0.5)
        with pytest.raises(StructuralError):
            SVParams(0.1, bits_per_party=2)
        with pytest.raises(DomainError):
            sample_sv_inputs(SVParams(0.1), 10, mode="sticky")

    def test_deterministic_under_seed(self):
        a = sample_sv_inputs(SVParams(0.1), 100_000, "iid", seed=5)
        b = sample_sv_inputs(SVParams(0.1), 100_000, "iid", seed=5)
        c = sample_sv_inputs(SVParams(0.1), 100_000, "iid", seed=6)
        np.testing.assert_array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])

    @pytest.mark.parametrize("eps", [0.0, 0.1, 0.3])
    def test_iid_bias(self, eps):
        n = 200_000
        x, y = sample_sv_inputs(SVParams(eps), n, "iid", seed=1)
        for bits in (x, y):
            p0 = float(np.mean(bits == 0))
            assert abs(p0 - (0.5 + eps)) < 5 * math.sqrt(0.25 / n)

    def test_adaptive_conditionals_within_sv_range(self):
        eps, n = 0.2, 100_000
        x, y = sample_sv_inputs(SVParams(eps), n, "adaptive", seed=2)
        bits = np.empty(2 * n, dtype=np.uint8)
        bits[0::2], bits[1::2] = x, y
        prev, cur = bits[:-1], bits[1:]
        for v in (0, 1):
            p0 = float(np.mean(cur[prev == v] == 0))
            assert 0.5 - eps - 0.01 <= p0 <= 0.5 + eps + 0.01
        assert np.mean(cur[prev == 0] == 0) == pytest.approx(0.5 + eps, abs=0.01)

    def test_input_distribution(self):
        nu = input_distribution(SVParams(0.1), "iid")
        assert nu[0, 0] == pytest.approx(0.36) and nu.sum() == pytest.approx(1)
        np.testing.assert_allclose(input_distribution(SVParams(0.1), "uniform"), 0.25)


class TestSimulation:
    def test_seed_determinism_and_thread_invariance(self):
        p = SVParams(0.05)
        t1 = run_protocol(HONEST, p, 200_000, seed=11, threads=1)
        t4 = run_protocol(HONEST, p, 200_000, seed=11, threads=4)
        np.testing.assert_array_equal(t1.records(), t4.records())
        assert t1.Ln == t4.Ln == t1.recompute_Ln()

    def test_honest_mean(self):
        eps, n = 0.05, 1_000_000
        tr = run_protocol(HONEST, SVParams(eps), n, seed=3)
        c = mdl_functional(FRAME, eps).coeff
        sigma = float(np.max(np.abs(c))) / math.sqrt(n)
        assert abs(tr.Ln - expected_L(hardy_box(), eps)) < 6 * sigma

    def test_empirical_frequencies_match_box(self):
        n = 400_000
        tr = run_protocol(HONEST, SVParams(0.0), n, seed=4, mode="uniform")
        counts = tr.counts()
        cond = counts / counts.sum(axis=(2, 3), keepdims=True)
        np.testing.assert_allclose(cond, hardy_box().p, atol=0.01)
        for a, b, x, y in FRAME.zero_set:
            assert counts[x, y, a, b] == 0

    def test_deterministic_model_nonpositive_expectation(self):
        for eps in (0.0, 0.05, 0.2):
            model = best_deterministic_model(FRAME, SVParams(eps))
            assert expected_L(model.fixed_box(), eps) <= 1e-15

    def test_classical_rejection(self):
        model = best_deterministic_model(FRAME, SVParams(0.05))
        for seed in range(10):
            assert run_protocol(model, SVParams(0.05), 1_000_000, seed=seed).Ln < 0.001

    def test_replay_and_box_models(self):
        counts = table1_counts().counts
        model = BoxSequenceModel("replay", counts=counts)
        cond = model.fixed_box().p
        np.testing.assert_allclose(cond.sum(axis=(2, 3)), 1.0)
        with pytest.raises(DomainError):
            BoxSequenceModel("box").fixed_box()
        with pytest.raises(DomainError):
            BoxSequenceModel("nonsense").fixed_box()

    def test_adversarial_program(self):
        seen = []

        def program(i, history):
            seen.append(len(history[0]))
            return pr_box() if i % 2 else hardy_box()

        model = BoxSequenceModel("adversarial", program=program)
        tr = run_protocol(model, SVParams(0.1), 50, seed=9)
        assert seen == list(range(50))
        assert tr.recompute_Ln() == tr.Ln
        tr2 = run_protocol(model, SVParams(0.1), 50, seed=9)
        np.testing.assert_array_equal(tr.records(), tr2.records())

    def test_adversary_must_be_no_signaling(self):
        p = np.zeros(CHSH.shape)
        for x in range(2):
            for y in range(2):
                p[x, y, y, 0] = 1
        model = BoxSequenceModel("adversarial", program=lambda i, h: ConditionalBox(CHSH, p))
        with pytest.raises(DomainError):
            run_protocol(model, SVParams(0.1), 5, seed=0)

    def test_transcript_csv(self):
        tr = run_protocol(HONEST, SVParams(0.0), 10, seed=1)
        lines = tr.to_csv().splitlines()
        assert lines[0].startswith("# seed=1") and lines[1] == "x,y,a,b" and len(lines) == 12

    def test_thread_cap(self, monkeypatch):
        monkeypatch.setenv("HARDYAMP_THREADS", "1")
        assert max_threads() == 1


class TestLemmas:
    def test_azuma_monte_carlo(self):
        # tail of |L_n - E L_n| for honest runs never exceeds the Azuma bound
        eps, n, d_az = 0.0, 400, 0.08
        mean = expected_L(hardy_box(), eps)
        devs = np.array([abs(run_protocol(HONEST, SVParams(eps), n, seed=s, threads=1).Ln - mean)
                         for s in range(300)])
        assert np.mean(devs >= d_az) <= azuma_bound(n, d_az)
        assert azuma_bound(n, d_az) == pytest.approx(2 * math.exp(-n * d_az**2 / 2))

    @given(st.lists(st.floats(-0.3, 1 / 16), min_size=1, max_size=300), st.floats(1e-4, 0.06))
    def test_good_run_count(self, values, kappa):
        res = good_run_count(values, kappa)
        assert res.count >= res.bound - 1e-9

    def test_good_run_premise(self):
        with pytest.raises(DomainError):
            good_run_count([0.1], 0.01)
        with pytest.raises(DomainError):
            good_run_count([0.01], 0.07)

    def test_min_entropy_product(self):
        assert min_entropy_product(0.5, 1.0, 10) == pytest.approx(10)
        assert min_entropy_product(0.84, 1 / 24, 1e6) == pytest.approx(1e6 / 24 * -math.log2(0.84))
        with pytest.raises(DomainError):
            min_entropy_product(0.0, 0.5, 10)


class TestCertification:
    def test_fixture_delta_exp(self):
        t = table1_counts()
        assert t.n == PAPER_N
        assert delta_exp_from_counts(t, 0.0) == pytest.approx(0.00542923593525, abs=1e-11)
        assert delta_exp_from_counts(t, 0.2071) == pytest.approx(0.00146931, abs=1e-8)

    def test_h_bound_abort(self):
        assert h_bound(0.0, 0.1, 1e6).abort
        assert h_bound(-1e-3, 0.1, 1e6).h == 0.0

    def test_h_bound_dense_oracle(self):
        d, eps, n = delta_exp_from_counts(table1_counts(), 0.1), 0.1, PAPER_N
        hb = h_bound(d, eps, n)
        assert hb.h == pytest.approx(float(entropy_objective(d, hb.delta_az, hb.kappa, eps, n)))
        assert 0 < hb.delta_az < d and 0 < hb.kappa < d - hb.delta_az
        daz = np.linspace(0, d, 1501)[1:-1]
        kap = np.linspace(0, d, 1501)[1:-1]
        D, K = np.meshgrid(daz, kap, indexing="ij")
        F = np.where(K < d - D, entropy_objective(d, D, K, eps, n), -np.inf)
        dense = float(np.nanmax(F))
        assert hb.h >= dense * (1 - 1e-3)

    def test_h_bound_monotone(self):
        t = table1_counts()
        hs = [h_bound(delta_exp_from_counts(t, e), e, t.n).h for e in np.arange(0, 0.2071, 0.01)]
        assert all(a >= b for a, b in zip(hs, hs[1:]))
        assert min(hs) >= 371
        ds = [h_bound(d, 0.1, 1e9).h for d in (0.001, 0.002, 0.004)]
        assert ds[0] <= ds[1] <= ds[2]

    def test_certify_round_trip(self):
        cert = certify(0.004, 0.05, 1e9)
        assert cert.accepted and cert.hBound > 0
        back = EntropyCertificate.from_json(cert.to_json())
        assert back == cert
        fixed = certify(0.004, 0.05, 1e9, method="fixed")
        assert fixed.deltaAz == pytest.approx(0.002) and fixed.kappa == pytest.approx(0.001)
        assert fixed.hBound <= cert.hBound
        assert certify(-0.1, 0.05, 1e9).abort
        with pytest.raises(DomainError):
            certify(0.004, 0.05, 1e9, method="magic")
