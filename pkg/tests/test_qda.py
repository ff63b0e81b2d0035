"""Covariance-discriminant classification: model fitting, inversion paths,
discriminant values, and argmax decisions against a from-scratch oracle."""
from __future__ import annotations

import numpy as np
import pytest

from qdasim.errors import DomainRejection
from qdasim.oracle import LabeledDataset
from qdasim.qda import (
    DiscriminantResult,
    classify,
    discriminant,
    fit,
    invert_apply,
    lda_classify,
)
from qdasim.qsim import overlap_test_signed
from qdasim.qda import _child_seed

E1 = np.array([1.0, 0.0, 0.0, 0.0])


def gauss3(seed=0, per_class=40, sigma=0.7):
    rng = np.random.default_rng(seed)
    means = np.array(
        [[2.5, 0.0, 0.0, 0.0], [-2.5, 0.5, 0.0, 0.0], [0.0, 2.5, 0.0, 0.0]]
    )
    samples, labels = [], []
    for c in range(3):
        samples.append(means[c] + sigma * rng.standard_normal((per_class, 4)))
        labels.extend([c + 1] * per_class)
    return LabeledDataset(np.vstack(samples), np.array(labels)), means


def isotropic_two_class(scale_target=1.0):
    """Two symmetric classes whose statistical covariance is exactly
    scale_target * identity (deviation pattern +-a e_i, a^2 = 7/8 * scale)."""
    n = 4
    a = np.sqrt(scale_target * (2 * n - 1) / 2.0)
    devs = np.vstack([a * np.eye(n), -a * np.eye(n)])
    mu = np.array([2.0, 0.0, 0.0, 0.0])
    samples = np.vstack([mu + devs, -mu + devs])
    return LabeledDataset(samples, np.repeat([1, 2], 2 * n)), mu


def oracle_discriminants(data: LabeledDataset, x: np.ndarray) -> np.ndarray:
    """From-scratch dense reference: no shared code with the package paths."""
    values = []
    for c in range(1, data.k + 1):
        members = data.samples[data.labels == c]
        mu = members.mean(axis=0)
        centered = members - mu
        cov = centered.T @ centered / (len(members) - 1)
        icov = np.linalg.inv(cov)
        values.append(
            float(x @ icov @ mu - 0.5 * mu @ icov @ mu + np.log(len(members) / data.M))
        )
    return np.array(values)


class TestFit:
    def test_balanced_priors(self):
        data, _ = gauss3()
        model = fit(data, 100.0)
        assert np.allclose(model.priors, [1 / 3, 1 / 3, 1 / 3])
        assert np.sum(model.priors) == pytest.approx(1.0)

    def test_two_sample_class_covariance_scale(self):
        # deviations +-e1: statistical covariance 2 e1 e1^T, unit-trace
        # operator |e1><e1| with scale 2
        mu = np.array([3.0, 1.0, 0.0, 0.0])
        samples = np.vstack([mu + E1, mu - E1, -mu + E1, -mu - E1])
        data = LabeledDataset(samples, np.array([1, 1, 2, 2]))
        model = fit(data, 100.0)
        assert model.covariance_scales[0] == pytest.approx(2.0)
        assert np.allclose(model.covariance_ops[0].matrix, np.outer(E1, E1))

    def test_scale_bridges_to_statistical_covariance_50_seeds(self):
        for seed in range(50):
            data, _ = gauss3(seed=seed, per_class=12)
            model = fit(data, 100.0)
            for c in range(1, 4):
                members = data.class_members(c)
                mu = members.mean(axis=0)
                centered = members - mu
                cov = centered.T @ centered / (len(members) - 1)
                rebuilt = model.covariance_scales[c - 1] * model.covariance_ops[c - 1].matrix
                assert np.max(np.abs(rebuilt - cov)) < 1e-9

    def test_undersized_class_rejected_by_name(self):
        data = LabeledDataset(
            np.vstack([np.eye(2), [[5.0, 5.0]]]), np.array([1, 1, 2])
        )
        with pytest.raises(DomainRejection, match=r"\[2\]"):
            fit(data, 100.0)


class TestInvertApply:
    def test_isotropic_covariance_keeps_mean_direction(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        direction, _ = invert_apply(model, 1, "classical")
        assert abs(np.dot(direction, mu / np.linalg.norm(mu))) == pytest.approx(1.0)

    def test_diagonal_covariance_reweights_mean(self):
        # statistical covariance diag(1, 1/2): inverse applied to (1,1)/sqrt(2)
        # points along (1, 2)/sqrt(5)
        a = np.sqrt(3.0 / 2.0)
        b = np.sqrt(3.0 / 4.0)
        devs = np.vstack(
            [a * np.eye(2)[:1], -a * np.eye(2)[:1], b * np.eye(2)[1:], -b * np.eye(2)[1:]]
        )
        mu = np.array([1.0, 1.0]) / np.sqrt(2.0)
        samples = np.vstack([mu + devs, -mu + devs])
        data = LabeledDataset(samples, np.repeat([1, 2], 4))
        model = fit(data, 100.0)
        assert np.allclose(
            model.covariance_scales[0] * model.covariance_ops[0].matrix,
            np.diag([1.0, 0.5]),
            atol=1e-12,
        )
        direction, norm = invert_apply(model, 1, "classical")
        expected = np.array([1.0, 2.0]) / np.sqrt(5.0)
        assert np.allclose(direction, expected)
        assert norm == pytest.approx(np.linalg.norm([1.0, 2.0]) / np.sqrt(2.0))

    def test_quantum_path_matches_classical_20_seeds(self):
        for seed in range(20):
            data, _ = gauss3(seed=seed, per_class=15)
            model = fit(data, 100.0)
            for c in range(1, 4):
                vc, nc = invert_apply(model, c, "classical")
                vq, nq = invert_apply(model, c, "quantum", t=8, seed=seed)
                assert abs(np.dot(vc, vq)) >= 0.99
                assert nq == nc  # quantum path reuses the recorded norm


class TestDiscriminant:
    def test_identity_covariance_closed_form(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        x = np.array([1.0, 0.5, 0.0, 0.0])
        value = discriminant(model, x, 1, "classical")
        expected = float(x @ mu - 0.5 * mu @ mu) + np.log(0.5)
        assert value == pytest.approx(expected)

    def test_query_at_class_mean(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        value = discriminant(model, mu, 1, "classical")
        assert value == pytest.approx(0.5 * float(mu @ mu) + np.log(0.5))

    def test_query_at_half_mean_leaves_only_prior(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        assert discriminant(model, 0.5 * mu, 1, "classical") == pytest.approx(np.log(0.5))

    def test_linear_prior_variant(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        log_v = discriminant(model, mu, 1, "classical", prior_mode="log")
        lin_v = discriminant(model, mu, 1, "classical", prior_mode="linear")
        assert lin_v - log_v == pytest.approx(0.5 - np.log(0.5))

    def test_shot_estimates_within_three_standard_errors(self):
        data, _ = gauss3()
        model = fit(data, 100.0)
        x = np.array([1.0, 0.4, -0.2, 0.1])
        hits = 0
        trials = 1000
        for seed in range(trials):
            c = 1
            classical = discriminant(model, x, c, "classical")
            quantum = discriminant(model, x, c, "quantum", shots=512, seed=seed)
            direction, inv_norm = invert_apply(model, c, "classical")
            shifted = x - 0.5 * model.class_means[c - 1]
            shifted_norm = np.linalg.norm(shifted)
            probe = overlap_test_signed(
                direction, shifted / shifted_norm, 512, _child_seed(seed, c)
            )
            scale = inv_norm * shifted_norm
            if abs(quantum - classical) <= 3.0 * scale * probe.standard_error:
                hits += 1
        assert hits / trials >= 0.99

    def test_shot_noise_shrinks_with_sqrt_shots(self):
        data, _ = gauss3()
        model = fit(data, 100.0)
        x = np.array([1.0, 0.4, -0.2, 0.1])
        stds = {}
        for shots in (512, 1024):
            values = [
                discriminant(model, x, 1, "quantum", shots=shots, seed=2000 + i)
                for i in range(50)
            ]
            stds[shots] = np.std(values)
        assert 1.25 <= stds[512] / stds[1024] <= 1.6


class TestClassify:
    def test_query_at_class_mean_chooses_that_class(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0)
        assert classify(model, mu, "classical").chosen == 1
        assert classify(model, -mu, "classical").chosen == 2

    def test_equidistant_query_ties_to_class_one(self):
        data, _ = isotropic_two_class()
        model = fit(data, 100.0)
        result = classify(model, np.zeros(4), "classical")
        assert result.chosen == 1
        assert result.margin == pytest.approx(0.0, abs=1e-12)

    def test_classical_path_reproduces_oracle_decisions(self):
        data, means = gauss3()
        model = fit(data, 100.0)
        rng = np.random.default_rng(99)
        for _ in range(200):
            c_true = int(rng.integers(1, 4))
            x = means[c_true - 1] + 0.8 * rng.standard_normal(4)
            result = classify(model, x, "classical")
            oracle = oracle_discriminants(data, x)
            assert result.chosen == int(np.argmax(oracle)) + 1
            assert np.allclose(result.values, oracle, atol=1e-9)

    def test_quantum_path_agreement(self):
        data, means = gauss3()
        model = fit(data, 100.0)
        agree = 0
        for i in range(100):
            rng = np.random.default_rng(5000 + i)
            c_true = int(rng.integers(1, 4))
            x = means[c_true - 1] + 0.8 * rng.standard_normal(4)
            result = classify(model, x, "quantum", shots=8192, seed=5000 + i)
            agree += result.chosen == int(np.argmax(oracle_discriminants(data, x))) + 1
        assert agree / 100 >= 0.95

    def test_argmax_invariant_under_constant_shift(self):
        data, means = gauss3()
        model = fit(data, 100.0)
        result = classify(model, means[2] * 0.9, "classical")
        shifted = result.values + 123.456
        assert int(np.argmax(shifted)) + 1 == result.chosen


class TestLdaClassify:
    def test_requires_shared_model(self):
        data, _ = gauss3()
        model = fit(data, 100.0)
        with pytest.raises(DomainRejection, match="shared"):
            lda_classify(model, np.zeros(4), "classical")

    def test_matches_qda_under_equal_class_covariances(self):
        # identical deviation patterns per class: per-class and pooled
        # covariances coincide, so both pipelines score alike
        rng = np.random.default_rng(11)
        base = rng.standard_normal((30, 4))
        base -= base.mean(axis=0)
        means = np.array([[2.0, 0, 0, 0], [-2.0, 0.5, 0, 0]])
        samples = np.vstack([means[0] + base, means[1] + base])
        data = LabeledDataset(samples, np.repeat([1, 2], 30))
        qda_model = fit(data, 100.0)
        lda_model = fit(data, 100.0, shared_covariance=True)
        agree = 0
        for i in range(100):
            x = means[i % 2] + 0.9 * np.random.default_rng(i).standard_normal(4)
            a = classify(qda_model, x, "classical").chosen
            b = lda_classify(lda_model, x, "classical").chosen
            agree += a == b
        assert agree / 100 >= 0.98

    def test_isotropic_shared_covariance_is_nearest_mean(self):
        data, mu = isotropic_two_class()
        model = fit(data, 100.0, shared_covariance=True)
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = 3.0 * rng.standard_normal(4)
            decided = lda_classify(model, x, "classical").chosen
            nearest = 1 if np.linalg.norm(x - mu) <= np.linalg.norm(x + mu) else 2
            assert decided == nearest

    def test_global_mean_query_has_zero_margin(self):
        data, _ = isotropic_two_class()
        model = fit(data, 100.0, shared_covariance=True)
        result = lda_classify(model, np.zeros(4), "classical")
        assert result.margin == pytest.approx(0.0, abs=1e-12)


class TestResultInvariants:
    def test_chosen_must_be_lowest_index_argmax(self):
        with pytest.raises(DomainRejection, match="argmax"):
            DiscriminantResult(values=np.array([1.0, 2.0]), chosen=1, margin=0.0)

    def test_priors_logs_finite(self):
        data, _ = gauss3(per_class=3)
        model = fit(data, 100.0)
        assert np.all(np.isfinite(np.log(model.priors)))
