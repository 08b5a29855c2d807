import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rffs.errors import (EmptyDataset, FormatError, InvalidClass, InvalidSpeed,
                         NonFiniteFeature, ShapeMismatch)
from rffs.speed_head import (LogisticModel, TrainConfig, bin_center, bin_speed, cross_entropy,
                             cross_entropy_grad, evaluate, predict, train_logistic)

from oracles import mp_cross_entropy


class TestBinning:
    def test_examples(self):
        assert bin_speed(45.4) == 44
        assert bin_speed(0.2) == 0
        assert bin_speed(120) == 78
        assert bin_speed(45.5) == 45

    def test_centers(self):
        assert bin_center(0) == 1.0 and bin_center(78) == 79.0
        assert all(bin_center(bin_speed(s)) == s for s in range(1, 80))

    @given(st.floats(1.0, 79.0))
    def test_consistency(self, s):
        assert abs(bin_center(bin_speed(s)) - s) <= 0.5

    @given(st.floats(1e-6, 1e4))
    def test_consistency_clamped(self, s):
        assert abs(bin_center(bin_speed(s)) - min(max(s, 1), 79)) <= 0.5

    @pytest.mark.parametrize("bad", [0, -3.0, float("nan")])
    def test_invalid_speed(self, bad):
        with pytest.raises(InvalidSpeed):
            bin_speed(bad)

    @pytest.mark.parametrize("bad", [-1, 79, 1.5])
    def test_invalid_class(self, bad):
        with pytest.raises(InvalidClass):
            bin_center(bad)


class TestCrossEntropy:
    def test_uniform(self):
        assert cross_entropy(np.zeros((3, 79)), [0, 5, 78]) == pytest.approx(math.log(79), abs=1e-12)

    def test_saturated(self):
        z = np.zeros((2, 79))
        z[0, 4] = z[1, 70] = 1000.0
        assert 0 <= cross_entropy(z, [4, 70]) < 1e-9

    def test_high_precision_reference(self, rng):
        for _ in range(5):
            z = rng.normal(0, 10, (8, 79))
            y = rng.integers(0, 79, 8)
            assert cross_entropy(z, y) == pytest.approx(mp_cross_entropy(z, y), abs=1e-10)

    def test_label_out_of_range(self):
        with pytest.raises(InvalidClass):
            cross_entropy(np.zeros((1, 79)), [79])

    def test_uniform_grad(self):
        g = cross_entropy_grad(np.zeros((4, 79)), [0, 1, 2, 3])
        expected = np.full((4, 79), 1 / (4 * 79))
        expected[np.arange(4), [0, 1, 2, 3]] = (1 / 79 - 1) / 4
        np.testing.assert_allclose(g, expected, atol=1e-15)

    def test_grad_rows_sum_to_zero(self, rng):
        g = cross_entropy_grad(rng.normal(0, 5, (6, 79)), rng.integers(0, 79, 6))
        np.testing.assert_allclose(g.sum(axis=1), 0, atol=1e-12)

    def test_grad_finite_differences(self, rng):
        h = 1e-6
        for _ in range(10):
            n = int(rng.integers(1, 9))
            z = rng.normal(0, 2, (n, 79))
            y = rng.integers(0, 79, n)
            g = cross_entropy_grad(z, y)
            num = np.empty_like(z)
            for idx in np.ndindex(*z.shape):
                zp, zm = z.copy(), z.copy()
                zp[idx] += h
                zm[idx] -= h
                num[idx] = (cross_entropy(zp, y) - cross_entropy(zm, y)) / (2 * h)
            assert np.linalg.norm(g - num) / np.linalg.norm(num) < 1e-5


class TestTraining:
    def test_separable_toy(self):
        x = np.zeros((2, 30))
        x[0, 0], x[1, 0] = -1.0, 1.0
        model = train_logistic(x, [10, 60], TrainConfig(lr=0.5, epochs=200))
        assert [predict(model, row)[0] for row in x] == [10, 60]

    def test_zero_epochs(self, rng):
        model = train_logistic(rng.normal(size=(5, 30)), [1, 2, 3, 4, 5], TrainConfig(epochs=0))
        assert not model.weights.any()
        assert model.losses[-1] == pytest.approx(math.log(79), abs=1e-12)

    def test_deterministic(self, rng):
        x, y = rng.normal(size=(40, 30)), rng.integers(0, 79, 40)
        a = train_logistic(x, y, TrainConfig(lr=0.05, epochs=50, seed=3))
        b = train_logistic(x, y, TrainConfig(lr=0.05, epochs=50, seed=3))
        assert a.weights.tobytes() == b.weights.tobytes()

    def test_monotone_descent(self, rng):
        x = rng.normal(size=(60, 30)) * rng.uniform(0.1, 100, 30) + rng.uniform(-50, 50, 30)
        y = rng.integers(0, 79, 60)
        losses = train_logistic(x, y, TrainConfig(lr=1e-2, epochs=300)).losses
        assert all(b <= a for a, b in zip(losses, losses[1:]))
        assert losses[-1] < losses[0]

    def test_nan_rejected(self):
        x = np.zeros((2, 30))
        x[1, 4] = np.nan
        with pytest.raises(NonFiniteFeature):
            train_logistic(x, [0, 1])

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            train_logistic(np.zeros((0, 30)), [])

    def test_json_round_trip(self, rng, tmp_path):
        model = train_logistic(rng.normal(size=(10, 30)), rng.integers(0, 79, 10),
                               TrainConfig(epochs=5))
        model.save(tmp_path / "m.json")
        obj = model.to_json()
        assert set(obj) == {"k", "f", "mean", "std", "weights"}
        assert obj["k"] == 79 and obj["f"] == 31 and len(obj["weights"]) == 79 * 31
        back = LogisticModel.load(tmp_path / "m.json")
        assert back.weights.tobytes() == model.weights.tobytes()
        (tmp_path / "bad.json").write_text('{"k": 79}')
        with pytest.raises(FormatError):
            LogisticModel.load(tmp_path / "bad.json")


class TestPredict:
    def zero_model(self):
        return LogisticModel(np.zeros((79, 31)), np.zeros(30), np.ones(30))

    def test_zero_model(self):
        assert predict(self.zero_model(), np.ones(30)) == (0, 1.0)

    def test_shape(self):
        with pytest.raises(ShapeMismatch):
            predict(self.zero_model(), np.ones(29))

    def test_bias_shift_invariance(self, rng):
        m = LogisticModel(rng.normal(size=(79, 31)), rng.normal(size=30), rng.uniform(1, 2, 30))
        x = rng.normal(size=30)
        shifted = LogisticModel(m.weights.copy(), m.mean, m.std)
        shifted.weights[:, -1] += 123.0
        assert predict(m, x) == predict(shifted, x)

    def test_manual_matmul(self, rng):
        m = LogisticModel(rng.normal(size=(79, 31)), rng.normal(size=30), rng.uniform(1, 2, 30))
        x = rng.normal(size=30)
        z = [sum(m.weights[c, f] * (x[f] - m.mean[f]) / m.std[f] for f in range(30))
             + m.weights[c, 30] for c in range(79)]
        assert predict(m, x)[0] == max(range(79), key=lambda c: (z[c], -c))


class TestEvaluate:
    def test_boundaries(self):
        assert evaluate([42], [46]).within5_accuracy == 1.0
        assert evaluate([42], [47.5]).within5_accuracy == 0.0
        assert evaluate([40], [45]).within5_accuracy == 1.0

    def test_identity(self):
        assert evaluate([10, 20, 30], [10, 20, 30]).within5_accuracy == 1.0

    def test_mismatch(self):
        with pytest.raises(ShapeMismatch):
            evaluate([1, 2], [1])
        with pytest.raises(EmptyDataset):
            evaluate([], [])

    @given(st.lists(st.tuples(st.floats(1, 90), st.floats(1, 90)), min_size=1, max_size=50))
    @settings(max_examples=100)
    def test_brute_force_count(self, pairs):
        p, t = zip(*pairs)
        r = evaluate(p, t)
        hits = sum(1 for a, b in pairs if abs(a - b) <= 5.0)
        assert r.within5_accuracy == hits / len(pairs)
        assert 0.0 <= r.within5_accuracy <= 1.0
        assert sum(c["n"] for c in r.per_class.values()) == len(pairs)

    def test_cross_entropy_reported(self):
        logits = np.zeros((2, 79))
        r = evaluate([30, 40], [30, 40], logits)
        assert r.mean_cross_entropy == pytest.approx(math.log(79))
