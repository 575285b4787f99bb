import numpy as np
import pytest

from fpsqp.errors import ConfigurationError, MetricError, ParseError, TrainingError
from fpsqp.problem.sampling import lhs_sample
from fpsqp.surrogate import load_model, save_model
from fpsqp.train import Dataset, TrainConfig, fit_metrics, read_dataset, train_mlp, write_dataset


def make_dataset(X, Y, n_train, n_val):
    tags = ["train"] * n_train + ["val"] * n_val + ["test"] * (len(X) - n_train - n_val)
    return Dataset(X, Y, np.array(tags, dtype=object))


class TestTrainMlp:
    def test_linear_regression_closed_form(self):
        X = np.linspace(-1, 1, 64)[:, None]
        data = make_dataset(X, 2 * X + 1, 64, 0)
        cfg = TrainConfig(hidden_dims=(), learning_rate=1e-2, epochs=400, batch_size=16,
                          early_stop_patience=400)
        model, _ = train_mlp(data, cfg)
        # least-squares oracle
        A = np.hstack([X, np.ones_like(X)])
        coef = np.linalg.lstsq(A, 2 * X + 1, rcond=None)[0].ravel()
        assert model.weights[0][0, 0] == pytest.approx(coef[0], abs=1e-4)
        assert model.biases[0][0] == pytest.approx(coef[1], abs=1e-4)
        assert np.mean((model.predict(X) - (2 * X + 1)) ** 2) < 1e-8

    def test_sphere_2d_small_net(self):
        X = np.vstack([lhs_sample(200, 2, (-2, 2), seed=1), lhs_sample(50, 2, (-2, 2), seed=2),
                       lhs_sample(100, 2, (-2, 2), seed=3)])
        data = make_dataset(X, (X**2).sum(axis=1), 200, 50)
        cfg = TrainConfig(hidden_dims=(16, 16), learning_rate=3e-3, epochs=2000, lr_schedule="cosine",
                          early_stop_patience=2000)
        model, hist = train_mlp(data, cfg)
        Xt, Yt = data.subset("test")
        m = fit_metrics(model.predict(Xt), Yt)
        assert m["mse"] < 1e-3
        assert m["pearson_r"][0] >= 0.99
        # checkpoint is the best validation epoch
        assert hist.val_mse[hist.best_epoch] == min(hist.val_mse)

    def test_deterministic_and_round_trip(self, rng, tmp_path):
        X = rng.uniform(-1, 1, size=(80, 3))
        data = make_dataset(X, np.sin(X).sum(axis=1), 60, 10)
        cfg = TrainConfig(hidden_dims=(5,), epochs=20, seed=4)
        a, _ = train_mlp(data, cfg)
        b, _ = train_mlp(data, cfg)
        for wa, wb in zip(a.weights, b.weights):
            assert wa.tobytes() == wb.tobytes()
        save_model(a, tmp_path / "m.json")
        c = load_model(tmp_path / "m.json")
        P = rng.uniform(-1, 1, size=(100, 3))
        assert a.predict(P).tobytes() == c.predict(P).tobytes()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_reports_epoch(self):
        X = np.linspace(-1, 1, 32)[:, None]
        data = make_dataset(X, 1e200 * X**2 + X, 32, 0)
        with pytest.raises(TrainingError) as info:
            train_mlp(data, TrainConfig(hidden_dims=(4,), epochs=5, learning_rate=1.0))
        assert info.value.epoch is not None

    def test_config_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_dict({"epochs": 3, "momentum": 0.9})

    @pytest.mark.parametrize("kwargs", [dict(learning_rate=0.0), dict(epochs=0), dict(hidden_dims=(0,)),
                                        dict(activation="relu"), dict(lr_schedule="step")])
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kwargs)


class TestFitMetrics:
    def test_perfect(self):
        t = np.array([1.0, 2.0, 5.0])
        m = fit_metrics(t, t)
        assert m["pearson_r"][0] == 1.0 and m["mse"] == 0.0

    def test_anticorrelated(self):
        t = np.array([-1.0, 0.0, 1.0])
        assert fit_metrics(-t, t)["pearson_r"][0] == -1.0

    def test_hand_vectors(self):
        pred, target = [1.0, 2.0, 3.0], [1.0, 2.0, 4.0]
        # direct formula
        mp, mt = 2.0, 7.0 / 3.0
        cov = sum((p - mp) * (t - mt) for p, t in zip(pred, target))
        vp = sum((p - mp) ** 2 for p in pred)
        vt = sum((t - mt) ** 2 for t in target)
        m = fit_metrics(pred, target)
        assert m["pearson_r"][0] == pytest.approx(cov / np.sqrt(vp * vt), rel=1e-14)
        assert m["mse"] == pytest.approx(1.0 / 3.0, rel=1e-14)
        assert m["max_relative_error"][0] == pytest.approx(0.25)

    def test_zero_variance(self):
        with pytest.raises(MetricError):
            fit_metrics([1.0, 2.0], [3.0, 3.0])

    def test_r_in_range(self, rng):
        for _ in range(20):
            r = fit_metrics(rng.normal(size=(30, 2)), rng.normal(size=(30, 2)))["pearson_r"]
            assert np.all(np.abs(r) <= 1.0)


class TestDatasetFiles:
    def test_round_trip(self, rng, tmp_path):
        X, Y = rng.normal(size=(100, 3)), rng.normal(size=(100, 2))
        data = make_dataset(X, Y, 70, 10)
        write_dataset(data, tmp_path / "d.csv")
        back = read_dataset(tmp_path / "d.csv")
        assert back.inputs.tobytes() == X.tobytes()
        assert back.targets.tobytes() == Y.tobytes()
        assert list(back.split) == list(data.split)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x3,y1,split\n1,2,3,train\n")
        with pytest.raises(ParseError, match="x2"):
            read_dataset(path)

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y1,split\n1,2,train\n1,abc,val\n")
        with pytest.raises(ParseError) as info:
            read_dataset(path)
        assert info.value.line == 3

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x2,y1,split\n")
        data = read_dataset(path)
        assert len(data) == 0 and data.n_inputs == 2

    def test_bad_split_tag(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y1,split\n1,2,holdout\n")
        with pytest.raises(ParseError):
            read_dataset(path)
