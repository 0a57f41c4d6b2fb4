import numpy as np
import pytest

from ffoneclass.losses import LossKind, LossSpec, calibrate_state, evaluate, relative_error
from ffoneclass.network import DenseLayer, Network, forward_all, init_network, layer_forward, pre_activation
from ffoneclass.tensor import ShapeError
from ffoneclass.training import (
    Regime,
    TrainConfig,
    TrainingDiverged,
    bp_step,
    early_stop_check,
    ff_step,
    layer_grads,
    sgd_step,
    train,
    train_bp,
    train_ff,
)


def params_equal(a, b):
    return all(pa.tobytes() == pb.tobytes() for pa, pb in zip(a.parameters(), b.parameters()))


class TestSgdStep:
    def test_hand_example(self):
        out = sgd_step(DenseLayer([[1.0]], [0.0]), np.array([[0.5]]), np.array([0.0]), 0.1, 1)
        assert out.w[0, 0] == pytest.approx(0.95, abs=1e-15)

    def test_zero_rate_and_zero_gradient(self, rng):
        layer = DenseLayer(rng.normal(size=(3, 2)), rng.normal(size=2))
        g = rng.normal(size=(3, 2))
        for out in (
            sgd_step(layer, g, np.ones(2), 0.0, 5),
            sgd_step(layer, np.zeros((3, 2)), np.zeros(2), 0.3, 5),
        ):
            np.testing.assert_array_equal(out.w, layer.w)
            np.testing.assert_array_equal(out.b, layer.b)

    def test_divides_by_batch_size(self):
        out = sgd_step(DenseLayer([[0.0]], [0.0]), np.array([[4.0]]), np.array([2.0]), 1.0, 4)
        assert out.w[0, 0] == -1.0 and out.b[0] == -0.5

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            sgd_step(DenseLayer([[1.0]], [0.0]), np.zeros((2, 1)), np.zeros(1), 0.1, 1)


class TestLayerGrads:
    def test_zero_upstream(self, rng):
        layer = DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=4))
        for g in layer_grads(layer, rng.normal(size=(5, 3)), np.zeros((5, 4))):
            assert np.all(g == 0)

    def test_dead_layer(self, rng):
        layer = DenseLayer(np.zeros((3, 4)), -np.ones(4))
        for g in layer_grads(layer, rng.normal(size=(5, 3)), rng.normal(size=(5, 4))):
            assert np.all(g == 0)

    def test_shape_mismatch(self, rng):
        layer = DenseLayer(np.zeros((3, 4)), np.zeros(4))
        with pytest.raises(ShapeError):
            layer_grads(layer, np.zeros((5, 3)), np.zeros((5, 3)))

    @pytest.mark.parametrize("kind", list(LossKind))
    def test_finite_differences(self, kind, rng):
        spec = LossSpec(kind)
        x = rng.normal(size=(6, 3))
        for _ in range(50):
            layer = DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=4) * 0.3)
            if np.min(np.abs(pre_activation(layer, x))) > 1e-3:
                break
        h = layer_forward(layer, x)
        state = calibrate_state(h, spec)
        if kind is LossKind.SVDD:
            state = type(state)(state.center, state.radius_sq * 0.7)
        gw, gb, gx = layer_grads(layer, x, evaluate(h, spec, state).grad_h)

        def f(w, b, xx):
            return evaluate(layer_forward(DenseLayer(w, b), xx), spec, state).total

        eps = 1e-6

        def numeric(arr, fn):
            out = np.empty_like(arr)
            for idx in np.ndindex(arr.shape):
                p, m = arr.copy(), arr.copy()
                p[idx] += eps
                m[idx] -= eps
                out[idx] = (fn(p) - fn(m)) / (2 * eps)
            return out

        assert relative_error(gw, numeric(layer.w, lambda w: f(w, layer.b, x))) < 1e-5
        assert relative_error(gb, numeric(layer.b, lambda b: f(layer.w, b, x))) < 1e-5
        assert relative_error(gx, numeric(x, lambda xx: f(layer.w, layer.b, xx))) < 1e-5


def _bp_oracle_error(net, x, spec):
    """Compare the bp_step update against finite differences of the final-layer loss."""
    state = calibrate_state(forward_all(net, x)[-1], spec)
    lr, n = 1.0, x.shape[0]
    new, _ = bp_step(net, x, spec, lr)
    errs = []
    for l, (old, upd) in enumerate(zip(net.layers, new.layers)):
        for name in ("w", "b"):
            analytic = (getattr(old, name) - getattr(upd, name)) * n / lr
            base = getattr(old, name)
            numeric = np.empty_like(base)
            for idx in np.ndindex(base.shape):
                vals = []
                for sgn in (1, -1):
                    arr = base.copy()
                    arr[idx] += sgn * 1e-6
                    layers = [L.copy() for L in net.layers]
                    setattr(layers[l], name, arr)
                    h = forward_all(Network(layers, net.architecture), x)[-1]
                    vals.append(evaluate(h, spec, state).total)
                numeric[idx] = (vals[0] - vals[1]) / 2e-6
            errs.append(relative_error(analytic, numeric))
    return max(errs)


@pytest.mark.parametrize("kind", list(LossKind))
def test_bp_gradient_matches_finite_differences(kind, rng):
    spec = LossSpec(kind)
    x = rng.normal(size=(6, 3))
    for _ in range(200):
        net = Network(
            [
                DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=4) * 0.3),
                DenseLayer(rng.normal(size=(4, 3)) * 0.6, rng.normal(size=3) * 0.3),
            ]
        )
        zs = [pre_activation(net.layers[0], x)]
        zs.append(pre_activation(net.layers[1], layer_forward(net.layers[0], x)))
        if min(np.min(np.abs(z)) for z in zs) < 1e-3:
            continue
        h = forward_all(net, x)[-1]
        st = calibrate_state(h, spec)
        if kind is LossKind.SVDD and np.min(np.abs(((h - st.center) ** 2).sum(1) - st.radius_sq)) < 1e-3:
            continue
        break
    assert _bp_oracle_error(net, x, spec) < 1e-4


class TestRegimes:
    def test_zero_rate_keeps_init(self, small_data):
        net = init_network((4, 10, 10), 3)
        for regime in ("ff", "bp"):
            cfg = TrainConfig(regime=regime, learning_rate=0.0, epochs_max=3)
            model, report = train(net, small_data.x_train, small_data.x_valid, LossSpec("hb_svdd"), cfg)
            assert params_equal(model.network, net)
            assert report.epochs_run == 3

    @pytest.mark.parametrize("kind", list(LossKind))
    @pytest.mark.parametrize("batch", [None, 16])
    def test_single_layer_equivalence(self, kind, batch, small_data):
        net = init_network((4, 6), 11)
        spec = LossSpec(kind)
        a, ra = train_ff(net, small_data.x_train, small_data.x_valid, spec,
                         TrainConfig(regime="ff", epochs_max=8, batch_size=batch))
        b, rb = train_bp(net, small_data.x_train, small_data.x_valid, spec,
                         TrainConfig(regime="bp", epochs_max=8, batch_size=batch))
        assert params_equal(a.network, b.network)
        assert ra.train_loss_curve == rb.train_loss_curve

    def test_single_step_equivalence(self, rng):
        net = init_network((4, 5), 2)
        x = rng.normal(size=(12, 4))
        for kind in LossKind:
            spec = LossSpec(kind)
            assert params_equal(ff_step(net, x, spec, 0.1)[0], bp_step(net, x, spec, 0.1)[0])

    def test_ff_feeds_post_update_output(self, rng):
        net = init_network((4, 8, 5), 1)
        x = rng.normal(size=(20, 4))
        new, inputs = ff_step(net, x, LossSpec("hb_svdd"), 0.5)
        np.testing.assert_array_equal(inputs[1], layer_forward(new.layers[0], x))
        assert not np.array_equal(inputs[1], layer_forward(net.layers[0], x))
        _, stale = ff_step(net, x, LossSpec("hb_svdd"), 0.5, feed_updated=False)
        np.testing.assert_array_equal(stale[1], layer_forward(net.layers[0], x))

    def test_ff_locality(self, rng):
        x = rng.normal(size=(20, 4))
        a = init_network((4, 8, 5), 1)
        b = Network([a.layers[0].copy(), init_network((4, 8, 5), 99).layers[1]])
        spec = LossSpec("goodness")
        np.testing.assert_array_equal(ff_step(a, x, spec, 0.1)[0].layers[0].w, ff_step(b, x, spec, 0.1)[0].layers[0].w)

    def test_bp_is_not_local(self, rng):
        x = rng.normal(size=(20, 4))
        a = init_network((4, 8, 5), 1)
        b = Network([a.layers[0].copy(), init_network((4, 8, 5), 99).layers[1]])
        spec = LossSpec("hb_svdd")
        assert not np.array_equal(bp_step(a, x, spec, 0.1)[0].layers[0].w, bp_step(b, x, spec, 0.1)[0].layers[0].w)

    def test_bp_sum_variant_differs(self, rng):
        x = rng.normal(size=(20, 4))
        net = init_network((4, 8, 5), 1)
        spec = LossSpec("hb_svdd")
        final = bp_step(net, x, spec, 0.1)[0]
        summed = bp_step(net, x, spec, 0.1, loss_at="sum")[0]
        np.testing.assert_array_equal(final.layers[1].w, summed.layers[1].w)
        assert not np.array_equal(final.layers[0].w, summed.layers[0].w)

    @pytest.mark.parametrize("regime", ["ff", "bp"])
    def test_determinism(self, regime, small_data):
        cfg = TrainConfig(regime=regime, epochs_max=5, batch_size=32, seed=4)
        net = init_network((4, 10, 10), 4)
        m1, r1 = train(net, small_data.x_train, small_data.x_valid, LossSpec("goodness"), cfg)
        m2, r2 = train(net, small_data.x_train, small_data.x_valid, LossSpec("goodness"), cfg)
        assert params_equal(m1.network, m2.network)
        assert r1.valid_loss_curve == r2.valid_loss_curve
        assert m1.calibration == m2.calibration

    def test_input_network_untouched(self, small_data):
        net = init_network((4, 10, 10), 4)
        before = net.copy()
        train(net, small_data.x_train, small_data.x_valid, LossSpec("goodness"), TrainConfig(epochs_max=2))
        assert params_equal(net, before)

    def test_regime_mismatch(self, small_data):
        net = init_network((4, 3), 1)
        with pytest.raises(ValueError):
            train_ff(net, small_data.x_train, None, LossSpec("goodness"), TrainConfig(regime="bp"))
        with pytest.raises(ValueError):
            train_bp(net, small_data.x_train, None, LossSpec("goodness"), TrainConfig(regime="ff"))

    def test_report_curves(self, small_data):
        _, report = train(init_network((4, 10), 1), small_data.x_train, small_data.x_valid,
                          LossSpec("hb_svdd"), TrainConfig(epochs_max=7))
        assert len(report.train_loss_curve) == len(report.valid_loss_curve) == report.epochs_run

    def test_divergence_is_reported(self, small_data):
        cfg = TrainConfig(regime="bp", learning_rate=1e6, epochs_max=50)
        with pytest.raises(TrainingDiverged, match="epoch"):
            train(init_network((4, 10, 10), 1), small_data.x_train * 50, None, LossSpec("ls_svdd"), cfg)


class TestEarlyStopping:
    def test_decreasing(self):
        assert not early_stop_check([5, 4, 3, 2, 1], 1)

    def test_best_exactly_patience_ago(self):
        assert not early_stop_check([3, 2, 2.5, 1.9, 2.2, 2.2], 2)

    def test_plateau_after_best(self):
        # best at epoch 0, three later epochs: not more than patience 3
        assert not early_stop_check([1.0, 2.0, 2.0, 2.0], 3)
        assert early_stop_check([1.0, 2.0, 2.0, 2.0, 2.0], 3)
        assert early_stop_check([1.0, 2.0, 2.0, 2.0], 2)

    def test_ties_keep_first_minimum(self):
        assert early_stop_check([1.0, 1.0, 1.0], 1)

    def test_patience_precondition(self):
        with pytest.raises(ValueError):
            early_stop_check([1.0], 0)

    def test_frozen_validation_stops_training(self, small_data):
        # zero learning rate: the validation loss never improves after epoch 1
        cfg = TrainConfig(learning_rate=0.0, epochs_max=50, patience=3)
        _, report = train(init_network((4, 10), 1), small_data.x_train, small_data.x_valid, LossSpec("goodness"), cfg)
        assert report.stopped_early
        assert report.epochs_run == 5 < cfg.epochs_max


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1)
    with pytest.raises(ValueError):
        TrainConfig(epochs_max=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    assert TrainConfig(regime="bp").regime is Regime.BP


def test_report_csv(tmp_path, small_data):
    _, report = train(init_network((4, 10), 1), small_data.x_train, small_data.x_valid,
                      LossSpec("hb_svdd"), TrainConfig(epochs_max=3))
    lines = report.to_csv(tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_loss,valid_loss"
    assert len(lines) == 4
