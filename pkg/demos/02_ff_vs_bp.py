# Forward-forward against backpropagation on one architecture.
# FF updates each layer against its own loss as the batch passes through;
# BP updates everything from the last layer's loss.

from _data import demo_data

from ffoneclass.losses import LossSpec
from ffoneclass.network import init_network
from ffoneclass.scoring import evaluate_metrics, score_and_flag
from ffoneclass.training import TrainConfig, train

ds, data = demo_data()
spec = LossSpec("goodness_adjusted")

for regime in ("ff", "bp"):
    net = init_network((4, 25, 25), seed=1)
    model, report = train(net, data.x_train, data.x_valid, spec, TrainConfig(regime=regime, seed=1))
    p, flags = score_and_flag(model, data.x_test)
    m = evaluate_metrics(p, flags, data.y_test)
    print(f"{regime}: {report.epochs_run} epochs (early stop: {report.stopped_early}), "
          f"valid loss {report.valid_loss_curve[0]:.4f} -> {report.valid_loss_curve[-1]:.4f}")
    print(f"    accuracy {m.accuracy:.4f}  f1 {m.f1:.4f}  auc {m.auc:.4f}")

# with a single layer the two regimes do the same arithmetic
a, _ = train(init_network((4, 10), 3), data.x_train, None, spec, TrainConfig("ff", epochs_max=20))
b, _ = train(init_network((4, 10), 3), data.x_train, None, spec, TrainConfig("bp", epochs_max=20))
print("single layer identical:", (a.network.layers[0].w == b.network.layers[0].w).all())
