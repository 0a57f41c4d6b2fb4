# From distances to flags: P = D / max(train D), threshold at the (1 - nu)
# quantile of the training P.

import numpy as np
from _data import demo_data

from ffoneclass.losses import LossSpec
from ffoneclass.network import forward_all, init_network
from ffoneclass.scoring import accuracy, auc, f1, probabilities, score_and_flag
from ffoneclass.training import TrainConfig, train

ds, data = demo_data()
model, _ = train(init_network((4, 10, 10), 1), data.x_train, data.x_valid, LossSpec("hb_svdd"), TrainConfig())
cal = model.calibration
print(f"train max distance {cal.train_max_distance:.4f}, threshold {cal.threshold:.4f}")

# on its own training rows about nu of them are flagged
p_train, f_train = score_and_flag(model, data.x_train)
print(f"flagged on train: {f_train.mean():.4f} (nu = {cal.nu})")

# test-time P can exceed 1
p, flags = score_and_flag(model, data.x_test)
print(f"test P range {p.min():.3f} .. {p.max():.3f}, flagged {int(flags.sum())} of {len(flags)}")
print(f"accuracy {accuracy(flags, data.y_test):.4f}  f1 {f1(flags, data.y_test):.4f}  auc {auc(p, data.y_test):.4f}")

# per-batch normalisation is available but makes a score depend on its batch-mates
h = forward_all(model.network, data.x_test[:5])[-1]
d = ((h - model.state.center) ** 2).sum(axis=1)
print("train-max P:", np.round(probabilities(d, cal, "train"), 3))
print("batch-max P:", np.round(probabilities(d, cal, "batch"), 3))
