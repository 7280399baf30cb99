"""Smoke tests for the python bindings."""

import math

import numpy as np

import twode


def test_generate_shapes_and_determinism():
    a = twode.generate("DynamicProcess", n=6, horizon=5, gamma=1.0, seed=42)
    b = twode.generate("DynamicProcess", n=6, horizon=5, gamma=1.0, seed=42)
    assert a["observations"].shape == (30, 4)
    assert a["actions"].shape == (30, 1)
    assert a["rewards"].shape == (30,)
    assert a["initial_obs"].shape == (6, 4)
    assert a["u"].shape == (6,)
    assert a["w"].shape == (5,)
    assert np.array_equal(a["observations"], b["observations"])
    assert np.array_equal(a["rewards"], b["rewards"])
    c = twode.generate("DynamicProcess", n=6, horizon=5, gamma=1.0, seed=43)
    assert not np.array_equal(a["rewards"], c["rewards"])


def test_tumor_generation():
    d = twode.generate("TumorGrowth", n=4, horizon=8, gamma=0.7, seed=1)
    assert d["observations"].shape == (32, 2)
    assert d["actions"].shape == (32, 2)
    assert set(int(g) for g in d["group"]) <= {1, 2, 3}
    assert np.all(d["observations"][:, 0] > 0)  # volumes stay positive


def test_theoretical_mse():
    assert twode.theoretical_mse("TWUC", 1.0, 100, 50) == 0.0304
    assert twode.theoretical_mse("UUC", 2.0, 10, 10) == 2.0
    assert twode.theoretical_mse("OWUC", 1.0, 10, 10, var_w=3.5) == 3.5


def test_metrics():
    lmse, bias = twode.metrics([3.0, 3.0], 2.0)
    assert abs(lmse) < 1e-12
    assert abs(bias - 1.0) < 1e-12


def test_policy_prob_sums_to_one():
    probs = twode.policy_prob("DynamicProcess", "A", np.zeros(4))
    assert probs.shape == (2,)
    assert abs(probs.sum() - 1.0) < 1e-12
    assert abs(probs[1] - 0.3) < 1e-12
    tumor = twode.policy_prob("TumorGrowth", "B", np.array([100.0, 0.0]))
    assert tumor.shape == (4,)
    assert abs(tumor.sum() - 1.0) < 1e-12


def test_true_policy_value_matches_closed_form():
    # the linear target chain has mean zero, so eta = 3 * 0.5 = 1.5
    eta, se = twode.true_policy_value("Linear", "random0.5", n_rollouts=2000, seed=7,
                                      horizon=50)
    assert se > 0
    assert abs(eta - 1.5) < 6 * se


def test_linear_study_tracks_theory():
    res = twode.linear_study(n=60, horizon=25, seed=3, assumption="UUC")
    assert abs(res["train_mse"] - 2.0) / 2.0 < 0.25  # single replication
    res = twode.linear_study(n=60, horizon=25, seed=3, assumption="TWUC")
    assert res["train_mse"] < 0.5


def test_train_and_evaluate_runs():
    out = twode.train_and_evaluate(
        "DynamicProcess", "TWD", n=24, horizon=6, gamma=1.0, seed=5, target="A",
        max_epochs=5, patience=5, batch_size=64, ntn_out=4, mlp_hidden=8,
        rollouts_per_traj=5, truth_rollouts=300,
    )
    assert math.isfinite(out["eta_hat"])
    assert math.isfinite(out["eta_true"])
    assert len(out["train_curve"]) >= 1
    assert out["best_val_loss"] == min(out["val_curve"])


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"PASS {test.__name__}")
    print(f"{len(tests)} python smoke tests passed (twode {twode.__version__})")


if __name__ == "__main__":
    main()
