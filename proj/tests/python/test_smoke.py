import math

import numpy as np
import pytest

import alsched


def test_metrics_hand_values():
    assert alsched.mse([0, 0], [1, 3]) == 5.0
    assert alsched.auc([1, 2, 3]) == 6.0
    assert math.isclose(alsched.log_auc([1, 2, 3]), math.log(24.0))
    assert math.isclose(alsched.asd([0, 1, 0]), 1.0)
    assert math.isclose(alsched.wasd([0, 1, 0]), 4.0)
    assert alsched.ftc([5, 3, 3.005, 3.004, 3.004], 0.01) == 2
    assert alsched.ftc([1, 1, 2]) is None


def test_ttest_identical_curves():
    t, p, significant = alsched.paired_ttest_log([1, 2, 3, 4], [1, 2, 3, 4])
    assert p == 1.0 and not significant


def test_synth_shapes():
    cfg = alsched.SynthConfig()
    cfg.horizon = 4
    cfg.pool_size = 30
    data = alsched.synth(cfg, seed=1)
    assert len(data["pools"]) == 4
    assert data["pools"][0].shape == (30, 10)
    assert len(data["labels"][3]) == 30
    assert data["holdout_x"].shape[0] == len(data["holdout_y"])
    assert len(data["feature_names"]) == 10
    again = alsched.synth(cfg, seed=1)
    np.testing.assert_array_equal(data["pools"][2], again["pools"][2])


def test_label_moments():
    y = np.array(alsched.label_draws(count=20000, seed=3))
    assert abs(y.mean() - 10.55) < 0.5
    assert abs(y.std() - 7.89) < 0.5


def test_select_distance_and_pareto():
    pool = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    assert alsched.select("di", pool, labeled=np.zeros((1, 2)), budget=2) == [2, 0]
    front = np.array([[3.0, 0.0], [0.0, -3.0], [1.5, -1.5], [1.4, -1.4]])
    picks = alsched.select("pareto", front, budget=2, signs=[1, -1])
    assert sorted(picks) == [0, 1]
    with pytest.raises(ValueError):
        alsched.select("qbc_boot", pool, budget=1)


def test_run_and_importance(tmp_path):
    config = tmp_path / "h.yaml"
    config.write_text(
        "seeds: [1]\n"
        "synthetic: {horizon: 6, pool_size: 30}\n"
        "experiments:\n"
        "  - {name: qbc, init_rounds: 2, budget: 3, select_strategy: qbc_boot, forest_trees: 10, committee_size: 3}\n"
        "  - {name: rnd, init_rounds: 2, budget: 3, select_strategy: random, random_baseline_repeats: 2,"
        " forest_trees: 10}\n"
    )
    code, out, err = alsched.run(config, output=tmp_path / "out")
    assert code == 0, err
    assert (tmp_path / "out" / "comparison.csv").exists()
    code, out, err = alsched.importance(tmp_path / "out", repeats=2, experiment="qbc")
    assert code == 0, err
    assert (tmp_path / "out" / "importance_qbc_seed1.csv").exists()


def test_bad_config_exit_code(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("experiments:\n  - {name: a, bugdet: 3}\n")
    code, _, err = alsched.run(config)
    assert code == 2
    assert "bugdet" in err
