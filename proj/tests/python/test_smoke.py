import math

import numpy as np
import pytest

import palmline


def test_kernels_match_numpy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 5, 5)).astype(np.float32)
    w = rng.standard_normal((3, 2, 3, 3)).astype(np.float32)
    b = rng.standard_normal(3).astype(np.float32)
    got = palmline.conv2d(x, w, b, stride=1, pad=1)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    want = np.zeros((3, 5, 5))
    for o in range(3):
        for i in range(5):
            for j in range(5):
                want[o, i, j] = (xp[:, i:i + 3, j:j + 3] * w[o]).sum() + b[o]
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-5)

    np.testing.assert_array_equal(palmline.relu(np.array([-1, 0, 2], np.float32)), [0, 0, 2])
    np.testing.assert_array_equal(palmline.maxpool2d(np.arange(1, 5, dtype=np.float32).reshape(1, 2, 2), 2, 2), [[[4]]])
    assert palmline.local_response_norm(np.full((1, 1, 1), 2, np.float32), 1, 1.0, 1.0, 0.0)[0, 0, 0] == pytest.approx(0.5)
    np.testing.assert_allclose(palmline.dense(np.ones(4, np.float32), np.eye(4, dtype=np.float32), np.zeros(4, np.float32)), 1)


def test_weights_round_trip_and_naming():
    wts = palmline.Weights()
    wts.insert("a", np.arange(4, dtype=np.float32).reshape(2, 2))
    back = palmline.Weights.from_bytes(wts.to_bytes())
    assert back == wts
    assert len(wts.to_bytes()) == 12 + 2 + 1 + 2 + 8 + 16
    np.testing.assert_array_equal(back["a"], [[0, 1], [2, 3]])

    specs = dict(palmline.parameter_specs("vgg16"))
    assert specs["fc6.weight"] == [4096, 25088]
    assert "conv3_2.bias" in specs
    assert palmline.parameter_count("alexnet") == 56868224
    assert palmline.input_side("alexnet") == 227

    with pytest.raises(palmline.PalmlineError, match="BadMagic"):
        palmline.Weights.from_bytes(b"XXXX" + bytes(8))


def test_hand_pipeline_and_features():
    image, mask, angle = palmline.synth_hand(seed=2)
    assert image.shape == (240, 320, 3)
    assert 0.05 < mask.mean() < 0.6
    out = palmline.palm_roi(image, model="alexnet", seed=1)
    assert out["roi"].shape == (227, 227, 3)
    assert abs(out["angle"] - angle) < math.radians(5)

    weights = palmline.Weights.random("alexnet", seed=3)
    feature = palmline.extract_features(weights, out["roi"], model="alexnet", layer="fc6")
    assert feature.shape == (palmline.FEATURE_DIM,)
    assert np.isfinite(feature).all()

    with pytest.raises(palmline.PalmlineError, match="DegenerateImage"):
        palmline.segment(np.full((20, 20, 3), 90.0))


def test_svm_and_sweep():
    x, subjects = palmline.synth_features(5, 12, 16, 0.1, seed=4)
    labels = np.array([int(s[1:]) for s in subjects])
    svm = palmline.LinearSvm.train(x, labels, seed=1)
    assert (svm.predict(x) == labels).mean() == 1.0
    assert svm.weights.shape == (5, 17)
    again = palmline.LinearSvm.from_weights(svm.to_weights())
    np.testing.assert_array_equal(again.weights, svm.weights)

    assert palmline.train_count(15, 0.1) == 2
    assert palmline.train_count(15, 0.9) == 14
    report = palmline.run_sweep(x, subjects, repeats=2, model="synthetic", layer="blobs")
    lines = report.strip().split("\n")
    assert lines[0] == "model,layer,ratio,mean_accuracy,std_accuracy,repeats"
    assert len(lines) == 10
