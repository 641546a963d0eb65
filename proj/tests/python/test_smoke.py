"""Smoke tests for the fediq Python module.

These check that the bindings expose the core operations with the same
numerical behavior as the C++ test suite; the heavy lifting is covered by
the C++ unit and acceptance tests.
"""

import math

import pytest

fediq = pytest.importorskip("fediq")


def test_version_string():
    assert fediq.__version__ == "0.1.0"


def test_receptive_field_and_param_count():
    assert fediq.receptive_field(10, 3) == 2047
    assert fediq.receptive_field(5) == 63
    assert fediq.param_count(1, 3, 4, 4) == 52
    assert fediq.param_count(2, 3, 3, 5) == 77


def test_triplet_loss_at_zero_features():
    zero = [0.0] * 8
    loss = fediq.triplet_loss(zero, zero, [zero] * 10)
    assert loss == pytest.approx(11 * math.log(2), abs=1e-12)


def test_q_function():
    assert fediq.q_function(0.0) == pytest.approx(0.5, abs=1e-15)
    assert fediq.q_function(1.0) == pytest.approx(0.15865525393145705, abs=1e-12)
    assert fediq.q_function(40.0) == 0.0


def test_implied_moment_bound():
    assert fediq.implied_moment_bound(1.0, 2.0) == pytest.approx(
        13.236985107980203, abs=1e-9
    )


def test_aggregate_weighted_mean():
    mean = fediq.aggregate([(0, 1, [0.0, 10.0]), (1, 3, [4.0, -2.0])])
    assert mean == [3.0, 1.0]


def test_quantization():
    assert fediq.f16_roundtrip(0.1) == 0.0999755859375
    assert fediq.quantize_roundtrip([0.1], "f16") == [0.0999755859375]
    w = [0.3, -1.7, 0.0, 2.4]
    assert fediq.quantize_roundtrip(w, "none") == w
    scale = fediq.int8_scale(w)
    assert scale == pytest.approx(2.4 / 127, abs=1e-15)
    for q, x in zip(fediq.quantize_roundtrip(w, "int8"), w):
        assert abs(q - x) <= scale / 2 + 1e-15
    with pytest.raises(fediq.ConfigError):
        fediq.quantize_roundtrip(w, "f8")


def test_modulate():
    points = fediq.modulate("qpsk", [0, 1, 2, 3])
    assert len(points) == 4
    for p in points:
        assert abs(abs(p) - 1.0) < 1e-12
    bpsk = fediq.modulate("bpsk", [0, 1])
    assert bpsk[0] == -bpsk[1]
    with pytest.raises(fediq.DataError):
        fediq.modulate("bpsk", [2])


def test_generate_frame():
    frame = fediq.generate_frame("qpsk", frame_len=64, seed=5)
    assert len(frame["samples"]) == 64
    assert frame["label"] == 1
    assert -10.0 <= frame["meta"]["snr_db"] <= 10.0
    again = fediq.generate_frame("qpsk", frame_len=64, seed=5)
    assert again["samples"] == frame["samples"]


def test_doppler_offset():
    assert fediq.doppler_offset(300.0, 1e6) == pytest.approx(
        1.0006922855944561e-12, rel=1e-12
    )


def test_encoder_forward(tmp_path):
    enc = fediq.Encoder(depth=2, kernel=3, channels=4, feature_dim=8, seed=7)
    assert enc.feature_dim == 8
    assert enc.receptive_field == 7
    window = [complex(0.3 * k, -0.1 * k) for k in range(1, 21)]
    f = enc.forward(window)
    assert len(f) == 8
    # Biases are zero at init, so the feature map is positively homogeneous.
    doubled = enc.forward([2 * s for s in window])
    for a, b in zip(doubled, f):
        assert a == pytest.approx(2 * b, rel=1e-12, abs=1e-12)
    path = str(tmp_path / "enc.encp")
    enc.save(path)
    loaded = fediq.Encoder.load(path)
    assert loaded.forward(window) == f
    with pytest.raises(fediq.DataError):
        enc.forward([])


def test_svm_fit_predict(tmp_path):
    feats, labels = [], []
    for i in range(40):
        off = 0.01 * i
        feats.append([5.0 + off, 5.0 - off])
        labels.append(0)
        feats.append([-5.0 - off, -5.0 + off])
        labels.append(1)
    svm = fediq.Svm.fit(feats, labels, c_reg=1.0, epochs=100)
    assert svm.num_classes == 2
    assert svm.dim == 2
    assert svm.accuracy(feats, labels) == 1.0
    assert svm.predict([6.0, 6.0]) == 0
    trace = svm.objective_trace
    assert trace[-1] <= trace[0]
    path = str(tmp_path / "model.svml")
    svm.save(path)
    loaded = fediq.Svm.load(path)
    assert loaded.accuracy(feats, labels) == 1.0


def test_iqds_roundtrip(tmp_path):
    path = str(tmp_path / "pool.iqds")
    frames = [
        (3, [complex(0.125, -0.25), complex(0.375, 0.5)]),
        (-1, [complex(-1.0, 1.0), complex(0.5, 0.25)]),
    ]
    fediq.write_iqds(path, frames)
    back = fediq.read_iqds(path)
    assert [fr["label"] for fr in back] == [3, -1]
    # Samples survive the container's float32 storage exactly here because
    # the values are f32-representable.
    assert back[0]["samples"] == frames[0][1]
    # A pool holds fixed-length frames; ragged input must be rejected.
    with pytest.raises(fediq.DataError):
        fediq.write_iqds(path, [(0, [complex(1.0, 0.0)]), (1, frames[0][1])])
    with pytest.raises(fediq.DataError):
        fediq.read_iqds(str(tmp_path / "missing.iqds"))


def test_separability_prob_bound():
    collapsed, product = fediq.separability_prob_bound(
        [0.7, 0.5], mu=0.2, rho=1.0, gamma_enc=4.0
    )
    assert product == pytest.approx(0.6106033263566011, abs=1e-12)
    assert collapsed == pytest.approx(0.5267085370954886, abs=1e-12)
    assert collapsed <= product
    hi_c, hi_p = fediq.separability_prob_bound([0.7, 0.5], mu=0.2, rho=1.0, gamma_enc=1e18)
    assert hi_c == pytest.approx(1.0, abs=1e-12)
    assert hi_p == pytest.approx(1.0, abs=1e-12)


def test_gradient_variance_bound_limit():
    simp = fediq.gradient_variance_bound_simplified(3, radius=2.0, moment_bound=5.0)
    assert simp == 9 * 4.0 * 5.0
    full = fediq.gradient_variance_bound(
        3, radius=2.0, moment_bound=5.0, snr=1e9, reg=0.0
    )
    assert full == pytest.approx(simp, rel=1e-6)


def test_run_resources(tmp_path, monkeypatch):
    monkeypatch.setenv("FEDIQ_OUT_ROOT", str(tmp_path))
    assert fediq.out_root() == str(tmp_path)
    fediq.run("resources", ["run.out_dir=res"])
    assert (tmp_path / "res" / "resources.csv").exists()
    assert (tmp_path / "res" / "manifest_resources.json").exists()
    with pytest.raises(fediq.ConfigError):
        fediq.run("resources", ["nonsense.key=1"])
