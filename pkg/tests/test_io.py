import numpy as np
import pytest

from mrfcs import io
from mrfcs.dictionary import build_dictionary, build_grid
from mrfcs.kspace import acquire, render_ground_truth
from mrfcs.metric import MahalanobisMetric
from mrfcs.phantom import ZERO_NOISE, build_parameter_maps, synth_label_map
from mrfcs.sampling import draw_mask_sequence
from mrfcs.sequence import generate_sequence


def test_map_round_trip_float(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(9, 7))
    path = tmp_path / "m.mrfm"
    io.write_map(path, arr)
    np.testing.assert_array_equal(io.read_map(path), arr)


def test_map_round_trip_int(tmp_path):
    arr = np.arange(12, dtype=np.int32).reshape(3, 4)
    path = tmp_path / "m.mrfm"
    io.write_map(path, arr)
    back = io.read_map(path)
    assert back.dtype == np.dtype("<i4")
    np.testing.assert_array_equal(back, arr)


def test_label_map_round_trip(tmp_path):
    labels = synth_label_map(16, 16, seed=7)
    path = tmp_path / "labels.mrfm"
    io.write_label_map(path, labels)
    back = io.load_label_map(path)
    np.testing.assert_array_equal(back.labels, labels.labels)


def test_map_bad_magic(tmp_path):
    path = tmp_path / "bad.mrfm"
    io.write_map(path, np.zeros((2, 2)))
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(io.FormatError):
        io.read_map(path)


def test_map_truncated(tmp_path):
    path = tmp_path / "trunc.mrfm"
    io.write_map(path, np.zeros((4, 4)))
    path.write_bytes(path.read_bytes()[:-9])
    with pytest.raises(io.FormatError):
        io.read_map(path)


def test_label_outside_table_rejected(tmp_path):
    path = tmp_path / "labels.mrfm"
    io.write_map(path, np.full((4, 4), 99, dtype=np.int32))
    with pytest.raises(ValueError):
        io.load_label_map(path)


def test_label_map_requires_integer_payload(tmp_path):
    path = tmp_path / "labels.mrfm"
    io.write_map(path, np.ones((4, 4)))
    with pytest.raises(io.FormatError):
        io.load_label_map(path)


def test_parameter_maps_round_trip(tmp_path):
    labels = synth_label_map(16, 16, seed=3)
    maps = build_parameter_maps(labels, seed=5)
    prefix = str(tmp_path / "truth")
    io.write_parameter_maps(prefix, maps)
    back = io.read_parameter_maps(prefix)
    for name, arr in maps.as_dict().items():
        np.testing.assert_array_equal(back.as_dict()[name], arr)


def test_dictionary_round_trip(tmp_path):
    seq = generate_sequence(24, eta_sigma=0.0, seed=0)
    d = build_dictionary(build_grid("custom", t1_values=[400.0, 900.0],
                                    t2_values=[60.0, 120.0], b0_values=[-10.0, 20.0]), seq)
    path = tmp_path / "d.mrfd"
    io.write_dictionary(path, d)
    back = io.read_dictionary(path)
    np.testing.assert_array_equal(back.atoms, d.atoms)
    np.testing.assert_array_equal(back.params, d.params)
    np.testing.assert_array_equal(back.norms, d.norms)


def test_dictionary_bad_magic(tmp_path):
    path = tmp_path / "d.mrfd"
    path.write_bytes(b"NOPE" + b"\0" * 32)
    with pytest.raises(io.FormatError):
        io.read_dictionary(path)


def test_metric_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    metric = MahalanobisMetric(w=rng.normal(size=(12, 12)), ridge=3.5e-4)
    path = tmp_path / "w.mrfa"
    io.write_metric(path, metric)
    back = io.read_metric(path)
    np.testing.assert_array_equal(back.w, metric.w)
    assert back.ridge == metric.ridge


def test_measurements_round_trip(tmp_path):
    seq = generate_sequence(10, eta_sigma=0.0, seed=0)
    labels = synth_label_map(16, 16, seed=2)
    maps = build_parameter_maps(labels, noise=ZERO_NOISE, seed=0)
    truth = render_ground_truth(maps, seq)
    masks = draw_mask_sequence(16, 3, 1, 10, power=2.0, seed=4)
    meas = acquire(truth, masks, noise_sigma=0.1, seed=8)
    path = tmp_path / "y.mrfy"
    io.write_measurements(path, meas, n_per_frame=3, c=1)
    back = io.read_measurements(path)
    assert back.rows == 16 and back.cols == 16
    for a, b in zip(meas.y, back.y):
        np.testing.assert_array_equal(a, b)
    for fa, fb in zip(meas.masks.frames, back.masks.frames):
        np.testing.assert_array_equal(fa, fb)


def test_measurements_truncated(tmp_path):
    seq = generate_sequence(4, eta_sigma=0.0, seed=0)
    labels = synth_label_map(8, 8, seed=2)
    maps = build_parameter_maps(labels, noise=ZERO_NOISE, seed=0)
    truth = render_ground_truth(maps, seq)
    masks = draw_mask_sequence(8, 2, 1, 4, power=2.0, seed=4)
    meas = acquire(truth, masks, noise_sigma=0.0, seed=0)
    path = tmp_path / "y.mrfy"
    io.write_measurements(path, meas)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(io.FormatError):
        io.read_measurements(path)


def test_pgm_round_trip_quantized(tmp_path):
    rng = np.random.default_rng(2)
    arr = rng.uniform(0, 1000, size=(12, 17))
    path = tmp_path / "map.pgm"
    io.export_pgm(arr, path)
    quant = io.read_pgm(path)
    assert quant.shape == (12, 17)
    lo, hi = arr.min(), arr.max()
    expected = np.round((arr - lo) / (hi - lo) * 65535.0).astype(np.uint16)
    np.testing.assert_array_equal(quant, expected)


def test_pgm_constant_map(tmp_path):
    path = tmp_path / "flat.pgm"
    io.export_pgm(np.full((8, 8), 3.0), path)
    np.testing.assert_array_equal(io.read_pgm(path), np.zeros((8, 8), dtype=np.uint16))


def test_pgm_shared_anchor_shared_scale(tmp_path):
    base = np.zeros((8, 8))
    base[2:5, 2:5] = 100.0
    half = base / 2.0
    p1 = tmp_path / "a.pgm"
    p2 = tmp_path / "b.pgm"
    io.export_pgm(base, p1, anchor=(0.0, 100.0))
    io.export_pgm(half, p2, anchor=(0.0, 100.0))
    a, b = io.read_pgm(p1), io.read_pgm(p2)
    assert a.max() == 65535
    assert b.max() == 32768 or b.max() == 32767


def test_pgm_rejects_nonfinite(tmp_path):
    arr = np.zeros((4, 4))
    arr[0, 0] = np.nan
    with pytest.raises(ValueError):
        io.export_pgm(arr, tmp_path / "x.pgm")


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "manifest.txt"
    io.write_manifest(path, {"stage": "acquire", "seed": 7, "sigma": 0.25})
    back = io.read_manifest(path)
    assert back["stage"] == "acquire"
    assert back["seed"] == "7"
    assert back["sigma"] == "0.25"
