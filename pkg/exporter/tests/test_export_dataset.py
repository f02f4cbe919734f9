import json

import numpy as np
from PIL import Image

from oodnorm_exporter.export_dataset import DatasetPlan, export_dataset


def test_synthetic_counts_and_labels(dataset_dir):
    doc = json.loads((dataset_dir / "manifest.json").read_text())
    assert len(doc["id_train"]) == 400
    assert len(doc["id_test"]) == 120
    assert len(doc["ood_sets"]["noise"]) == 120
    assert len(doc["labels"]["id_train"]) == 400
    assert set(doc["labels"]["id_train"]) == {0, 1}
    assert doc["preprocessing"]["size"] == [32, 32]


def test_noise_ood_stays_in_normalized_range(dataset_dir):
    doc = json.loads((dataset_dir / "manifest.json").read_text())
    mean, std = doc["preprocessing"]["mean"], doc["preprocessing"]["std"]
    lows = [(0.0 - m) / s for m, s in zip(mean, std)]
    highs = [(1.0 - m) / s for m, s in zip(mean, std)]
    sample = np.load(dataset_dir / doc["ood_sets"]["noise"][0])
    assert sample.shape == (3, 32, 32)
    for c in range(3):
        assert sample[c].min() >= lows[c] - 1e-6
        assert sample[c].max() <= highs[c] + 1e-6


def test_folder_export_normalization_per_pixel(tmp_path):
    rng = np.random.default_rng(3)
    pixels = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    for split in ("train", "test"):
        folder = tmp_path / split
        folder.mkdir()
        Image.fromarray(pixels).save(folder / "img.png")

    out = tmp_path / "export"
    report = export_dataset(
        DatasetPlan(
            out_dir=str(out),
            size=8,
            mean=(0.4, 0.5, 0.6),
            std=(0.2, 0.25, 0.3),
            id_train_dir=str(tmp_path / "train"),
            id_test_dir=str(tmp_path / "test"),
        )
    )
    assert report["counts"]["id_train"] == 1
    exported = np.load(out / "id_train" / "img_0000.npy")
    want = pixels.astype(np.float32).transpose(2, 0, 1) / 255.0
    want = (want - np.array([0.4, 0.5, 0.6], np.float32)[:, None, None]) / np.array(
        [0.2, 0.25, 0.3], np.float32
    )[:, None, None]
    np.testing.assert_allclose(exported, want, atol=1e-6)


def test_undecodable_images_skipped_with_count(tmp_path):
    folder = tmp_path / "imgs"
    folder.mkdir()
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(folder / "ok.png")
    (folder / "broken.png").write_bytes(b"not an image at all")

    out = tmp_path / "export"
    report = export_dataset(
        DatasetPlan(
            out_dir=str(out),
            size=4,
            id_train_dir=str(folder),
            id_test_dir=str(folder),
        )
    )
    assert report["counts"]["id_train"] == 1
    assert report["skipped"] == 2  # one bad file per consuming split


def test_export_is_deterministic(tmp_path):
    plans = [
        DatasetPlan(out_dir=str(tmp_path / d), synthetic_train=6, synthetic_test=2,
                    noise_ood=2, seed=11)
        for d in ("a", "b")
    ]
    for plan in plans:
        export_dataset(plan)
    for rel in ("manifest.json", "id_train/img_0000.npy", "ood_noise/img_0001.npy"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
