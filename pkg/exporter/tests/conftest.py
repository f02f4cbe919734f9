import time

import pytest

from oodnorm_exporter.export_dataset import DatasetPlan, export_dataset
from oodnorm_exporter.export_model import ExportPlan, export_model
from oodnorm_exporter.train import train_demo


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    export_dataset(
        DatasetPlan(
            out_dir=str(out),
            synthetic_train=400,
            synthetic_test=120,
            noise_ood=120,
            seed=5,
        )
    )
    return out


@pytest.fixture(scope="session")
def trained_checkpoint(dataset_dir, tmp_path_factory):
    """Checkpoint plus its training report and wall-clock seconds."""
    path = tmp_path_factory.mktemp("ckpt") / "demo.pt"
    start = time.perf_counter()
    report = train_demo(dataset_dir / "manifest.json", path, epochs=3, seed=5)
    elapsed = time.perf_counter() - start
    return path, report, elapsed


@pytest.fixture(scope="session")
def exported_model(trained_checkpoint, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    report = export_model(ExportPlan(checkpoint=str(trained_checkpoint[0]), out_dir=str(out)))
    return out, report
