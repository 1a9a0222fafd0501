import pytest
from util_learning import build_dataset

from mmlearning import load_pairs


@pytest.fixture(scope="session")
def gan_pairs(tmp_path_factory):
    """8 paired samples, two phantom classes, via the imaging CLI."""
    root = tmp_path_factory.mktemp("gan_data")
    out = build_dataset(
        root,
        class_axes=["0.22 0.22 0.22", "0.12 0.28 0.42"],
        count=8,
        seed=0,
    )
    return load_pairs(out)


@pytest.fixture(scope="session")
def classifier_pairs(tmp_path_factory):
    """45 samples over three separable phantom shapes."""
    root = tmp_path_factory.mktemp("cls_data")
    out = build_dataset(
        root,
        class_axes=["0.22 0.22 0.22", "0.10 0.30 0.45", "0.28 0.40 0.12"],
        count=45,
        seed=1,
    )
    return load_pairs(out)
