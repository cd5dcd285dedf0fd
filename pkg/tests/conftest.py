import os

import hypothesis
import numpy as np
import pytest

from wesbench.config import ExperimentConfig
from wesbench.curvegen import DistributionKind, default_label_curve
from wesbench.network import TrainConfig

np.seterr(all="warn")

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def small_curve():
    """800-sample unimodal label curve."""
    return default_label_curve(DistributionKind.UNIMODAL, n_points=200, pair_repeats=2)


@pytest.fixture
def tiny_train():
    return TrainConfig(learning_rate=0.01, batch_size=64, epochs=2, holdout_fraction=0.2)


@pytest.fixture
def tiny_config(tmp_path, tiny_train):
    """A grid small enough to train in a couple of seconds."""
    return ExperimentConfig(
        distributions=(DistributionKind.UNIMODAL,),
        sigmas=(0.01, 0.05),
        betas=(2.0, 8.0),
        losses=("mse", "huber:0.5", "wes"),
        ensemble_size=2,
        output_dir=tmp_path / "results",
        n_points=200,
        pair_repeats=2,
        n_terms=20,
        pdf_bins=20,
        poly_degree=6,
        train=tiny_train,
    )
