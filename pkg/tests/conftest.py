import pytest

from repcount.recognizer import TrainConfig, calibrate_reject, train
from repcount.synthetic import make_labeled_dataset

CLASS_NAMES = ["push-up", "pull-up", "squat"]


@pytest.fixture(scope="session")
def trained_model():
    """One shared recognizer: 6000 synthetic frames, 4800 train / 1200 cal."""
    x, y = make_labeled_dataset(CLASS_NAMES, 2000, seed=0)
    model, history = train(x[:4800], y[:4800], CLASS_NAMES, TrainConfig(seed=0))
    thresholds = calibrate_reject(model, x[4800:])
    return model, thresholds, history
