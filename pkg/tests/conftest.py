import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsmetric.model import load_model, model_from_components

MINKOWSKI_DOC = """
[metric]
g = [
  ["1", "0", "0", "0"],
  ["0", "-1", "0", "0"],
  ["0", "0", "-1", "0"],
  ["0", "0", "0", "-1"],
]
[reference_point]
point = [0.0, 0.0, 0.0, 0.0]
"""


@pytest.fixture(scope="session")
def minkowski():
    return load_model(MINKOWSKI_DOC, name="minkowski")


@pytest.fixture(scope="session")
def flrw():
    # spatially flat expanding model with scale factor t
    return model_from_components(
        "flrw",
        [["1", "0", "0", "0"],
         ["0", "-(t^2)", "0", "0"],
         ["0", "0", "-(t^2)", "0"],
         ["0", "0", "0", "-(t^2)"]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
