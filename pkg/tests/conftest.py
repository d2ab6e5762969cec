from fractions import Fraction
from pathlib import Path

import pytest

from windtree import pipeline
from windtree.sim import WindTreeTable, windtree_cover
from windtree.surface import homology

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def table():
    return WindTreeTable(Fraction(1, 2), Fraction(1, 2))


@pytest.fixture(scope="session")
def surface(table):
    return table.surface


@pytest.fixture(scope="session")
def lat(surface):
    return homology(surface)


@pytest.fixture(scope="session")
def cover(table):
    return windtree_cover(table)


@pytest.fixture(scope="session")
def desk():
    bundle, _ = pipeline.windtree_representations()
    return bundle


@pytest.fixture(scope="session")
def kernels(desk):
    """Per-subspace kernel samples and the joint kernel at the desk depth."""
    return pipeline.kernel_samples(desk.reps, pipeline.DESK_DEPTH)
