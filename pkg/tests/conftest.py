import numpy as np
import pytest

from seqmeas import DensityMatrix, MeasurementStage, Pointer
from seqmeas import spin


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def plus():
    return spin.plus_state()


@pytest.fixture
def sz_stage():
    def make(sigma: float) -> MeasurementStage:
        return MeasurementStage(spin.s_z(), Pointer(sigma), label="z")

    return make


@pytest.fixture
def sx_stage():
    def make(sigma: float) -> MeasurementStage:
        return MeasurementStage(spin.s_x(), Pointer(sigma), label="x")

    return make


@pytest.fixture
def up():
    return DensityMatrix.pure(spin.KET_UP)
