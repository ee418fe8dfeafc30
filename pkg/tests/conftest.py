import numpy as np
import pytest

from xpci import ComplexField, Grid2D


@pytest.fixture
def grid64():
    return Grid2D(64, 64, 1e-6, 1e-6)


@pytest.fixture
def grid48x32():
    return Grid2D(48, 32, 1.5e-6, 2e-6)


def random_field(grid: Grid2D, wavelength: float, seed: int = 0) -> ComplexField:
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return ComplexField(grid, values, wavelength)


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
