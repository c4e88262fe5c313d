import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from squirrels import DensityMatrix, SidebandWindow


def random_density(window: SidebandWindow, rng: np.random.Generator,
                   rank: int | None = None) -> DensityMatrix:
    """Random valid state on the window's support lattice (Ginibre)."""
    supp = window.support_indices()
    m = len(supp)
    r = rank or m
    g = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    block = g @ g.conj().T
    block /= np.real(np.trace(block))
    ent = np.zeros((window.size, window.size), dtype=complex)
    pos = [window.position(n) for n in supp]
    ent[np.ix_(pos, pos)] = block
    return DensityMatrix(window, ent)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
