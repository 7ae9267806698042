import numpy as np
import pytest

from xbeam import TransverseGrid, make_context


@pytest.fixture
def photon_ctx():
    return make_context(mass=0.0, energy=1.0)


@pytest.fixture
def massive_ctx():
    # 3-4-5 triple: carrier k = 4
    return make_context(mass=3.0, energy=5.0)


@pytest.fixture
def magnetic_ctx():
    # eB = 2, k = 4, spin up
    return make_context(mass=3.0, energy=5.0, charge=1.0, b_field=2.0,
                        spin_tag="spin-1/2", s_z=+0.5)


@pytest.fixture
def landau_grid(magnetic_ctx):
    # 16 magnetic waists across, well resolved for modes up to n, |l| ~ 4
    w = 2.0 / np.sqrt(abs(magnetic_ctx.eb))
    n = 128
    return TransverseGrid(nx=n, ny=n, dx=16 * w / n, dy=16 * w / n)
