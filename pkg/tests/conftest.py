import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")


def rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def asymmetric_two_port():
    """S-matrix of a small two-port with no mirror symmetry: an L-shaped
    plate over a ground plate, ports at unrelated corners, a dielectric
    block off to one side.  Exchange symmetry cannot make S21 == S12 here."""
    from planar_em.fdtd import PortSpec, SimConfig, run
    from planar_em.grid import MaterialGrid
    from planar_em.postproc import extract_sparams

    shape = (30, 26, 20)
    nx, ny, nz = shape
    eps = np.ones(shape)
    eps[14:24, 4:12, 8:11] = 4.0
    g = MaterialGrid(
        shape=shape, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0),
        eps_r=eps, sigma=np.zeros(shape),
        pec_x=np.zeros((nx, ny + 1, nz + 1), bool), pec_y=np.zeros((nx + 1, ny, nz + 1), bool),
        pec_z=np.zeros((nx + 1, ny + 1, nz), bool),
        k_ground=0, k_top=nz, pml_cells=7, layer_planes={},
    )
    g.pec_x[8:23, 8:19, 8] = True
    g.pec_y[8:24, 8:18, 8] = True
    g.pec_x[8:23, 8:12, 11] = True
    g.pec_y[8:24, 8:11, 11] = True
    g.pec_x[8:12, 8:19, 11] = True
    g.pec_y[8:13, 8:18, 11] = True
    ports = [PortSpec(1, 9, 17, 8, 11), PortSpec(2, 21, 9, 8, 11)]
    cfg = SimConfig(max_steps=8000, decay_window=200, decay_db=40)
    runs = [run(g, ports, config=cfg, excite=p).records for p in (1, 2)]
    return extract_sparams(*runs, freqs=np.linspace(2e9, 6.5e9, 46))
