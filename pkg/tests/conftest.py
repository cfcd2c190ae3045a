import numpy as np
import pytest

from vesseltree import phantom, pipeline


@pytest.fixture(scope="session")
def cow_run():
    """Intact canonical phantom, segmented once and shared across tests."""
    vol, truth, chains = phantom.standard_cow_phantom(11, noise_sigma=10.0)
    atlas_prob = phantom.atlas_probability(truth, vol.dims, vol.spacing)
    run = pipeline.run_pipeline(vol, atlas_prob)
    return vol, truth, chains, run


@pytest.fixture(scope="session")
def cow_split_run():
    """Phantom with an interior occlusion that detaches a distal island."""
    occ = [phantom.Occlusion("MCA_L", 0.3, 0.7)]
    vol, truth, chains = phantom.standard_cow_phantom(12, noise_sigma=10.0, occlusions=occ)
    atlas_prob = phantom.atlas_probability(truth, vol.dims, vol.spacing)
    run = pipeline.run_pipeline(vol, atlas_prob)
    return vol, truth, chains, run


def straight_tube_spec(radius=2.0, dims=(64, 32, 32), along="z", noise=0.0):
    z, y, x = dims
    if along == "z":
        seg = phantom.Segment((0, y // 2, x // 2), (z - 1, y // 2, x // 2), radius, "ICA_R")
    else:
        seg = phantom.Segment((z // 2, y // 2, 2), (z // 2, y // 2, x - 3), radius, "ICA_R")
    return phantom.PhantomSpec(tree=[seg], dims=dims, noise_sigma=noise)


def dice(a: np.ndarray, b: np.ndarray) -> float:
    return 2.0 * np.logical_and(a, b).sum() / max(a.sum() + b.sum(), 1)
