import math

import numpy as np
import pytest
from scipy import ndimage

from vesseltree import labeling, phantom
from vesseltree.errors import ValidationError
from vesseltree.labeling import (
    Marker,
    MarkerChain,
    VesselVerdict,
    classify_lvo,
    fit_distance_slope,
    judge_all,
    judge_vessel,
    marker_distances,
)
from vesseltree.volume import BinaryMask


def chain_of(positions, max_dist=4.0, vessel="MCA_L", required=None, slope=False, threshold=2.1):
    markers = [Marker(tuple(p), max_dist) for p in positions]
    return MarkerChain(
        vessel=vessel,
        markers=markers,
        required_present_count=required if required is not None else len(markers),
        slope_criterion_enabled=slope,
        slope_threshold=threshold,
    )


def brute_distances(chain, mask):
    idx = np.argwhere(mask.data)
    pts = mask.index_to_mm(idx)
    out = []
    for m in chain.markers:
        d = np.sqrt(((pts - np.asarray(m.position)) ** 2).sum(axis=1))
        out.append(d.min())
    return np.array(out)


# --------------------------------------------------------------- distances

def test_marker_on_voxel_center_distance_zero():
    m = BinaryMask(np.zeros((8, 8, 8), bool), (0.5, 1.0, 2.0))
    m.data[3, 4, 5] = True
    chain = chain_of([m.index_to_mm([3, 4, 5])])
    assert marker_distances(chain, m)[0] == 0.0


def test_marker_five_mm_from_plane_face():
    m = BinaryMask(np.zeros((16, 16, 16), bool))
    m.data[:4] = True  # slab with top face voxels at z = 3
    marker = (8.0, 8.0, 8.0)  # 5 mm above the nearest set voxel center
    d = marker_distances(chain_of([marker]), m)[0]
    assert d == pytest.approx(5.0, abs=math.sqrt(3) / 2)


def test_distances_empty_mask_all_inf():
    m = BinaryMask(np.zeros((8, 8, 8), bool))
    d = marker_distances(chain_of([(1, 1, 1), (2, 2, 2)]), m)
    assert np.all(np.isinf(d))


def test_distances_match_bruteforce_exactly():
    rng = np.random.default_rng(17)
    for trial in range(10):
        mask = BinaryMask(rng.random((64, 64, 64)) < 0.005, (0.7, 1.0, 1.3))
        if mask.count() == 0:
            continue
        markers = rng.uniform(-5, 70, (12, 3))
        chain = chain_of(markers)
        fast = marker_distances(chain, mask)
        slow = brute_distances(chain, mask)
        assert np.array_equal(fast, slow)


def test_distances_nonincreasing_under_dilation():
    rng = np.random.default_rng(23)
    mask = BinaryMask(rng.random((24, 24, 24)) < 0.01)
    bigger = BinaryMask(ndimage.binary_dilation(mask.data, np.ones((3, 3, 3))))
    chain = chain_of(rng.uniform(0, 24, (10, 3)))
    d1 = marker_distances(chain, mask)
    d2 = marker_distances(chain, bigger)
    assert np.all(d2 <= d1 + 1e-12)
    close1 = sum(d <= m.max_allowed_distance for d, m in zip(d1, chain.markers))
    close2 = sum(d <= m.max_allowed_distance for d, m in zip(d2, chain.markers))
    assert close2 >= close1


# ------------------------------------------------------------------- slope

def test_slope_linear_sequence():
    distances = [0.0, 2.45, 4.9, 7.35, 9.8, 12.25]
    assert fit_distance_slope(distances) == pytest.approx(2.45, abs=1e-6)


def test_slope_constant_zero():
    assert fit_distance_slope([3.3] * 8) == pytest.approx(0.0, abs=1e-12)


def test_slope_unit_line():
    assert fit_distance_slope([1, 2, 3, 4]) == pytest.approx(1.0)


def test_slope_shift_invariance_and_reversal():
    rng = np.random.default_rng(5)
    d = rng.uniform(0, 10, 9)
    s = fit_distance_slope(d)
    assert fit_distance_slope(d + 7.7) == pytest.approx(s)
    assert fit_distance_slope(d[::-1]) == pytest.approx(-s)


def test_slope_excludes_infinite_keeping_indices():
    d = [0.0, math.inf, 2.0, math.inf, 4.0]
    assert fit_distance_slope(d) == pytest.approx(1.0)


def test_slope_insufficient_markers():
    with pytest.raises(ValidationError, match="insufficient markers"):
        fit_distance_slope([math.inf, 3.0, math.inf])


# ----------------------------------------------------------------- verdict

def _tube_mask(length=80.0, radius=2.0, occlude_from=None):
    segs = [phantom.Segment((4, 12, 12), (4 + length, 12, 12), radius, "MCA_L")]
    occ = []
    if occlude_from is not None:
        occ = [phantom.Occlusion("MCA_L", occlude_from, 1.0)]
    spec = phantom.PhantomSpec(tree=segs, dims=(96, 24, 24), occlusions=occ)
    _, truth = phantom.render_phantom(spec, 0)
    return truth.mask


def _axis_chain(length=80.0, n=12, max_dist=6.0, required=8, slope=True):
    zs = np.linspace(4, 4 + length, n)
    return chain_of(
        [(z, 12, 12) for z in zs], max_dist=max_dist, required=required, slope=slope
    )


def test_intact_vessel_present_with_flat_slope():
    verdict = judge_vessel(_axis_chain(), _tube_mask())
    assert verdict.present and verdict.reason == labeling.REASON_ENOUGH
    assert abs(verdict.slope) < 0.5
    assert verdict.final_marker_position is not None


def test_occluded_vessel_absent_via_slope():
    # distal erasure placed so that just enough markers stay in range while
    # the distance ramp over the erased span exceeds the threshold
    verdict = judge_vessel(_axis_chain(), _tube_mask(occlude_from=0.59))
    assert not verdict.present
    assert verdict.reason == labeling.REASON_SLOPE
    assert verdict.slope > 2.1
    # the far-marker profile itself rises linearly
    tail = np.array(verdict.distances[-4:])
    steps = np.diff(tail)
    assert np.all(steps > 0)
    assert np.allclose(steps, steps.mean(), rtol=0.15)


def test_fully_missing_vessel_absent_via_count():
    verdict = judge_vessel(_axis_chain(), _tube_mask(occlude_from=0.05))
    assert not verdict.present
    assert verdict.reason == labeling.REASON_TOO_FEW


def test_verdict_slope_only_when_enabled():
    verdict = judge_vessel(_axis_chain(slope=False), _tube_mask())
    assert verdict.slope is None and verdict.present


def test_judge_all_on_cow_ground_truth():
    _, truth, chains = phantom.standard_cow_phantom(3, noise_sigma=0.0)
    verdicts = judge_all(chains, truth.mask)
    assert {v.vessel for v in verdicts} == set(labeling.VESSEL_NAMES)
    assert all(v.present for v in verdicts)


# --------------------------------------------------------------------- lvo

def _verdict(vessel, present):
    return VesselVerdict(vessel=vessel, present=present, distances=[], reason="x")


def test_lvo_negative_when_all_present():
    verdicts = [_verdict(v, True) for v in labeling.VESSEL_NAMES]
    lvo = classify_lvo(verdicts)
    assert not lvo.lvo_positive and lvo.implicated == set()


def test_lvo_positive_on_mca():
    verdicts = [_verdict(v, v != "MCA_L") for v in labeling.VESSEL_NAMES]
    lvo = classify_lvo(verdicts)
    assert lvo.lvo_positive and lvo.implicated == {"MCA_L"}


def test_lvo_ignores_pca_by_default():
    verdicts = [_verdict(v, v != "PCA_L") for v in labeling.VESSEL_NAMES]
    assert not classify_lvo(verdicts).lvo_positive
    widened = classify_lvo(verdicts, lvo_vessels=labeling.VESSEL_NAMES)
    assert widened.lvo_positive and widened.implicated == {"PCA_L"}


def test_lvo_missing_verdict_errors():
    verdicts = [_verdict("MCA_L", True)]
    with pytest.raises(ValidationError, match="missing vessel"):
        classify_lvo(verdicts)


# ------------------------------------------------------------------ chains

def test_chain_validation():
    with pytest.raises(ValidationError, match="vessel"):
        chain_of([(0, 0, 0)], vessel="XYZ")
    with pytest.raises(ValidationError, match="required_present_count"):
        MarkerChain("ACA", [Marker((0, 0, 0), 1.0)], required_present_count=5)
    with pytest.raises(ValidationError, match="max_allowed_distance"):
        MarkerChain("ACA", [Marker((0, 0, 0), 0.0)], required_present_count=1)


def test_chain_json_roundtrip(tmp_path):
    chains = phantom.cow_marker_chains()
    path = tmp_path / "chains.json"
    labeling.save_chains(chains, path)
    back = labeling.load_chains(path)
    assert [c.vessel for c in back] == [c.vessel for c in chains]
    assert back[0].markers[0].position == pytest.approx(chains[0].markers[0].position)
    assert all(
        b.slope_criterion_enabled == c.slope_criterion_enabled for b, c in zip(back, chains)
    )


def test_chain_json_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('[{"vessel": "ACA"}]')
    with pytest.raises(ValidationError, match="marker chain JSON"):
        labeling.load_chains(path)
