"""Marker-chain vessel labeling and occlusion detection.

Each named vessel carries an ordered chain of markers laid along its expected
course. A vessel counts as present when enough markers sit close to the
segmentation mask; a steadily increasing marker-to-mask distance along the
chain indicates an interrupted (occluded) vessel and is caught by a linear
slope criterion (MCA chains only, since other vessels curve too much for the
linear model).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .volume import BinaryMask

VESSEL_NAMES = ("ICA_L", "ICA_R", "MCA_L", "MCA_R", "ACA", "PCA_L", "PCA_R")

REASON_ENOUGH = "enough_markers"
REASON_TOO_FEW = "too_few_markers"
REASON_SLOPE = "slope_exceeded"

DEFAULT_SLOPE_THRESHOLD = 2.1


@dataclass
class Marker:
    position: tuple[float, float, float]  # mm, (z, y, x)
    max_allowed_distance: float  # mm


@dataclass
class MarkerChain:
    """Ordered markers (proximal to distal) along one named vessel."""

    vessel: str
    markers: list[Marker]
    required_present_count: int
    slope_criterion_enabled: bool = False
    slope_threshold: float = DEFAULT_SLOPE_THRESHOLD

    def __post_init__(self):
        if self.vessel not in VESSEL_NAMES:
            raise ValidationError(f"vessel: unknown name {self.vessel!r}, expected one of {VESSEL_NAMES}")
        if self.required_present_count > len(self.markers):
            raise ValidationError("required_present_count: exceeds marker count")
        if any(m.max_allowed_distance <= 0 for m in self.markers):
            raise ValidationError("max_allowed_distance: must be > 0 for every marker")


@dataclass
class VesselVerdict:
    vessel: str
    present: bool
    distances: list[float]
    reason: str
    final_marker_position: tuple[float, float, float] | None = None
    slope: float | None = None


@dataclass
class LvoVerdict:
    lvo_positive: bool
    implicated: set[str] = field(default_factory=set)


def _mask_point_tree(mask: BinaryMask) -> cKDTree | None:
    idx = np.argwhere(mask.data)
    if idx.size == 0:
        return None
    return cKDTree(mask.index_to_mm(idx))


def marker_distances(chain: MarkerChain, mask: BinaryMask, tree: cKDTree | None = None) -> np.ndarray:
    """Shortest distance (mm) from each marker to a set voxel center.

    An empty mask yields +inf for every marker. A prebuilt cKDTree over the
    mask's voxel centers can be passed to amortize the cost across chains.
    """
    if tree is None:
        tree = _mask_point_tree(mask)
    if tree is None:
        return np.full(len(chain.markers), np.inf)
    pts = np.array([m.position for m in chain.markers], float)
    dists, _ = tree.query(pts)
    return np.asarray(dists, float)


def fit_distance_slope(distances) -> float:
    """Least-squares slope of distance vs. 0-based marker index.

    Markers with non-finite distance are excluded but keep their index.
    """
    d = np.asarray(distances, float)
    finite = np.isfinite(d)
    if finite.sum() < 2:
        raise ValidationError("insufficient markers: need at least 2 finite distances")
    idx = np.flatnonzero(finite).astype(float)
    return float(np.polyfit(idx, d[finite], 1)[0])


def judge_vessel(chain: MarkerChain, mask: BinaryMask, tree: cKDTree | None = None) -> VesselVerdict:
    """Decide presence of one vessel from its marker chain and the mask."""
    if tree is None:
        tree = _mask_point_tree(mask)
    d = marker_distances(chain, mask, tree)
    close = np.array([di <= m.max_allowed_distance for di, m in zip(d, chain.markers)])
    count = int(close.sum())

    slope = None
    if chain.slope_criterion_enabled and np.isfinite(d).sum() >= 2:
        slope = fit_distance_slope(d)

    if count < chain.required_present_count:
        present, reason = False, REASON_TOO_FEW
    elif slope is not None and slope > chain.slope_threshold:
        present, reason = False, REASON_SLOPE
    else:
        present, reason = True, REASON_ENOUGH

    final_pos = None
    if present and tree is not None:
        best = int(np.argmin(d))
        _, vi = tree.query(np.asarray(chain.markers[best].position, float))
        final_pos = tuple(float(c) for c in tree.data[int(vi)])

    return VesselVerdict(
        vessel=chain.vessel,
        present=present,
        distances=[float(x) for x in d],
        reason=reason,
        final_marker_position=final_pos,
        slope=slope,
    )


def judge_all(chains: list[MarkerChain], mask: BinaryMask) -> list[VesselVerdict]:
    """Judge every chain against the same mask, sharing one point tree."""
    tree = _mask_point_tree(mask)
    return [judge_vessel(c, mask, tree) for c in chains]


DEFAULT_LVO_VESSELS = ("ICA_L", "ICA_R", "MCA_L", "MCA_R")


def classify_lvo(verdicts: list[VesselVerdict], lvo_vessels=DEFAULT_LVO_VESSELS) -> LvoVerdict:
    """Patient-level verdict: positive when any large vessel is judged absent."""
    have = {v.vessel for v in verdicts}
    missing = [name for name in lvo_vessels if name not in have]
    if missing:
        raise ValidationError(f"verdicts: missing vessel(s) {missing}")
    implicated = {v.vessel for v in verdicts if v.vessel in lvo_vessels and not v.present}
    return LvoVerdict(lvo_positive=bool(implicated), implicated=implicated)


# ---------------------------------------------------------------- JSON I/O

def chain_to_dict(chain: MarkerChain) -> dict:
    return {
        "vessel": chain.vessel,
        "markers": [
            {"pos": list(m.position), "max_dist": m.max_allowed_distance} for m in chain.markers
        ],
        "required_present_count": chain.required_present_count,
        "slope_enabled": chain.slope_criterion_enabled,
        "slope_threshold": chain.slope_threshold,
    }


def chain_from_dict(d: dict) -> MarkerChain:
    try:
        markers = [Marker(tuple(m["pos"]), float(m["max_dist"])) for m in d["markers"]]
        return MarkerChain(
            vessel=d["vessel"],
            markers=markers,
            required_present_count=int(d["required_present_count"]),
            slope_criterion_enabled=bool(d.get("slope_enabled", False)),
            slope_threshold=float(d.get("slope_threshold", DEFAULT_SLOPE_THRESHOLD)),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"marker chain JSON: missing or malformed field ({e})")


def save_chains(chains: list[MarkerChain], path) -> None:
    with open(path, "w") as fh:
        json.dump([chain_to_dict(c) for c in chains], fh, indent=1)


def load_chains(path) -> list[MarkerChain]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValidationError("marker chain JSON: expected a list of chains")
    return [chain_from_dict(d) for d in data]


def verdict_to_dict(v: VesselVerdict) -> dict:
    return {
        "vessel": v.vessel,
        "present": v.present,
        "reason": v.reason,
        "distances": [None if math.isinf(d) else d for d in v.distances],
        "final_marker_position": list(v.final_marker_position) if v.final_marker_position else None,
        "slope": v.slope,
    }
