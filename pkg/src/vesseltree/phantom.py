"""Synthetic vessel-tree volumes with exact ground truth.

A phantom is described by straight or curved tube segments (mm coordinates,
axis order z,y,x). Rendering assigns vessel_hu to every voxel whose center
lies within the tube radius of a centerline, background_hu elsewhere, then
adds Gaussian noise. Occlusions erase a fractional span of a vessel from
both the volume and the ground-truth mask, so the tube simply ends, the way
a blocked artery loses contrast downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_dilation

from .errors import ValidationError
from .labeling import DEFAULT_SLOPE_THRESHOLD, Marker, MarkerChain
from .volume import BinaryMask, Volume

# Final region growing accepts this HU window; phantoms must render vessels
# inside it to be segmentable with default parameters.
SEGMENTABLE_HU = (130.0, 1500.0)


@dataclass
class Segment:
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    radius: float
    label: str
    control_points: list[tuple[float, float, float]] | None = None

    def polyline(self) -> np.ndarray:
        pts = [self.start] + list(self.control_points or []) + [self.end]
        return np.asarray(pts, float)


@dataclass
class Occlusion:
    label: str
    fraction_start: float
    fraction_end: float


@dataclass
class PhantomSpec:
    tree: list[Segment]
    dims: tuple[int, int, int] = (64, 64, 64)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    background_hu: float = 40.0
    vessel_hu: float = 300.0
    noise_sigma: float = 0.0
    occlusions: list[Occlusion] = field(default_factory=list)

    def validate(self) -> None:
        if len(self.dims) != 3 or any(d < 16 for d in self.dims):
            raise ValidationError("dims: each dimension must be >= 16")
        if any(s <= 0 for s in self.spacing):
            raise ValidationError("spacing: all components must be > 0")
        for i, seg in enumerate(self.tree):
            if seg.radius <= 0:
                raise ValidationError(f"tree[{i}].radius: must be > 0")
        labels = {s.label for s in self.tree}
        for i, occ in enumerate(self.occlusions):
            if not 0.0 <= occ.fraction_start < occ.fraction_end <= 1.0:
                raise ValidationError(
                    f"occlusions[{i}]: need 0 <= fraction_start < fraction_end <= 1"
                )
            if occ.label not in labels:
                raise ValidationError(f"occlusions[{i}].label: {occ.label!r} not in tree")
        lo, hi = SEGMENTABLE_HU
        if not lo <= self.vessel_hu <= hi:
            raise ValidationError(f"vessel_hu: must lie in the growing window [{lo}, {hi}]")


@dataclass
class PhantomGroundTruth:
    mask: BinaryMask
    # Full (pre-occlusion) centerlines: label -> list of sampled polylines (N,3) mm.
    centerlines: dict[str, list[np.ndarray]]
    # Per-point radii matching centerlines.
    radii: dict[str, list[np.ndarray]]
    occluded_labels: set[str]


# ------------------------------------------------------------ polyline math

def _cumlen(pts: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _resample(pts: np.ndarray, step: float) -> np.ndarray:
    cum = _cumlen(pts)
    total = cum[-1]
    if total == 0:
        return pts[:1]
    n = max(2, int(math.ceil(total / step)) + 1)
    s = np.linspace(0.0, total, n)
    return _interp_at(pts, cum, s)


def _interp_at(pts: np.ndarray, cum: np.ndarray, s) -> np.ndarray:
    s = np.atleast_1d(np.clip(s, 0.0, cum[-1]))
    out = np.empty((len(s), 3))
    for axis in range(3):
        out[:, axis] = np.interp(s, cum, pts[:, axis])
    return out


def _slice_polyline(pts: np.ndarray, s0: float, s1: float) -> np.ndarray | None:
    """Sub-polyline covering arc positions [s0, s1]. None if empty."""
    cum = _cumlen(pts)
    s0, s1 = max(0.0, s0), min(cum[-1], s1)
    if s1 - s0 <= 1e-9:
        return None
    inner = pts[(cum > s0) & (cum < s1)]
    a = _interp_at(pts, cum, [s0])
    b = _interp_at(pts, cum, [s1])
    return np.vstack([a, inner, b])


def _kept_intervals(total: float, cuts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Complement of the cut fraction ranges, in arc-length units."""
    events = sorted((max(0.0, fs) * total, min(1.0, fe) * total) for fs, fe in cuts)
    kept, pos = [], 0.0
    for a, b in events:
        if a > pos:
            kept.append((pos, a))
        pos = max(pos, b)
    if pos < total:
        kept.append((pos, total))
    return kept


# ------------------------------------------------------------- rasterizing

def _paint_tube(mask: np.ndarray, spacing, pts: np.ndarray, radius: float) -> None:
    """Set voxels whose center is within `radius` mm of the polyline."""
    sp = np.asarray(spacing)
    dims = np.array(mask.shape)
    lo = np.maximum(np.floor((pts.min(axis=0) - radius) / sp).astype(int), 0)
    hi = np.minimum(np.ceil((pts.max(axis=0) + radius) / sp).astype(int) + 1, dims)
    if np.any(lo >= hi):
        return
    grids = np.meshgrid(
        *(np.arange(lo[a], hi[a]) * sp[a] for a in range(3)), indexing="ij", sparse=False
    )
    vox = np.stack(grids, axis=-1)  # (bz,by,bx,3) voxel centers in mm
    d2 = np.full(vox.shape[:3], np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        diff = vox - a
        if denom < 1e-12:
            d2 = np.minimum(d2, (diff ** 2).sum(axis=-1))
            continue
        t = np.clip((diff @ ab) / denom, 0.0, 1.0)
        closest = a + t[..., None] * ab
        d2 = np.minimum(d2, ((vox - closest) ** 2).sum(axis=-1))
    sub = mask[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
    sub |= d2 <= radius * radius


def _label_chains(spec: PhantomSpec) -> dict[str, list[Segment]]:
    chains: dict[str, list[Segment]] = {}
    for seg in spec.tree:
        chains.setdefault(seg.label, []).append(seg)
    return chains


def render_phantom(spec: PhantomSpec, rng_seed: int) -> tuple[Volume, PhantomGroundTruth]:
    """Rasterize a phantom spec into a noisy volume plus exact ground truth."""
    spec.validate()
    mask = np.zeros(spec.dims, bool)
    sample_step = min(spec.spacing) / 2.0

    centerlines: dict[str, list[np.ndarray]] = {}
    radii: dict[str, list[np.ndarray]] = {}
    occluded = {o.label for o in spec.occlusions}

    for label, segs in _label_chains(spec).items():
        cuts = [(o.fraction_start, o.fraction_end) for o in spec.occlusions if o.label == label]
        lengths = [_cumlen(s.polyline())[-1] for s in segs]
        total = sum(lengths)
        kept = _kept_intervals(total, cuts) if cuts else [(0.0, total)]

        centerlines[label] = []
        radii[label] = []
        offset = 0.0
        for seg, seg_len in zip(segs, lengths):
            pts = seg.polyline()
            sampled = _resample(pts, sample_step)
            centerlines[label].append(sampled)
            radii[label].append(np.full(len(sampled), seg.radius))
            for k0, k1 in kept:
                piece = _slice_polyline(pts, k0 - offset, k1 - offset)
                if piece is not None:
                    _paint_tube(mask, spec.spacing, piece, seg.radius)
            offset += seg_len

    rng = np.random.default_rng(rng_seed)
    data = np.full(spec.dims, spec.background_hu, np.float32)
    data[mask] = spec.vessel_hu
    if spec.noise_sigma > 0:
        data = data + rng.normal(0.0, spec.noise_sigma, spec.dims).astype(np.float32)

    vol = Volume(data.astype(np.float32), spec.spacing)
    truth = PhantomGroundTruth(
        mask=BinaryMask(mask, spec.spacing),
        centerlines=centerlines,
        radii=radii,
        occluded_labels=occluded,
    )
    return vol, truth


def atlas_probability(truth: PhantomGroundTruth, dims, spacing, dilation_vox: int = 2) -> Volume:
    """Probability volume for pipeline gating: the full (pre-occlusion) tube
    union, slightly dilated. Stands in for a registered population atlas, so
    it is built from the intact layout even when the phantom is occluded."""
    mask = np.zeros(dims, bool)
    for label, lines in truth.centerlines.items():
        for pts, rr in zip(lines, truth.radii[label]):
            _paint_tube(mask, spacing, pts, float(rr[0]))
    if dilation_vox > 0:
        mask = binary_dilation(mask, np.ones((2 * dilation_vox + 1,) * 3, bool))
    return Volume(mask.astype(np.float32), spacing)


# ------------------------------------------------- canonical 7-vessel phantom

COW_DIMS = (72, 96, 112)
COW_SPACING = (1.0, 1.0, 1.0)

MARKERS_PER_VESSEL = 12
MARKER_DISTANCE_FACTOR = 2.0  # max allowed marker-to-mask distance, in radii
REQUIRED_MARKER_FRACTION = 0.6

# (start, end, radius). The ACA is a Y: two inflow limbs joining a trunk;
# its marker chain runs along the trunk only.
_COW_SEGMENTS = [
    Segment((4, 52, 36), (44, 52, 36), 2.5, "ICA_R"),
    Segment((4, 52, 76), (44, 52, 76), 2.5, "ICA_L"),
    Segment((44, 52, 36), (52, 38, 4), 2.0, "MCA_R"),
    Segment((44, 52, 76), (52, 38, 108), 2.0, "MCA_L"),
    Segment((44, 52, 36), (50, 56, 56), 1.8, "ACA"),
    Segment((44, 52, 76), (50, 56, 56), 1.8, "ACA"),
    Segment((50, 56, 56), (66, 56, 56), 1.8, "ACA"),
    Segment((44, 52, 36), (50, 16, 44), 1.8, "PCA_R"),
    Segment((44, 52, 76), (50, 16, 68), 1.8, "PCA_L"),
]

# Marker chains follow these courses (label -> segment whose span carries the
# markers). For the ACA only the trunk is marked; the limbs are redundant.
_COW_MARKER_COURSES = {
    "ICA_R": [((4, 52, 36), (44, 52, 36))],
    "ICA_L": [((4, 52, 76), (44, 52, 76))],
    "MCA_R": [((44, 52, 36), (52, 38, 4))],
    "MCA_L": [((44, 52, 76), (52, 38, 108))],
    "ACA": [((50, 56, 56), (66, 56, 56))],
    "PCA_R": [((44, 52, 36), (50, 16, 44))],
    "PCA_L": [((44, 52, 76), (50, 16, 68))],
}
_COW_RADII = {"ICA_R": 2.5, "ICA_L": 2.5, "MCA_R": 2.0, "MCA_L": 2.0,
              "ACA": 1.8, "PCA_R": 1.8, "PCA_L": 1.8}


def cow_spec(noise_sigma: float = 10.0, occlusions: list[Occlusion] | None = None) -> PhantomSpec:
    return PhantomSpec(
        tree=list(_COW_SEGMENTS),
        dims=COW_DIMS,
        spacing=COW_SPACING,
        noise_sigma=noise_sigma,
        occlusions=list(occlusions or []),
    )


def cow_marker_chains() -> list[MarkerChain]:
    chains = []
    for vessel, course in _COW_MARKER_COURSES.items():
        pts = np.asarray([course[0][0], course[0][1]], float)
        cum = _cumlen(pts)
        s = np.linspace(0.0, cum[-1], MARKERS_PER_VESSEL)
        positions = _interp_at(pts, cum, s)
        r = _COW_RADII[vessel]
        markers = [Marker(tuple(p), MARKER_DISTANCE_FACTOR * r) for p in positions]
        chains.append(
            MarkerChain(
                vessel=vessel,
                markers=markers,
                required_present_count=math.ceil(REQUIRED_MARKER_FRACTION * MARKERS_PER_VESSEL),
                slope_criterion_enabled=vessel.startswith("MCA"),
                slope_threshold=DEFAULT_SLOPE_THRESHOLD,
            )
        )
    return chains


def standard_cow_phantom(
    rng_seed: int,
    noise_sigma: float = 10.0,
    occlusions: list[Occlusion] | None = None,
) -> tuple[Volume, PhantomGroundTruth, list[MarkerChain]]:
    """Canonical 7-vessel phantom (ICA L/R, MCA L/R, ACA, PCA L/R) with
    marker chains laid along each vessel."""
    vol, truth = render_phantom(cow_spec(noise_sigma, occlusions), rng_seed)
    return vol, truth, cow_marker_chains()


def lvo_scenario(vessel: str, fraction_start: float) -> tuple[list[Occlusion], set[str]]:
    """Occlusion set modelling a large-vessel occlusion with its downstream
    effect: blocking an ICA also empties the MCA/PCA it feeds (the ACA limb
    survives via the contralateral inflow). Returns (occlusions,
    expected-absent vessel names)."""
    if vessel.startswith("MCA"):
        return [Occlusion(vessel, fraction_start, 1.0)], {vessel}
    if vessel.startswith("ICA"):
        side = vessel[-1]
        occs: list[Occlusion] = [
            Occlusion(vessel, fraction_start, 1.0),
            Occlusion(f"MCA_{side}", 0.0, 1.0),
            Occlusion(f"PCA_{side}", 0.0, 1.0),
        ]
        # Erase the matching ACA inflow limb (fraction range of the ACA chain:
        # limb R spans the first third, limb L the second).
        limb_len = _cumlen(_COW_SEGMENTS[4].polyline())[-1]
        trunk_len = _cumlen(_COW_SEGMENTS[6].polyline())[-1]
        total = 2 * limb_len + trunk_len
        if side == "R":
            occs.append(Occlusion("ACA", 0.0, limb_len / total))
        else:
            occs.append(Occlusion("ACA", limb_len / total, 2 * limb_len / total))
        return occs, {vessel, f"MCA_{side}", f"PCA_{side}"}
    raise ValidationError(f"vessel: LVO scenarios cover MCA/ICA, not {vessel!r}")


# ---------------------------------------------------------------- JSON I/O

def spec_to_dict(spec: PhantomSpec) -> dict:
    return {
        "dims": list(spec.dims),
        "spacing": list(spec.spacing),
        "background_hu": spec.background_hu,
        "vessel_hu": spec.vessel_hu,
        "noise_sigma": spec.noise_sigma,
        "tree": [
            {
                "start": list(s.start),
                "end": list(s.end),
                "radius": s.radius,
                "label": s.label,
                **({"control_points": [list(p) for p in s.control_points]} if s.control_points else {}),
            }
            for s in spec.tree
        ],
        "occlusions": [
            {"label": o.label, "fraction_start": o.fraction_start, "fraction_end": o.fraction_end}
            for o in spec.occlusions
        ],
    }


def spec_from_dict(d: dict) -> PhantomSpec:
    try:
        tree = [
            Segment(
                start=tuple(s["start"]),
                end=tuple(s["end"]),
                radius=float(s["radius"]),
                label=str(s["label"]),
                control_points=[tuple(p) for p in s["control_points"]] if s.get("control_points") else None,
            )
            for s in d["tree"]
        ]
        occ = [
            Occlusion(o["label"], float(o["fraction_start"]), float(o["fraction_end"]))
            for o in d.get("occlusions", [])
        ]
        spec = PhantomSpec(
            tree=tree,
            dims=tuple(d.get("dims", (64, 64, 64))),
            spacing=tuple(d.get("spacing", (1.0, 1.0, 1.0))),
            background_hu=float(d.get("background_hu", 40.0)),
            vessel_hu=float(d.get("vessel_hu", 300.0)),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
            occlusions=occ,
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"phantom spec JSON: missing or malformed field ({e})")
    spec.validate()
    return spec


def load_spec(path) -> PhantomSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def save_spec(spec: PhantomSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=1)


def truth_to_dict(truth: PhantomGroundTruth) -> dict:
    return {
        "occluded_labels": sorted(truth.occluded_labels),
        "centerlines": {
            label: [pts.tolist() for pts in lines] for label, lines in truth.centerlines.items()
        },
        "radii": {label: [r.tolist() for r in rr] for label, rr in truth.radii.items()},
    }
