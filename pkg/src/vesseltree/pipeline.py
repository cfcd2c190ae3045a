"""Segmentation stages: vesselness filtering, atlas gating, Hough seed
generation, two-stage region growing, and morphological closing.

Stage letters in error messages follow the processing order:
(d) vesselness, (e) atlas mask + gate, (f) circle detection, (g) seed
masking, (h) adaptive region growing, (i) windowed region growing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import cv2
import numpy as np
from scipy import ndimage

from .errors import PipelineError, ValidationError
from .volume import BinaryMask, Volume

CONNECTIVITY_26 = np.ones((3, 3, 3), bool)


@dataclass
class HoughParams:
    """Slice-wise circular Hough parameters (pixel units per axial slice).

    smooth_kernel is a Gaussian pre-blur (odd kernel size, 0 disables). The
    gated support can be only a few pixels across, where raw gradient voting
    lands centers off the blob; a mild blur steers them back onto it.
    """

    dp: float = 1.0
    min_dist: float = 5.0
    canny_threshold: float = 10.0
    accumulator_threshold: float = 1.0
    min_radius: int = 0
    max_radius: int = 5
    smooth_kernel: int = 3


@dataclass
class PipelineConfig:
    frangi_scales: tuple[float, ...] = (1.0, 1.5)
    frangi_alpha: float = 0.5
    frangi_beta: float = 0.5
    atlas_t1_rel: float = 0.005
    atlas_dilation: tuple[int, int, int] = (11, 7, 7)
    t2: float = 4.0
    hough: HoughParams = field(default_factory=HoughParams)
    adaptive_rel_tol: float = 0.05
    window_lo: float = 130.0
    window_hi: float = 1500.0
    closing_radius: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "hough" in d:
            d["hough"] = HoughParams(**d["hough"])
        for key in ("frangi_scales", "atlas_dilation"):
            if key in d:
                d[key] = tuple(d[key])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"config: unknown field(s) {sorted(unknown)}")
        return cls(**d)


@dataclass
class SeedPointSet:
    """Circle centers surviving the support masking, as voxel indices."""

    indices: np.ndarray  # (N, 3) int, (z, y, x)
    slices: np.ndarray  # (N,) source slice per seed
    hough_radii: np.ndarray  # (N,) detected circle radius, px
    raw_count: int = 0  # detections before masking

    def __len__(self) -> int:
        return len(self.indices)


# --------------------------------------------------------------- vesselness

def _abs_sorted_eigvals(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w = np.linalg.eigvalsh(h)  # ascending by value
    order = np.argsort(np.abs(w), axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    return w[..., 0], w[..., 1], w[..., 2]


def frangi_vesselness(
    v: Volume,
    scales=(1.0, 1.5),
    alpha: float = 0.5,
    beta: float = 0.5,
) -> Volume:
    """Multiscale bright-tube vesselness, scaled to [0, 100].

    The Hessian is taken from Gaussian derivatives at each scale (mm,
    spacing-aware) and gamma-normalized with sigma^2. The structure
    sensitivity constant is half the maximum Hessian norm per scale. The
    percent scaling makes the downstream noise gate (t2, default 4)
    meaningful: strong tubes score well above it, background noise below.
    """
    scales = tuple(float(s) for s in scales)
    if not scales or any(s <= 0 for s in scales):
        raise ValidationError("scales: need a non-empty list of positive mm values")
    sp = np.asarray(v.spacing)
    for s in scales:
        support = 2 * np.ceil(3.0 * s / sp).astype(int) + 1
        if np.any(np.asarray(v.dims) < support):
            raise ValidationError(
                f"volume too small for filter support at scale {s} mm "
                f"(needs dims >= {tuple(int(x) for x in support)})"
            )

    data = v.data.astype(np.float64)
    response = np.zeros(v.dims, np.float64)
    axes = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
    for sigma in scales:
        sig_vox = sigma / sp
        hess = np.empty(v.dims + (3, 3), np.float64)
        for a, b in axes:
            order = [0, 0, 0]
            order[a] += 1
            order[b] += 1
            d2 = ndimage.gaussian_filter(data, sig_vox, order=tuple(order), mode="nearest")
            d2 *= sigma * sigma / (sp[a] * sp[b])  # to mm units, gamma-normalized
            hess[..., a, b] = d2
            hess[..., b, a] = d2
        l1, l2, l3 = _abs_sorted_eigvals(hess)

        s2 = l1 * l1 + l2 * l2 + l3 * l3
        s_norm = np.sqrt(s2)
        c = s_norm.max() / 2.0
        # truncated derivative kernels leave a residue of ~1e-4 of the data
        # scale on constant input; below that there is no real structure,
        # and normalizing by it would amplify noise to full-scale response
        if c <= 1e-3 * (np.abs(data).max() + 1.0):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            ra2 = np.where(l3 != 0, (l2 / l3) ** 2, 0.0)
            rb2 = np.where(l2 * l3 != 0, l1 * l1 / np.abs(l2 * l3), 0.0)
        vess = (1.0 - np.exp(-ra2 / (2 * alpha * alpha)))
        vess *= np.exp(-rb2 / (2 * beta * beta))
        vess *= 1.0 - np.exp(-s2 / (2 * c * c))
        vess[(l2 > 0) | (l3 > 0)] = 0.0  # bright-tube polarity only
        np.maximum(response, vess, out=response)

    return Volume((response * 100.0).astype(np.float32), v.spacing, v.origin)


# ------------------------------------------------------------- atlas gating

def build_atlas_mask(prob: Volume, t1_rel: float = 0.005, dilation_zyx=(11, 7, 7)) -> BinaryMask:
    """Binarize a probability volume at a relative threshold, then dilate by
    a box kernel. Voxels at exactly the threshold survive, so t1_rel = 1
    keeps the maximum-valued voxels."""
    if np.any(prob.data < 0):
        raise ValidationError("atlas probabilities must be >= 0")
    peak = float(prob.data.max())
    if peak <= 0:
        raise ValidationError("empty atlas: probability volume is all zero")
    core = prob.data >= t1_rel * peak
    size = tuple(int(k) for k in dilation_zyx)
    if any(k < 1 for k in size):
        raise ValidationError("dilation kernel sizes must be >= 1")
    dilated = ndimage.maximum_filter(core, size=size, mode="constant", cval=False)
    return BinaryMask(dilated, prob.spacing, prob.origin)


def gate_and_threshold(resp: Volume, atlas: BinaryMask, t2: float = 4.0) -> Volume:
    """Keep response values above t2 inside the atlas, zero elsewhere."""
    if not resp.same_geometry(atlas):
        raise ValidationError("geometry mismatch between response and atlas mask")
    out = np.where(atlas.data & (resp.data > t2), resp.data, 0.0)
    return Volume(out.astype(resp.data.dtype), resp.spacing, resp.origin)


# ------------------------------------------------------------- seed finding

def hough_seed_points(gated: Volume, params: HoughParams | None = None) -> SeedPointSet:
    """Detect circles on every axial slice of the gated response and keep the
    centers that land on nonzero support."""
    params = params or HoughParams()
    idx: list[tuple[int, int, int]] = []
    slices: list[int] = []
    radii: list[float] = []
    raw = 0
    nz, ny, nx = gated.dims
    for z in range(nz):
        sl = gated.data[z]
        if not sl.any():
            continue
        img = np.clip(sl, 0, 255).astype(np.uint8)
        if params.smooth_kernel:
            img = cv2.GaussianBlur(img, (params.smooth_kernel, params.smooth_kernel), 0)
        circles = cv2.HoughCircles(
            img,
            cv2.HOUGH_GRADIENT,
            dp=params.dp,
            minDist=params.min_dist,
            param1=params.canny_threshold,
            param2=params.accumulator_threshold,
            minRadius=params.min_radius,
            maxRadius=params.max_radius,
        )
        if circles is None:
            continue
        for cx, cy, r in circles[0]:
            raw += 1
            yi, xi = int(round(float(cy))), int(round(float(cx)))
            if not (0 <= yi < ny and 0 <= xi < nx):
                continue
            if gated.data[z, yi, xi] > 0:
                idx.append((z, yi, xi))
                slices.append(z)
                radii.append(float(r))
    return SeedPointSet(
        indices=np.array(idx, int).reshape(-1, 3),
        slices=np.array(slices, int),
        hough_radii=np.array(radii, float),
        raw_count=raw,
    )


# ----------------------------------------------------------- region growing

def _seed_array(seeds) -> np.ndarray:
    if isinstance(seeds, SeedPointSet):
        return seeds.indices
    return np.asarray(seeds, int).reshape(-1, 3)


def _grow(accept: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Voxels 26-connected to a seed through the acceptance region."""
    labels, _ = ndimage.label(accept, structure=CONNECTIVITY_26)
    seed_labels = labels[seeds[:, 0], seeds[:, 1], seeds[:, 2]]
    seed_labels = np.unique(seed_labels[seed_labels > 0])
    if seed_labels.size == 0:
        return np.zeros(accept.shape, bool)
    return np.isin(labels, seed_labels)


def region_grow_adaptive(
    v: Volume,
    seeds,
    rel_tol: float = 0.05,
    within: BinaryMask | None = None,
) -> BinaryMask:
    """Flood fill from all seeds jointly, accepting voxels whose value stays
    within rel_tol of the mean seed intensity. An optional `within` mask
    confines the growth (used to keep the preliminary segmentation on the
    atlas support)."""
    seed_idx = _seed_array(seeds)
    if len(seed_idx) == 0:
        raise ValidationError("no seeds")
    if rel_tol <= 0:
        raise ValidationError("rel_tol: must be > 0")
    mu = float(v.data[seed_idx[:, 0], seed_idx[:, 1], seed_idx[:, 2]].mean())
    accept = np.abs(v.data - mu) <= rel_tol * abs(mu)
    if within is not None:
        accept &= within.data
    return BinaryMask(_grow(accept, seed_idx), v.spacing, v.origin)


def region_grow_window(v: Volume, seeds, lo: float = 130.0, hi: float = 1500.0) -> BinaryMask:
    """Flood fill from the seeds accepting values inside [lo, hi]."""
    seed_idx = _seed_array(seeds)
    if len(seed_idx) == 0:
        raise ValidationError("no seeds")
    if lo >= hi:
        raise ValidationError("window: lo must be < hi")
    accept = (v.data >= lo) & (v.data <= hi)
    return BinaryMask(_grow(accept, seed_idx), v.spacing, v.origin)


def morphological_closing(m: BinaryMask, radius_vox: int = 1) -> BinaryMask:
    """Box closing (dilation then erosion). Padding keeps the operation
    extensive at the volume border: output is always a superset of input."""
    if radius_vox < 1:
        raise ValidationError("radius_vox: must be >= 1")
    r = int(radius_vox)
    size = 2 * r + 1
    padded = np.pad(m.data, r, constant_values=False)
    dil = ndimage.maximum_filter(padded, size=size, mode="constant", cval=False)
    ero = ndimage.minimum_filter(dil, size=size, mode="constant", cval=False)
    return m.like(ero[r:-r, r:-r, r:-r])


# -------------------------------------------------------------- full chain

@dataclass
class PipelineRun:
    stage_h: BinaryMask
    final: BinaryMask
    seeds: SeedPointSet
    seconds: dict[str, float]


def run_pipeline(v: Volume, atlas_prob: Volume, cfg: PipelineConfig | None = None) -> PipelineRun:
    """Chain all stages; returns the preliminary (atlas-restricted) mask used
    for labeling and the final segmentation."""
    cfg = cfg or PipelineConfig()
    if not v.same_geometry(atlas_prob):
        raise ValidationError("volume and atlas probability geometries differ")
    seconds: dict[str, float] = {}

    def timed(stage, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kw)
        except ValidationError as e:
            raise PipelineError(stage, str(e))
        seconds[stage] = time.perf_counter() - t0
        return out

    resp = timed("d", frangi_vesselness, v, cfg.frangi_scales, cfg.frangi_alpha, cfg.frangi_beta)
    atlas = timed("e", build_atlas_mask, atlas_prob, cfg.atlas_t1_rel, cfg.atlas_dilation)
    gated = timed("e", gate_and_threshold, resp, atlas, cfg.t2)
    seeds = timed("f", hough_seed_points, gated, cfg.hough)
    if len(seeds) == 0:
        raise PipelineError("g", "no seed points survived masking")
    stage_h = timed("h", region_grow_adaptive, v, seeds, cfg.adaptive_rel_tol, within=atlas)
    if stage_h.count() == 0:
        raise PipelineError("h", "adaptive region growing produced an empty mask")
    final_grow = timed("i", region_grow_window, v, np.argwhere(stage_h.data), cfg.window_lo, cfg.window_hi)
    final = timed("i", morphological_closing, final_grow, cfg.closing_radius)
    return PipelineRun(stage_h=stage_h, final=final, seeds=seeds, seconds=seconds)
