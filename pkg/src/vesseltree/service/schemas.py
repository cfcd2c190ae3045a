"""Request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class OcclusionModel(BaseModel):
    label: str
    fraction_start: float = Field(ge=0.0, lt=1.0)
    fraction_end: float = Field(gt=0.0, le=1.0)


class LvoScenarioModel(BaseModel):
    vessel: str
    fraction_start: float = Field(default=0.4, ge=0.0, lt=1.0)


class PhantomSessionModel(BaseModel):
    seed: int = 1
    noise_sigma: float = 10.0
    occlusions: list[OcclusionModel] = Field(default_factory=list)
    lvo_scenario: LvoScenarioModel | None = None


class SessionCreateRequest(BaseModel):
    phantom: PhantomSessionModel | None = None
    volume_path: str | None = None
    atlas_path: str | None = None
    chains_path: str | None = None
    config: dict | None = None
    config_path: str | None = None

    @model_validator(mode="after")
    def _check_source(self):
        if self.phantom is None and not (self.volume_path and self.atlas_path):
            raise ValueError("provide either 'phantom' or both 'volume_path' and 'atlas_path'")
        return self


class SessionCreateResponse(BaseModel):
    session_id: str
    node_count: int
    edge_count: int
    component_count: int
    build_seconds: float


class RootRequest(BaseModel):
    node: int
    criterion: str = "shortest_path"


class RootResponse(BaseModel):
    root: int
    criterion: str
    nodes_expanded: int
    wall_time_s: float
    cached: bool
    total_expanded: int


class PathResponse(BaseModel):
    found: bool
    nodes: list[int]
    edges: list[int]
    total_cost: float | None
    arc_length: float | None
    directions: list[list[float]]
    reason: str | None = None


class EdgeFraction(BaseModel):
    id: int
    fraction: float


class SuppressionResponse(BaseModel):
    d: float
    nodes: list[int]
    edges: list[EdgeFraction]


class VerdictModel(BaseModel):
    vessel: str
    present: bool
    reason: str
    distances: list[float | None]
    final_marker_position: list[float] | None
    slope: float | None


class LabelsResponse(BaseModel):
    verdicts: list[VerdictModel]
    lvo_positive: bool
    implicated: list[str]


class CacheStats(BaseModel):
    root: int
    criterion: str
    nodes_expanded: int
    wall_time_s: float


class StatsResponse(BaseModel):
    total_expanded: int
    caches: list[CacheStats]
    active_root: int | None
    active_criterion: str | None


class DualRootResponse(BaseModel):
    candidates: list[int]
    band: float
    ceiling: float
