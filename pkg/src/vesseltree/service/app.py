"""HTTP facade over the pipeline, model, search, and labeling layers.

Sessions are in-memory: a session holds one built vessel model plus a
registry of search caches keyed by (root, criterion). Queries never mutate a
published model; repeated identical GETs return identical bodies. The
cumulative expanded-node counter exposes that cached path lookups perform no
graph re-search.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .. import labeling, model, phantom, pipeline, search
from ..errors import VesselTreeError
from ..volume import read_volume
from . import schemas


@dataclass
class Session:
    id: str
    graph: model.SkeletonGraph
    mesh: model.SurfaceMesh | None
    stage_h: object
    chains: list[labeling.MarkerChain] | None
    caches: dict[tuple[int, str], search.SearchCache] = field(default_factory=dict)
    active: tuple[int, str] | None = None
    verdicts: list[labeling.VesselVerdict] | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def total_expanded(self) -> int:
        return sum(c.stats.nodes_expanded for c in self.caches.values())


def _build_from_phantom(req: schemas.PhantomSessionModel):
    occs = [phantom.Occlusion(o.label, o.fraction_start, o.fraction_end) for o in req.occlusions]
    if req.lvo_scenario is not None:
        extra, _ = phantom.lvo_scenario(req.lvo_scenario.vessel, req.lvo_scenario.fraction_start)
        occs.extend(extra)
    vol, truth, chains = phantom.standard_cow_phantom(req.seed, req.noise_sigma, occs)
    atlas_prob = phantom.atlas_probability(truth, vol.dims, vol.spacing)
    run = pipeline.run_pipeline(vol, atlas_prob)
    return run, chains


def _build_from_files(req: schemas.SessionCreateRequest):
    vol = read_volume(req.volume_path)
    atlas_prob = read_volume(req.atlas_path)
    cfg = pipeline.PipelineConfig()
    if req.config_path:
        with open(req.config_path) as fh:
            cfg = pipeline.PipelineConfig.from_dict(json.load(fh))
    elif req.config:
        cfg = pipeline.PipelineConfig.from_dict(req.config)
    run = pipeline.run_pipeline(vol, atlas_prob, cfg)
    chains = labeling.load_chains(req.chains_path) if req.chains_path else None
    return run, chains


def create_app(model_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="vesseltree", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    create_lock = threading.Lock()
    out_dir = Path(model_dir) if model_dir else None

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return s

    def active_cache(s: Session, criterion: str | None = None) -> search.SearchCache:
        if s.active is None:
            raise HTTPException(409, "no root set: POST /root first")
        key = s.active if criterion is None else (s.active[0], criterion)
        cache = s.caches.get(key)
        if cache is None:
            raise HTTPException(409, f"no {key[1]} cache built for root {key[0]}")
        return cache

    @app.post("/v1/sessions", response_model=schemas.SessionCreateResponse)
    def create_session(req: schemas.SessionCreateRequest):
        t0 = time.perf_counter()
        try:
            with create_lock:
                if req.phantom is not None:
                    run, chains = _build_from_phantom(req.phantom)
                else:
                    run, chains = _build_from_files(req)
                graph = model.model_mask(run.final)
                mesh = model.build_surface(run.final)
                sid = uuid.uuid4().hex[:12]
                sessions[sid] = Session(
                    id=sid, graph=graph, mesh=mesh, stage_h=run.stage_h, chains=chains
                )
        except FileNotFoundError as e:
            raise HTTPException(422, f"input file not found: {e}")
        except VesselTreeError as e:
            raise HTTPException(422, str(e))
        if out_dir is not None:
            session_dir = out_dir / sid
            session_dir.mkdir(parents=True, exist_ok=True)
            model.save_graph(graph, session_dir / "graph.json")
            model.save_mesh(mesh, session_dir / "mesh.obj")
        return schemas.SessionCreateResponse(
            session_id=sid,
            node_count=len(graph.nodes),
            edge_count=len(graph.edges),
            component_count=len(graph.components),
            build_seconds=time.perf_counter() - t0,
        )

    @app.get("/v1/sessions/{sid}/graph")
    def get_graph(sid: str):
        return model.graph_to_dict(get_session(sid).graph)

    @app.get("/v1/sessions/{sid}/mesh", response_class=PlainTextResponse)
    def get_mesh(sid: str):
        s = get_session(sid)
        if s.mesh is None:
            raise HTTPException(404, "session has no surface mesh")
        return model.mesh_to_text(s.mesh)

    @app.post("/v1/sessions/{sid}/root", response_model=schemas.RootResponse)
    def set_root(sid: str, req: schemas.RootRequest):
        s = get_session(sid)
        if req.criterion not in (search.SHORTEST, search.WIDEST):
            raise HTTPException(422, f"criterion must be {search.SHORTEST!r} or {search.WIDEST!r}")
        if not 0 <= req.node < len(s.graph.nodes):
            raise HTTPException(404, f"unknown node {req.node}")
        key = (req.node, req.criterion)
        with s.lock:
            cached = key in s.caches
            if not cached:
                s.caches[key] = search.build_cache(s.graph, req.node, req.criterion)
            s.active = key
        c = s.caches[key]
        return schemas.RootResponse(
            root=req.node,
            criterion=req.criterion,
            nodes_expanded=0 if cached else c.stats.nodes_expanded,
            wall_time_s=c.stats.wall_time_s,
            cached=cached,
            total_expanded=s.total_expanded,
        )

    @app.get("/v1/sessions/{sid}/path", response_model=schemas.PathResponse)
    def get_path(sid: str, to: int):
        s = get_session(sid)
        if not 0 <= to < len(s.graph.nodes):
            raise HTTPException(404, f"unknown node {to}")
        cache = active_cache(s)
        res = search.path_from_cache(cache, to)
        return schemas.PathResponse(
            found=res.found,
            nodes=res.nodes,
            edges=res.edges,
            total_cost=None if math.isinf(res.total_cost) else res.total_cost,
            arc_length=None if math.isinf(res.arc_length) else res.arc_length,
            directions=[[float(x) for x in d] for d in res.directions],
            reason=res.reason,
        )

    @app.get("/v1/sessions/{sid}/suppression", response_model=schemas.SuppressionResponse)
    def get_suppression(sid: str, d: float = Query(ge=0.0)):
        s = get_session(sid)
        cache = active_cache(s, criterion=search.SHORTEST)
        vs = search.geodesic_visible_set(cache, d)
        return schemas.SuppressionResponse(
            d=d,
            nodes=vs.nodes,
            edges=[
                schemas.EdgeFraction(id=eid, fraction=frac)
                for eid, frac in sorted(vs.edge_fractions.items())
            ],
        )

    @app.get("/v1/sessions/{sid}/labels", response_model=schemas.LabelsResponse)
    def get_labels(sid: str):
        s = get_session(sid)
        if s.chains is None:
            raise HTTPException(409, "session has no marker chains configured")
        with s.lock:
            if s.verdicts is None:
                s.verdicts = labeling.judge_all(s.chains, s.stage_h)
        lvo = labeling.classify_lvo(s.verdicts)
        return schemas.LabelsResponse(
            verdicts=[
                schemas.VerdictModel(**labeling.verdict_to_dict(v)) for v in s.verdicts
            ],
            lvo_positive=lvo.lvo_positive,
            implicated=sorted(lvo.implicated),
        )

    @app.get("/v1/sessions/{sid}/dualroot", response_model=schemas.DualRootResponse)
    def get_dualroot(
        sid: str,
        a: int,
        b: int,
        band: float = Query(default=10.0, ge=0.0),
        ceiling: float = Query(default=60.0, ge=0.0),
    ):
        s = get_session(sid)
        for node in (a, b):
            if not 0 <= node < len(s.graph.nodes):
                raise HTTPException(404, f"unknown node {node}")
        if a == b:
            raise HTTPException(422, "roots must be distinct")
        with s.lock:
            for node in (a, b):
                key = (node, search.SHORTEST)
                if key not in s.caches:
                    s.caches[key] = search.build_cache(s.graph, node, search.SHORTEST)
        cand = search.dual_root_candidates(
            s.caches[(a, search.SHORTEST)], s.caches[(b, search.SHORTEST)], band, ceiling
        )
        return schemas.DualRootResponse(candidates=cand, band=band, ceiling=ceiling)

    @app.get("/v1/sessions/{sid}/stats", response_model=schemas.StatsResponse)
    def get_stats(sid: str):
        s = get_session(sid)
        return schemas.StatsResponse(
            total_expanded=s.total_expanded,
            caches=[
                schemas.CacheStats(
                    root=root,
                    criterion=crit,
                    nodes_expanded=c.stats.nodes_expanded,
                    wall_time_s=c.stats.wall_time_s,
                )
                for (root, crit), c in sorted(s.caches.items())
            ],
            active_root=s.active[0] if s.active else None,
            active_criterion=s.active[1] if s.active else None,
        )

    return app
