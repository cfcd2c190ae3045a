"""Command line front end.

Subcommands mirror the processing stages: `phantom generate` makes test
volumes, `pipeline run` segments, `model build` extracts the graph and
surface, `search bench` times the path algorithms, `label run` judges the
vessels, and `serve` starts the HTTP API.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import labeling, model, phantom, pipeline, search
from .errors import VesselTreeError
from .volume import read_mask, read_volume, write_mask, write_volume


def _cmd_phantom_generate(args) -> int:
    occlusions = []
    for spec in args.occlude or []:
        parts = spec.split(":")
        if len(parts) != 3:
            raise VesselTreeError(f"--occlude expects LABEL:START:END, got {spec!r}")
        occlusions.append(phantom.Occlusion(parts[0], float(parts[1]), float(parts[2])))

    chains = None
    if args.cow:
        pspec = phantom.cow_spec(noise_sigma=args.noise_sigma, occlusions=occlusions)
        chains = phantom.cow_marker_chains()
    else:
        pspec = phantom.load_spec(args.spec)
        if occlusions:
            pspec.occlusions.extend(occlusions)

    vol, truth = phantom.render_phantom(pspec, args.seed)
    write_volume(vol, args.out, "float32")
    print(f"wrote volume {args.out} dims={vol.dims} mask_voxels={truth.mask.count()}")

    if args.truth:
        with open(args.truth, "w") as fh:
            json.dump(phantom.truth_to_dict(truth), fh)
        print(f"wrote ground truth {args.truth}")
    if args.out_mask:
        write_mask(truth.mask, args.out_mask)
        print(f"wrote ground-truth mask {args.out_mask}")
    if args.out_atlas:
        write_volume(phantom.atlas_probability(truth, vol.dims, vol.spacing), args.out_atlas, "float32")
        print(f"wrote atlas probability {args.out_atlas}")
    if args.out_chains:
        if chains is None:
            raise VesselTreeError("--out-chains requires --cow (marker chains are laid along the standard phantom)")
        labeling.save_chains(chains, args.out_chains)
        print(f"wrote marker chains {args.out_chains}")
    return 0


def _cmd_pipeline_run(args) -> int:
    vol = read_volume(args.infile)
    atlas_prob = read_volume(args.atlas)
    cfg = pipeline.PipelineConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = pipeline.PipelineConfig.from_dict(json.load(fh))
    run = pipeline.run_pipeline(vol, atlas_prob, cfg)
    write_mask(run.final, args.out_final)
    write_mask(run.stage_h, args.out_stageh)
    print(
        f"seeds: {run.seeds.raw_count} raw -> {len(run.seeds)} on support; "
        f"stage-h {run.stage_h.count()} voxels; final {run.final.count()} voxels"
    )
    for stage, sec in run.seconds.items():
        print(f"  stage ({stage}): {sec:.2f}s")
    return 0


def _cmd_model_build(args) -> int:
    mask = read_mask(args.mask)
    skel, radius_map = model.skeletonize(mask)
    graph = model.build_graph(skel, radius_map)
    model.save_graph(graph, args.out_graph)
    print(
        f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
        f"{len(graph.components)} component(s); wrote {args.out_graph}"
    )
    if args.out_mesh:
        mesh = model.build_surface(mask)
        model.save_mesh(mesh, args.out_mesh)
        print(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles; wrote {args.out_mesh}")
    return 0


def _cmd_search_bench(args) -> int:
    graph = model.load_graph(args.graph)
    results = search.run_benchmark(graph, args.root, repeat=args.repeat, seed=args.seed)
    print(search.format_benchmark(results))
    return 0


def _cmd_label_run(args) -> int:
    mask = read_mask(args.mask)
    chains = labeling.load_chains(args.chains)
    verdicts = labeling.judge_all(chains, mask)
    lvo = labeling.classify_lvo(verdicts)
    payload = {
        "verdicts": [labeling.verdict_to_dict(v) for v in verdicts],
        "lvo_positive": lvo.lvo_positive,
        "implicated": sorted(lvo.implicated),
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=1)
    present = sum(v.present for v in verdicts)
    for v in verdicts:
        slope = "" if v.slope is None else f" slope={v.slope:.2f}"
        print(f"{v.vessel:>6}: {'present' if v.present else 'ABSENT'} ({v.reason}){slope}")
    print(f"{present}/{len(verdicts)} vessels present; LVO {'POSITIVE' if lvo.lvo_positive else 'negative'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_dir=args.model_dir)
    if args.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=args.ui_dir, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vesseltree")
    sub = p.add_subparsers(dest="command", required=True)

    ph = sub.add_parser("phantom", help="synthetic test volumes").add_subparsers(dest="sub", required=True)
    g = ph.add_parser("generate", help="render a phantom volume with ground truth")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="phantom spec JSON")
    src.add_argument("--cow", action="store_true", help="canonical 7-vessel phantom")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-sigma", type=float, default=10.0, help="HU noise for --cow")
    g.add_argument("--occlude", action="append", metavar="LABEL:START:END")
    g.add_argument("--out", required=True, help="output volume (VVOL)")
    g.add_argument("--truth", help="ground truth JSON")
    g.add_argument("--out-mask", help="ground-truth mask (VVOL)")
    g.add_argument("--out-atlas", help="atlas probability volume (VVOL)")
    g.add_argument("--out-chains", help="marker chains JSON (--cow only)")
    g.set_defaults(fn=_cmd_phantom_generate)

    pl = sub.add_parser("pipeline", help="segmentation").add_subparsers(dest="sub", required=True)
    r = pl.add_parser("run", help="run the segmentation stages")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--atlas", required=True)
    r.add_argument("--config")
    r.add_argument("--out-final", required=True)
    r.add_argument("--out-stageh", required=True)
    r.set_defaults(fn=_cmd_pipeline_run)

    mo = sub.add_parser("model", help="geometric modelling").add_subparsers(dest="sub", required=True)
    b = mo.add_parser("build", help="skeleton graph and surface from a mask")
    b.add_argument("--mask", required=True)
    b.add_argument("--out-graph", required=True)
    b.add_argument("--out-mesh")
    b.set_defaults(fn=_cmd_model_build)

    se = sub.add_parser("search", help="path search").add_subparsers(dest="sub", required=True)
    bench = se.add_parser("bench", help="time both algorithms on a graph")
    bench.add_argument("--graph", required=True)
    bench.add_argument("--root", type=int, required=True)
    bench.add_argument("--repeat", type=int, default=100)
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(fn=_cmd_search_bench)

    la = sub.add_parser("label", help="vessel labeling").add_subparsers(dest="sub", required=True)
    lr = la.add_parser("run", help="judge marker chains against a mask")
    lr.add_argument("--mask", required=True, help="preliminary (stage-h) mask VVOL")
    lr.add_argument("--chains", required=True)
    lr.add_argument("--out", required=True)
    lr.set_defaults(fn=_cmd_label_run)

    sv = sub.add_parser("serve", help="run the HTTP API")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--model-dir", help="persist session graph/mesh files here")
    sv.add_argument("--ui-dir", help="serve a static browser UI from this directory")
    sv.set_defaults(fn=_cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except VesselTreeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
