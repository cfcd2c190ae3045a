import json

import numpy as np

from vesseltree import model, search
from vesseltree.cli import main


def test_full_chain_intact_phantom(tmp_path, capsys):
    d = str(tmp_path)
    assert main([
        "phantom", "generate", "--cow", "--seed", "3",
        "--out", f"{d}/vol.vvol", "--truth", f"{d}/truth.json",
        "--out-atlas", f"{d}/atlas.vvol", "--out-chains", f"{d}/chains.json",
    ]) == 0
    assert main([
        "pipeline", "run", "--in", f"{d}/vol.vvol", "--atlas", f"{d}/atlas.vvol",
        "--out-final", f"{d}/final.vvol", "--out-stageh", f"{d}/stageh.vvol",
    ]) == 0
    assert main([
        "model", "build", "--mask", f"{d}/final.vvol",
        "--out-graph", f"{d}/graph.json", "--out-mesh", f"{d}/mesh.obj",
    ]) == 0
    assert main([
        "label", "run", "--mask", f"{d}/stageh.vvol",
        "--chains", f"{d}/chains.json", "--out", f"{d}/verdicts.json",
    ]) == 0
    out = capsys.readouterr().out
    assert "7/7 vessels present" in out
    assert "LVO negative" in out
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    assert all(v["present"] for v in verdicts["verdicts"])
    graph = json.loads((tmp_path / "graph.json").read_text())
    assert graph["nodes"] and graph["edges"]
    assert (tmp_path / "mesh.obj").read_text().startswith("v ")


def test_full_chain_occluded_phantom(tmp_path, capsys):
    d = str(tmp_path)
    assert main([
        "phantom", "generate", "--cow", "--seed", "3", "--occlude", "MCA_L:0.4:1.0",
        "--out", f"{d}/vol.vvol", "--out-atlas", f"{d}/atlas.vvol",
        "--out-chains", f"{d}/chains.json",
    ]) == 0
    assert main([
        "pipeline", "run", "--in", f"{d}/vol.vvol", "--atlas", f"{d}/atlas.vvol",
        "--out-final", f"{d}/final.vvol", "--out-stageh", f"{d}/stageh.vvol",
    ]) == 0
    assert main([
        "label", "run", "--mask", f"{d}/stageh.vvol",
        "--chains", f"{d}/chains.json", "--out", f"{d}/verdicts.json",
    ]) == 0
    out = capsys.readouterr().out
    assert "MCA_L: ABSENT" in out
    assert "LVO POSITIVE" in out
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    assert verdicts["lvo_positive"] and verdicts["implicated"] == ["MCA_L"]


def test_malformed_vvol_header_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.vvol"
    bad.write_bytes(b"dims 3 3 3\nspacing 1 1\norigin 0 0 0\ndtype int16\n\n" + b"\x00" * 54)
    code = main([
        "pipeline", "run", "--in", str(bad), "--atlas", str(bad),
        "--out-final", str(tmp_path / "f.vvol"), "--out-stageh", str(tmp_path / "h.vvol"),
    ])
    assert code == 2
    err = capsys.readouterr().err
    assert "spacing 1 1" in err


def test_missing_file_exit_code(tmp_path, capsys):
    code = main([
        "model", "build", "--mask", str(tmp_path / "none.vvol"),
        "--out-graph", str(tmp_path / "g.json"),
    ])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_phantom_spec_file_input(tmp_path, capsys):
    spec = {
        "dims": [32, 24, 24],
        "tree": [
            {"start": [4, 12, 12], "end": [28, 12, 12], "radius": 2.0, "label": "ICA_R"}
        ],
    }
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main([
        "phantom", "generate", "--spec", str(tmp_path / "spec.json"), "--seed", "1",
        "--out", str(tmp_path / "v.vvol"), "--out-mask", str(tmp_path / "m.vvol"),
    ]) == 0
    assert (tmp_path / "v.vvol").exists() and (tmp_path / "m.vvol").exists()


def test_phantom_invalid_occlude_argument(tmp_path, capsys):
    code = main([
        "phantom", "generate", "--cow", "--occlude", "MCA_L-0.4",
        "--out", str(tmp_path / "v.vvol"),
    ])
    assert code == 2
    assert "LABEL:START:END" in capsys.readouterr().err


def test_search_bench_reports_expanded_counts(tmp_path, capsys):
    g = search.random_vessel_graph(400, 3)
    model.save_graph(g, tmp_path / "graph.json")
    assert main([
        "search", "bench", "--graph", str(tmp_path / "graph.json"),
        "--root", "0", "--repeat", "25",
    ]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert any(l.startswith("astar") for l in lines)
    assert any(l.startswith("dijkstra") for l in lines)
    assert "expanded" in lines[0]
    astar_vals = next(l for l in lines if l.startswith("astar")).split()
    dijkstra_vals = next(l for l in lines if l.startswith("dijkstra")).split()
    assert float(astar_vals[-1]) <= float(dijkstra_vals[-1])
