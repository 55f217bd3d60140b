import io
import json
import subprocess
import sys

import pytest

from cubeflip import cmf
from cubeflip.canon import canonicalize
from cubeflip.cli import main
from cubeflip.flips import parity_change, parity_sites
from cubeflip.meshes import cube_boundary


def run(argv, stdin=None, monkeypatch=None, capsys=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cli(monkeypatch, capsys):
    def call(*argv, stdin=None):
        return run(list(argv), stdin, monkeypatch, capsys)
    return call


@pytest.fixture
def cube_file(tmp_path):
    p = tmp_path / "cube.cmf"
    cmf.write(cube_boundary(), p)
    return str(p)


def test_catalog_table(cli):
    code, out, _ = cli("catalog", "--dim", "3")
    assert code == 0
    assert out.splitlines()[0] == "dimension 3: 10 classes, 6 flip pairs"
    assert len(out.splitlines()) == 12


def test_catalog_json(cli):
    code, out, _ = cli("catalog", "--dim", "2", "--json")
    doc = json.loads(out)
    assert doc["classes"] == 6 and len(doc["pairs"]) == 4


def test_gen_then_list_sites(cli):
    _, cube, _ = cli("gen", "cube")
    code, out, _ = cli("flips", "list", "--class", "1,0", stdin=cube)
    assert code == 0 and json.loads(out)["count"] == 12


def test_shell_pipe():
    gen = subprocess.run([sys.executable, "-m", "cubeflip.cli", "gen", "cube"], capture_output=True, text=True,
                         check=True)
    lst = subprocess.run([sys.executable, "-m", "cubeflip.cli", "flips", "list", "--class", "1,0"],
                         input=gen.stdout, capture_output=True, text=True)
    assert lst.returncode == 0 and json.loads(lst.stdout)["count"] == 12


def test_cross_parity_path(cli, tmp_path, cube_file):
    c = cube_boundary()
    odd = parity_change(c, *parity_sites(c)[0])[0]
    b = tmp_path / "b.cmf"
    cmf.write(odd, b)
    code, out, _ = cli("path", cube_file, str(b), "--max-cells", "12")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"] == "no_path" and doc["reason"] == "parity"


def test_apply_and_record(cli, tmp_path, cube_file):
    rec = tmp_path / "seq.json"
    out_path = tmp_path / "out.cmf"
    code, _, _ = cli("flips", "apply", cube_file, "--class", "1,0", "--record", str(rec), "-o", str(out_path))
    assert code == 0
    res = cmf.read(out_path)
    assert len(res.cells) == 8
    seq = json.loads(rec.read_text())
    assert len(seq["steps"]) == 1 and seq["initial_key"] == canonicalize(cube_boundary()).hex()


def test_domain_error_exit_one(cli, cube_file):
    code, out, err = cli("flips", "apply", cube_file, "--class", "1,0", "--index", "99")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "param_out_of_range"


def test_missing_file_is_domain_error(cli, tmp_path):
    code, _, err = cli("validate", str(tmp_path / "absent.cmf"))
    assert code == 1 and "cannot read" in json.loads(err)["message"]


def test_parse_error_reported(cli):
    code, _, err = cli("validate", stdin="{not json\n")
    assert code == 1 and json.loads(err)["error"] == "parse_error"


@pytest.mark.parametrize("argv", [
    ["flips", "list", "--bogus"],
    ["catalog", "--dim", "x"],
    ["geom", "flip", "--class", "3"],
    ["nonsense"],
    ["validate", "--tolerance", "-1"],
])
def test_usage_errors_exit_two(cli, argv):
    with pytest.raises(SystemExit) as info:
        cli(*argv)
    assert info.value.code == 2


def test_validate_reports(cli, cube_file):
    code, out, _ = cli("validate", cube_file)
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["euler"] == 2


def test_geom_pipeline(cli, tmp_path):
    _, cube, _ = cli("gen", "unit_cube")
    out = tmp_path / "seven.cmf"
    code, verdict, _ = cli("geom", "flip", "--class", "3,0", "--apex", "0.5,0.5,0.5", "-o", str(out), stdin=cube)
    assert code == 0 and json.loads(verdict)["flippable"]
    code, check, _ = cli("geom", "check", str(out))
    assert json.loads(check)["classification"] == "geometric"


def test_geom_not_automatic(cli):
    _, mesh, _ = cli("gen", "four_squares", "translate=[0.3,0,0]")
    code, out, _ = cli("geom", "flip", "--class", "2,1", stdin=mesh)
    doc = json.loads(out)
    assert code == 0 and not doc["flippable"] and doc["witness"]["defect"] > 1e-6


def test_gen_random_uses_seed(cli):
    a = cli("gen", "random", "class=[0,0]", "--seed", "4")[1]
    b = cli("gen", "random", "class=[0,0]", "--seed", "4")[1]
    c = cli("gen", "random", "class=[0,0]", "--seed", "5")[1]
    assert a == b != c


def test_dual_commands(cli, tmp_path, cube_file):
    code, arr, _ = cli("dual", "build", cube_file)
    assert json.loads(arr)["crossings"] == 6
    code, out, _ = cli("dual", "check3c", stdin=arr)
    assert json.loads(out)["three_connected"]
    code, out, _ = cli("dual", "rewrite", "--op", '{"kind": "add_circle", "location": [0]}', stdin=arr)
    assert code == 0 and json.loads(out)["crossings"] == 10


def test_refine_reduce_round(cli, cube_file, tmp_path):
    _, refined, _ = cli("refine", cube_file, "--m", "2")
    plan = tmp_path / "plan.json"
    code, out, _ = cli("reduce", "--plan", str(plan), stdin=refined)
    doc = json.loads(out)
    assert code == 0 and doc["length"] == len(doc["steps"]) > 0
    assert json.loads(plan.read_text()) == doc


def test_parity_and_pillow(cli, cube_file):
    code, out, _ = cli("parity-change", cube_file)
    assert code == 0 and len(cmf.parse(out).cells) == 7
    _, hexa, _ = cli("gen", "hex")
    code, out, _ = cli("pillow", stdin=hexa)
    assert len(cmf.parse(out).cells) == 7


def test_census_small(cli):
    code, out, _ = cli("census", "--max-cells", "6")
    doc = json.loads(out)
    assert code == 0 and doc["components"] == 2 and "entries" not in doc


def test_export_formats(cli, cube_file):
    code, out, _ = cli("export", cube_file, "--format", "obj")
    assert code == 0 and out.count("\nf ") == 6
    code, out, _ = cli("export", cube_file)
    assert out.startswith("OFF\n")


def test_round_trip_preserves_keys(cli):
    for kind in ("cube", "bicuboid", "hex_torus", "ngwbc", "shrunken_01"):
        _, text, _ = cli("gen", kind)
        c = cmf.parse(text)
        again = cmf.parse(cmf.serialize(c))
        assert canonicalize(again) == canonicalize(c)


def test_stdout_deterministic():
    cmds = [["census", "--max-cells", "7", "--entries"], ["gen", "random", "class=[2,0]", "--seed", "2"],
            ["catalog", "--dim", "3", "--json"]]
    for argv in cmds:
        outs = {subprocess.run([sys.executable, "-m", "cubeflip.cli", *argv], capture_output=True, text=True).stdout
                for _ in range(2)}
        assert len(outs) == 1
