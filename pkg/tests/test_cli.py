import csv
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from geoflow.cli import (COMMANDS, Config, ConfigError, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, load_config,
                         main, svg_plot, validate, write_csv)
from geoflow.experiments import ExperimentReport


def _ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return path


def test_defaults_are_valid():
    cfg = load_config()
    assert cfg.surface == "octagon-genus2" and cfg.seed == 0
    assert cfg.observable().base == 1.0
    assert cfg.spec().nodes == 16


def test_ini_sections_are_parsed(tmp_path):
    path = _ini(tmp_path, """
[surface]
name = octagon-genus2
[observable]
base = 2.0
bumps = 0 0 0 0.2 0.5; 0.1 -0.2 0 0.1 0.3
[quadrature]
step = 0.2
nodes = 8
tail_tolerance = 1e-9
[experiments]
seed = 7
deltas = 0.08, 0.04
t_grid = 0 1 2 3
[output]
dir = somewhere
plots = off
""")
    cfg = load_config(path)
    assert cfg.base == 2.0 and len(cfg.bumps) == 2 and cfg.bumps[1] == (0.1, -0.2, 0.0, 0.1, 0.3)
    assert (cfg.step, cfg.nodes, cfg.tail_tolerance) == (0.2, 8, 1e-9)
    assert cfg.seed == 7 and cfg.deltas == (0.08, 0.04) and cfg.t_grid == (0.0, 1.0, 2.0, 3.0)
    assert cfg.out == "somewhere" and cfg.plots is False
    assert len(cfg.observable().bumps) == 2


@pytest.mark.parametrize("text", [
    "[surface]\nname = torus\n",
    "[observable]\nbase = -1\n",
    "[observable]\nbase = 1.0\nbumps = 0 0 0 1.5 0.5\n",
    "[observable]\nbumps = 0 0 0 0.1 50\n",
    "[observable]\nbumps = 0 0 0.1\n",
    "[experiments]\ndeltas = 0.5 0.2\n",
    "[experiments]\nsamples = many\n",
    "[experiments]\ntile_deltas = 0.03 0.01\n",
    "[experiments]\nmixing_samples = 10\n",
    "[experiments]\nunknown_key = 1\n",
    "[output]\nplots = maybe\n",
    "not an ini file",
])
def test_invalid_configs_raise(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_ini(tmp_path, text))


def test_validate_catches_direct_edits():
    cfg = Config()
    cfg.nodes = 0
    with pytest.raises(ConfigError):
        validate(cfg)


def test_usage_and_config_exit_codes(tmp_path, capsys):
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert main(["verify-quadrilateral", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    assert main(["verify-quadrilateral", "--seed", "-1"]) == EXIT_CONFIG
    assert main(["verify-quadrilateral", "--tol", "0"]) == EXIT_CONFIG
    assert main(["verify-quadrilateral", "--plots", "sometimes"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["--help"]) == 0


def _read_blocks(path):
    rows = list(csv.reader(path.read_text().splitlines()))
    blocks, cur = [], None
    for row in rows:
        if row[0] == "experiment":
            cur = {"name": row[1], "header": None, "rows": []}
            blocks.append(cur)
        elif cur["header"] is None:
            cur["header"] = row
        else:
            cur["rows"].append(row)
    return blocks


def test_quadrilateral_command_outputs(tmp_path, capsys):
    out = tmp_path / "a"
    assert main(["verify-quadrilateral", "--out", str(out), "--seed", "3"]) == EXIT_PASS
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("[verify-quadrilateral] PASS") for line in lines)
    blocks = _read_blocks(out / "verify-quadrilateral.csv")
    assert [b["name"] for b in blocks] == ["verify-quadrilateral"]
    assert blocks[0]["header"][:4] == ["delta", "d3", "d4", "d5"]
    assert all(len(r) == len(blocks[0]["header"]) for r in blocks[0]["rows"])
    # floats round-trip exactly
    d3 = float(blocks[0]["rows"][0][1])
    assert d3 == -0.1 / (1 + 0.1 ** 2)
    ET.fromstring((out / "verify-quadrilateral.svg").read_text())


def test_same_seed_gives_identical_csv(tmp_path):
    for name in ("a", "b"):
        assert main(["verify-quadrilateral", "--out", str(tmp_path / name), "--seed", "11",
                     "--plots", "off"]) == EXIT_PASS
    a = (tmp_path / "a" / "verify-quadrilateral.csv").read_bytes()
    b = (tmp_path / "b" / "verify-quadrilateral.csv").read_bytes()
    assert a == b
    assert not (tmp_path / "a" / "verify-quadrilateral.svg").exists()


def test_failing_checks_give_exit_one(tmp_path, capsys):
    # one density sample cannot cover the surface better as T grows
    path = _ini(tmp_path, "[experiments]\ndensity_samples = 1\ndensity_times = 0 1\n")
    code = main(["density", "--config", str(path), "--out", str(tmp_path / "d")])
    out = capsys.readouterr().out
    assert code in (EXIT_PASS, EXIT_FAIL)
    assert ("FAIL" in out) == (code == EXIT_FAIL)


def test_multi_report_csv(tmp_path):
    reps = []
    for k in range(2):
        r = ExperimentReport(f"r{k}", {}, ["x", "label", "flag"])
        r.rows.append([0.1 + k, 'a,"b"', True])
        reps.append(r)
    path = tmp_path / "m.csv"
    write_csv(path, reps)
    blocks = _read_blocks(path)
    assert [b["name"] for b in blocks] == ["r0", "r1"]
    assert blocks[1]["rows"][0] == ["1.1000000000000001", 'a,"b"', "true"]


def test_svg_plot_handles_logs_and_reduction():
    rep = ExperimentReport("demo", {}, ["delta", "value"])
    rep.rows += [[0.1, 1e-3], [0.1, 2e-3], [0.01, 1e-5], [0.001, 0.0]]
    svg = svg_plot(rep, "delta", "value", True, True, True)
    root = ET.fromstring(svg)
    circles = [e for e in root.iter() if e.tag.endswith("circle")]
    assert len(circles) == 2  # the zero value is dropped on a log axis


def test_command_list_is_complete():
    assert len(COMMANDS) == len(set(COMMANDS)) == 13


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "geoflow", "verify-quadrilateral", "--out",
                           str(tmp_path), "--plots", "off"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
