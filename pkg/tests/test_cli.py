import math
import os
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from navflow import experiment as ex
from navflow.cli import main
from navflow.config import ConfigError, parse_config
from navflow.geometry import CrossingSurface, Domain
from navflow.navigation import DEAD_END, NavigationForest
from navflow.render import UnsupportedRender, render_svg

MINIMAL = """\
# tiny directed run
mode = directed
dimension = 2
domain.kind = box
domain.half_widths = 0.5, 0.5
lambda.kind = constant
lambda.value = 1
mu.kind = constant
mu.value = 1
scheme.kind = dst
x = 0.25, 0
s_list = 50
replicates = 2
master_seed = 7
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return fh.read().splitlines()


def test_parse_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "directed" and cfg.s_list == (50.0,) and cfg.replicates == 2
    assert cfg.g(32.0) == pytest.approx(32 ** 0.6)
    assert cfg.h(32.0) == pytest.approx(32 ** 0.55)


@pytest.mark.parametrize("change, message", [
    ("replicates = 1", "replicates"),
    ("s_list = 100, 50", "s_list"),
    ("x = 0.6, 0", "x must lie inside"),
    ("g_exponent = 0.5\nh_exponent = 0.6", "h_exponent"),
    ("bogus = 3", "unknown key"),
    ("scheme.kind = rst", "not a directed scheme"),
])
def test_invalid_configs_name_the_line(change, message):
    key = change.split("=")[0].strip()
    lines = [l for l in MINIMAL.splitlines() if not l.startswith(key + " ")]
    text = "\n".join(lines + change.splitlines()) + "\n"
    with pytest.raises(ConfigError, match=message) as info:
        parse_config(text, source="run.cfg")
    assert re.match(r"run\.cfg:\d+: ", str(info.value))


def test_radial_requires_x_away_from_origin():
    text = MINIMAL.replace("mode = directed", "mode = radial").replace("dst", "rst")
    text = text.replace("x = 0.25, 0", "x = 0, 0")
    with pytest.raises(ConfigError, match="x != o"):
        parse_config(text)


def test_missing_line_without_equals():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("mode = directed\nnot a pair\n")


def test_grid_field_path_relative_to_config(tmp_path):
    (tmp_path / "lam.csv").write_text("2,2\n1,1\n1,1\n")
    text = MINIMAL.replace("lambda.kind = constant\nlambda.value = 1",
                           "lambda.kind = grid\nlambda.path = lam.csv")
    from navflow.config import load_config
    cfg = load_config(write(tmp_path, text))
    assert cfg.lam(np.array([0.1, 0.1])) == pytest.approx(1.0)


def test_traffic_minimal_run(tmp_path):
    out = tmp_path / "out"
    assert main(["traffic", "--config", write(tmp_path, MINIMAL), "--out", str(out), "--threads", "1"]) == 0
    reps = read_rows(out / "replicates.csv")
    summary = read_rows(out / "summary.csv")
    assert reps[0] == "s,replicate,n_crossings,traffic_sum,surface_measure,event_pass,max_dev,dead_end_frac"
    assert summary[0] == "s,lhs,lhs_se,lambda_hat,lambda_hat_se,rhs,rel_err,event_fail_freq"
    assert len(reps) == 3 and len(summary) == 2
    assert reps[1].startswith("50,0,") and reps[2].startswith("50,1,")


def test_same_seed_identical_and_next_seed_differs(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    for name in ("a", "b"):
        assert main(["traffic", "--config", cfg, "--out", str(tmp_path / name), "--threads", "1"]) == 0
    for f in ("replicates.csv", "summary.csv", "sandwich.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    other = write(tmp_path, MINIMAL.replace("master_seed = 7", "master_seed = 8"), "other.cfg")
    assert main(["traffic", "--config", other, "--out", str(tmp_path / "c"), "--threads", "1"]) == 0
    assert read_rows(tmp_path / "a" / "replicates.csv")[1:] != read_rows(tmp_path / "c" / "replicates.csv")[1:]


def test_threads_do_not_change_output(tmp_path):
    cfg = write(tmp_path, MINIMAL.replace("replicates = 2", "replicates = 6").replace("s_list = 50", "s_list = 30, 40"))
    for name, threads in (("serial", "1"), ("pool", "4")):
        assert main(["traffic", "--config", cfg, "--out", str(tmp_path / name), "--threads", threads]) == 0
    for f in ("replicates.csv", "summary.csv"):
        assert (tmp_path / "serial" / f).read_bytes() == (tmp_path / "pool" / f).read_bytes()


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, MINIMAL.replace("replicates = 2", "replicates = 0"), "bad.cfg")
    assert main(["traffic", "--config", bad]) == 2
    assert "bad.cfg:" in capsys.readouterr().err
    assert main(["traffic", "--config", str(tmp_path / "missing.cfg")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["traffic", "--config", write(tmp_path, MINIMAL), "--out", str(blocker / "sub")]) == 3


def test_csv_floats_round_trip():
    v = 0.1 + 0.2
    assert float(ex.fmt(v)) == v
    assert ex.fmt(True) == "1" and ex.fmt(np.int64(3)) == "3" and ex.fmt(50.0) == "50"


def test_subball_and_render(tmp_path):
    text = MINIMAL.replace("s_list = 50", "s_list = 20, 30, 40").replace("replicates = 2", "replicates = 3")
    text += "render = true\n"
    cfg = write(tmp_path, text)
    assert main(["subball", "--config", cfg, "--out", str(tmp_path / "sb")]) == 0
    rows = read_rows(tmp_path / "sb" / "subball.csv")
    assert rows[0] == "s,mean_max_dev,max_dev_se,ratio" and len(rows) == 4
    assert read_rows(tmp_path / "sb" / "fit.csv")[0] == "exponent,intercept,r2"
    assert main(["render", "--config", cfg, "--out", str(tmp_path / "r")]) == 0
    ET.parse(tmp_path / "r" / "pattern.svg")


def test_linkdensity_and_deadends(tmp_path):
    text = MINIMAL.replace("s_list = 50", "s_list = 30").replace("replicates = 2", "replicates = 3")
    text += "locations = -0.2, 0; 0, 0.1; 0.2, -0.1\n"
    assert main(["linkdensity", "--config", write(tmp_path, text), "--out", str(tmp_path / "ld")]) == 0
    rows = read_rows(tmp_path / "ld" / "linkdensity.csv")
    assert rows[0] == "location,x1,x2,s,lambda_hat,lambda_hat_se,lambda" and len(rows) == 4
    radial = (MINIMAL.replace("mode = directed", "mode = radial")
              .replace("scheme.kind = dst", "scheme.kind = min_hop\nscheme.range = 1.5")
              .replace("domain.kind = box\ndomain.half_widths = 0.5, 0.5", "domain.kind = ball\ndomain.radius = 1")
              .replace("s_list = 50", "s_list = 10") + "rho_list = 0.5, 2, 100\n")
    assert main(["deadends", "--config", write(tmp_path, radial, "r.cfg"), "--out", str(tmp_path / "de")]) == 0
    rows = [r.split(",") for r in read_rows(tmp_path / "de" / "deadends.csv")[1:]]
    fracs = [float(r[2]) for r in rows]
    assert fracs[0] > fracs[1] >= fracs[2] == 0.0


def chain_forest():
    pts = np.array([[-1.0, 0.0], [0.2, 0.1], [1.0, 0.0]])
    return NavigationForest(np.array([1, 2, DEAD_END]), "directed", pts)


def count(svg, tag):
    root = ET.fromstring(svg)
    return len(root.findall(f"{{http://www.w3.org/2000/svg}}{tag}"))


def test_render_chain_counts():
    svg = render_svg(None, chain_forest())
    assert count(svg, "circle") == 3 and count(svg, "line") == 2


def test_render_empty_and_crossing_class():
    svg = render_svg(np.zeros((0, 2)))
    assert count(svg, "circle") == 0
    surf = CrossingSurface("directed", (0.0, 0.0), 1.0, 0.5)
    svg = render_svg(None, chain_forest(), Domain.box((1.5, 1.5)), 1.0, surf, trajectory=[0, 1, 2])
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    crossing = [c for c in root.findall(ns + "circle") if "crossing" in c.get("class").split()]
    assert len(crossing) == 1 and crossing[0].get("cx") == "-1"
    assert root.get("viewBox") == "-1.5 -1.5 3 3"
    assert root.find(ns + "polyline").get("class") == "trajectory"


def test_render_rejects_3d():
    with pytest.raises(UnsupportedRender):
        render_svg(np.zeros((2, 3)) + [[1, 2, 3], [0, 1, 0]])
