"""Smoke tests for the figure renderers on golden CSV inputs."""

import hashlib
import math
from pathlib import Path

import numpy as np
import pytest

from plotviz import render_ensemble_figure, render_forward_figure
from plotviz.cli import main
from plotviz.render import MissingColumnError


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


@pytest.fixture()
def forward_dir(tmp_path):
    rows = ["t,re_m_1_0,im_m_1_0,re_u_1_0,im_u_1_0,err_h,signal_h,rel_err"]
    for i in range(50):
        t = 0.1 * i
        u = math.sin(t)
        m = u + 0.5 * math.exp(-t)
        rows.append(f"{t},{m},0.0,{u},0.0,{0.5 * math.exp(-t)},1.0,"
                    f"{0.5 * math.exp(-t)}")
    _write(tmp_path / "run" / "modes.csv", "\n".join(rows) + "\n")
    return tmp_path / "run"


@pytest.fixture()
def ensemble_dir(tmp_path):
    rows = ["t,dist_2_vs_1,dist_3_vs_1,envelope"]
    for i in range(40):
        t = 0.25 * i
        d2 = math.exp(-0.3 * t)
        d3 = 0.7 * math.exp(-0.3 * t)
        rows.append(f"{t},{d2},{d3},{max(d2, d3)}")
    _write(tmp_path / "run" / "ensemble.csv", "\n".join(rows) + "\n")
    return tmp_path / "run"


def test_forward_renders_nonzero_image(forward_dir, tmp_path):
    out = render_forward_figure(forward_dir, tmp_path / "f.png")
    assert out.exists() and out.stat().st_size > 1000


def test_forward_render_is_deterministic(forward_dir, tmp_path):
    a = render_forward_figure(forward_dir, tmp_path / "a.png")
    b = render_forward_figure(forward_dir, tmp_path / "b.png")
    ha = hashlib.sha256(a.read_bytes()).hexdigest()
    hb = hashlib.sha256(b.read_bytes()).hexdigest()
    assert ha == hb


def test_forward_empty_series_warns(tmp_path):
    _write(tmp_path / "run" / "modes.csv",
           "t,re_m_1_0,im_m_1_0,re_u_1_0,im_u_1_0,err_h,signal_h,rel_err\n")
    with pytest.warns(UserWarning):
        out = render_forward_figure(tmp_path / "run", tmp_path / "e.png")
    assert out.exists() and out.stat().st_size > 0


def test_forward_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        render_forward_figure(tmp_path, tmp_path / "x.png")


def test_forward_missing_mode_columns_raises(tmp_path):
    _write(tmp_path / "run" / "modes.csv", "t,rel_err\n0.0,1.0\n")
    with pytest.raises(MissingColumnError):
        render_forward_figure(tmp_path / "run", tmp_path / "x.png")


def test_ensemble_renders_nonzero_and_deterministic(ensemble_dir, tmp_path):
    a = render_ensemble_figure(ensemble_dir, tmp_path / "a.png")
    b = render_ensemble_figure(ensemble_dir, tmp_path / "b.png")
    assert a.stat().st_size > 1000
    assert a.read_bytes() == b.read_bytes()


def test_single_member_distances_identically_zero(tmp_path):
    # a one-member ensemble writes an all-zero distance column; the panel
    # must render (flat zero line) rather than fail on the log scale
    rows = ["t,dist_2_vs_1,envelope"]
    for i in range(10):
        rows.append(f"{0.5 * i},0.0,0.0")
    _write(tmp_path / "run" / "ensemble.csv", "\n".join(rows) + "\n")
    header, *data = (tmp_path / "run" / "ensemble.csv").read_text().splitlines()
    dists = [float(line.split(",")[1]) for line in data]
    assert all(d == 0.0 for d in dists)
    out = render_ensemble_figure(tmp_path / "run", tmp_path / "z.png")
    assert out.exists() and out.stat().st_size > 0


def test_ensemble_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        render_ensemble_figure(tmp_path, tmp_path / "x.png")


def test_cli_forward_and_ensemble(forward_dir, ensemble_dir, tmp_path, capsys):
    assert main(["forward", "--in", str(forward_dir),
                 "--out", str(tmp_path / "f.png")]) == 0
    assert main(["ensemble", "--in", str(ensemble_dir),
                 "--out", str(tmp_path / "e.png")]) == 0
    assert main(["forward", "--in", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "x.png")]) == 1
