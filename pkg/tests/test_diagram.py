import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalbif import diagram as D
from nodalbif.continuation import Branch, Origin, Termination
from nodalbif.discretize import Grid
from nodalbif.eigencurve import BifurcationPoint, sample_curves
from nodalbif.errors import ConfigurationError, ConsistencyError
from nodalbif.nonlinear import SolutionRecord, StateVector
from nodalbif.weights import sine


def record(lam, l2, nodes=1, mu=45.0, N=20):
    u = np.zeros(N)
    u[N // 2] = l2
    return SolutionRecord(StateVector(u, lam, mu), l2, nodes, 1e-12, 1)


def branch(label="n2:minus:+", mu=45.0, nodes=1):
    pts = [record(-10.0 + i, 0.5 * i, nodes if i else 0, mu) for i in range(6)]
    return Branch(pts, Origin("manual"), Termination("norm-cap"), label)


def test_fmt():
    assert D.fmt(3) == "3"
    assert D.fmt(0.0) == "0" and D.fmt(-0.0) == "0"
    assert D.fmt(1 / 3) == "0.333333333333"
    assert D.fmt(float("nan")) == "nan"
    assert D.fmt(np.int64(7)) == "7"


def test_roles_and_colors():
    assert D.role_for_nodes(0) == D.POSITIVE and D.COLORS[D.POSITIVE] == "#1f4fd6"
    assert D.role_for_nodes(1) == D.ONE_NODE and D.COLORS[D.ONE_NODE] == "#d62020"
    assert D.role_for_nodes(2) == D.TWO_NODE and D.COLORS[D.TWO_NODE] == "#000000"
    assert D.role_for_nodes(4) == "4-node"
    assert D.color_for("4-node", 0) != D.color_for("4-node", 1)


def test_assemble_diagram():
    bp = BifurcationPoint(2, "minus", -10.0, 45.0, 0.3)
    doc = D.assemble_diagram([branch(), branch("n2:plus:-", nodes=2)], [bp])
    assert doc.series[0].role == D.TRIVIAL
    assert [s.role for s in doc.series[1:]] == [D.ONE_NODE, D.TWO_NODE]
    assert doc.y_range[0] == 0.0 and doc.y_range[1] > 2.5
    assert doc.annotations[0].x == -10.0
    assert "mu=45" in doc.title


def test_assemble_rejects_mixed_mu():
    with pytest.raises(ConsistencyError):
        D.assemble_diagram([branch(mu=45.0), branch(mu=54.0)])


def test_branch_csv_roundtrip(tmp_path):
    p = tmp_path / "b.csv"
    D.export_csv(branch(), p)
    with open(p) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == D.BRANCH_COLUMNS
    t = D.read_branch_csv(p)
    assert t.label == "b" and len(t.lam) == 6
    assert t.l2[2] == 1.0 and list(t.nodes) == [0, 1, 1, 1, 1, 1]
    doc = D.table_document([t])
    assert doc.series[1].role == D.ONE_NODE


def test_read_rejects_other_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        D.read_branch_csv(p)


def test_curve_csv():
    samples = sample_curves(sine(2), [1, 2], (-2.0, 2.0), 1.0)
    text = D.csv_text(samples)
    lines = text.splitlines()
    assert lines[0] == ",".join(D.CURVE_COLUMNS)
    assert len(lines) == 11
    assert lines[1].endswith(",nan,nan")


def test_csv_rejects_unknown():
    with pytest.raises(ConfigurationError):
        D.csv_text(42)


def test_profiles(tmp_path):
    g = Grid(0.0, 1.0, 20)
    recs = [record(-3.0, 1.0), record(-2.0, 2.0)]
    p = tmp_path / "p.csv"
    D.export_profiles_csv(recs, g.nodes, p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(D.PROFILE_COLUMNS) and len(lines) == 1 + 2 * 22
    doc = D.profile_document(recs, g.nodes)
    assert doc.x_range == (0.0, 1.0) and len(doc.series) == 2


def test_svg_structure(tmp_path):
    doc = D.assemble_diagram([branch(), branch("n2:plus:-", nodes=2)], title="a <b> & c")
    svg = D.svg_text(doc)
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg.count("<polyline") == 3
    assert "a &lt;b&gt; &amp; c" in svg
    assert D.COLORS[D.ONE_NODE] in svg and D.COLORS[D.TWO_NODE] in svg
    p = tmp_path / "d.svg"
    D.export_svg(doc, p)
    assert p.read_text() == svg


def test_svg_deterministic():
    doc = D.assemble_diagram([branch()])
    assert D.svg_text(doc) == D.svg_text(doc)


def test_merge_documents():
    a = D.assemble_diagram([branch()])
    b = D.assemble_diagram([branch("n3:plus:+", nodes=2)])
    doc = D.merge_documents([a, b], "both")
    assert [s.role for s in doc.series] == [D.TRIVIAL, D.ONE_NODE, D.TWO_NODE]


def test_nice_ticks():
    assert D.nice_ticks(0, 10) == [0, 2, 4, 6, 8, 10]
    assert D.nice_ticks(-200, 200) == [-200, -100, 0, 100, 200]
    assert D.nice_ticks(1, 1) == [1]


@given(st.floats(-1e4, 1e4), st.floats(1e-3, 1e4))
def test_nice_ticks_property(lo, width):
    hi = lo + width
    t = D.nice_ticks(lo, hi)
    assert 2 <= len(t) <= 13
    assert all(lo - 1e-9 * width <= x <= hi + 1e-9 * width for x in t)
    assert np.allclose(np.diff(t), t[1] - t[0])
