import re

import pytest

from wsnsec.plotting import PlotError, emit_plot, read_series


def series_ids(svg: str) -> set[str]:
    return set(re.findall(r'id="(series-[^"]+)"', svg))


def test_two_series_two_groups(tmp_path):
    csv_text = "time,a,b\n0,1,2\n1,2,3\n2,3,1\n"
    out = emit_plot(csv_text, tmp_path / "two.svg")
    assert series_ids(out.read_text()) == {"series-a", "series-b"}


def test_column_subset(tmp_path):
    out = emit_plot("time,a,b\n0,1,2\n1,2,3\n", tmp_path / "one.svg", columns=["b"])
    assert series_ids(out.read_text()) == {"series-b"}
    with pytest.raises(PlotError, match="unknown"):
        emit_plot("time,a\n0,1\n", tmp_path / "x.svg", columns=["zz"])


def test_single_row_renders(tmp_path):
    out = emit_plot("time,a\n5,1\n", tmp_path / "single.svg")
    assert "series-a" in out.read_text()


def test_empty_csv_rejected(tmp_path):
    with pytest.raises(PlotError):
        emit_plot("time,a\n", tmp_path / "empty.svg")
    with pytest.raises(PlotError):
        read_series("slot,a\n0,1\n")


def test_output_is_deterministic(tmp_path):
    text = "time,a\n0,1\n1,0.5\n2,0.25\n"
    first = emit_plot(text, tmp_path / "a.svg").read_bytes()
    second = emit_plot(text, tmp_path / "b.svg").read_bytes()
    assert first == second
