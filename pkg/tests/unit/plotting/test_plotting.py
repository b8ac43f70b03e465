import math

import pytest
from wave_stability.core.plotting import plot_index_sweep, reference_lines, render_svg
from wave_stability.core.schemas import RecordStatus, SweepRecord, WaveModel


### 🔹 TESTS FOR reference_lines ###
def test_reference_lines_quadratic():
    """Test the quadratic limits -24 and -24 pi."""
    lines = reference_lines(WaveModel.QUADRATIC)
    assert sorted(lines.values()) == pytest.approx([-24.0 * math.pi, -24.0])


def test_reference_lines_cubic():
    """Test the cubic limits -2 and -1."""
    assert sorted(reference_lines("cubic").values()) == [-2.0, -1.0]


### 🔹 TESTS FOR render_svg ###
def test_render_svg_polyline_and_reference():
    """Test that a figure renders to SVG text."""
    svg = render_svg({"index": ([0.1, 0.5, 0.9], [-70.0, -40.0, -25.0])}, {"limit": -24.0})
    assert svg.lstrip().startswith("<?xml")
    assert "</svg>" in svg
    assert "<path" in svg


def test_render_svg_is_deterministic():
    """Test that the same data gives byte-identical output."""
    series = {"index": ([0.2, 0.4], [-3.0, -2.5])}
    assert render_svg(series, {"limit": -2.0}) == render_svg(series, {"limit": -2.0})


def test_render_svg_single_point():
    """Test that a one-point series still renders."""
    assert "</svg>" in render_svg({"index": ([0.5], [-2.4])}, {})


@pytest.mark.parametrize("series", [{}, {"index": ([], [])}])
def test_render_svg_empty(series):
    """Test that an empty figure is refused."""
    with pytest.raises(ValueError, match="empty figure"):
        render_svg(series, {"limit": -2.0})


### 🔹 TESTS FOR plot_index_sweep ###
def test_plot_index_sweep_skips_fail_rows(tmp_path):
    """Test writing a figure from sweep records with a fail row."""
    records = [
        SweepRecord(k=0.2, values={"index": -2.9, "half_normalized": -1.45}),
        SweepRecord(k=0.5, status=RecordStatus.FAIL, message="boom"),
        SweepRecord(k=0.8, values={"index": -2.4, "half_normalized": -1.2}),
    ]
    path = tmp_path / "fig.svg"
    plot_index_sweep(WaveModel.CUBIC, records, str(path), ("index", "half_normalized"))
    text = path.read_text()
    assert "</svg>" in text
    assert "cubic stability index" in text


def test_plot_index_sweep_all_failed(tmp_path):
    """Test that a sweep without usable rows raises."""
    records = [SweepRecord(k=0.5, status=RecordStatus.FAIL)]
    with pytest.raises(ValueError):
        plot_index_sweep(WaveModel.QUADRATIC, records, str(tmp_path / "fig.svg"))
    assert not (tmp_path / "fig.svg").exists()
