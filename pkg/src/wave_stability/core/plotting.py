"""SVG figures of index sweeps, rendered deterministically with matplotlib."""

import io
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from wave_stability.core.data_conversion import atomic_write  # noqa: E402
from wave_stability.core.greens import limit_targets  # noqa: E402
from wave_stability.core.logger import logger  # noqa: E402
from wave_stability.core.schemas import RecordStatus, SweepRecord, WaveModel  # noqa: E402

SVG_HASHSALT = "wave-stability"
SVG_METADATA = {"Date": None}


def reference_lines(model: WaveModel) -> Dict[str, float]:
    """Horizontal reference lines of the index figure of each model."""
    targets = limit_targets(model)
    if WaveModel(model) == WaveModel.QUADRATIC:
        return {"k -> 1: -24": targets["k_to_1"], "k -> 0: -24 pi": targets["k_to_0"]}
    return {
        "k -> 1: -2": targets["k_to_1"],
        "k -> 1, half-normalized: -1": targets["k_to_1_half_normalized"],
    }


def render_svg(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
    references: Mapping[str, float],
    xlabel: str = "k",
    ylabel: str = "index value",
    title: Optional[str] = None,
) -> str:
    """
    One polyline per series and a dashed horizontal line per reference value.

    A series with a single point is drawn as a marker.

    Raises:
        ValueError: If there is nothing to plot.
    """
    if not series or all(len(xs) == 0 for xs, _ in series.values()):
        raise ValueError("Refusing to render an empty figure.")

    with plt.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            for label, (xs, ys) in series.items():
                if len(xs) == 1:
                    ax.plot(xs, ys, linestyle="none", marker="o", label=label)
                else:
                    ax.plot(xs, ys, linewidth=1.5, label=label)
            for label, value in references.items():
                ax.axhline(value, linestyle="--", linewidth=1.0, color="0.4", label=label)
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            ax.legend(loc="best", fontsize=8)
            ax.grid(True, linewidth=0.3)
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata=SVG_METADATA)
        finally:
            plt.close(fig)
    return buffer.getvalue()


def plot_index_sweep(
    model: WaveModel,
    records: List[SweepRecord],
    path: str,
    value_keys: Sequence[str] = ("index",),
) -> None:
    """
    Write the index sweep figure of one model to `path`.

    Fail rows are left out of the polylines but still counted in the log.

    Raises:
        ValueError: If no record carries a plottable value.
    """
    model = WaveModel(model)
    usable = [record for record in records if record.status != RecordStatus.FAIL]
    series = {}
    for key in value_keys:
        points = [(record.k, record.values[key]) for record in usable if key in record.values]
        if points:
            series[key] = ([k for k, _ in points], [v for _, v in points])
    svg = render_svg(series, reference_lines(model), title=f"{model.value} stability index")
    atomic_write(path, svg)
    skipped = len(records) - len(usable)
    logger.info(f"✅ Wrote {path} ({len(usable)} points, {skipped} fail rows skipped)")
