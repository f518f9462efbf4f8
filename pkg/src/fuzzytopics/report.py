"""Report serialization (CSV + line-delimited JSON) and SVG scatter plots."""

from __future__ import annotations

import colorsys
import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .membership import MembershipMatrix
from .pipeline import TopicReport
from .tsne import Projection

ASSIGNMENTS_NAME = "assignments.csv"
TOPICS_NAME = "topics.json-lines"
RUN_META_NAME = "run_meta"


@dataclass(frozen=True)
class RenderSpec:
    width: int = 1024
    height: int = 768
    margin: float = 40.0
    point_radius: float = 3.0
    hue_value: float = 0.85
    noise_color: str = "#999999"
    background: str = "#ffffff"


def format_membership(value: float) -> str:
    """Six significant digits, the precision the report tables carry."""
    return f"{value:.6g}"


def write_report(report: TopicReport, out_dir: str | Path) -> None:
    """Write assignments.csv, topics.json-lines, and run_meta.

    The CSV and topics files are byte-deterministic for a fixed report;
    run_meta additionally carries wall-clock timings.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with (out / ASSIGNMENTS_NAME).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["topic_label", "article_id", "title", "cluster_m"])
        for topic in report.topics:
            for row in topic.members:
                writer.writerow(
                    [
                        topic.label,
                        row.document.id,
                        row.document.title,
                        format_membership(row.membership),
                    ]
                )

    meta = dict(report.run_metadata)
    timings = meta.pop("timings", {})
    with (out / TOPICS_NAME).open("w", encoding="utf-8") as handle:
        handle.write(_json_line({"record": "run", **meta}))
        for topic in report.topics:
            handle.write(
                _json_line(
                    {
                        "record": "topic",
                        "label": topic.label,
                        "phase1_parent": topic.phase1_parent,
                        "persistence": float(topic.persistence),
                        "exemplar_article_ids": list(topic.exemplar_ids),
                        "member_count": len(topic.members),
                        "representative_article_ids": [
                            row.document.id for row in topic.representatives
                        ],
                    }
                )
            )
        labels_by_source = {topic.source: topic.label for topic in report.topics}
        for result_index, result in enumerate(report.phase2):
            labels = [
                labels_by_source[(result_index, c)]
                for c in range(result.membership.n_clusters)
            ]
            for local, original in enumerate(result.indices):
                doc = report.documents[original]
                handle.write(
                    _json_line(
                        {
                            "record": "document",
                            "article_id": doc.id,
                            "phase1_parent": result.parent_topic,
                            "p_any": float(result.membership.p_any[local]),
                            "conditional": _vector(
                                labels, result.membership.conditional[local]
                            ),
                            "joint": _vector(labels, result.membership.joint[local]),
                        }
                    )
                )

    run_meta = dict(report.run_metadata)
    run_meta["timings"] = dict(timings)
    with (out / RUN_META_NAME).open("w", encoding="utf-8") as handle:
        handle.write(json.dumps(run_meta, sort_keys=True, indent=2) + "\n")


def _json_line(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _vector(labels: list[str], row: np.ndarray) -> dict[str, float]:
    return {label: float(v) for label, v in zip(labels, row)}


def cluster_color(cluster: int, n_clusters: int, membership: float, spec: RenderSpec) -> str:
    """Evenly spaced hues; saturation rises linearly with membership."""
    hue = cluster / max(n_clusters, 1)
    saturation = float(min(max(membership, 0.0), 1.0))
    r, g, b = colorsys.hsv_to_rgb(hue, saturation, spec.hue_value)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


def render_scatter(
    projection: Projection,
    membership: MembershipMatrix,
    spec: RenderSpec,
    out: str | Path,
) -> None:
    """One SVG marker per point: hue by argmax cluster, saturation by joint
    membership, gray for noise."""
    coords = projection.coords
    if coords.shape[0] != membership.joint.shape[0]:
        raise ValueError("projection and membership cover different points")
    n_clusters = membership.n_clusters
    if n_clusters > 0:
        best = membership.joint.argmax(axis=1)
        values = membership.joint[np.arange(coords.shape[0]), best]
    else:
        best = np.zeros(coords.shape[0], dtype=np.int64)
        values = np.zeros(coords.shape[0])

    span = spec.margin, spec.width - spec.margin, spec.height - spec.margin
    xs = _scale(coords[:, 0], span[0], span[1])
    ys = _scale(coords[:, 1], span[0], span[2])

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}"'
        f' height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="{spec.background}"/>',
    ]
    for i in range(coords.shape[0]):
        if values[i] <= 0.0:
            color = spec.noise_color
        else:
            color = cluster_color(int(best[i]), n_clusters, float(values[i]), spec)
        # SVG y grows downward; flip so the plot reads like the projection.
        lines.append(
            f'<circle cx="{xs[i]:.2f}" cy="{spec.height - ys[i]:.2f}"'
            f' r="{spec.point_radius:g}" fill="{color}"/>'
        )
    lines.append("</svg>")
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _scale(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin <= 0.0:
        return np.full(values.shape, (lo + hi) / 2.0)
    return lo + (values - vmin) * (hi - lo) / (vmax - vmin)


def write_plots(report: TopicReport, out_dir: str | Path, spec: RenderSpec | None = None) -> list[Path]:
    """scatter_phase1.svg plus one scatter per phase-2 parent topic."""
    spec = spec or RenderSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "scatter_phase1.svg"
    render_scatter(report.phase1.projection, report.phase1.membership, spec, path)
    written.append(path)
    for result in report.phase2:
        if result.parent_topic is None:
            name = "scatter_topic_global.svg"
        else:
            name = f"scatter_topic_{result.parent_topic + 1}.svg"
        path = out / name
        render_scatter(result.projection, result.membership, spec, path)
        written.append(path)
    return written
