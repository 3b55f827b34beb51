"""Plot-ready tables and figures from the aggregated results.

Every table is written as RFC-4180 CSV (UTF-8, CRLF) with fixed headers, a
single JSON bundle mirrors all of them, and the same data is rendered to PNG
figures next to the tables.  Tables and the bundle are deterministic given
the inputs; figures are best-effort rendering of the same numbers.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import CATEGORY_ORDER, CountryScore, EvalReport, InterlinkageGraph

COUNTRY_SCORES_CSV = "country_scores.csv"
CATEGORY_SHARES_CSV = "category_shares.csv"
EDGES_CSV = "interlinkage_edges.csv"
BUNDLE_JSON = "report.json"

_CATEGORY_COLORS = {"environment": "#2a9d8f", "society": "#e9c46a", "economy": "#e76f51"}


class ExportError(Exception):
    pass


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)  # csv defaults to RFC-4180 CRLF endings
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc


def export_report(
    scores: Sequence[CountryScore],
    shares: dict[str, dict[str, float]],
    graph: InterlinkageGraph,
    eval_report: EvalReport | None,
    outdir: str | Path,
    render_figures: bool = True,
) -> dict[str, Path]:
    """Write the three tables, the JSON bundle and (optionally) the figures.

    Returns a name → path map of everything written.
    """
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create output directory {out}: {exc}") from exc

    written: dict[str, Path] = {}

    scores_path = out / COUNTRY_SCORES_CSV
    _write_csv(
        scores_path,
        ["country", "mean_sentiment", "z", "n_paragraphs"],
        [(s.country, s.mean_sentiment, s.z, s.n_paragraphs) for s in scores],
    )
    written[COUNTRY_SCORES_CSV] = scores_path

    shares_path = out / CATEGORY_SHARES_CSV
    _write_csv(
        shares_path,
        ["country", *CATEGORY_ORDER],
        [
            (country, *(shares[country][cat] for cat in CATEGORY_ORDER))
            for country in sorted(shares)
        ],
    )
    written[CATEGORY_SHARES_CSV] = shares_path

    edges_path = out / EDGES_CSV
    _write_csv(
        edges_path,
        ["a", "b", "relationship", "weight"],
        graph.edge_list(),
    )
    written[EDGES_CSV] = edges_path

    bundle = {
        "countries": [
            {
                "country": s.country,
                "mean_sentiment": s.mean_sentiment,
                "z": s.z,
                "n_paragraphs": s.n_paragraphs,
            }
            for s in scores
        ],
        "category_shares": {c: shares[c] for c in sorted(shares)},
        "edges": [
            {"a": a, "b": b, "relationship": rel, "weight": w}
            for a, b, rel, w in graph.edge_list()
        ],
        "neutral_pairs": [
            {"a": a, "b": b, "count": n}
            for (a, b), n in sorted(graph.neutral_pairs.items())
        ],
        "eval": eval_report.as_dict() if eval_report else None,
    }
    bundle_path = out / BUNDLE_JSON
    bundle_path.write_text(json.dumps(bundle, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    written[BUNDLE_JSON] = bundle_path

    if render_figures:
        written.update(render_report_figures(scores, shares, graph, out / "figures"))
    return written


def render_report_figures(
    scores: Sequence[CountryScore],
    shares: dict[str, dict[str, float]],
    graph: InterlinkageGraph,
    figdir: str | Path,
) -> dict[str, Path]:
    figdir = Path(figdir)
    figdir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    if scores:
        fig, ax = plt.subplots(figsize=(7, max(2.0, 0.4 * len(scores))))
        countries = [s.country for s in scores]
        zs = [s.z for s in scores]
        ax.barh(countries, zs, color=["#457b9d" if z >= 0 else "#e63946" for z in zs])
        ax.axvline(0, color="black", linewidth=0.8)
        ax.set_xlabel("sentiment z-score")
        ax.set_title("Country climate-sentiment, standardized")
        fig.tight_layout()
        path = figdir / "country_zscores.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written["figures/country_zscores.png"] = path

    if shares:
        countries = sorted(shares)
        fig, ax = plt.subplots(figsize=(7, max(2.0, 0.4 * len(countries))))
        left = [0.0] * len(countries)
        for cat in CATEGORY_ORDER:
            values = [shares[c][cat] for c in countries]
            ax.barh(countries, values, left=left, label=cat, color=_CATEGORY_COLORS[cat])
            left = [l + v for l, v in zip(left, values)]
        ax.set_xlim(0, 1)
        ax.set_xlabel("share of tagged paragraphs")
        ax.set_title("SDG category shares by country")
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        path = figdir / "category_shares.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written["figures/category_shares.png"] = path

    fig, ax = plt.subplots(figsize=(7, 7))
    positions = {
        n: (math.cos(2 * math.pi * i / 17), math.sin(2 * math.pi * i / 17))
        for i, n in enumerate(graph.nodes)
    }
    for (a, b, rel), weight in sorted(graph.edges.items()):
        (x1, y1), (x2, y2) = positions[a], positions[b]
        ax.annotate(
            "",
            xy=(x2, y2),
            xytext=(x1, y1),
            arrowprops={
                "arrowstyle": "-|>",
                "color": "#2a9d8f" if rel == "synergy" else "#e63946",
                "lw": 0.8 + 0.6 * weight,
                "shrinkA": 12,
                "shrinkB": 12,
            },
        )
    for n, (x, y) in positions.items():
        ax.plot(x, y, "o", color="#264653", markersize=16)
        ax.text(x, y, str(n), color="white", ha="center", va="center", fontsize=8)
    ax.set_xlim(-1.3, 1.3)
    ax.set_ylim(-1.3, 1.3)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title("SDG interlinkages (green synergy, red trade-off)")
    fig.tight_layout()
    path = figdir / "interlinkage_graph.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written["figures/interlinkage_graph.png"] = path
    return written
