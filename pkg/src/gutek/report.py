"""Rendering explanations as JSON payloads and self-contained HTML.

The HTML view shows the original text with one highlighted span per
unit: green for positive attribution toward the target class, red for
negative, intensity proportional to the score's share of the largest
absolute score.  Everything is inline so the file can be mailed around.
"""

from __future__ import annotations

import html
import json

from .surrogate import Explanation

__all__ = ["explanation_to_json", "render_html"]


def explanation_to_json(
    explanation: Explanation,
    model_id: str | None = None,
    budget: int | None = None,
    seed: int | None = None,
) -> dict:
    doc = explanation.document
    return {
        "method": explanation.method,
        "granularity": doc.granularity,
        "model_id": model_id,
        "target_class": explanation.target_class,
        "target_label": explanation.target_label,
        "intercept": explanation.intercept,
        "fit_r2": explanation.fit_r2,
        "n_samples": explanation.n_samples,
        "budget": budget,
        "seed": seed,
        "text": doc.text,
        "units": [
            {
                "index": seg.index,
                "char_start": seg.char_start,
                "char_end": seg.char_end,
                "text": doc.segment_text(seg.index),
                "score": score,
            }
            for seg, score in zip(doc.segments, explanation.unit_scores)
        ],
    }


_STYLE = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 46rem;
       line-height: 1.6; color: #1c1c1c; background: #fdfdfb; }
h1 { font-size: 1.3rem; }
.meta { font-size: 0.85rem; color: #555; border-bottom: 1px solid #ddd;
        padding-bottom: 0.8rem; }
.meta span { margin-right: 1.2rem; white-space: nowrap; }
.doc { white-space: pre-wrap; margin-top: 1.2rem; }
.unit { border-radius: 3px; padding: 0 1px; }
table { border-collapse: collapse; margin-top: 1.6rem; font-size: 0.85rem; }
td, th { border: 1px solid #ccc; padding: 2px 8px; text-align: left; }
.legend { margin-top: 1.6rem; font-size: 0.8rem; color: #555; }
"""


def _unit_style(score: float, max_abs: float) -> str:
    if score == 0.0 or max_abs == 0.0:
        return ""
    alpha = 0.08 + 0.72 * (abs(score) / max_abs)
    if score > 0:
        return f"background: rgba(30, 140, 60, {alpha:.3f});"
    return f"background: rgba(205, 50, 40, {alpha:.3f});"


def _fmt(value: float) -> str:
    return format(value, ".6g")


def render_html(
    explanation: Explanation,
    model_id: str | None = None,
    budget: int | None = None,
    seed: int | None = None,
) -> str:
    doc = explanation.document
    max_abs = max((abs(s) for s in explanation.unit_scores), default=0.0)

    body: list[str] = []
    cursor = 0
    for seg, score in zip(doc.segments, explanation.unit_scores):
        if seg.char_start > cursor:
            body.append(html.escape(doc.text[cursor : seg.char_start]))
        style = _unit_style(score, max_abs)
        body.append(
            f'<span class="unit" style="{style}" title="unit {seg.index}:'
            f' {_fmt(score)}">{html.escape(doc.segment_text(seg.index))}</span>'
        )
        cursor = seg.char_end
    if cursor < len(doc.text):
        body.append(html.escape(doc.text[cursor:]))

    rows = "\n".join(
        f"<tr><td>{seg.index}</td><td>{_fmt(score)}</td>"
        f"<td>{html.escape(doc.segment_text(seg.index))}</td></tr>"
        for seg, score in zip(doc.segments, explanation.unit_scores)
    )
    meta_bits = [
        f"<span>model: {html.escape(model_id or 'unknown')}</span>",
        f"<span>method: {html.escape(explanation.method)}</span>",
        f"<span>granularity: {html.escape(doc.granularity)}</span>",
        f"<span>target: {html.escape(str(explanation.target_label))}"
        f" (class {explanation.target_class})</span>",
        f"<span>intercept: {_fmt(explanation.intercept)}</span>",
        f"<span>fit r2: {_fmt(explanation.fit_r2)}</span>",
        f"<span>samples: {explanation.n_samples}</span>",
    ]
    if budget is not None:
        meta_bits.append(f"<span>budget: {budget}</span>")
    if seed is not None:
        meta_bits.append(f"<span>seed: {seed}</span>")

    return (
        "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        "<title>explanation</title>\n"
        f"<style>{_STYLE}</style>\n</head>\n<body>\n"
        "<h1>Explanation</h1>\n"
        f'<p class="meta">{" ".join(meta_bits)}</p>\n'
        f'<div class="doc">{"".join(body)}</div>\n'
        "<table>\n<tr><th>unit</th><th>score</th><th>text</th></tr>\n"
        f"{rows}\n</table>\n"
        '<p class="legend">Green pushes the model toward the target class,'
        " red away from it; intensity is the score relative to the largest"
        " absolute score.</p>\n"
        "</body>\n</html>\n"
    )


def _jsonable(value):
    if isinstance(value, float):
        return value if value == value and abs(value) != float("inf") else None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def dumps(payload: dict) -> str:
    """Stable JSON text for CLI outputs (two-space indent, no NaN/inf)."""

    return json.dumps(_jsonable(payload), indent=2, allow_nan=False) + "\n"
