"""Render report payloads as markdown, CSV or JSON.

A payload is a JSON-ready dict with a ``kind`` key (``mcg``, ``welch``,
``roi``, ``fit``). The JSON form keeps full precision; markdown rounds for
display.
"""

from __future__ import annotations

import csv
import io
import json

from cogeval.errors import ValidationError
from cogeval.mcg import PlausibilityResult, display, mcg_summary, mcg_tables
from cogeval.stats import ComparisonRow, comparison_markdown

FORMATS = ("md", "csv", "json")


def mcg_payload(result: PlausibilityResult) -> dict:
    return {
        "kind": "mcg",
        "summary": mcg_summary(result),
        "tables": [
            {"name": t.name, "title": t.title, "columns": t.columns, "rows": t.rows}
            for t in mcg_tables(result)
        ],
    }


def welch_payload(rows, clamp: float, n_clamped=None) -> dict:
    return {
        "kind": "welch",
        "clamp": clamp,
        "n_clamped": dict(n_clamped or {}),
        "rows": [r.to_dict() for r in rows],
    }


def roi_payload(summaries) -> dict:
    """``summaries``: iterable of ``(model name, SimilaritySummary)``."""
    return {"kind": "roi", "rows": [{"model": name, **s.to_dict()} for name, s in summaries]}


def _md_table(columns, rows) -> str:
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    lines += ["| " + " | ".join(rows_) + " |" for rows_ in rows]
    return "\n".join(lines) + "\n"


def _mcg_cell(v) -> str:
    if v is None:
        return "/"
    if isinstance(v, str):
        return v
    return display(v)


def _fmt4(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


ROI_COLUMNS = (
    ("model", "Model"),
    ("mean_pearson", "Mean Pearson"),
    ("mean_cosine", "Mean Cosine"),
    ("mean_mse", "Mean MSE"),
    ("mean_rmse", "Mean RMSE"),
    ("mean_mae", "Mean MAE"),
    ("mean_euclidean", "Mean Euclidean"),
    ("n_decisions", "Decisions"),
    ("n_undefined_pearson", "Undefined Pearson"),
    ("n_undefined_cosine", "Undefined Cosine"),
)


WELCH_COLUMNS = ("model", "baseline", "delta_nll", "t", "df", "p", "degenerate")


def render_md(payload: dict) -> str:
    kind = payload.get("kind")
    if kind == "mcg":
        parts = []
        for t in payload["tables"]:
            rows = [[_mcg_cell(v) for v in row] for row in t["rows"]]
            parts.append(f"### {t['title']}\n\n" + _md_table(t["columns"], rows))
        return "\n".join(parts)
    if kind == "welch":
        rows = [ComparisonRow(r["model"], r["baseline"], r["delta_nll"], r["t"], r["df"], r["p"],
                              r.get("degenerate", False)) for r in payload["rows"]]
        return comparison_markdown(rows)
    if kind == "roi":
        return _md_table([c[1] for c in ROI_COLUMNS],
                         [[_fmt4(r[k]) for k, _ in ROI_COLUMNS] for r in payload["rows"]])
    if kind == "fit":
        p = payload["params"]
        return _md_table(["alpha", "beta", "w", "perseveration", "mean NLL"],
                         [[_fmt4(p["alpha"]), _fmt4(p["beta"]), _fmt4(p["w"]),
                           _fmt4(p["perseveration"]), _fmt4(payload["mean_nll"])]])
    raise ValidationError(f"unknown report kind {kind!r}")


def render_csv(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    kind = payload.get("kind")
    if kind == "mcg":
        writer.writerow(["table", "row", "column", "value"])
        for t in payload["tables"]:
            for row in t["rows"]:
                for col, v in zip(t["columns"][1:], row[1:]):
                    writer.writerow([t["name"], row[0], col, "" if v is None else repr(v) if isinstance(v, float) else v])
    elif kind in ("welch", "roi"):
        rows = payload["rows"]
        # fixed column order so a re-render of the sorted JSON matches the original
        cols = list(WELCH_COLUMNS) if kind == "welch" else [k for k, _ in ROI_COLUMNS]
        writer.writerow(cols)
        for r in rows:
            writer.writerow(["" if r[c] is None else repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    elif kind == "fit":
        writer.writerow(["alpha", "beta", "w", "perseveration", "mean_nll"])
        p = payload["params"]
        writer.writerow([repr(p["alpha"]), repr(p["beta"]), repr(p["w"]), repr(p["perseveration"]),
                         repr(payload["mean_nll"])])
    else:
        raise ValidationError(f"unknown report kind {kind!r}")
    return buf.getvalue()


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render(payload: dict, fmt: str) -> str:
    if fmt == "md":
        return render_md(payload)
    if fmt == "csv":
        return render_csv(payload)
    if fmt == "json":
        return render_json(payload)
    raise ValidationError(f"unknown format {fmt!r}; choose from {FORMATS}")


def write_report(payload: dict, prefix) -> list:
    """Write ``prefix.md``, ``prefix.csv`` and ``prefix.json``; return the paths."""
    paths = []
    for fmt in FORMATS:
        path = f"{prefix}.{fmt}"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render(payload, fmt))
        paths.append(path)
    return paths
