"""
Report envelopes, schema validation and atomic JSON/CSV output.
"""
import json
import math
from datetime import datetime

import pandas as pd

from utils.helpers import atomic_write

CSV_COLUMNS = ["n", "value", "err", "verdict_contribution"]

VERDICT_LABELS = {
    "ConvergesAtHorizon", "FailsAtHorizon", "Inconclusive",
    "member", "not-member", "unknown",
    "synthesized", "Finite", "Infinite", "ok", "failed",
}

# --- PUBLISHED REPORT SCHEMA ---
REPORT_SCHEMA = {
    "tool": str,
    "command": str,
    "source": str,
    "verdict": str,
    "exit_code": int,
    "created_at": str,
    "settings": dict,
    "report": dict,
}


def sanitize(obj):
    """JSON-safe copy: infinities become "inf"/"-inf", NaN becomes null."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    return obj


def build_envelope(command, source, verdict, exit_code, report, settings=None):
    return sanitize({
        "tool": "convlab",
        "command": command,
        "source": source,
        "verdict": verdict,
        "exit_code": int(exit_code),
        "created_at": datetime.now().isoformat(timespec="seconds"),
        "settings": dict(settings or {}),
        "report": report,
    })


def validate_report(doc):
    """Returns (True, []) if doc matches the report schema, else (False, [messages])."""
    errors = []
    if not isinstance(doc, dict):
        return False, ["Report must be a JSON object"]
    for key, typ in REPORT_SCHEMA.items():
        if key not in doc:
            errors.append(f"missing key '{key}'")
        elif not isinstance(doc[key], typ) or (typ is int and isinstance(doc[key], bool)):
            errors.append(f"key '{key}' must be {typ.__name__}")
    if isinstance(doc.get("verdict"), str) and doc["verdict"] not in VERDICT_LABELS:
        errors.append(f"unknown verdict '{doc['verdict']}'")
    if isinstance(doc.get("report"), dict) and "kind" not in doc["report"]:
        errors.append("report has no 'kind'")
    return (not errors), errors


def to_json(envelope) -> str:
    return json.dumps(sanitize(envelope), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def rows_frame(rows) -> pd.DataFrame:
    """Fixed leading columns n, value, err, verdict_contribution; extras follow in first-seen order."""
    df = pd.DataFrame(list(rows))
    if df.empty:
        return pd.DataFrame(columns=CSV_COLUMNS)
    extras = [c for c in df.columns if c not in CSV_COLUMNS]
    for c in CSV_COLUMNS:
        if c not in df.columns:
            df[c] = None
    return df[CSV_COLUMNS + extras]


def write_report(envelope, rows, path, fmt="json"):
    if fmt == "csv":
        text = rows_frame(rows).to_csv(index=False)
    else:
        text = to_json(envelope)
    atomic_write(path, text)
    return path
