"""Small shared helpers: lenient JSON recovery, stable hashing, text shaping."""

import hashlib
import json
from typing import Any, Optional


def stable_token_hash(token: str) -> int:
    """Deterministic 64-bit hash of a token (process-independent)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def extract_json_object(text: str) -> Optional[Any]:
    """Parse a JSON object out of a model reply, tolerating surrounding prose.

    First tries the whole string; on failure performs one repair pass: scan
    from the first '{' to its matching '}' (string-aware bracket counting)
    and parse that slice. Returns None when no object can be recovered.
    """
    text = text.strip()
    try:
        value = json.loads(text)
        if isinstance(value, dict):
            return value
    except (json.JSONDecodeError, ValueError):
        pass

    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                try:
                    value = json.loads(text[start : i + 1])
                except (json.JSONDecodeError, ValueError):
                    return None
                return value if isinstance(value, dict) else None
    return None


def parse_seconds(value: Any) -> Optional[float]:
    """Lenient timestamp parse: numbers, '12.5', '12.5s', 'MM:SS', 'HH:MM:SS'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        return None
    text = value.strip().lower().rstrip("s").strip()
    if not text:
        return None
    if ":" in text:
        parts = text.split(":")
        if len(parts) > 3:
            return None
        try:
            fields = [float(p) for p in parts]
        except ValueError:
            return None
        seconds = 0.0
        for f in fields:
            seconds = seconds * 60.0 + f
        return seconds
    try:
        return float(text)
    except ValueError:
        return None


def fmt_seconds(t: float) -> str:
    """Compact decimal-seconds formatting: 5.0 -> '5', 12.5 -> '12.5'."""
    out = f"{t:.3f}".rstrip("0").rstrip(".")
    return out if out else "0"


def truncate_payload(text: str, budget: int) -> str:
    """Clip rendered payloads to the budget with an explicit marker."""
    if len(text) <= budget:
        return text
    marker = "...[truncated]"
    return text[: max(0, budget - len(marker))] + marker


def content_digest(text: str, keep: int = 200) -> str:
    """Compress long content to a prefix plus a short stable fingerprint."""
    if len(text) <= keep:
        return text
    tail = hashlib.blake2b(text.encode("utf-8"), digest_size=4).hexdigest()
    return f"{text[:keep]}...[{len(text)}ch:{tail}]"
