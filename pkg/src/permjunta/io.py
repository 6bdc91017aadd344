"""JSON and CSV input/output. Points are 1-based on disk and 0-based in memory."""

from __future__ import annotations

import csv
import io
import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from permjunta.errors import ParseError, PermJuntaError
from permjunta.exact import format_fraction
from permjunta.perm import PartialBijection, PermFamily, RestrictionClass

_RATIONAL = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or an integer; anything else (floats included) is rejected."""
    m = _RATIONAL.match(str(text))
    if not m:
        raise ParseError(f"{text!r} is not a rational of the form p/q")
    num, den = int(m.group(1)), int(m.group(2) or 1)
    if den == 0:
        raise ParseError(f"{text!r} has zero denominator")
    return Fraction(num, den)


def format_rational(value: Fraction | int) -> str:
    return format_fraction(value)


def _load(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _member_lines(text: str) -> list[int]:
    """Line number of each element of the top-level "members" array, best effort."""
    dec = json.JSONDecoder()
    key = text.find('"members"')
    pos = text.find("[", key) if key >= 0 else (text.find("[") if text.lstrip().startswith("[") else -1)
    if pos < 0:
        return []
    lines, pos = [], pos + 1
    while pos < len(text):
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text) or text[pos] == "]":
            break
        lines.append(text.count("\n", 0, pos) + 1)
        try:
            _, pos = dec.raw_decode(text, pos)
        except json.JSONDecodeError:
            break
    return lines


def _pairs(raw: Any, what: str, source: str) -> PartialBijection:
    if not isinstance(raw, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(v, int) for v in p) for p in raw
    ):
        raise ParseError(f"{source}: {what} must be a list of [point, value] pairs")
    try:
        return PartialBijection.from_one_based(raw)
    except (ValueError, PermJuntaError) as exc:
        raise ParseError(f"{source}: {what}: {exc}") from exc


def family_from_json(data: Any, source: str = "<family>", text: str | None = None) -> PermFamily:
    """Build a family from {"n": ..., "members": [[...], ...], "ambient": {"agree": ..., "disagree": ...}}."""
    if isinstance(data, list):
        data = {"members": data}
    if not isinstance(data, dict) or "members" not in data:
        raise ParseError(f"{source}: expected an object with a 'members' list")
    members = data["members"]
    if not isinstance(members, list):
        raise ParseError(f"{source}: 'members' must be a list")
    n = data.get("n")
    if n is None:
        if not members:
            raise ParseError(f"{source}: 'n' is required when the member list is empty")
        n = len(members[0]) if isinstance(members[0], list) else None
    if not isinstance(n, int) or n < 1:
        raise ParseError(f"{source}: 'n' must be a positive integer")
    amb_raw = data.get("ambient") or {}
    if not isinstance(amb_raw, dict):
        raise ParseError(f"{source}: 'ambient' must be an object")
    agree = _pairs(amb_raw.get("agree", []), "ambient.agree", source)
    disagree = _pairs(amb_raw.get("disagree", []), "ambient.disagree", source)
    try:
        ambient = RestrictionClass(n, (agree,) if agree else (), (disagree,) if disagree else ())
    except (ValueError, PermJuntaError) as exc:
        raise ParseError(f"{source}: ambient: {exc}") from exc
    perms = []
    lines = _member_lines(text) if text is not None else []
    for k, m in enumerate(members):
        where = f"member {k + 1}" + (f" (line {lines[k]})" if k < len(lines) else "")
        if not isinstance(m, list) or not all(isinstance(v, int) for v in m):
            raise ParseError(f"{source}: {where} is not a list of integers")
        if len(m) != n:
            raise ParseError(f"{source}: {where} has length {len(m)} but n = {n}")
        if sorted(m) != list(range(1, n + 1)):
            raise ParseError(f"{source}: {where} {m} is not a permutation of 1..{n}")
        p = tuple(v - 1 for v in m)
        if not ambient.contains(p):
            raise ParseError(f"{source}: {where} {m} lies outside the ambient {ambient}")
        perms.append(p)
    return PermFamily(ambient, frozenset(perms))


def parse_family(text: str, source: str = "<family>") -> PermFamily:
    return family_from_json(_load(text, source), source, text)


def read_family(path: str | Path) -> PermFamily:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_family(text, str(path))


def dumps(data: Any) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(data: Any, path: str | Path | None) -> str:
    text = dumps(data)
    if path is not None:
        Path(path).write_text(text)
    return text


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


__all__ = [
    "dumps",
    "family_from_json",
    "format_rational",
    "parse_family",
    "parse_rational",
    "read_family",
    "to_csv",
    "write_json",
]
