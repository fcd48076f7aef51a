"""Text formats shared by the library and the CLI."""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence


def fmt(x) -> str:
    """17 significant digits, round-trippable."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def _value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isfinite(x):
            return fmt(x)
        return json.dumps(fmt(x))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, Mapping):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def json_record(rec: Mapping) -> str:
    """One JSON object on a single line with floats at 17 significant digits."""
    return _value(rec)


def write_records(path, records: Iterable[Mapping]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json_record(rec) + "\n")


def read_records(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def format_table(header: Sequence[str], rows: Iterable[Sequence], delimiter: str = ",") -> str:
    lines = [delimiter.join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, str)) and not isinstance(v, bool):
                cells.append(str(v))
            else:
                cells.append(fmt(v))
        lines.append(delimiter.join(cells))
    return "\n".join(lines) + "\n"


def read_table(path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(delimiter)
    return header, [ln.split(delimiter) for ln in lines[1:]]
