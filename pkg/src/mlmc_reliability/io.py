"""File formats: system and partition JSON, result JSON and CSV tables.

Every write goes to a temporary file in the target directory which is then
renamed over the destination, so an interrupted run never leaves a
half-written output behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from .distributions import ParameterError, dist_from_dict
from .levels import LevelPartition
from .simulator import ContractError
from .system import Component, Network, StructureError, System, canonical_cutsets

__all__ = [
    "FormatError",
    "system_to_dict",
    "system_from_dict",
    "read_system",
    "write_system",
    "read_partition",
    "write_partition",
    "read_json",
    "write_json",
    "write_csv",
    "atomic_write",
    "sha256_file",
]


class FormatError(ValueError):
    """Malformed input file; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _jsonable(obj.item())
    return obj


def write_json(path, obj: Any) -> None:
    text = json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"
    atomic_write(path, text.encode("utf-8"))


def read_json(path) -> Any:
    try:
        with open(path, "rb") as fh:
            return json.loads(fh.read().decode("utf-8"))
    except FileNotFoundError:
        raise FormatError(str(path), "file not found") from None
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(str(path), f"not valid UTF-8 JSON ({exc})") from None


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Comma-separated, '.' decimal point, LF line endings, one header row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue().encode("utf-8"))


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# --- systems -------------------------------------------------------------------


def system_to_dict(sys: System) -> dict:
    d = {
        "components": [
            {
                "id": i + 1,
                "lifetime": c.lifetime.to_dict(),
                "repair": None if c.repair is None else c.repair.to_dict(),
            }
            for i, c in enumerate(sys.components)
        ],
        "edges": [list(e) for e in sys.network.edges],
        "source": sys.network.source,
        "sink": sys.network.sink,
    }
    if sys.cutsets is not None:
        d["cutsets"] = [list(c) for c in sys.cutsets]
    if sys.move_log is not None:
        d["move_log"] = sys.move_log
    return d


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"{where}{key}", "missing field")
    return d[key]


def _int(x, field: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(field, f"expected an integer, got {x!r}")
    return x


def system_from_dict(d: dict) -> System:
    """Parse and validate a system document; errors name the bad field."""
    if not isinstance(d, dict):
        raise FormatError("<root>", "expected a JSON object")
    raw = _require(d, "components", "")
    if not isinstance(raw, list) or not raw:
        raise FormatError("components", "expected a non-empty list")
    comps: list[Component] = []
    for k, c in enumerate(raw):
        where = f"components[{k}]."
        cid = _int(_require(c, "id", where), where + "id")
        if cid != k + 1:
            raise FormatError(where + "id", f"expected id {k + 1}, got {cid}")
        try:
            life = dist_from_dict(_require(c, "lifetime", where))
        except (ParameterError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(where + "lifetime", str(exc)) from None
        rep = c.get("repair")
        try:
            repair = None if rep is None else dist_from_dict(rep)
        except (ParameterError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(where + "repair", str(exc)) from None
        comps.append(Component(life, repair))
    n = len(comps)
    edges_raw = _require(d, "edges", "")
    if not isinstance(edges_raw, list):
        raise FormatError("edges", "expected a list of [from, to] pairs")
    edges = []
    for k, e in enumerate(edges_raw):
        if not (isinstance(e, list) and len(e) == 2):
            raise FormatError(f"edges[{k}]", f"expected a [from, to] pair, got {e!r}")
        edges.append((_int(e[0], f"edges[{k}][0]"), _int(e[1], f"edges[{k}][1]")))
    source = _int(d.get("source", 0), "source")
    sink = _int(d.get("sink", n + 1), "sink")
    try:
        net = Network(n, tuple(edges), source=source, sink=sink)
        net.check()
    except StructureError as exc:
        raise FormatError("edges", str(exc)) from None
    cuts = None
    if d.get("cutsets") is not None:
        cuts_raw = d["cutsets"]
        if not isinstance(cuts_raw, list):
            raise FormatError("cutsets", "expected a list of component-id lists")
        parsed = []
        for k, c in enumerate(cuts_raw):
            if not isinstance(c, list) or not c:
                raise FormatError(f"cutsets[{k}]", "expected a non-empty list of component ids")
            ids = [_int(x, f"cutsets[{k}]") for x in c]
            if any(not 1 <= x <= n for x in ids):
                raise FormatError(f"cutsets[{k}]", f"component ids must lie in 1..{n}")
            parsed.append(tuple(ids))
        cuts = canonical_cutsets(parsed)
        dup = next((c for a, c in zip(cuts, cuts[1:]) if a == c), None)
        if dup is not None:
            raise FormatError("cutsets", f"duplicate cut set {list(dup)}")
    return System(net, comps, cuts, d.get("move_log"))


def read_system(path) -> System:
    return system_from_dict(read_json(path))


def write_system(path, sys: System) -> None:
    write_json(path, system_to_dict(sys))


def read_partition(path) -> LevelPartition:
    d = read_json(path)
    try:
        return LevelPartition.from_dict(d)
    except KeyError as exc:
        raise FormatError(f"levels.{exc.args[0]}" if exc.args else "levels", "missing field") from None
    except (TypeError, ValueError, ContractError) as exc:
        raise FormatError("levels", str(exc)) from None


def write_partition(path, part: LevelPartition, extra: dict | None = None) -> None:
    d = part.to_dict()
    if extra:
        d.update(extra)
    write_json(path, d)
