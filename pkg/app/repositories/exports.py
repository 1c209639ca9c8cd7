import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

import orjson
from pydantic import BaseModel

from app.schemas.tree import LeafRecord, TreeDocument

_JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE


def dump_json(model: BaseModel) -> bytes:
    return orjson.dumps(model.model_dump(mode="json"), option=_JSON_OPTIONS)


def write_tree_json(path: Path, document: TreeDocument) -> None:
    _ensure_parent(path)
    path.write_bytes(dump_json(document))


def load_tree_json(path: Path) -> TreeDocument:
    return TreeDocument.model_validate(orjson.loads(path.read_bytes()))


def write_leaves_csv(path: Path, leaves: Iterable[LeafRecord]) -> None:
    write_records_csv(path, list(leaves), fields=list(LeafRecord.model_fields))


def write_edges_csv(path: Path, edges: Iterable[tuple[int, int]]) -> None:
    _ensure_parent(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "j"])
        writer.writerows(edges)


def write_records_csv(
    path: Path, records: Sequence[BaseModel], *, fields: list[str]
) -> None:
    """Write pydantic records as CSV with a header row; None becomes an empty cell."""
    _ensure_parent(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(fields)
        for record in records:
            data = record.model_dump()
            writer.writerow([_cell(data[name]) for name in fields])


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ";".join(_cell(item) for item in value)
    return str(value)


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
