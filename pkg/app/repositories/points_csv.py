import csv
from pathlib import Path

from app.core.errors import InputError
from app.core.logging import get_logger
from app.domain.geometry import PointSet, build_point_set

logger = get_logger(__name__)


def read_points_csv(path: Path, *, skip_header: bool = False) -> PointSet:
    """Read one point per row of decimal floats.

    Blank lines are ignored. Raises InputError for unreadable files, cells
    that are not numbers, and anything `build_point_set` rejects.
    """
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            if skip_header:
                next(reader, None)
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise InputError(f"Cannot read points file '{path}': {exc}", kind="io") from exc

    parsed: list[list[float]] = []
    for line_no, row in enumerate(rows, start=2 if skip_header else 1):
        try:
            parsed.append([float(cell) for cell in row])
        except ValueError as exc:
            raise InputError(
                f"Row {line_no} of '{path}' is not numeric: {row}", kind="invalid_value"
            ) from exc

    if not parsed:
        raise InputError(f"Points file '{path}' contains no rows.", kind="empty")

    points = build_point_set(parsed)
    logger.debug("Read %d points of dimension %d from %s", points.n, points.d, path)
    return points
