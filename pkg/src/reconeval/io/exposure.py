"""Exposure sidecar parsing: CSV files mapping image names to exposures."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from ..errors import ParseError


@dataclass(frozen=True)
class ExposureRecord:
    name: str
    exposure: float  # seconds or a relative factor; must be positive


def parse_exposure_csv(path) -> list[ExposureRecord]:
    """Parse a "name,exposure" CSV into records, preserving row order."""
    records: list[ExposureRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header 'name,exposure'") from None
        if [h.strip() for h in header] != ["name", "exposure"]:
            raise ParseError(
                f"{path}: expected header 'name,exposure', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 columns at line {lineno}, got {len(row)}")
            name = row[0].strip()
            if not name:
                raise ParseError(f"{path}: empty image name at line {lineno}")
            try:
                exposure = float(row[1])
            except ValueError:
                raise ParseError(f"{path}: bad exposure value '{row[1]}' at line {lineno}") from None
            if not exposure > 0.0:
                raise ParseError(f"{path}: exposure must be positive at line {lineno}")
            if name in seen:
                raise ParseError(f"{path}: duplicate image name '{name}' at line {lineno}")
            seen.add(name)
            records.append(ExposureRecord(name, exposure))
    return records
