"""Classical data to be loaded: amplitude/pattern records and file readers.

JSON layout::

    {"n": 3, "records": [{"pattern": "000", "re": 0.547, "im": 0.0}, ...]}

CSV layout: header ``pattern,re,im`` (``im`` optional), ``n`` taken from the
pattern width.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DatasetError, NormalizationError

NORMALIZED_TOL = 1e-9


@dataclass(frozen=True)
class DataRecord:
    amplitude: complex
    pattern: str

    def __post_init__(self):
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not math.isfinite(self.amplitude.real) or not math.isfinite(self.amplitude.imag):
            raise DatasetError(f"non-finite amplitude for pattern {self.pattern!r}")

    @property
    def index(self) -> int:
        return int(self.pattern, 2)


@dataclass(frozen=True)
class Dataset:
    """Ordered records with distinct ``n``-bit patterns.

    ``normalized`` records whether the amplitudes have unit norm; pass
    ``None`` to have it detected.  Setting it explicitly to ``True`` for data
    that is not normalized raises :class:`NormalizationError`.
    """

    records: tuple[DataRecord, ...]
    n: int
    normalized: Optional[bool] = None

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        n = int(self.n)
        if n < 1:
            raise DatasetError(f"pattern width n must be >= 1, got {n}")
        if not records:
            raise DatasetError("dataset has no records")
        seen: dict[str, int] = {}
        for k, rec in enumerate(records):
            p = rec.pattern
            if len(p) != n or set(p) - {"0", "1"}:
                raise DatasetError(f"record {k}: pattern {p!r} is not a {n}-bit binary string")
            if p in seen:
                raise DatasetError(f"record {k}: pattern {p!r} duplicates record {seen[p]}")
            seen[p] = k
        if len(records) > 2**n:
            raise DatasetError(f"{len(records)} records exceed 2^{n} patterns")
        unit = abs(self.norm_squared - 1.0) <= NORMALIZED_TOL
        if self.normalized is None:
            object.__setattr__(self, "normalized", unit)
        elif self.normalized and not unit:
            raise NormalizationError(
                f"dataset flagged normalized but sum |x_k|^2 = {self.norm_squared:.15g}"
            )

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[complex, str]], n: int | None = None, normalized=None) -> "Dataset":
        records = tuple(DataRecord(x, p) for x, p in pairs)
        if n is None:
            if not records:
                raise DatasetError("dataset has no records")
            n = len(records[0].pattern)
        return cls(records, n, normalized)

    @classmethod
    def from_patterns(cls, patterns: Sequence[str]) -> "Dataset":
        """Binary patterns with uniform amplitude ``1/sqrt(M)``."""
        m = len(patterns)
        if m == 0:
            raise DatasetError("dataset has no records")
        return cls.from_pairs([(1 / math.sqrt(m), p) for p in patterns])

    @property
    def M(self) -> int:
        return len(self.records)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([r.amplitude for r in self.records], dtype=np.complex128)

    @property
    def patterns(self) -> list[str]:
        return [r.pattern for r in self.records]

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(r.amplitude) ** 2 for r in self.records))

    @property
    def is_real(self) -> bool:
        return all(abs(r.amplitude.imag) <= 1e-12 for r in self.records)

    def with_amplitudes(self, amplitudes: Sequence[complex], normalized=None) -> "Dataset":
        recs = tuple(replace(r, amplitude=complex(a)) for r, a in zip(self.records, amplitudes))
        return Dataset(recs, self.n, normalized)

    def require_normalized(self, what: str = "this encoder") -> None:
        if not self.normalized:
            raise NormalizationError(
                f"{what} needs normalized data (sum |x_k|^2 = {self.norm_squared:.15g}); "
                "normalize the amplitudes first"
            )


def _dataset_from_rows(rows: Iterable[dict], n: int | None, source: str) -> Dataset:
    pairs = []
    for k, row in enumerate(rows):
        try:
            pattern = str(row["pattern"]).strip()
            re_ = float(row.get("re", 0.0) or 0.0)
            im_ = float(row.get("im", 0.0) or 0.0)
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{source}: record {k} is malformed ({exc})") from None
        pairs.append((complex(re_, im_), pattern))
    if not pairs:
        raise DatasetError(f"{source}: no records")
    return Dataset.from_pairs(pairs, n)


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset from ``.json`` or ``.csv`` (decided by extension)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return _dataset_from_rows(csv.DictReader(text.splitlines()), None, str(path))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or "records" not in doc:
        raise DatasetError(f"{path}: expected an object with 'n' and 'records'")
    n = doc.get("n")
    return _dataset_from_rows(doc["records"], None if n is None else int(n), str(path))


def dataset_to_json(data: Dataset) -> str:
    doc = {
        "n": data.n,
        "records": [
            {"pattern": r.pattern, "re": r.amplitude.real, "im": r.amplitude.imag} for r in data.records
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
