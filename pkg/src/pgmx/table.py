"""Discrete data tables: named integer-coded columns plus run metadata."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError

__all__ = ["DataTable", "TableMeta"]


@dataclass(frozen=True)
class TableMeta:
    """Provenance of a sampled table: what was explained and how."""

    target: str
    mode: str  # "node" | "graph" | "synthetic"
    n: int
    p: float | None = None
    scheme: str | None = None
    seed: int | None = None
    hops: int | None = None
    delta: float | None = None
    include_target: bool | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, doc: dict) -> "TableMeta":
        fields = {k: doc.get(k) for k in cls.__dataclass_fields__}
        fields["target"] = str(doc["target"])
        fields["mode"] = str(doc["mode"])
        fields["n"] = int(doc["n"])
        return cls(**fields)


class DataTable:
    """n x m table of discrete realizations, one integer code per cell.

    Cells are stored as uint8 (codes never exceed 3 in this package);
    every cell is checked against its column's cardinality.
    """

    def __init__(
        self,
        names: Sequence[str],
        cardinalities: Sequence[int],
        rows: np.ndarray,
        meta: TableMeta | None = None,
    ):
        names = tuple(str(x) for x in names)
        cards = tuple(int(c) for c in cardinalities)
        if len(names) != len(set(names)):
            raise InputError("duplicate column names")
        if len(cards) != len(names):
            raise InputError("one cardinality per column required")
        # column-major: tests and fits read whole columns, never whole rows
        rows = np.asfortranarray(np.asarray(rows, dtype=np.uint8))
        if rows.ndim != 2 or rows.shape[1] != len(names):
            raise InputError(f"rows must be (n, {len(names)}), got {rows.shape}")
        for j, c in enumerate(cards):
            if c < 1:
                raise InputError(f"cardinality of {names[j]!r} must be >= 1")
            if rows.shape[0] and int(rows[:, j].max()) >= c:
                raise InputError(f"column {names[j]!r} holds a value >= cardinality {c}")
        if meta is not None and meta.n != rows.shape[0]:
            raise InputError("meta.n does not match the number of rows")
        rows.setflags(write=False)
        self.names = names
        self.cardinalities = cards
        self.rows = rows
        self.meta = meta
        self._index = {name: j for j, name in enumerate(names)}

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def num_variables(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InputError(f"unknown variable {name!r}") from None

    def cardinality(self, name: str) -> int:
        return self.cardinalities[self.index(name)]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.index(name)]

    def subset(self, names: Sequence[str]) -> "DataTable":
        """Project onto `names`, preserving the given column order."""
        idx = [self.index(n) for n in names]
        return DataTable(
            [self.names[j] for j in idx],
            [self.cardinalities[j] for j in idx],
            self.rows[:, idx].copy(),
            meta=self.meta,
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DataTable)
            and self.names == other.names
            and self.cardinalities == other.cardinalities
            and np.array_equal(self.rows, other.rows)
        )

    def save_csv(self, path: str | Path) -> None:
        """Two header lines (names; cardinalities), then one row per sample.

        Metadata goes to a `<path>.meta.json` sidecar when present.
        """
        path = Path(path)
        lines = [",".join(self.names), ",".join(str(c) for c in self.cardinalities)]
        lines.extend(",".join(str(int(x)) for x in row) for row in self.rows)
        path.write_text("\n".join(lines) + "\n")
        if self.meta is not None:
            Path(str(path) + ".meta.json").write_text(
                json.dumps(self.meta.to_dict(), sort_keys=True)
            )

    @classmethod
    def load_csv(cls, path: str | Path) -> "DataTable":
        path = Path(path)
        lines = path.read_text().splitlines()
        if len(lines) < 2:
            raise InputError(f"{path}: expected two header lines")
        names = lines[0].split(",")
        cards = [int(c) for c in lines[1].split(",")]
        rows = np.array(
            [[int(x) for x in line.split(",")] for line in lines[2:] if line],
            dtype=np.uint8,
        ).reshape(-1, len(names))
        meta = None
        sidecar = Path(str(path) + ".meta.json")
        if sidecar.exists():
            meta = TableMeta.from_dict(json.loads(sidecar.read_text()))
        return cls(names, cards, rows, meta=meta)
