from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | os.PathLike, header: Sequence[str], columns: Iterable[Sequence[float]]) -> None:
    cols = [list(c) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = [[float(r[j]) for r in body] for j in range(len(header))]
    return header, cols
