"""Atomic output and the tab-separated exchange formats."""

from __future__ import annotations

import csv
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

from .evaluation.metrics import Qrels


@contextmanager
def atomic_output(path):
    """Open ``path`` for writing through a sibling temp file renamed on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    with atomic_output(path) as handle:
        handle.write(text)


def fmt(x: float) -> str:
    """Nine significant digits, the precision of every float column."""
    return f"{x:.9g}"


def _check_field(s: str) -> str:
    if "\t" in s or "\n" in s:
        raise ValueError(f"field {s!r} contains a tab or newline")
    return s


def _rows(path, min_cols: int):
    with open(path, encoding="utf-8", newline="") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) < min_cols:
                raise ValueError(f"{path}:{lineno}: expected {min_cols} tab-separated columns")
            yield lineno, cols


def read_qrels(path) -> Qrels:
    qrels = {}
    for lineno, cols in _rows(path, 4):
        key = (cols[0], cols[1], cols[2])
        if key in qrels:
            raise ValueError(f"{path}:{lineno}: duplicate judgment for {key}")
        try:
            rel = int(cols[3])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: relevance must be 0 or 1") from None
        if rel not in (0, 1):
            raise ValueError(f"{path}:{lineno}: relevance must be 0 or 1")
        qrels[key] = rel
    return qrels


def write_qrels(qrels: Qrels, handle) -> None:
    for (qid, facet, value), rel in qrels.items():
        handle.write(f"{_check_field(qid)}\t{_check_field(facet)}\t{_check_field(value)}\t{rel}\n")


def write_candidates(pools, handle) -> None:
    for pool in pools:
        for rank, (fvp, score) in enumerate(zip(pool.candidates, pool.scores), start=1):
            handle.write(f"{_check_field(pool.qid)}\t{_check_field(fvp.facet)}\t"
                         f"{_check_field(fvp.value)}\t{rank}\t{fmt(score)}\n")


def read_candidates(path) -> dict[str, list[tuple[str, str]]]:
    """qid -> (facet, value) keys in rank order."""
    out: dict[str, list[tuple[int, tuple[str, str]]]] = {}
    for lineno, cols in _rows(path, 5):
        try:
            rank = int(cols[3])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad rank {cols[3]!r}") from None
        out.setdefault(cols[0], []).append((rank, (cols[1], cols[2])))
    return {q: [k for _, k in sorted(rows)] for q, rows in out.items()}


def write_features(names, rows, handle) -> None:
    """``rows`` yields (qid, facet, value, label, values)."""
    handle.write("\t".join(["qid", "facet", "value", "label", *names]) + "\n")
    for qid, facet, value, label, values in rows:
        cells = [_check_field(qid), _check_field(facet), _check_field(value), str(int(label))]
        cells.extend(fmt(v) for v in values)
        handle.write("\t".join(cells) + "\n")


def read_features(path):
    """Returns (feature names, rows) with rows as (qid, facet, value, label, values)."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty features file") from None
        if header[:4] != ["qid", "facet", "value", "label"]:
            raise ValueError(f"{path}: missing features header")
        names = header[4:]
        rows = []
        for lineno, cols in enumerate(reader, start=2):
            if not cols:
                continue
            if len(cols) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cols)}")
            try:
                rows.append((cols[0], cols[1], cols[2], int(cols[3]), [float(c) for c in cols[4:]]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric feature value") from None
    return names, rows


def write_run(rankings, handle, tag: str) -> None:
    """``rankings`` maps qid to [((facet, value), score), ...] in rank order."""
    for qid in sorted(rankings):
        for rank, ((facet, value), score) in enumerate(rankings[qid], start=1):
            handle.write(f"{_check_field(qid)}\t{_check_field(facet)}\t{_check_field(value)}\t"
                         f"{rank}\t{fmt(score)}\t{tag}\n")


def read_run(path) -> dict[str, list[tuple[str, str]]]:
    out: dict[str, list[tuple[int, tuple[str, str]]]] = {}
    for lineno, cols in _rows(path, 6):
        try:
            rank = int(cols[3])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad rank {cols[3]!r}") from None
        out.setdefault(cols[0], []).append((rank, (cols[1], cols[2])))
    return {q: [k for _, k in sorted(rows)] for q, rows in out.items()}
