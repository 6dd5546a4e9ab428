"""Protograph base matrices and their text file format.

A base-matrix file holds one row of non-negative integers per line; ``#``
starts a comment. A comment of the form ``# puncture: 9 8 7`` lists the
variable types eligible for puncturing, in the order they are consumed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = ["Protograph", "load_base_matrix", "save_base_matrix", "default_protograph"]

_PUNCT_RE = re.compile(r"#\s*puncture\s*:\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class Protograph:
    base_matrix: np.ndarray
    puncturable: tuple[int, ...] = field(default=())
    name: str = ""

    def __post_init__(self):
        b = np.asarray(self.base_matrix, dtype=np.int64)
        if b.ndim != 2 or b.size == 0:
            raise ValueError("base matrix must be a non-empty 2-D integer array")
        if (b < 0).any():
            raise ValueError("base matrix entries must be >= 0")
        if (b.sum(axis=0) == 0).any() or (b.sum(axis=1) == 0).any():
            raise ValueError("every row and column of the base matrix needs an edge")
        object.__setattr__(self, "base_matrix", b)
        punct = tuple(int(j) for j in self.puncturable)
        if not punct:
            # highest-degree variable type
            punct = (int(np.argmax(b.sum(axis=0))),)
        if any(not 0 <= j < b.shape[1] for j in punct) or len(set(punct)) != len(punct):
            raise ValueError(f"invalid puncturable types {punct}")
        object.__setattr__(self, "puncturable", punct)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base_matrix.shape

    @property
    def design_rate(self) -> float:
        m, n = self.base_matrix.shape
        return 1.0 - m / n

    def variable_degrees(self) -> np.ndarray:
        return self.base_matrix.sum(axis=0)

    def check_degrees(self) -> np.ndarray:
        return self.base_matrix.sum(axis=1)


def _parse(text: str, name: str = "") -> Protograph:
    rows, punct = [], ()
    for line in text.splitlines():
        m = _PUNCT_RE.search(line)
        if m:
            punct = tuple(int(t) for t in m.group(1).split())
        body = line.split("#", 1)[0].strip()
        if body:
            rows.append([int(t) for t in body.split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("base matrix rows must be non-empty and of equal length")
    return Protograph(np.array(rows), punct, name)


def load_base_matrix(path) -> Protograph:
    path = Path(path)
    return _parse(path.read_text(), path.stem)


def save_base_matrix(p: Protograph, path, comment: str = "") -> Path:
    path = Path(path)
    lines = [f"# {c}" for c in comment.splitlines()] if comment else []
    lines.append("# puncture: " + " ".join(str(j) for j in p.puncturable))
    lines += [" ".join(str(int(v)) for v in row) for row in p.base_matrix]
    path.write_text("\n".join(lines) + "\n")
    return path


def default_protograph() -> Protograph:
    """Shipped rate-0.2 raptor-like protograph (stand-in for the TBP-LDPC code)."""
    text = resources.files("cvrecon.data").joinpath("tbp_r020.txt").read_text()
    return _parse(text, "tbp_r020")
