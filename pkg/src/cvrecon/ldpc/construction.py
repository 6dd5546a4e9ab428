"""Lifting a protograph to a full parity-check matrix with short-cycle removal.

Two liftings are available:

* ``permutation`` (default): every base edge becomes an independent random
  Z x Z permutation; parallel edges, 4-cycles (and 6-cycles for girth 8)
  are then removed by local swaps inside the offending permutations. Random
  lifts avoid the algebraic low-weight codewords that circulant lifts of
  multi-edge cells carry.
* ``qc``: every base edge becomes a circulant permutation. Shifts are drawn
  at random, one edge at a time, rejecting any value that would close a
  cycle of length below the requested girth. A closed non-backtracking walk
  in the base graph lifts to a cycle exactly when its alternating shift sum
  vanishes modulo Z, so the check runs on the base graph only.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .protograph import Protograph

__all__ = [
    "ConstructionError",
    "ExpandedCode",
    "expand_protograph",
    "lift_for_length",
    "export_h",
    "load_h",
    "has_four_cycles",
]


class ConstructionError(RuntimeError):
    """Lifting could not reach the requested girth; use a larger lift."""


@dataclass(frozen=True, eq=False)
class ExpandedCode:
    protograph: Protograph
    lift_size: int
    edges: tuple          # ((row, col, shift), ...) for qc lifts, () for permutation lifts
    parity_check: sp.csr_matrix
    girth: int            # qc: exact up to 8, else the bound 10; permutation: exact up to 6, else 8
    seed: int | None = None
    method: str = "qc"

    @property
    def N(self) -> int:
        return self.parity_check.shape[1]

    @property
    def M(self) -> int:
        return self.parity_check.shape[0]

    @property
    def design_rate(self) -> float:
        return self.protograph.design_rate

    @property
    def K(self) -> int:
        return int(round(self.N * self.design_rate))

    @property
    def variable_types(self) -> np.ndarray:
        return np.repeat(np.arange(self.protograph.shape[1]), self.lift_size)

    def positions_of_type(self, j: int) -> np.ndarray:
        z = self.lift_size
        return np.arange(j * z, (j + 1) * z)

    @functools.cached_property
    def encoder(self):
        from .encoder import SystematicEncoder
        return SystematicEncoder.from_code(self)

    @functools.cached_property
    def graph(self):
        from .decoder import TannerGraph
        return TannerGraph.from_matrix(self.parity_check)

    def syndrome(self, word: np.ndarray) -> np.ndarray:
        return (self.parity_check @ np.asarray(word, dtype=np.int64)) % 2


def _base_edges(base: np.ndarray) -> list[tuple[int, int]]:
    return [(i, j) for i, j in zip(*np.nonzero(base)) for _ in range(base[i, j])]


def _closed_walks(edges, by_row, by_col, start: int, length: int, allowed):
    """Yield alternating-sign edge sequences of closed walks beginning with ``start``.

    Walks go check -> variable on odd steps and back on even steps; consecutive
    edges differ, as do the last and first.
    """
    r0, c0 = edges[start]
    stack = [(c0, [start], False)]     # (current node, path, at_check)
    while stack:
        node, path, at_check = stack.pop()
        depth = len(path)
        prev = path[-1]
        if depth == length:
            continue
        nbrs = by_row[node] if at_check else by_col[node]
        for e in nbrs:
            if e == prev or not allowed[e]:
                continue
            r, c = edges[e]
            if depth + 1 == length:
                if not at_check and r == r0 and e != start:
                    yield path + [e]
                continue
            nxt = c if at_check else r
            stack.append((nxt, path + [e], not at_check))


def _forbidden(edges, by_row, by_col, shifts, assigned, e, z, max_len) -> set[int]:
    """Shift values for edge ``e`` that close a cycle shorter than ``max_len + 2``."""
    bad: set[int] = set()
    allowed = assigned.copy()
    allowed[e] = True
    for length in range(4, max_len + 1, 2):
        for walk in _closed_walks(edges, by_row, by_col, e, length, allowed):
            k, c = 0, 0
            for pos, f in enumerate(walk):
                sign = 1 if pos % 2 == 0 else -1
                if f == e:
                    k += sign
                else:
                    c += sign * shifts[f]
            if k == 0:
                if c % z == 0:
                    # cycle closes whatever the shift (e.g. weight-3 circulant cells)
                    return set(range(z))
                continue
            # solve k s + c = 0 (mod z)
            for s in range(z):
                if (k * s + c) % z == 0:
                    bad.add(s)
    return bad


def _walk_has_zero_sum(edges, by_row, by_col, shifts, z, length) -> bool:
    allowed = np.ones(len(edges), dtype=bool)
    for e in range(len(edges)):
        for walk in _closed_walks(edges, by_row, by_col, e, length, allowed):
            total = sum((1 if pos % 2 == 0 else -1) * shifts[f] for pos, f in enumerate(walk))
            if total % z == 0:
                return True
    return False


def _lift_qc(p: Protograph, z: int, rng, girth: int, attempts: int):
    base = p.base_matrix
    edges = _base_edges(base)
    by_row = [[k for k, (r, _) in enumerate(edges) if r == i] for i in range(base.shape[0])]
    by_col = [[k for k, (_, c) in enumerate(edges) if c == j] for j in range(base.shape[1])]
    for _ in range(attempts):
        order = rng.permutation(len(edges))
        shifts = np.zeros(len(edges), dtype=np.int64)
        assigned = np.zeros(len(edges), dtype=bool)
        ok = True
        for e in order:
            bad = _forbidden(edges, by_row, by_col, shifts, assigned, e, z, girth - 2) if girth > 4 else set()
            # edges sharing a cell must never coincide
            r, c = edges[e]
            bad |= {int(shifts[f]) for f in by_row[r] if assigned[f] and edges[f][1] == c}
            if len(bad) >= z:
                ok = False
                break
            while True:
                s = int(rng.integers(z))
                if s not in bad:
                    break
            shifts[e] = s
            assigned[e] = True
        if ok:
            break
    else:
        raise ConstructionError(
            f"no lifting of size {z} reaches girth {girth}; try a larger lift size"
        )

    rows, cols = [], []
    idx = np.arange(z)
    for (r, c), s in zip(edges, shifts):
        rows.append(r * z + idx)
        cols.append(c * z + (idx + s) % z)
    m, n = base.shape[0] * z, base.shape[1] * z
    h = sp.csr_matrix(
        (np.ones(len(edges) * z, dtype=np.uint8), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, n),
    )
    h.sum_duplicates()
    h.data %= 2
    h.eliminate_zeros()

    found = 10
    for length in (4, 6, 8):
        if _walk_has_zero_sum(edges, by_row, by_col, shifts, z, length):
            found = length
            break
    edge_list = tuple((r, c, int(s)) for (r, c), s in zip(edges, shifts))
    return h, found, edge_list


def _six_cycle_pairs(h: sp.csr_matrix) -> np.ndarray:
    """Check pairs lying on a 6-cycle, for a matrix already free of 4-cycles.

    In the check graph (checks adjacent when they share a variable) a
    variable of degree k forms cliques whose edges have exactly k - 2 common
    neighbours; any surplus is a triangle through three distinct variables,
    i.e. a 6-cycle of the Tanner graph.
    """
    h = sp.csr_matrix(h, dtype=np.int64)
    deg = np.asarray(h.sum(axis=0)).ravel()
    adj = (h @ h.T).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj.data[:] = 1
    expected = (h @ sp.diags(np.maximum(deg - 2, 0)) @ h.T).tocsr()
    common = (adj @ adj).multiply(adj).tocsr()
    surplus = (common - expected.multiply(adj)).tocoo()
    keep = surplus.data > 0
    return np.column_stack([surplus.row[keep], surplus.col[keep]])


def _measure_girth(h: sp.csr_matrix) -> int:
    """4 or 6 when such cycles exist, otherwise 8 (meaning at least 8)."""
    if has_four_cycles(h):
        return 4
    return 6 if _six_cycle_pairs(h).size else 8


def _permutation_matrix(base, z, perms, edges):
    rows = np.concatenate([r * z + pm for (r, _), pm in zip(edges, perms)])
    cols = np.concatenate([c * z + np.arange(z) for (_, c) in edges])
    m, n = base.shape[0] * z, base.shape[1] * z
    return sp.csr_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(m, n))


def _offending_variables(h: sp.csr_matrix, girth: int) -> np.ndarray:
    """Variables on parallel edges or on cycles shorter than ``girth``."""
    bad = []
    coo = h.tocoo()
    bad.append(coo.col[coo.data > 1])
    if girth > 4:
        ov = (h.T @ h).tocoo()
        hit = (ov.data >= 2) & (ov.row < ov.col)
        bad.append(ov.col[hit])
    if girth > 6 and not any(b.size for b in bad):
        pairs = _six_cycle_pairs(h)
        if pairs.size:
            # the variables shared by each offending check pair
            shared = h[pairs[:, 0]].multiply(h[pairs[:, 1]]).tocoo()
            bad.append(shared.col)
    return np.unique(np.concatenate(bad)) if bad else np.empty(0, dtype=np.int64)


class _PermutationLift:
    """Per-edge permutations of a lift, with local short-cycle counting.

    Variable ``(j, c)`` of base edge ``k = (i, j)`` attaches to check
    ``(i, perm[k][c])``; ``inv`` keeps the reverse map for check-side steps.
    """

    def __init__(self, base, z, rng):
        self.z = z
        self.edges = _base_edges(base)
        self.perm = [rng.permutation(z) for _ in self.edges]
        self.inv = [np.argsort(pm) for pm in self.perm]
        self.by_col, self.by_row = {}, {}
        for k, (r, c) in enumerate(self.edges):
            self.by_col.setdefault(c, []).append(k)
            self.by_row.setdefault(r, []).append(k)
        self.shape = base.shape

    def matrix(self) -> sp.csr_matrix:
        return _permutation_matrix(np.zeros(self.shape), self.z, self.perm, self.edges)

    def cycles_through(self, v: int, depth: int) -> int:
        """Closed non-backtracking walks through variable ``v`` of length <= 2*depth.

        Walks leaving ``v`` along different edges that meet at the same node
        after L steps close a cycle of length 2L; parallel edges count as L = 1.
        """
        z, edges, perm, inv = self.z, self.edges, self.perm, self.inv
        j, c = divmod(v, z)
        frontier = [(False, edges[k][0] * z + perm[k][c], b, k, c)
                    for b, k in enumerate(self.by_col[j])]
        total = 0
        for level in range(1, depth + 1):
            tally = {}
            for is_var, node, b, _, _ in frontier:
                per = tally.setdefault((is_var, node), {})
                per[b] = per.get(b, 0) + 1
            for per in tally.values():
                if len(per) > 1:
                    vals = list(per.values())
                    total += (sum(vals) ** 2 - sum(x * x for x in vals)) // 2
            if level == depth:
                break
            nxt = []
            for is_var, node, b, ke, ce in frontier:
                if is_var:
                    jj, cc = divmod(node, z)
                    for k in self.by_col[jj]:
                        if (k, cc) != (ke, ce):
                            nxt.append((False, edges[k][0] * z + perm[k][cc], b, k, cc))
                else:
                    i, r = divmod(node, z)
                    for k in self.by_row[i]:
                        cc = int(inv[k][r])
                        if (k, cc) != (ke, ce):
                            nxt.append((True, edges[k][1] * z + cc, b, k, cc))
            frontier = nxt
        return total

    def swap(self, k: int, c1: int, c2: int) -> None:
        pm, iv = self.perm[k], self.inv[k]
        pm[c1], pm[c2] = pm[c2], pm[c1]
        iv[pm[c1]], iv[pm[c2]] = c1, c2


def _lift_permutation(p: Protograph, z: int, rng, girth: int, rounds: int = 60,
                      tries: int = 40):
    """Random lift, then local search removing cycles shorter than ``girth``.

    Every variable on a short cycle proposes swaps inside one of its edge
    permutations; a swap is kept only when it lowers the short-cycle count
    through the two variables it moves.
    """
    lift = _PermutationLift(p.base_matrix, z, rng)
    depth = (girth - 2) // 2
    best, stalled = math.inf, 0
    for _ in range(rounds):
        h = lift.matrix()
        bad = _offending_variables(h, girth)
        if not bad.size:
            break
        best, stalled = (bad.size, 0) if bad.size < best else (best, stalled + 1)
        if stalled >= 4:        # e.g. a weight-3 cell makes 6-cycles unavoidable
            raise ConstructionError(
                f"permutation lifting of size {z} is stuck with short cycles below girth "
                f"{girth}; try a larger lift size or a lower girth target"
            )
        for v in rng.permutation(bad):
            v = int(v)
            j, c = divmod(v, z)
            if not lift.cycles_through(v, depth):
                continue
            cols = lift.by_col[j]
            for _ in range(tries):
                k = cols[rng.integers(len(cols))]
                c2 = int(rng.integers(z))
                if c2 == c:
                    continue
                v2 = j * z + c2
                before = lift.cycles_through(v, depth) + lift.cycles_through(v2, depth)
                lift.swap(k, c, c2)
                if lift.cycles_through(v, depth) + lift.cycles_through(v2, depth) < before:
                    break
                lift.swap(k, c, c2)
    else:
        raise ConstructionError(
            f"no permutation lifting of size {z} reaches girth {girth}; try a larger lift size"
        )
    h.data[:] = 1
    h = h.astype(np.uint8)
    return h, _measure_girth(h)


def expand_protograph(p: Protograph, lift_size: int, seed=0, girth: int = 6,
                      method: str = "permutation", attempts: int = 20) -> ExpandedCode:
    """Lift ``p`` by ``lift_size`` with no cycles shorter than ``girth``."""
    if lift_size < 1:
        raise ValueError("lift_size must be >= 1")
    if girth not in (4, 6, 8):
        raise ValueError("girth target must be 4, 6 or 8")
    rng = np.random.default_rng(seed)
    seed_val = int(seed) if seed is not None and np.isscalar(seed) else None
    if method == "qc":
        h, found, edge_list = _lift_qc(p, lift_size, rng, girth, attempts)
        return ExpandedCode(p, lift_size, edge_list, h, found, seed_val, "qc")
    if method != "permutation":
        raise ValueError(f"unknown lifting method {method!r} (use 'permutation' or 'qc')")
    h, found = _lift_permutation(p, lift_size, rng, girth)
    return ExpandedCode(p, lift_size, (), h, found, seed_val, "permutation")


def lift_for_length(p: Protograph, target_n: int) -> int:
    """Lift size giving the blocklength closest to ``target_n``."""
    return max(1, int(round(target_n / p.shape[1])))


def has_four_cycles(h) -> bool:
    """Brute force: two checks sharing two or more variables."""
    h = sp.csr_matrix(h, dtype=np.int32)
    overlap = (h @ h.T).tolil()
    overlap.setdiag(0)
    return bool(overlap.tocsr().max() >= 2) if overlap.nnz else False


def export_h(code_or_h, path) -> Path:
    """Write H as a coordinate list: header ``M N``, then one ``row col`` per line."""
    h = code_or_h.parity_check if isinstance(code_or_h, ExpandedCode) else code_or_h
    coo = sp.coo_matrix(h)
    order = np.lexsort((coo.col, coo.row))
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{h.shape[0]} {h.shape[1]}\n")
        np.savetxt(fh, np.column_stack([coo.row[order], coo.col[order]]), fmt="%d")
    return path


def load_h(path) -> sp.csr_matrix:
    with Path(path).open() as fh:
        m, n = (int(t) for t in fh.readline().split())
        rc = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    return sp.csr_matrix((np.ones(len(rc), dtype=np.uint8), (rc[:, 0], rc[:, 1])), shape=(m, n))
