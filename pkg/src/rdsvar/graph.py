"""Population network and node attributes.

The population is an undirected simple graph over opaque string node ids.
Ids are mapped to dense 0-based indices in lexicographic id order, which
makes loading canonical: the same edge set produces a bit-identical graph
regardless of row order or edge orientation in the input file.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .rng import RngStream

__all__ = [
    "PopulationGraph",
    "AttributeTable",
    "FixedDegree",
    "PowerLawDegree",
    "load_edge_list",
    "largest_connected_component",
    "load_attributes",
    "read_attribute_rows",
    "generate_configuration_graph",
    "component_sizes",
    "load_summary",
]


@dataclass
class PopulationGraph:
    """Undirected simple graph in CSR form, immutable after construction.

    node_ids are sorted lexicographically; index i refers to node_ids[i].
    """

    node_ids: list[str]
    indptr: np.ndarray
    indices: np.ndarray
    duplicates_collapsed: int = 0
    _id_to_index: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._id_to_index:
            self._id_to_index = {nid: i for i, nid in enumerate(self.node_ids)}
        self.degree = np.diff(self.indptr).astype(np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0]) // 2

    @property
    def total_degree(self) -> int:
        return int(self.indices.shape[0])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def index_of(self, node_id: str) -> int:
        try:
            return self._id_to_index[node_id]
        except KeyError:
            raise DataError(f"unknown node id: {node_id!r}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, PopulationGraph):
            return NotImplemented
        return (
            self.node_ids == other.node_ids
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


@dataclass
class AttributeTable:
    """Per-node binary attribute columns, row-aligned to a graph's node order."""

    column_names: list[str]
    values: np.ndarray  # shape (n_nodes, n_columns), entries in {0, 1}

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.uint8)
        if vals.ndim != 2 or vals.shape[1] != len(self.column_names):
            raise DataError("attribute value matrix does not match column names")
        if not np.isin(vals, (0, 1)).all():
            raise DataError("attribute values must be 0 or 1")
        self.values = vals

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise DataError(f"unknown attribute column: {name!r}") from None
        return self.values[:, j]


def _from_edge_set(ids: set[str], edges: set[tuple[str, str]], duplicates: int) -> PopulationGraph:
    node_ids = sorted(ids)
    index = {nid: i for i, nid in enumerate(node_ids)}
    n = len(node_ids)
    deg = np.zeros(n, dtype=np.int64)
    pairs = np.empty((len(edges), 2), dtype=np.int64)
    for k, (a, b) in enumerate(edges):
        ia, ib = index[a], index[b]
        pairs[k, 0], pairs[k, 1] = ia, ib
        deg[ia] += 1
        deg[ib] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    cursor = indptr[:-1].copy()
    for ia, ib in pairs:
        indices[cursor[ia]] = ib
        cursor[ia] += 1
        indices[cursor[ib]] = ia
        cursor[ib] += 1
    # sort each neighbour list for canonical form
    for i in range(n):
        seg = indices[indptr[i] : indptr[i + 1]]
        seg.sort()
    g = PopulationGraph(node_ids, indptr, indices, duplicates_collapsed=duplicates)
    g._id_to_index = index
    return g


def load_edge_list(path, delimiter: str | None = None) -> PopulationGraph:
    """Load an undirected edge list from a text or CSV file.

    One edge per line, two whitespace- or comma-separated ids; lines
    beginning with '#' are ignored. Duplicate rows and both orientations
    of an edge collapse to one undirected edge (collapsed count is kept on
    the returned graph). Self-loop rows are rejected.
    """
    ids: set[str] = set()
    edges: set[tuple[str, str]] = set()
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if delimiter is not None:
                parts = [p.strip() for p in line.split(delimiter)]
            elif "," in line:
                parts = [p.strip() for p in line.split(",")]
            else:
                parts = line.split()
            parts = [p for p in parts if p]
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected two node ids, got {len(parts)}")
            a, b = parts
            if a == b:
                raise DataError(f"{path}:{lineno}: self-loop on node {a!r} rejected")
            ids.add(a)
            ids.add(b)
            key = (a, b) if a < b else (b, a)
            if key in edges:
                duplicates += 1
            else:
                edges.add(key)
    return _from_edge_set(ids, edges, duplicates)


def _component_labels(g: PopulationGraph) -> tuple[np.ndarray, int]:
    n = g.n_nodes
    labels = np.full(n, -1, dtype=np.int64)
    n_comp = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = n_comp
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.neighbors(u):
                if labels[v] < 0:
                    labels[v] = n_comp
                    queue.append(int(v))
        n_comp += 1
    return labels, n_comp


def component_sizes(g: PopulationGraph) -> list[int]:
    """Sizes of connected components, largest first."""
    if g.n_nodes == 0:
        return []
    labels, n_comp = _component_labels(g)
    counts = np.bincount(labels, minlength=n_comp)
    return sorted((int(c) for c in counts), reverse=True)


def _induced_subgraph(g: PopulationGraph, keep: np.ndarray) -> PopulationGraph:
    keep_ids = {g.node_ids[i] for i in np.flatnonzero(keep)}
    edges = set()
    for i in np.flatnonzero(keep):
        a = g.node_ids[i]
        for j in g.neighbors(i):
            if keep[j] and i < j:
                b = g.node_ids[j]
                edges.add((a, b) if a < b else (b, a))
    return _from_edge_set(keep_ids, edges, 0)


def largest_connected_component(g: PopulationGraph) -> PopulationGraph:
    """Induced subgraph on the largest component; node ids preserved.

    Ties are broken by the smallest contained node id (node order is
    lexicographic, so the component holding the smallest index wins).
    """
    if g.n_nodes == 0:
        return g
    labels, n_comp = _component_labels(g)
    counts = np.bincount(labels, minlength=n_comp)
    # labels are assigned in increasing first-node order, so argmax picks the
    # tied component containing the smallest node id
    best = int(np.argmax(counts))
    keep = labels == best
    if keep.all():
        return g
    return _induced_subgraph(g, keep)


def read_attribute_rows(path) -> tuple[list[str], dict[str, tuple[int, ...]]]:
    """Parse a binary attribute CSV into (column names, id -> values).

    The file must have a header whose first column is "id"; remaining
    cells must be 0 or 1.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty attribute file") from None
        if not header or header[0].strip() != "id":
            raise DataError(f"{path}: first CSV column must be 'id'")
        columns = [c.strip() for c in header[1:]]
        if not columns:
            raise DataError(f"{path}: no attribute columns")
        rows: dict[str, tuple[int, ...]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns) + 1:
                raise DataError(f"{path}:{lineno}: expected {len(columns) + 1} fields, got {len(row)}")
            vals = []
            for j, cell in enumerate(row[1:]):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise DataError(
                        f"{path}:{lineno}: column {columns[j]!r} has non-binary value {cell!r}"
                    )
                vals.append(int(cell))
            rows[row[0].strip()] = tuple(vals)
    return columns, rows


def load_attributes(path, g: PopulationGraph) -> AttributeTable:
    """Load a binary attribute CSV aligned to the graph's nodes.

    Rows for ids outside the graph are ignored (a graph restricted to its
    largest component typically covers fewer nodes than the attribute
    file); every graph node must be covered.
    """
    columns, rows = read_attribute_rows(path)
    values = np.zeros((g.n_nodes, len(columns)), dtype=np.uint8)
    seen = np.zeros(g.n_nodes, dtype=bool)
    for nid, vals in rows.items():
        i = g._id_to_index.get(nid)
        if i is None:
            continue
        values[i] = vals
        seen[i] = True
    if not seen.all():
        missing = [g.node_ids[i] for i in np.flatnonzero(~seen)[:20]]
        more = int((~seen).sum()) - len(missing)
        suffix = f" (+{more} more)" if more > 0 else ""
        raise DataError(f"{path}: nodes missing from attribute file: {missing}{suffix}")
    return AttributeTable(columns, values)


@dataclass(frozen=True)
class FixedDegree:
    """Every node gets degree k."""

    k: int


@dataclass(frozen=True)
class PowerLawDegree:
    """Degrees drawn i.i.d. from P(d) proportional to d**-alpha on [d_min, d_max]."""

    alpha: float
    d_min: int
    d_max: int


def _draw_degree_sequence(n_nodes: int, law, rng: RngStream) -> np.ndarray:
    if isinstance(law, FixedDegree):
        if law.k < 1 or law.k >= n_nodes:
            raise DataError(f"fixed degree k={law.k} infeasible for {n_nodes} nodes")
        if (n_nodes * law.k) % 2 != 0:
            raise DataError(f"degree sum {n_nodes * law.k} is odd; no simple graph exists")
        return np.full(n_nodes, law.k, dtype=np.int64)
    if isinstance(law, PowerLawDegree):
        if not (1 <= law.d_min <= law.d_max < n_nodes):
            raise DataError("power-law degree bounds infeasible")
        support = np.arange(law.d_min, law.d_max + 1, dtype=np.float64)
        pmf = support**-law.alpha
        pmf /= pmf.sum()
        cdf = np.cumsum(pmf)
        deg = law.d_min + np.searchsorted(cdf, rng.random(n_nodes), side="right")
        deg = np.minimum(deg, law.d_max).astype(np.int64)
        # parity fix: bump one node up (or down at the cap) so stubs pair off
        if int(deg.sum()) % 2 != 0:
            i = int(rng.integers(n_nodes))
            deg[i] += 1 if deg[i] < law.d_max else -1
        return deg
    raise DataError(f"unknown degree law: {law!r}")


def generate_configuration_graph(n_nodes: int, degree_law, rng: RngStream, max_attempts: int = 100) -> PopulationGraph:
    """Simple undirected graph via configuration-model stub pairing.

    Self-loops and multi-edges are rejected by reshuffling the clashing
    stubs; a full restart happens when the clash pool stops shrinking.
    Deterministic given ``rng``. Node ids are zero-padded decimal strings
    so lexicographic and numeric order coincide.
    """
    if n_nodes < 2:
        raise DataError("need at least 2 nodes")
    degrees = _draw_degree_sequence(n_nodes, degree_law, rng)
    width = len(str(n_nodes - 1))
    ids = [str(i).zfill(width) for i in range(n_nodes)]

    for _ in range(max_attempts):
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(n_nodes, dtype=np.int64), degrees)
        rounds_left = 10_000
        while stubs.size and rounds_left:
            rounds_left -= 1
            rng.shuffle(stubs)
            leftover = []
            for a, b in zip(stubs[0::2], stubs[1::2]):
                a, b = int(a), int(b)
                if a > b:
                    a, b = b, a
                if a != b and (a, b) not in edges:
                    edges.add((a, b))
                else:
                    leftover.append(a)
                    leftover.append(b)
            if len(leftover) == stubs.size and edges:
                # clashing stubs cannot resolve among themselves (e.g. all
                # from one hub): dissolve random accepted edges back into
                # the pool so the next shuffle can recombine them
                dissolve = min(len(edges), max(2, len(leftover)))
                edge_list = sorted(edges)
                for j in rng.choice(len(edge_list), size=dissolve, replace=False):
                    a, b = edge_list[int(j)]
                    edges.discard((a, b))
                    leftover.extend((a, b))
            stubs = np.asarray(leftover, dtype=np.int64)
        if stubs.size == 0:
            return _from_edge_set(set(ids), {(ids[a], ids[b]) for a, b in edges}, 0)
    raise DataError("configuration model failed: degree sequence not simple-graph realizable")


def load_summary(g: PopulationGraph) -> dict:
    """JSON-ready summary of a loaded graph, including the id/index mapping."""
    return {
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "duplicates_collapsed": g.duplicates_collapsed,
        "component_sizes": component_sizes(g),
        "node_ids": list(g.node_ids),
    }
