"""Chemical graphs: parsing, admissibility, two-layer decomposition, features.

Graphs are hydrogen-explicit vertex/edge-labeled simple graphs with bond
multiplicities 1..3.  The two-layer decomposition at branch parameter rho
classifies vertices as interior (the cyclic backbone plus long pendant
chains) or exterior (the hanging trees of height below rho); every interior
vertex carries its fringe tree of exterior descendants.  Descriptor
extraction counts local structures over corpus-derived alphabets so that
feature rows are comparable across graphs and reusable on unseen ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hpsplit.dataset import DataSet
from hpsplit.errors import ExtractionError, GraphFormatError, ValenceError

# default valence per element; alternate valences are selected with an
# explicit suffix on the symbol, e.g. S_6
DEFAULT_VALENCE = {
    "H": 1, "C": 4, "N": 3, "O": 2, "F": 1,
    "Cl": 1, "Br": 1, "P": 3, "S": 2, "Pb": 2,
}
MAX_VALENCE = 7


@dataclass(frozen=True)
class Atom:
    element: str
    valence: int

    @property
    def symbol(self) -> str:
        """Canonical chemical symbol; valence suffix only when non-default."""
        if DEFAULT_VALENCE.get(self.element) == self.valence:
            return self.element
        return f"{self.element}_{self.valence}"


def parse_symbol(text: str) -> Atom:
    element, _, suffix = text.partition("_")
    if element not in DEFAULT_VALENCE:
        raise GraphFormatError(f"unknown chemical element {element!r}")
    if suffix:
        try:
            valence = int(suffix)
        except ValueError:
            raise GraphFormatError(f"bad valence suffix in {text!r}") from None
        if not 1 <= valence <= MAX_VALENCE:
            raise GraphFormatError(f"valence {valence} out of range in {text!r}")
    else:
        valence = DEFAULT_VALENCE[element]
    return Atom(element, valence)


@dataclass(frozen=True)
class ChemicalGraph:
    ids: tuple[int, ...]                      # original vertex ids
    atoms: tuple[Atom, ...]
    edges: tuple[tuple[int, int, int], ...]   # internal indices (u, v, mult)

    def __post_init__(self):
        n = len(self.ids)
        if len(self.atoms) != n:
            raise GraphFormatError("id/atom count mismatch")
        if len(set(self.ids)) != n:
            raise GraphFormatError("duplicate vertex ids")
        used = np.zeros(n)
        seen = set()
        for u, v, m in self.edges:
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {self.ids[u]}")
            if not 0 <= u < n or not 0 <= v < n:
                raise GraphFormatError("edge references unknown vertex")
            if not 1 <= m <= 3:
                raise GraphFormatError(f"bond multiplicity {m} outside [1, 3] "
                                       f"on edge {self.ids[u]}-{self.ids[v]}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {self.ids[u]}-{self.ids[v]}")
            seen.add(key)
            used[u] += m
            used[v] += m
        for i, atom in enumerate(self.atoms):
            if used[i] > atom.valence:
                raise ValenceError(
                    f"vertex {self.ids[i]} ({atom.symbol}) carries bond order "
                    f"{int(used[i])} over its valence {atom.valence}")

    def __len__(self) -> int:
        return len(self.ids)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-vertex list of (neighbor index, multiplicity)."""
        adj = [[] for _ in self.ids]
        for u, v, m in self.edges:
            adj[u].append((v, m))
            adj[v].append((u, m))
        return adj

    def heavy_degree(self, adj=None) -> np.ndarray:
        """Number of non-hydrogen neighbors per vertex."""
        adj = adj or self.adjacency()
        return np.array([sum(1 for u, _ in nbrs if self.atoms[u].element != "H")
                         for nbrs in adj])


# --- text format -------------------------------------------------------------

def parse_graphs(text: str) -> list[ChemicalGraph]:
    """Parse one or more graphs from the line-based V/E format.

    ``V <id> <element>[_<valence>]`` declares a vertex, ``E <id1> <id2>
    <multiplicity>`` an edge; ``#`` starts a comment and ``---`` separates
    graphs.
    """
    graphs = []
    ids: list[int] = []
    atoms: list[Atom] = []
    edges: list[tuple[int, int, int]] = []
    index: dict[int, int] = {}

    def flush():
        nonlocal ids, atoms, edges, index
        if ids:
            graphs.append(ChemicalGraph(tuple(ids), tuple(atoms), tuple(edges)))
        ids, atoms, edges, index = [], [], [], {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "---":
            flush()
            continue
        parts = line.split()
        try:
            if parts[0] == "V" and len(parts) == 3:
                vid = int(parts[1])
                if vid in index:
                    raise GraphFormatError(f"duplicate vertex id {vid}")
                index[vid] = len(ids)
                ids.append(vid)
                atoms.append(parse_symbol(parts[2]))
            elif parts[0] == "E" and len(parts) == 4:
                u, v, m = int(parts[1]), int(parts[2]), int(parts[3])
                if u not in index or v not in index:
                    missing = u if u not in index else v
                    raise GraphFormatError(f"edge references undeclared vertex {missing}")
                edges.append((index[u], index[v], m))
            else:
                raise GraphFormatError(f"unrecognized line {raw!r}")
        except ValueError:
            raise GraphFormatError(f"line {lineno}: bad integer in {raw!r}") from None
        except GraphFormatError as exc:
            raise GraphFormatError(f"line {lineno}: {exc.args[0]}") from None
    flush()
    return graphs


def serialize_graph(g: ChemicalGraph) -> str:
    """Canonical text form: vertices sorted by id, edges by sorted id pair."""
    order = np.argsort(np.asarray(g.ids))
    lines = [f"V {g.ids[i]} {g.atoms[i].symbol}" for i in order]
    pairs = sorted((min(g.ids[u], g.ids[v]), max(g.ids[u], g.ids[v]), m)
                   for u, v, m in g.edges)
    lines += [f"E {a} {b} {m}" for a, b, m in pairs]
    return "\n".join(lines) + "\n"


def serialize_graphs(graphs) -> str:
    return "---\n".join(serialize_graph(g) for g in graphs)


# --- admissibility -----------------------------------------------------------

def is_connected(g: ChemicalGraph) -> bool:
    if len(g) == 0:
        return False
    adj = g.adjacency()
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u, _ in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(g)


def admissibility_failure(g: ChemicalGraph) -> str | None:
    """None when admissible, otherwise which of the three tests failed."""
    if not is_connected(g):
        return "not connected"
    carbons = sum(1 for a in g.atoms if a.element == "C")
    if carbons < 4:
        return f"only {carbons} carbon atoms (need at least 4)"
    heavy = g.heavy_degree()
    worst = int(heavy.max(initial=0))
    if worst > 4:
        i = int(heavy.argmax())
        return f"vertex {g.ids[i]} has {worst} non-hydrogen neighbors (max 4)"
    return None


def filter_admissible(graphs) -> tuple[list[ChemicalGraph], list[tuple[int, str]]]:
    """Split graphs into the admissible ones and a rejection log."""
    kept, rejected = [], []
    for i, g in enumerate(graphs):
        reason = admissibility_failure(g)
        if reason is None:
            kept.append(g)
        else:
            rejected.append((i, reason))
    return kept, rejected


# --- two-layer decomposition -------------------------------------------------

@dataclass(frozen=True)
class FringeTree:
    root: int                       # interior vertex index
    vertices: tuple[int, ...]       # root first, then exterior descendants
    canon: str                      # canonical rooted form


@dataclass(frozen=True)
class TwoLayerDecomposition:
    rho: int
    interior: tuple[int, ...]                 # sorted vertex indices
    exterior: tuple[int, ...]
    interior_edges: tuple[tuple[int, int, int], ...]
    fringe_trees: tuple[FringeTree, ...]      # one per interior vertex
    height: dict = field(repr=False, default_factory=dict)


def strip_heights(g: ChemicalGraph) -> dict[int, int]:
    """Round at which each vertex falls when leaves are peeled repeatedly.

    Vertices of the cyclic core (degree stays >= 2 forever) get no entry.
    The round number equals the height of the pendant subtree hanging at the
    vertex, measured away from the core.
    """
    adj = g.adjacency()
    deg = np.array([len(nbrs) for nbrs in adj])
    alive = np.ones(len(g), dtype=bool)
    height: dict[int, int] = {}
    rnd = 0
    while True:
        leaves = [v for v in range(len(g)) if alive[v] and deg[v] <= 1]
        if not leaves:
            return height
        for v in leaves:
            height[v] = rnd
            alive[v] = False
        for v in leaves:
            for u, _ in adj[v]:
                if alive[u]:
                    deg[u] -= 1
        rnd += 1


def decompose_two_layer(g: ChemicalGraph, rho: int = 2) -> TwoLayerDecomposition:
    """Split a graph into interior and rho-bounded fringe trees.

    Interior: vertices on cycles or paths between cycles, plus pendant
    vertices whose hanging subtree has height >= rho.  Every exterior vertex
    hangs below exactly one interior root; the fringe tree at an interior
    vertex is that vertex plus its exterior descendants (height <= rho by
    construction).  If peeling would consume the whole graph (possible only
    for very small molecules), the deepest vertices are kept as interior so
    the decomposition always has a root.
    """
    if rho < 1:
        raise ExtractionError(f"branch parameter must be >= 1, got {rho}")
    height = strip_heights(g)
    interior = {v for v in range(len(g)) if v not in height or height[v] >= rho}
    if not interior:
        top = max(height.values())
        interior = {v for v, h in height.items() if h == top}

    adj = g.adjacency()
    parent: dict[int, int] = {}
    for v in range(len(g)):
        if v in interior:
            continue
        ups = [u for u, _ in adj[v]
               if u in interior or height.get(u, rho) > height[v]]
        if len(ups) != 1:
            raise ExtractionError(f"vertex {g.ids[v]} has {len(ups)} parents "
                                  "in the pendant forest; graph is malformed")
        parent[v] = ups[0]

    children: dict[int, list[int]] = {}
    for v, p in parent.items():
        children.setdefault(p, []).append(v)

    mult = {}
    for u, v, m in g.edges:
        mult[(u, v)] = mult[(v, u)] = m

    def subtree(v: int) -> tuple[list[int], str]:
        verts = [v]
        parts = []
        for c in sorted(children.get(v, ())):
            cv, cs = subtree(c)
            verts.extend(cv)
            parts.append(f"({mult[(v, c)]}{cs})")
        parts.sort()
        return verts, g.atoms[v].symbol + "".join(parts)

    trees = []
    for r in sorted(interior):
        verts, canon = subtree(r)
        trees.append(FringeTree(r, tuple(verts), canon))

    interior_edges = tuple((u, v, m) for u, v, m in g.edges
                           if u in interior and v in interior)
    exterior = tuple(sorted(set(range(len(g))) - interior))
    return TwoLayerDecomposition(rho, tuple(sorted(interior)), exterior,
                                 interior_edges, tuple(trees), dict(height))


def fringe_tree_canon(symbol_children) -> str:
    """Canonical form of a rooted tree given as (symbol, [(mult, subtree)...])."""
    symbol, kids = symbol_children
    parts = sorted(f"({m}{fringe_tree_canon(sub)})" for m, sub in kids)
    return symbol + "".join(parts)


def maximal_leaf_paths(n: int, edges) -> list[list[int]]:
    """All maximal leaf paths of a plain graph.

    A leaf path runs from a root vertex through internal vertices of degree
    exactly 2 to a leaf; maximality means the root itself does not have
    degree 2.  Paths are reported root-first, ordered by leaf index.
    """
    adj = [[] for _ in range(n)]
    for u, v, *_ in edges:
        adj[u].append(v)
        adj[v].append(u)
    deg = [len(a) for a in adj]
    paths = []
    for leaf in range(n):
        if deg[leaf] != 1:
            continue
        path = [leaf]
        prev, cur = leaf, adj[leaf][0]
        while deg[cur] == 2:
            path.append(cur)
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            prev, cur = cur, nxt
        path.append(cur)
        path.reverse()
        paths.append(path)
    return paths


# --- descriptor extraction ---------------------------------------------------

ALL_FAMILIES = ("size", "interior", "element_counts", "symbol_counts",
                "edge_configs", "fringe_trees", "leaf_ac")


@dataclass(frozen=True)
class DescriptorConfig:
    """Descriptor families plus the corpus-derived alphabets they count over."""

    rho: int = 2
    families: tuple[str, ...] = ALL_FAMILIES
    elements: tuple[str, ...] = ()
    interior_symbols: tuple[tuple[str, int], ...] = ()
    edge_configs: tuple[tuple[str, str, int], ...] = ()
    fringe_classes: tuple[str, ...] = ()
    leaf_acs: tuple[tuple[str, str, int], ...] = ()

    def __post_init__(self):
        for fam in self.families:
            if fam not in ALL_FAMILIES:
                raise ExtractionError(f"unknown descriptor family {fam!r}")

    def column_names(self) -> tuple[str, ...]:
        names: list[str] = []
        fams = self.families
        if "size" in fams:
            names.append("n_heavy")
        if "interior" in fams:
            names += ["n_interior", "n_interior_edges"]
        if "element_counts" in fams:
            for e in self.elements:
                names.append(f"na_int_{e}")
            for e in self.elements:
                names.append(f"na_ext_{e}")
        if "symbol_counts" in fams:
            names += [f"ns_int_{s}{d}" for s, d in self.interior_symbols]
        if "edge_configs" in fams:
            names += [f"ec_int_{a}.{b}.{m}" for a, b, m in self.edge_configs]
        if "fringe_trees" in fams:
            names += [f"fc_{c}" for c in self.fringe_classes]
        if "leaf_ac" in fams:
            names += [f"ac_lf_{a}.{b}.{m}" for a, b, m in self.leaf_acs]
        return tuple(names)

    def to_json(self) -> dict:
        return {"rho": self.rho, "families": list(self.families),
                "elements": list(self.elements),
                "interior_symbols": [list(t) for t in self.interior_symbols],
                "edge_configs": [list(t) for t in self.edge_configs],
                "fringe_classes": list(self.fringe_classes),
                "leaf_acs": [list(t) for t in self.leaf_acs]}

    @staticmethod
    def from_json(doc: dict) -> "DescriptorConfig":
        return DescriptorConfig(
            doc["rho"], tuple(doc["families"]), tuple(doc["elements"]),
            tuple((s, int(d)) for s, d in doc["interior_symbols"]),
            tuple((a, b, int(m)) for a, b, m in doc["edge_configs"]),
            tuple(doc["fringe_classes"]),
            tuple((a, b, int(m)) for a, b, m in doc["leaf_acs"]))


def _graph_structures(g: ChemicalGraph, rho: int):
    """Everything the counting families need from one graph."""
    dec = decompose_two_layer(g, rho)
    adj = g.adjacency()
    heavy = g.heavy_degree(adj)
    interior = set(dec.interior)
    symbol = [a.symbol for a in g.atoms]

    cs = {v: (symbol[v], int(heavy[v])) for v in dec.interior}
    ecs = []
    for u, v, m in dec.interior_edges:
        a, b = sorted((f"{cs[u][0]}{cs[u][1]}", f"{cs[v][0]}{cs[v][1]}"))
        ecs.append((a, b, m))

    # leaf edges of the hydrogen-suppressed graph, oriented (inner, leaf)
    leaf_acs = []
    for u, v, m in g.edges:
        if g.atoms[u].element == "H" or g.atoms[v].element == "H":
            continue
        du, dv = heavy[u], heavy[v]
        if dv == 1 and du == 1:
            a, b = sorted((g.atoms[u].element, g.atoms[v].element))
            leaf_acs.append((a, b, m))
        elif dv == 1:
            leaf_acs.append((g.atoms[u].element, g.atoms[v].element, m))
        elif du == 1:
            leaf_acs.append((g.atoms[v].element, g.atoms[u].element, m))
    return dec, cs, ecs, leaf_acs, symbol, interior


def build_config(graphs, rho: int = 2, families=ALL_FAMILIES) -> DescriptorConfig:
    """Discover the descriptor alphabets over a corpus (pass one of two)."""
    elements, symbols, edge_cfgs, fringes, leafs = set(), set(), set(), set(), set()
    for g in graphs:
        dec, cs, ecs, lacs, symbol, interior = _graph_structures(g, rho)
        elements.update(symbol)
        symbols.update(cs.values())
        edge_cfgs.update(ecs)
        fringes.update(t.canon for t in dec.fringe_trees)
        leafs.update(lacs)
    return DescriptorConfig(rho, tuple(families), tuple(sorted(elements)),
                            tuple(sorted(symbols)), tuple(sorted(edge_cfgs)),
                            tuple(sorted(fringes)), tuple(sorted(leafs)))


def extract_features(graphs, config: DescriptorConfig, ids=None,
                     targets=None) -> DataSet:
    """Count the configured descriptor families for every graph (pass two).

    Elements outside the config's alphabet are an error; configurations or
    fringe classes never seen in the corpus simply contribute no counts.
    """
    names = config.column_names()
    rows = []
    known = set(config.elements)
    for gi, g in enumerate(graphs):
        dec, cs, ecs, lacs, symbol, interior = _graph_structures(g, config.rho)
        for s in symbol:
            if s not in known:
                raise ExtractionError(f"graph {gi}: element {s} not in the "
                                      "configured alphabet")
        row = []
        fams = config.families
        if "size" in fams:
            row.append(sum(1 for a in g.atoms if a.element != "H"))
        if "interior" in fams:
            row += [len(dec.interior), len(dec.interior_edges)]
        if "element_counts" in fams:
            for e in config.elements:
                row.append(sum(1 for v in dec.interior if symbol[v] == e))
            for e in config.elements:
                row.append(sum(1 for v in dec.exterior if symbol[v] == e))
        if "symbol_counts" in fams:
            for key in config.interior_symbols:
                row.append(sum(1 for v in dec.interior if cs[v] == key))
        if "edge_configs" in fams:
            for key in config.edge_configs:
                row.append(sum(1 for e in ecs if e == key))
        if "fringe_trees" in fams:
            for canon in config.fringe_classes:
                row.append(sum(1 for t in dec.fringe_trees if t.canon == canon))
        if "leaf_ac" in fams:
            for key in config.leaf_acs:
                row.append(sum(1 for e in lacs if e == key))
        rows.append(row)
    if ids is None:
        ids = [f"g{i + 1}" for i in range(len(graphs))]
    if targets is None:
        targets = np.zeros(len(graphs))
    return DataSet(ids, np.array(rows, dtype=float).reshape(len(graphs), len(names)),
                   targets, names)
