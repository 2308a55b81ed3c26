"""Target specifications: seed graphs, bounds, and extension checking.

A target specification constrains the shape and chemistry of acceptable
graphs.  Its seed graph is an abstract multigraph whose edges carry one of
four subdivision classes: ``ge2`` edges become paths of length at least 2,
``ge1`` paths of length at least 1, ``zeroone`` edges are kept or discarded,
and ``eq1`` edges are used verbatim.  The interior bounds govern path
lengths, attached leaf paths, and bond-multiplicity counts; the chemical
bounds govern elements, fringe trees, and local-structure frequencies.

Checking splits into two operations: verifying an explicit witness (a map
from seed vertices to graph vertices plus realized paths and leaf paths) in
polynomial time, and searching for a witness by capped backtracking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from hpsplit.chemgraph import ChemicalGraph, decompose_two_layer, parse_symbol
from hpsplit.errors import SearchCapError, SpecFormatError, WitnessError

INF = math.inf

EDGE_CLASSES = ("ge2", "ge1", "zeroone", "eq1")
CLASS_FLOORS = {"ge2": 2, "ge1": 1, "zeroone": 0, "eq1": 1}
CLASS_CEILINGS = {"zeroone": 1, "eq1": 1}

SEARCH_MAX_SEED_VERTICES = 20
SEARCH_MAX_INTERIOR = 60


@dataclass(frozen=True)
class SeedEdge:
    name: str
    u: str
    v: str
    klass: str

    def __post_init__(self):
        if self.klass not in EDGE_CLASSES:
            raise SpecFormatError(f"edge {self.name}: unknown class {self.klass!r}")


@dataclass(frozen=True)
class SeedGraph:
    vertices: tuple[str, ...]
    edges: tuple[SeedEdge, ...]

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise SpecFormatError("duplicate seed vertex names")
        names = set(self.vertices)
        seen = set()
        for e in self.edges:
            if e.name in seen:
                raise SpecFormatError(f"duplicate seed edge name {e.name}")
            seen.add(e.name)
            if e.u not in names or e.v not in names:
                raise SpecFormatError(f"edge {e.name} references unknown vertex")

    def edge(self, name: str) -> SeedEdge:
        for e in self.edges:
            if e.name == name:
                return e
        raise SpecFormatError(f"unknown seed edge {name}")

    def connected_without(self, dropped: set[str]) -> bool:
        """Connectivity of the seed after removing the named edges."""
        if not self.vertices:
            return True
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            if e.name in dropped:
                continue
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        stack = [self.vertices[0]]
        seen = {self.vertices[0]}
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(self.vertices)


@dataclass(frozen=True)
class Bounds:
    lb: float = 0.0
    ub: float = INF

    def holds(self, value) -> bool:
        return self.lb <= value <= self.ub

    def __str__(self):
        ub = "inf" if math.isinf(self.ub) else f"{self.ub:g}"
        return f"[{self.lb:g}, {ub}]"


@dataclass(frozen=True)
class InteriorSpec:
    n_int: Bounds = Bounds()
    ell: dict = field(default_factory=dict)         # edge name -> Bounds
    bl_edge: dict = field(default_factory=dict)     # edge name -> Bounds
    ch_edge: dict = field(default_factory=dict)     # edge name -> Bounds
    bl_vertex: dict = field(default_factory=dict)   # vertex name -> Bounds
    ch_vertex: dict = field(default_factory=dict)   # vertex name -> Bounds
    bd: dict = field(default_factory=dict)          # (edge name, mult) -> Bounds

    def path_length_bounds(self, edge: SeedEdge) -> Bounds:
        """Effective length bounds: the class floor/ceiling tightened by ell."""
        given = self.ell.get(edge.name, Bounds())
        lo = max(CLASS_FLOORS[edge.klass], given.lb)
        hi = min(CLASS_CEILINGS.get(edge.klass, INF), given.ub)
        return Bounds(lo, hi)


@dataclass(frozen=True)
class ChemicalSpec:
    rho: int = 2
    n: Bounds = Bounds()                             # non-hydrogen atom count
    lambda_int: frozenset | None = None              # allowed interior symbols
    lambda_star: dict = field(default_factory=dict)  # vertex -> frozenset of symbols
    fringe_vertex: dict = field(default_factory=dict)  # vertex -> frozenset of canons
    fringe_edge: frozenset | None = None             # canons allowed elsewhere
    gamma_int: frozenset | None = None               # allowed (sym:deg, sym:deg, m)
    ldg_int: frozenset | None = None                 # (symbol, degree) key domain
    na: dict = field(default_factory=dict)           # symbol -> Bounds
    na_int: dict = field(default_factory=dict)
    ns_int: dict = field(default_factory=dict)       # (symbol, degree) -> Bounds
    ac_int: dict = field(default_factory=dict)       # (sym, sym, m) -> Bounds
    ec_int: dict = field(default_factory=dict)       # (sym:deg, sym:deg, m) -> Bounds
    fc: dict = field(default_factory=dict)           # canon -> Bounds
    ac_lf: dict = field(default_factory=dict)        # (sym, sym, m) -> Bounds


@dataclass(frozen=True)
class TargetSpecification:
    seed: SeedGraph
    interior: InteriorSpec
    chemical: ChemicalSpec


# --- parsing ------------------------------------------------------------------

def _bound_token(tok: str) -> float:
    if tok.lower() in ("inf", "+inf"):
        return INF
    try:
        return float(tok) if "." in tok else int(tok)
    except ValueError:
        raise SpecFormatError(f"bad bound value {tok!r}") from None


def _symdeg(tok: str) -> tuple[str, int]:
    sym, sep, deg = tok.rpartition(":")
    if not sep:
        raise SpecFormatError(f"chemical symbol {tok!r} needs the form SYMBOL:DEGREE")
    try:
        return sym, int(deg)
    except ValueError:
        raise SpecFormatError(f"bad degree in {tok!r}") from None


def _ec_key(a: str, b: str, m: str) -> tuple[str, str, int]:
    ka, kb = sorted((a, b))
    return (ka, kb, int(m))


def parse_specification(text: str) -> TargetSpecification:
    """Parse the sectioned plain-text specification format.

    Three sections: SEED (vertex/edge lines), INTERIOR (size and per-edge /
    per-vertex bounds), CHEMICAL (element sets, fringe-tree sets, frequency
    bounds).  Unstated bounds default to unconstrained; edge classes imply
    their own length floors.
    """
    section = None
    vertices: list[str] = []
    edges: list[SeedEdge] = []
    interior: dict = {"n_int": Bounds(), "ell": {}, "bl_edge": {}, "ch_edge": {},
                      "bl_vertex": {}, "ch_vertex": {}, "bd": {}}
    chem: dict = {"rho": 2, "n": Bounds(), "lambda_int": None, "lambda_star": {},
                  "fringe_vertex": {}, "fringe_edge": None, "gamma_int": None,
                  "ldg_int": None, "na": {}, "na_int": {}, "ns_int": {},
                  "ac_int": {}, "ec_int": {}, "fc": {}, "ac_lf": {}}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("SEED", "INTERIOR", "CHEMICAL"):
            section = line
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        try:
            if section == "SEED":
                if key == "vertex":
                    vertices.extend(args)
                elif key == "edge":
                    if len(args) != 4:
                        raise SpecFormatError("edge lines need: name u v class")
                    edges.append(SeedEdge(args[0], args[1], args[2], args[3]))
                else:
                    raise SpecFormatError(f"unknown SEED line {key!r}")
            elif section == "INTERIOR":
                if key == "n_int":
                    interior["n_int"] = Bounds(_bound_token(args[0]), _bound_token(args[1]))
                elif key in ("ell", "bl_edge", "ch_edge"):
                    interior[key][args[0]] = Bounds(_bound_token(args[1]),
                                                    _bound_token(args[2]))
                elif key in ("bl_vertex", "ch_vertex"):
                    interior[key][args[0]] = Bounds(_bound_token(args[1]),
                                                    _bound_token(args[2]))
                elif key in ("bd2", "bd3"):
                    interior["bd"][(args[0], int(key[2]))] = Bounds(
                        _bound_token(args[1]), _bound_token(args[2]))
                else:
                    raise SpecFormatError(f"unknown INTERIOR line {key!r}")
            elif section == "CHEMICAL":
                if key == "rho":
                    chem["rho"] = int(args[0])
                elif key == "n":
                    chem["n"] = Bounds(_bound_token(args[0]), _bound_token(args[1]))
                elif key == "lambda_int":
                    chem["lambda_int"] = frozenset(args)
                elif key == "lambda_star":
                    chem["lambda_star"][args[0]] = frozenset(args[1:])
                elif key == "fringe_vertex":
                    chem["fringe_vertex"][args[0]] = frozenset(args[1:])
                elif key == "fringe_edge":
                    chem["fringe_edge"] = frozenset(args)
                elif key == "gamma_int":
                    entries = set() if chem["gamma_int"] is None else set(chem["gamma_int"])
                    entries.add(_ec_key(args[0], args[1], args[2]))
                    chem["gamma_int"] = frozenset(entries)
                elif key == "ldg_int":
                    chem["ldg_int"] = frozenset(_symdeg(t) for t in args)
                elif key == "na":
                    chem["na"][args[0]] = Bounds(_bound_token(args[1]), _bound_token(args[2]))
                elif key == "na_int":
                    chem["na_int"][args[0]] = Bounds(_bound_token(args[1]),
                                                     _bound_token(args[2]))
                elif key == "ns_int":
                    chem["ns_int"][_symdeg(args[0])] = Bounds(_bound_token(args[1]),
                                                              _bound_token(args[2]))
                elif key == "ac_int":
                    chem["ac_int"][_ec_key(args[0], args[1], args[2])] = Bounds(
                        _bound_token(args[3]), _bound_token(args[4]))
                elif key == "ec_int":
                    chem["ec_int"][_ec_key(args[0], args[1], args[2])] = Bounds(
                        _bound_token(args[3]), _bound_token(args[4]))
                elif key == "fc":
                    chem["fc"][args[0]] = Bounds(_bound_token(args[1]),
                                                 _bound_token(args[2]))
                elif key == "ac_lf":
                    chem["ac_lf"][_ec_key(args[0], args[1], args[2])] = Bounds(
                        _bound_token(args[3]), _bound_token(args[4]))
                else:
                    raise SpecFormatError(f"unknown CHEMICAL line {key!r}")
            else:
                raise SpecFormatError("content before any section header")
        except (IndexError, ValueError):
            raise SpecFormatError(f"line {lineno}: malformed {key!r} line") from None
        except SpecFormatError as exc:
            raise SpecFormatError(f"line {lineno}: {exc.args[0]}") from None
    return TargetSpecification(SeedGraph(tuple(vertices), tuple(edges)),
                               InteriorSpec(**interior), ChemicalSpec(**chem))


def serialize_specification(spec: TargetSpecification) -> str:
    """Textual form that reparses to an equal specification."""
    out = ["SEED"]
    if spec.seed.vertices:
        out.append("vertex " + " ".join(spec.seed.vertices))
    for e in spec.seed.edges:
        out.append(f"edge {e.name} {e.u} {e.v} {e.klass}")

    def fmt(v):
        if math.isinf(v):
            return "inf"
        return f"{v:g}"

    out.append("")
    out.append("INTERIOR")
    it = spec.interior
    out.append(f"n_int {fmt(it.n_int.lb)} {fmt(it.n_int.ub)}")
    for keyname in ("ell", "bl_edge", "ch_edge", "bl_vertex", "ch_vertex"):
        for name, b in sorted(getattr(it, keyname).items()):
            out.append(f"{keyname} {name} {fmt(b.lb)} {fmt(b.ub)}")
    for (name, m), b in sorted(it.bd.items()):
        out.append(f"bd{m} {name} {fmt(b.lb)} {fmt(b.ub)}")

    out.append("")
    out.append("CHEMICAL")
    ch = spec.chemical
    out.append(f"rho {ch.rho}")
    out.append(f"n {fmt(ch.n.lb)} {fmt(ch.n.ub)}")
    if ch.lambda_int is not None:
        out.append("lambda_int " + " ".join(sorted(ch.lambda_int)))
    for v, syms in sorted(ch.lambda_star.items()):
        out.append(f"lambda_star {v} " + " ".join(sorted(syms)))
    for v, trees in sorted(ch.fringe_vertex.items()):
        out.append(f"fringe_vertex {v} " + " ".join(sorted(trees)))
    if ch.fringe_edge is not None:
        out.append("fringe_edge " + " ".join(sorted(ch.fringe_edge)))
    if ch.gamma_int is not None:
        for a, b, m in sorted(ch.gamma_int):
            out.append(f"gamma_int {a} {b} {m}")
    if ch.ldg_int is not None:
        out.append("ldg_int " + " ".join(f"{s}:{d}" for s, d in sorted(ch.ldg_int)))
    for sym, b in sorted(ch.na.items()):
        out.append(f"na {sym} {fmt(b.lb)} {fmt(b.ub)}")
    for sym, b in sorted(ch.na_int.items()):
        out.append(f"na_int {sym} {fmt(b.lb)} {fmt(b.ub)}")
    for (sym, d), b in sorted(ch.ns_int.items()):
        out.append(f"ns_int {sym}:{d} {fmt(b.lb)} {fmt(b.ub)}")
    for (a, bb, m), b in sorted(ch.ac_int.items()):
        out.append(f"ac_int {a} {bb} {m} {fmt(b.lb)} {fmt(b.ub)}")
    for (a, bb, m), b in sorted(ch.ec_int.items()):
        out.append(f"ec_int {a} {bb} {m} {fmt(b.lb)} {fmt(b.ub)}")
    for canon, b in sorted(ch.fc.items()):
        out.append(f"fc {canon} {fmt(b.lb)} {fmt(b.ub)}")
    for (a, bb, m), b in sorted(ch.ac_lf.items()):
        out.append(f"ac_lf {a} {bb} {m} {fmt(b.lb)} {fmt(b.ub)}")
    return "\n".join(out) + "\n"


def validate_specification(spec: TargetSpecification) -> list[str]:
    """Internal-consistency check; the list of violations is the result."""
    problems = []
    it, ch, seed = spec.interior, spec.chemical, spec.seed
    edge_names = {e.name for e in seed.edges}
    subdividable = {e.name for e in seed.edges if e.klass in ("ge2", "ge1")}

    def check_bounds(mapping, label, keys=None):
        for key, b in mapping.items():
            if b.lb > b.ub:
                problems.append(f"{label} {key}: lower bound {b.lb:g} exceeds "
                                f"upper bound {b.ub:g}")
            if keys is not None and key not in keys:
                problems.append(f"{label} {key}: no such subject in the seed graph")

    if it.n_int.lb > it.n_int.ub:
        problems.append("n_int: lower bound exceeds upper bound")
    check_bounds(it.ell, "ell", subdividable)
    check_bounds(it.bl_edge, "bl_edge", subdividable)
    check_bounds(it.ch_edge, "ch_edge", subdividable)
    check_bounds(it.bl_vertex, "bl_vertex", set(seed.vertices))
    check_bounds(it.ch_vertex, "ch_vertex", set(seed.vertices))
    for (name, m), b in it.bd.items():
        if b.lb > b.ub:
            problems.append(f"bd{m} {name}: lower bound exceeds upper bound")
        if name not in edge_names:
            problems.append(f"bd{m} {name}: no such edge in the seed graph")
    for v, b in it.bl_vertex.items():
        if b.ub > 1:
            problems.append(f"bl_vertex {v}: at most one leaf path may attach "
                            f"to a seed vertex (upper bound {b.ub:g})")
    for name, b in it.ell.items():
        if name in subdividable:
            floor = CLASS_FLOORS[seed.edge(name).klass]
            if b.ub < floor:
                problems.append(f"ell {name}: upper bound {b.ub:g} below the "
                                f"class floor {floor}")

    zeroone = {e.name for e in seed.edges if e.klass == "zeroone"}
    if zeroone and not seed.connected_without(zeroone):
        problems.append("optional edges are not a non-separating set: removing "
                        "all of them disconnects the seed graph")

    if ch.n.lb > ch.n.ub:
        problems.append("n: lower bound exceeds upper bound")
    if it.n_int.lb > ch.n.lb:
        problems.append(f"interior size floor {it.n_int.lb:g} exceeds the "
                        f"vertex-count floor {ch.n.lb:g}")
    for v, syms in ch.lambda_star.items():
        if v not in seed.vertices:
            problems.append(f"lambda_star {v}: no such seed vertex")
        for s in syms:
            atom = parse_symbol(s)
            if atom.valence < 2:
                problems.append(f"lambda_star {v}: element {s} has valence "
                                f"{atom.valence} < 2")
    for mapping, label in ((ch.na, "na"), (ch.na_int, "na_int"),
                           (ch.ns_int, "ns_int"), (ch.ac_int, "ac_int"),
                           (ch.ec_int, "ec_int"), (ch.fc, "fc"),
                           (ch.ac_lf, "ac_lf")):
        check_bounds(mapping, label)
    return problems


# --- witnesses and extension checking -----------------------------------------

@dataclass(frozen=True)
class ExtensionWitness:
    """An explicit embedding: seed images, realized paths, leaf paths.

    ``paths`` maps each seed edge name to the vertex-id sequence realizing it
    (endpoints included) or to the string "discarded"; ``leaf_paths`` are
    root-first vertex-id sequences whose roots lie on the realized
    subdivision.
    """

    vertex_map: dict
    paths: dict
    leaf_paths: tuple = ()

    def to_json(self) -> dict:
        return {"vertex_map": dict(self.vertex_map),
                "paths": {k: (v if isinstance(v, str) else list(v))
                          for k, v in self.paths.items()},
                "leaf_paths": [list(p) for p in self.leaf_paths]}

    @staticmethod
    def from_json(doc: dict) -> "ExtensionWitness":
        return ExtensionWitness(
            {k: int(v) for k, v in doc["vertex_map"].items()},
            {k: (v if isinstance(v, str) else [int(x) for x in v])
             for k, v in doc["paths"].items()},
            tuple(tuple(int(x) for x in p) for p in doc.get("leaf_paths", ())))


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    bound: str
    observed: str

    def __str__(self):
        return f"{self.rule} [{self.subject}]: observed {self.observed}, allowed {self.bound}"


@dataclass(frozen=True)
class ExtensionReport:
    violations: tuple[Violation, ...]

    @property
    def confirmed(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def to_text(self) -> str:
        if self.confirmed:
            return "extension confirmed\n"
        return "\n".join(str(v) for v in self.violations) + "\n"

    def to_json(self) -> dict:
        return {"confirmed": self.confirmed,
                "violations": [{"rule": v.rule, "subject": v.subject,
                                "bound": v.bound, "observed": v.observed}
                               for v in self.violations]}


class _GraphView:
    """Index maps and interior structures shared by checking and search."""

    def __init__(self, g: ChemicalGraph, rho: int):
        self.g = g
        self.dec = decompose_two_layer(g, rho)
        self.idx_of_id = {vid: i for i, vid in enumerate(g.ids)}
        self.interior = set(self.dec.interior)
        self.int_edges = {}
        for u, v, m in self.dec.interior_edges:
            self.int_edges[(min(u, v), max(u, v))] = m
        self.int_adj = {v: [] for v in self.dec.interior}
        for (u, v), m in self.int_edges.items():
            self.int_adj[u].append(v)
            self.int_adj[v].append(u)
        for nbrs in self.int_adj.values():
            nbrs.sort(key=lambda i: g.ids[i])
        self.heavy = g.heavy_degree()
        self.symbol = [a.symbol for a in g.atoms]
        self.fringe_by_root = {t.root: t for t in self.dec.fringe_trees}

    def symdeg(self, v: int) -> str:
        return f"{self.symbol[v]}:{int(self.heavy[v])}"

    def ec_of(self, u: int, v: int, m: int):
        a, b = sorted((self.symdeg(u), self.symdeg(v)))
        return (a, b, m)

    def ac_of(self, u: int, v: int, m: int):
        a, b = sorted((self.symbol[u], self.symbol[v]))
        return (a, b, m)


def check_extension(g: ChemicalGraph, spec: TargetSpecification,
                    witness: ExtensionWitness) -> ExtensionReport:
    """Verify every rule of the specification against an explicit witness.

    Raises WitnessError when the witness itself is inconsistent with the
    graph (unknown vertices, nonexistent edges, incomplete maps); rule
    failures are returned in the report, one entry per violated rule
    instance.
    """
    view = _GraphView(g, spec.chemical.rho)
    seed, it, ch = spec.seed, spec.interior, spec.chemical
    out: list[Violation] = []

    # -- witness consistency (errors, not violations)
    for sv in seed.vertices:
        if sv not in witness.vertex_map:
            raise WitnessError(f"seed vertex {sv} has no image")
    images: dict[str, int] = {}
    for sv, vid in witness.vertex_map.items():
        if sv not in seed.vertices:
            raise WitnessError(f"unknown seed vertex {sv} in the map")
        if vid not in view.idx_of_id:
            raise WitnessError(f"seed vertex {sv} maps to unknown vertex {vid}")
        images[sv] = view.idx_of_id[vid]
    if len(set(images.values())) != len(images):
        raise WitnessError("seed vertex images are not distinct")
    for sv, v in images.items():
        if v not in view.interior:
            raise WitnessError(f"seed vertex {sv} maps to exterior vertex {g.ids[v]}")

    paths: dict[str, list[int] | None] = {}
    for e in seed.edges:
        if e.name not in witness.paths:
            raise WitnessError(f"seed edge {e.name} has no path entry")
        entry = witness.paths[e.name]
        if entry == "discarded":
            paths[e.name] = None
            continue
        idxs = _resolve_path(view, entry, f"path {e.name}")
        if idxs[0] != images[e.u] or idxs[-1] != images[e.v]:
            if idxs[0] == images[e.v] and idxs[-1] == images[e.u]:
                idxs = idxs[::-1]
            else:
                raise WitnessError(f"path {e.name} does not join the images "
                                   f"of {e.u} and {e.v}")
        paths[e.name] = idxs
    leaf_paths = [_resolve_path(view, p, "leaf path") for p in witness.leaf_paths]

    # -- subdivision structure
    for e in seed.edges:
        realized = paths[e.name]
        if realized is None:
            if e.klass != "zeroone":
                out.append(Violation("edge-discard", e.name,
                                     "only optional edges may be discarded",
                                     "discarded"))
            continue
        bounds = it.path_length_bounds(e)
        length = len(realized) - 1
        if not bounds.holds(length):
            out.append(Violation("path-length", e.name, str(bounds), str(length)))

    used_vertices: dict[int, str] = {}
    used_edges: dict[tuple[int, int], str] = {}
    image_set = set(images.values())
    for name, realized in paths.items():
        if realized is None:
            continue
        for i, v in enumerate(realized):
            internal = 0 < i < len(realized) - 1
            if internal and (v in image_set or v in used_vertices):
                out.append(Violation("path-overlap", name,
                                     "internally disjoint paths",
                                     f"vertex {g.ids[v]} reused"))
            elif internal:
                used_vertices[v] = name
        for a, b in zip(realized, realized[1:]):
            key = (min(a, b), max(a, b))
            if key in used_edges:
                out.append(Violation("path-overlap", name, "edge-disjoint paths",
                                     f"edge {g.ids[key[0]]}-{g.ids[key[1]]} reused"))
            used_edges[key] = name

    # -- leaf paths: shape, roots, disjointness
    on_subdivision = image_set | set(used_vertices)
    root_of_leaf: dict[int, list[int]] = {}
    leaf_members: set[int] = set()
    for lp in leaf_paths:
        root, rest = lp[0], lp[1:]
        if root not in on_subdivision:
            out.append(Violation("leaf-path-root", f"root {g.ids[root]}",
                                 "leaf paths attach on the subdivision",
                                 "detached root"))
            continue
        if root in root_of_leaf:
            out.append(Violation("path-overlap", f"root {g.ids[root]}",
                                 "at most one leaf path per root", "second path"))
            continue
        ok_shape = True
        for i, v in enumerate(rest):
            deg = len(view.int_adj.get(v, ()))
            expected_leaf = i == len(rest) - 1
            if expected_leaf and deg != 1:
                out.append(Violation("leaf-path-shape", f"vertex {g.ids[v]}",
                                     "leaf path must end at an interior leaf",
                                     f"degree {deg}"))
                ok_shape = False
            if not expected_leaf and deg != 2:
                out.append(Violation("leaf-path-shape", f"vertex {g.ids[v]}",
                                     "leaf path internals have degree 2",
                                     f"degree {deg}"))
                ok_shape = False
            if v in on_subdivision or v in leaf_members:
                out.append(Violation("path-overlap", f"vertex {g.ids[v]}",
                                     "leaf paths are disjoint", "vertex reused"))
                ok_shape = False
        if not ok_shape:
            continue
        root_of_leaf[root] = lp
        leaf_members.update(rest)
        for a, b in zip(lp, lp[1:]):
            key = (min(a, b), max(a, b))
            if key in used_edges:
                out.append(Violation("path-overlap", f"vertex {g.ids[a]}",
                                     "leaf paths reuse no edges", "edge reused"))
            used_edges[key] = "leaf"

    # -- exact coverage of the interior
    covered = on_subdivision | leaf_members
    missing = sorted(view.interior - covered)
    if missing:
        out.append(Violation("interior-coverage", "vertices",
                             "every interior vertex on a path or leaf path",
                             f"uncovered {[g.ids[v] for v in missing]}"))
    extra_edges = sorted(set(view.int_edges) - set(used_edges))
    if extra_edges:
        pretty = [f"{g.ids[a]}-{g.ids[b]}" for a, b in extra_edges]
        out.append(Violation("interior-coverage", "edges",
                             "every interior edge realized exactly once",
                             f"unaccounted {pretty}"))

    # -- size bounds
    n_int = len(view.interior)
    if not it.n_int.holds(n_int):
        out.append(Violation("n-int-bounds", "interior size", str(it.n_int), str(n_int)))
    n_heavy = sum(1 for a in g.atoms if a.element != "H")
    if not ch.n.holds(n_heavy):
        out.append(Violation("n-bounds", "non-hydrogen atoms", str(ch.n), str(n_heavy)))

    # -- leaf-path bounds at seed vertices and at path internal vertices
    for sv in seed.vertices:
        img = images[sv]
        count = 1 if img in root_of_leaf else 0
        vb = it.bl_vertex.get(sv, Bounds(0, 1))
        if not vb.holds(count):
            out.append(Violation("bl-vertex", sv, str(vb), str(count)))
        if count:
            length = len(root_of_leaf[img]) - 1
            cb = it.ch_vertex.get(sv, Bounds())
            if not cb.holds(length):
                out.append(Violation("ch-vertex", sv, str(cb), str(length)))
    for e in seed.edges:
        realized = paths[e.name]
        if realized is None or e.klass not in ("ge2", "ge1"):
            continue
        internals = realized[1:-1]
        attached = [root_of_leaf[v] for v in internals if v in root_of_leaf]
        bb = it.bl_edge.get(e.name, Bounds())
        if not bb.holds(len(attached)):
            out.append(Violation("bl-edge", e.name, str(bb), str(len(attached))))
        if attached:
            longest = max(len(p) - 1 for p in attached)
            cb = it.ch_edge.get(e.name, Bounds())
            if not cb.holds(longest):
                out.append(Violation("ch-edge", e.name, str(cb), str(longest)))

    # -- bond-multiplicity counts along each realized path
    for e in seed.edges:
        realized = paths[e.name]
        for m in (2, 3):
            b = it.bd.get((e.name, m))
            if b is None:
                continue
            count = 0
            if realized is not None:
                for x, y in zip(realized, realized[1:]):
                    if view.int_edges[(min(x, y), max(x, y))] == m:
                        count += 1
            if not b.holds(count):
                out.append(Violation("bd-bounds", f"{e.name} multiplicity {m}",
                                     str(b), str(count)))

    # -- chemistry
    for sv in seed.vertices:
        allowed = ch.lambda_star.get(sv)
        sym = view.symbol[images[sv]]
        if allowed is not None and sym not in allowed:
            out.append(Violation("seed-element", sv, "/".join(sorted(allowed)), sym))
    if ch.lambda_int is not None:
        for v in sorted(view.interior):
            if view.symbol[v] not in ch.lambda_int:
                out.append(Violation("element-membership", f"vertex {g.ids[v]}",
                                     "/".join(sorted(ch.lambda_int)), view.symbol[v]))
    if ch.gamma_int is not None:
        for (u, v), m in sorted(view.int_edges.items()):
            ec = view.ec_of(u, v, m)
            if ec not in ch.gamma_int:
                out.append(Violation("ec-membership", f"edge {g.ids[u]}-{g.ids[v]}",
                                     "declared edge configurations", str(ec)))
    image_names = {v: sv for sv, v in images.items()}
    for v in sorted(view.interior):
        canon = view.fringe_by_root[v].canon
        if v in image_names:
            allowed = ch.fringe_vertex.get(image_names[v])
        else:
            allowed = ch.fringe_edge
        if allowed is not None and canon not in allowed:
            out.append(Violation("fringe-membership", f"vertex {g.ids[v]}",
                                 "declared fringe trees", canon))

    def count_bounds(rule, mapping, counter):
        for key, b in sorted(mapping.items(), key=lambda kv: str(kv[0])):
            observed = counter(key)
            if not b.holds(observed):
                out.append(Violation(rule, str(key), str(b), str(observed)))

    count_bounds("na-bounds", ch.na,
                 lambda s: sum(1 for sym in view.symbol if sym == s))
    count_bounds("na-int-bounds", ch.na_int,
                 lambda s: sum(1 for v in view.interior if view.symbol[v] == s))
    count_bounds("ns-int-bounds", ch.ns_int,
                 lambda key: sum(1 for v in view.interior
                                 if (view.symbol[v], int(view.heavy[v])) == key))
    count_bounds("ac-int-bounds", ch.ac_int,
                 lambda key: sum(1 for (u, v), m in view.int_edges.items()
                                 if view.ac_of(u, v, m) == key))
    count_bounds("ec-int-bounds", ch.ec_int,
                 lambda key: sum(1 for (u, v), m in view.int_edges.items()
                                 if view.ec_of(u, v, m) == key))
    count_bounds("fc-bounds", ch.fc,
                 lambda canon: sum(1 for t in view.dec.fringe_trees
                                   if t.canon == canon))
    count_bounds("ac-lf-bounds", ch.ac_lf, lambda key: _leaf_ac_count(view, key))
    return ExtensionReport(tuple(out))


def _leaf_ac_count(view: _GraphView, key) -> int:
    g = view.g
    count = 0
    for u, v, m in g.edges:
        if g.atoms[u].element == "H" or g.atoms[v].element == "H":
            continue
        if 1 in (view.heavy[u], view.heavy[v]):
            if view.ac_of(u, v, m) == key:
                count += 1
    return count


def _resolve_path(view: _GraphView, entry, label: str) -> list[int]:
    if not isinstance(entry, (list, tuple)) or len(entry) < 2:
        raise WitnessError(f"{label} must list at least two vertices")
    idxs = []
    for vid in entry:
        if vid not in view.idx_of_id:
            raise WitnessError(f"{label} references unknown vertex {vid}")
        idxs.append(view.idx_of_id[vid])
    if len(set(idxs)) != len(idxs):
        raise WitnessError(f"{label} repeats a vertex")
    for a, b in zip(idxs, idxs[1:]):
        if a not in view.interior or b not in view.interior:
            raise WitnessError(f"{label} leaves the interior at vertex "
                               f"{view.g.ids[a if a not in view.interior else b]}")
        if (min(a, b), max(a, b)) not in view.int_edges:
            raise WitnessError(f"{label} uses nonexistent edge "
                               f"{view.g.ids[a]}-{view.g.ids[b]}")
    return idxs


# --- embedding search ----------------------------------------------------------

def find_embedding(g: ChemicalGraph, spec: TargetSpecification
                   ) -> ExtensionWitness | None:
    """Search for a witness that check_extension confirms.

    Backtracks over seed-vertex assignments (ascending vertex id, filtered
    by the per-vertex element sets) and path realizations (neighbors in
    ascending id order), then derives the forced leaf-path decomposition and
    verifies the full rule set.  Returns the first confirmed witness, or
    None.  Instances over the documented size caps are refused.
    """
    if len(spec.seed.vertices) > SEARCH_MAX_SEED_VERTICES:
        raise SearchCapError(f"seed graph has {len(spec.seed.vertices)} vertices; "
                             f"the search cap is {SEARCH_MAX_SEED_VERTICES}")
    view = _GraphView(g, spec.chemical.rho)
    if len(view.interior) > SEARCH_MAX_INTERIOR:
        raise SearchCapError(f"graph interior has {len(view.interior)} vertices; "
                             f"the search cap is {SEARCH_MAX_INTERIOR}")
    seed, it, ch = spec.seed, spec.interior, spec.chemical
    interior_sorted = sorted(view.interior, key=lambda v: g.ids[v])
    edges_sorted = sorted(seed.edges, key=lambda e: e.name)
    vertices_sorted = sorted(seed.vertices)

    vmap: dict[str, int] = {}
    internals: set[int] = set()
    used_edges: set[tuple[int, int]] = set()
    paths: dict[str, list[int] | None] = {}
    found: list[ExtensionWitness] = []

    def candidates(sv: str):
        allowed = ch.lambda_star.get(sv)
        taken = set(vmap.values())
        for v in interior_sorted:
            if v in taken or v in internals:
                continue
            if allowed is not None and view.symbol[v] not in allowed:
                continue
            yield v

    def assign(sv: str, cont) -> bool:
        if sv in vmap:
            return cont()
        for v in candidates(sv):
            vmap[sv] = v
            if cont():
                return True
            del vmap[sv]
        return False

    def realize(ei: int) -> bool:
        if ei == len(edges_sorted):
            return assign_rest(0)
        e = edges_sorted[ei]
        return assign(e.u, lambda: assign(e.v, lambda: realize_paths(e, ei)))

    def realize_paths(e: SeedEdge, ei: int) -> bool:
        bounds = it.path_length_bounds(e)
        src, dst = vmap[e.u], vmap[e.v]
        if e.klass in ("eq1", "zeroone"):
            key = (min(src, dst), max(src, dst))
            if bounds.holds(1) and key in view.int_edges and key not in used_edges:
                used_edges.add(key)
                paths[e.name] = [src, dst]
                if realize(ei + 1):
                    return True
                used_edges.discard(key)
                del paths[e.name]
            if e.klass == "zeroone" and bounds.holds(0):
                paths[e.name] = None
                if realize(ei + 1):
                    return True
                del paths[e.name]
            return False

        taken = set(vmap.values())

        def extend(current: list[int]) -> bool:
            length = len(current) - 1
            head = current[-1]
            if head == dst:
                if not bounds.holds(length):
                    return False
                for v in current[1:-1]:
                    internals.add(v)
                edge_keys = [(min(a, b), max(a, b))
                             for a, b in zip(current, current[1:])]
                used_edges.update(edge_keys)
                paths[e.name] = list(current)
                if realize(ei + 1):
                    return True
                for v in current[1:-1]:
                    internals.discard(v)
                used_edges.difference_update(edge_keys)
                del paths[e.name]
                return False
            if length >= bounds.ub:
                return False
            for nxt in view.int_adj[head]:
                key = (min(head, nxt), max(head, nxt))
                if key in used_edges or nxt in current:
                    continue
                if nxt != dst and (nxt in taken or nxt in internals):
                    continue
                if nxt == dst and length + 1 < bounds.lb:
                    continue
                if extend(current + [nxt]):
                    return True
            return False

        return extend([src])

    def assign_rest(vi: int) -> bool:
        if vi == len(vertices_sorted):
            return finish()
        return assign(vertices_sorted[vi], lambda: assign_rest(vi + 1))

    def finish() -> bool:
        remaining = view.interior - set(vmap.values()) - internals
        on_subdivision = (set(vmap.values()) | internals)
        comps = _components(remaining, view)
        leaf_paths = []
        roots_used = set()
        for comp in comps:
            ordered = _order_as_leaf_path(comp, on_subdivision, view)
            if ordered is None:
                return False
            root = ordered[0]
            if root in roots_used:
                return False
            roots_used.add(root)
            leaf_paths.append(ordered)
        leaf_paths.sort(key=lambda p: g.ids[p[0]])
        witness = ExtensionWitness(
            {sv: g.ids[v] for sv, v in vmap.items()},
            {name: ("discarded" if p is None else [g.ids[v] for v in p])
             for name, p in paths.items()},
            tuple(tuple(g.ids[v] for v in p) for p in leaf_paths))
        if check_extension(g, spec, witness).confirmed:
            found.append(witness)
            return True
        return False

    return found[0] if realize(0) else None


def _components(vertices: set[int], view: _GraphView) -> list[list[int]]:
    comps = []
    seen = set()
    for start in sorted(vertices, key=lambda v: view.g.ids[v]):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            v = stack.pop()
            for u in view.int_adj[v]:
                if u in vertices and u not in seen:
                    seen.add(u)
                    comp.append(u)
                    stack.append(u)
        comps.append(comp)
    return comps


def _order_as_leaf_path(comp: list[int], on_subdivision: set[int],
                        view: _GraphView) -> list[int] | None:
    """Orient a leftover component as root + pendant path, or report failure."""
    members = set(comp)
    attach = []
    for v in comp:
        for u in view.int_adj[v]:
            if u in on_subdivision:
                attach.append((u, v))
    if len(attach) != 1:
        return None
    root, first = attach[0]
    ordered = [root, first]
    prev, cur = root, first
    while True:
        nxts = [u for u in view.int_adj[cur] if u != prev and u in members]
        if not nxts:
            break
        if len(nxts) > 1:
            return None
        prev, cur = cur, nxts[0]
        ordered.append(cur)
    if len(ordered) - 1 != len(comp):
        return None
    return ordered
