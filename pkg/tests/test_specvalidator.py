import pytest

from hpsplit.chemgraph import Atom, ChemicalGraph
from hpsplit.errors import SearchCapError, SpecFormatError, WitnessError
from hpsplit.specvalidator import (Bounds, ExtensionWitness, SeedEdge,
                                   SeedGraph, check_extension, find_embedding,
                                   parse_specification,
                                   serialize_specification,
                                   validate_specification)
from hpsplit.chemgraph import DEFAULT_VALENCE


def mol(heavy, bonds):
    """Build a hydrogen-filled molecule from heavy atoms and bonds.

    heavy: list of (id, element); bonds: list of (id, id, mult).  Every
    heavy atom gets hydrogens up to its default valence.
    """
    ids = [h[0] for h in heavy]
    atoms = [Atom(h[1], DEFAULT_VALENCE[h[1]]) for h in heavy]
    index = {vid: i for i, vid in enumerate(ids)}
    edges = [(index[u], index[v], m) for u, v, m in bonds]
    capacity = {vid: atoms[index[vid]].valence for vid in ids}
    for u, v, m in bonds:
        capacity[u] -= m
        capacity[v] -= m
    next_id = max(ids) + 1
    for vid in list(ids):
        for _ in range(capacity[vid]):
            ids.append(next_id)
            atoms.append(Atom("H", 1))
            edges.append((index[vid], len(ids) - 1, 1))
            next_id += 1
    return ChemicalGraph(tuple(ids), tuple(atoms), tuple(edges))


BASE_SPEC_TEXT = """
SEED
vertex u1 u2 u3 u4
edge a1 u1 u2 ge2
edge a2 u2 u3 ge1
edge a3 u3 u4 eq1
edge a4 u4 u1 zeroone
edge a5 u2 u4 eq1

INTERIOR
n_int 4 12
ell a1 3 4
ell a2 1 3
bl_edge a1 0 1
ch_edge a1 0 1
bl_vertex u1 0 1
ch_vertex u1 0 1
bd2 a2 0 0

CHEMICAL
rho 2
n 10 15
lambda_int C N O
lambda_star u1 C
lambda_star u2 C
lambda_star u3 C
lambda_star u4 C
fringe_vertex u1 C(1H)
fringe_vertex u2 C(1H) C(1H)(1H) C N
fringe_vertex u3 C(2O)
fringe_vertex u4 C(1H) C(1H)(1H) C(1O(1H))
fringe_edge C(1H) C(1H)(1H) C(1C(1H)(1H)(1H))(1H)(1H) C(1C(1H)(1H)(1H))(1H) C(1H)(1O(1H)) O
gamma_int C:3 C:3 1
gamma_int C:2 C:3 1
gamma_int C:2 C:2 1
gamma_int C:2 O:2 1
gamma_int C:3 O:2 1
gamma_int C:3 C:4 1
gamma_int C:2 C:3 2
gamma_int C:2 N:3 1
gamma_int C:3 N:3 1
ec_int C:3 C:3 1 0 6
ec_int C:2 C:3 1 0 7
ec_int C:2 O:2 1 0 0
ns_int C:2 0 6
ns_int C:3 0 6
ac_int C C 1 0 12
na C 8 14
na O 0 2
na H 10 25
fc C(1C(1H)(1H)(1H))(1H)(1H) 0 3
ac_lf C C 1 0 10
ac_lf C O 2 0 2
"""

# vertex ids: 1..4 seed images, 5=w1 6=w2 7=x1 (path vertices),
# 8=q1 9=r1 (leaf-path vertices), 10/11 methyl carbons, 12 carbonyl O
BASE_HEAVY = [(1, "C"), (2, "C"), (3, "C"), (4, "C"), (5, "C"), (6, "C"),
              (7, "C"), (8, "C"), (9, "C"), (10, "C"), (11, "C"), (12, "O")]
BASE_BONDS = [(1, 5, 1), (5, 6, 1), (6, 2, 1),      # a1 path u1-w1-w2-u2
              (2, 7, 1), (7, 3, 1),                  # a2 path u2-x1-u3
              (3, 4, 1),                             # a3
              (4, 1, 1),                             # a4 (kept)
              (2, 4, 1),                             # a5 chord
              (1, 8, 1), (8, 10, 1),                 # leaf path u1-q1, methyl
              (5, 9, 1), (9, 11, 1),                 # leaf path w1-r1, methyl
              (3, 12, 2)]                            # carbonyl on u3

BASE_WITNESS = ExtensionWitness(
    {"u1": 1, "u2": 2, "u3": 3, "u4": 4},
    {"a1": [1, 5, 6, 2], "a2": [2, 7, 3], "a3": [3, 4], "a4": [4, 1],
     "a5": [2, 4]},
    ((1, 8), (5, 9)))


@pytest.fixture(scope="module")
def base_spec():
    return parse_specification(BASE_SPEC_TEXT)


@pytest.fixture(scope="module")
def base_graph():
    return mol(BASE_HEAVY, BASE_BONDS)


class TestParsing:
    def test_minimal_spec(self):
        spec = parse_specification(
            "SEED\nvertex u1 u2\nedge a1 u1 u2 eq1\nINTERIOR\nCHEMICAL\n")
        assert spec.interior.path_length_bounds(spec.seed.edge("a1")) == Bounds(1, 1)

    def test_table_values_round_trip(self):
        text = ("SEED\nvertex u1 u2\nedge a1 u1 u2 ge2\n"
                "INTERIOR\nn_int 20 28\nell a1 2 3\nCHEMICAL\nn 30 50\n")
        spec = parse_specification(text)
        assert spec.interior.n_int == Bounds(20, 28)
        assert spec.chemical.n == Bounds(30, 50)
        again = parse_specification(serialize_specification(spec))
        assert again == spec

    def test_bound_inversion_flagged(self):
        spec = parse_specification(
            "SEED\nvertex u1 u2\nedge a1 u1 u2 ge2\nINTERIOR\nell a1 3 2\nCHEMICAL\n")
        problems = validate_specification(spec)
        assert any("ell a1" in p for p in problems)

    def test_unknown_edge_class(self):
        with pytest.raises(SpecFormatError):
            parse_specification("SEED\nvertex u1 u2\nedge a1 u1 u2 weird\n")

    def test_base_spec_round_trip(self, base_spec):
        assert parse_specification(serialize_specification(base_spec)) == base_spec


class TestValidateSpecification:
    def test_base_spec_ok(self, base_spec):
        assert validate_specification(base_spec) == []

    def test_separating_optional_edge(self):
        spec = parse_specification(
            "SEED\nvertex u1 u2 u3\nedge a1 u1 u2 zeroone\nedge a2 u2 u3 eq1\n"
            "INTERIOR\nCHEMICAL\n")
        problems = validate_specification(spec)
        assert any("non-separating" in p for p in problems)

    def test_two_leaf_paths_at_vertex_rejected(self):
        spec = parse_specification(
            "SEED\nvertex u1 u2\nedge a1 u1 u2 eq1\n"
            "INTERIOR\nbl_vertex u1 0 2\nCHEMICAL\n")
        problems = validate_specification(spec)
        assert any("bl_vertex" in p for p in problems)

    def test_low_valence_seed_element_rejected(self):
        spec = parse_specification(
            "SEED\nvertex u1 u2\nedge a1 u1 u2 eq1\n"
            "INTERIOR\nCHEMICAL\nlambda_star u1 F\n")
        problems = validate_specification(spec)
        assert any("valence" in p for p in problems)


class TestCheckExtension:
    def test_base_confirmed(self, base_spec, base_graph):
        report = check_extension(base_graph, base_spec, BASE_WITNESS)
        assert report.confirmed, report.to_text()

    def test_witness_error_on_missing_path(self, base_spec, base_graph):
        bad = ExtensionWitness(BASE_WITNESS.vertex_map,
                               {k: v for k, v in BASE_WITNESS.paths.items()
                                if k != "a2"},
                               BASE_WITNESS.leaf_paths)
        with pytest.raises(WitnessError):
            check_extension(base_graph, base_spec, bad)

    def test_witness_error_on_phantom_edge(self, base_spec, base_graph):
        bad = ExtensionWitness(BASE_WITNESS.vertex_map,
                               dict(BASE_WITNESS.paths, a2=[2, 6, 3]),
                               BASE_WITNESS.leaf_paths)
        with pytest.raises(WitnessError):
            check_extension(base_graph, base_spec, bad)


def _mutation_cases():
    # M1: a1 realized one vertex short (w2 dropped)
    heavy1 = [h for h in BASE_HEAVY if h[0] != 6]
    bonds1 = [(1, 5, 1), (5, 2, 1)] + [b for b in BASE_BONDS
                                       if 6 not in (b[0], b[1])
                                       and b != (1, 5, 1)]
    w1 = ExtensionWitness(BASE_WITNESS.vertex_map,
                          dict(BASE_WITNESS.paths, a1=[1, 5, 2]),
                          BASE_WITNESS.leaf_paths)
    yield "path-length", heavy1, bonds1, w1

    # M2: methyl carbon of q1 swapped for nitrogen: forbidden fringe tree
    heavy2 = [(vid, "N") if vid == 10 else (vid, e) for vid, e in BASE_HEAVY]
    yield "fringe-membership", heavy2, BASE_BONDS, BASE_WITNESS

    # M3: hydroxyl groups on u4 and w2 push the oxygen count over its cap
    heavy3 = BASE_HEAVY + [(13, "O"), (14, "O")]
    bonds3 = BASE_BONDS + [(4, 13, 1), (6, 14, 1)]
    yield "na-bounds", heavy3, bonds3, BASE_WITNESS

    # M4: a2 lengthened through an interior oxygen: ec count cap exceeded
    heavy4 = BASE_HEAVY + [(13, "O")]
    bonds4 = [b for b in BASE_BONDS if b != (7, 3, 1)] + [(7, 13, 1), (13, 3, 1)]
    w4 = ExtensionWitness(BASE_WITNESS.vertex_map,
                          dict(BASE_WITNESS.paths, a2=[2, 7, 13, 3]),
                          BASE_WITNESS.leaf_paths)
    yield "ec-int-bounds", heavy4, bonds4, w4

    # M5: chord dropped although its class forbids discarding
    bonds5 = [b for b in BASE_BONDS if b != (2, 4, 1)]
    w5 = ExtensionWitness(BASE_WITNESS.vertex_map,
                          dict(BASE_WITNESS.paths, a5="discarded"),
                          BASE_WITNESS.leaf_paths)
    yield "edge-discard", BASE_HEAVY, bonds5, w5

    # M6: a2's first bond doubled: bd cap exceeded
    bonds6 = [(2, 7, 2) if b == (2, 7, 1) else b for b in BASE_BONDS]
    yield "bd-bounds", BASE_HEAVY, bonds6, BASE_WITNESS

    # M7: u2 swapped to nitrogen against its allowed element set
    heavy7 = [(vid, "N") if vid == 2 else (vid, e) for vid, e in BASE_HEAVY]
    yield "seed-element", heavy7, BASE_BONDS, BASE_WITNESS

    # M8: leaf path at u1 lengthened past its ch cap
    heavy8 = BASE_HEAVY + [(13, "C"), (14, "C")]
    bonds8 = [b for b in BASE_BONDS if b != (8, 10, 1)] + \
        [(8, 13, 1), (13, 14, 1), (8, 10, 1)]
    w8 = ExtensionWitness(BASE_WITNESS.vertex_map, BASE_WITNESS.paths,
                          ((1, 8, 13), (5, 9)))
    yield "ch-vertex", heavy8, bonds8, w8


@pytest.mark.parametrize("rule,heavy,bonds,witness",
                         list(_mutation_cases()),
                         ids=[c[0] for c in _mutation_cases()])
def test_single_rule_mutations(base_spec, rule, heavy, bonds, witness):
    g = mol(heavy, bonds)
    report = check_extension(g, base_spec, witness)
    assert not report.confirmed
    assert report.rules() == {rule}, report.to_text()


def test_loosening_the_tripped_bound_clears_it(base_spec):
    # monotonicity spot check: the bd mutation passes once its cap is lifted
    bonds6 = [(2, 7, 2) if b == (2, 7, 1) else b for b in BASE_BONDS]
    g = mol(BASE_HEAVY, bonds6)
    loosened = parse_specification(
        BASE_SPEC_TEXT.replace("bd2 a2 0 0", "bd2 a2 0 2"))
    assert check_extension(g, loosened, BASE_WITNESS).confirmed


class TestFindEmbedding:
    def test_recovers_confirmed_witness(self, base_spec, base_graph):
        witness = find_embedding(base_graph, base_spec)
        assert witness is not None
        assert check_extension(base_graph, base_spec, witness).confirmed

    def test_topology_mismatch_returns_none(self, base_spec):
        # a tree-shaped molecule cannot host the seed's cycles
        heavy = [(i, "C") for i in range(1, 9)]
        bonds = [(i, i + 1, 1) for i in range(1, 8)]
        g = mol(heavy, bonds)
        assert find_embedding(g, base_spec) is None

    def test_seed_cap_refusal(self, base_graph):
        vertices = tuple(f"u{i}" for i in range(1, 22))
        edges = tuple(SeedEdge(f"a{i}", f"u{i}", f"u{i + 1}", "eq1")
                      for i in range(1, 21))
        from hpsplit.specvalidator import (ChemicalSpec, InteriorSpec,
                                           TargetSpecification)
        spec = TargetSpecification(SeedGraph(vertices, edges), InteriorSpec(),
                                   ChemicalSpec())
        with pytest.raises(SearchCapError):
            find_embedding(base_graph, spec)

    def test_constructed_witness_class_found(self, base_spec, base_graph):
        # the found embedding maps the seed onto the same subdivision the
        # hand witness uses, up to symmetry; path multiset must agree
        witness = find_embedding(base_graph, base_spec)
        lengths = sorted(len(p) - 1 for p in witness.paths.values()
                         if p != "discarded")
        assert lengths == [1, 1, 1, 2, 3]


def test_cycle_graph_never_extends_tree_seed():
    spec = parse_specification(
        "SEED\nvertex u1 u2 u3\nedge a1 u1 u2 ge1\nedge a2 u2 u3 ge1\n"
        "INTERIOR\nCHEMICAL\nrho 2\n")
    # benzene-like ring: its interior is a cycle, a tree seed cannot cover it
    heavy = [(i, "C") for i in range(1, 7)]
    bonds = [(i, i % 6 + 1, 1) for i in range(1, 7)]
    ring = mol(heavy, bonds)
    assert find_embedding(ring, spec) is None


def test_find_embedding_deterministic(base_spec, base_graph):
    w1 = find_embedding(base_graph, base_spec)
    w2 = find_embedding(base_graph, base_spec)
    assert w1 == w2
