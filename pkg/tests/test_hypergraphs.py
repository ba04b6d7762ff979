import numpy as np
import pytest

from pauliverify.hypergraphs import (
    adaptive_form,
    build_state,
    connectivity,
    hypergraph,
    hypergraph_to_jsonable,
    load_hypergraph,
    random_bms_instance,
    stabilizer_dense,
)
from pauliverify.states import to_density

from conftest import dense_from_axes


def random_hypergraph(n, rng, edge_prob=0.5):
    from itertools import combinations

    edges = [
        combo
        for size in (2, 3)
        for combo in combinations(range(n), size)
        if rng.random() < edge_prob
    ]
    return hypergraph(n, edges)


def test_spec_validation():
    with pytest.raises(ValueError):
        hypergraph(3, [(0,)])
    with pytest.raises(ValueError):
        hypergraph(3, [(0, 1, 2, 1)])
    with pytest.raises(ValueError):
        hypergraph(3, [(0, 3)])
    with pytest.raises(ValueError):
        hypergraph(3, [(0, 1), (1, 0)])  # duplicate after sorting
    with pytest.raises(ValueError):
        hypergraph(4, [(0, 1, 2, 3)])  # beyond max edge size 3


def test_build_state_no_edges_is_plus():
    st = build_state(hypergraph(3, []))
    assert np.allclose(st.data, np.full(8, 1 / np.sqrt(8)))


def test_build_state_single_triple():
    st = build_state(hypergraph(3, [(0, 1, 2)]))
    want = np.full(8, 1 / np.sqrt(8))
    want[7] *= -1
    assert np.allclose(st.data, want)


def test_build_state_edge_order_invariant():
    a = build_state(hypergraph(4, [(0, 1), (1, 2, 3), (0, 3)]))
    b = build_state(hypergraph(4, [(0, 3), (0, 1), (1, 2, 3)]))
    assert np.allclose(a.data, b.data)


def test_two_qubit_graph_state_stabilizer():
    g = hypergraph(2, [(0, 1)])
    st = build_state(g)
    xz = dense_from_axes("XZ")
    assert np.allclose(xz @ st.data, st.data)
    assert np.allclose(stabilizer_dense(g, 0), xz)


def test_stabilizer_dense_empty_edges_is_x():
    g = hypergraph(3, [])
    assert np.allclose(stabilizer_dense(g, 1), dense_from_axes("IXI"))


def test_three_qubit_worked_example_stabilizers():
    g = hypergraph(3, [(0, 1, 2)])
    # projector expansions written out by hand
    g1 = dense_from_axes("X0I") + dense_from_axes("X1Z")
    g2 = dense_from_axes("0XI") + dense_from_axes("1XZ")
    g3 = dense_from_axes("0IX") + dense_from_axes("1ZX")
    assert np.allclose(stabilizer_dense(g, 0), g1)
    assert np.allclose(stabilizer_dense(g, 1), g2)
    assert np.allclose(stabilizer_dense(g, 2), g3)


def test_connectivity_counts():
    assert connectivity(hypergraph(3, []))[0] == 0
    assert connectivity(hypergraph(3, [(0, 1, 2)]))[0] == 1
    from itertools import combinations

    n = 6
    g = hypergraph(n, combinations(range(n), 3))
    xi, per_vertex = connectivity(g)
    assert xi == 10  # C(5, 2)
    assert all(x == 10 for x in per_vertex)


def test_stabilizer_identities_random(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        g = random_hypergraph(n, rng)
        st = build_state(g)
        proj = np.eye(1 << n, dtype=complex)
        for v in range(n):
            gv = stabilizer_dense(g, v)
            assert np.max(np.abs(gv @ gv - np.eye(1 << n))) < 1e-10
            assert np.max(np.abs(gv - gv.conj().T)) < 1e-10
            assert np.max(np.abs(gv @ st.data - st.data)) < 1e-10
            proj = proj @ (np.eye(1 << n) + gv) / 2
        rho = to_density(st).data
        assert np.max(np.abs(proj - rho)) < 1e-10


def test_adaptive_form_worked_example():
    g = hypergraph(3, [(0, 1, 2)])
    form = adaptive_form(g, 0)
    assert form.z_neighbors == ()
    assert form.cz_groups == ((1, 2),)
    assert form.projector_support == (1,)
    # branch a=0: accept on x alone; branch a=1: accept on x*z(vertex 2)
    assert form.resolve((0,)) == (0, frozenset())
    assert form.resolve((1,)) == (0, frozenset({2}))


def test_adaptive_form_graph_state_needs_no_branches():
    g = hypergraph(4, [(0, 1), (0, 2), (2, 3)])
    form = adaptive_form(g, 0)
    assert form.cz_groups == ()
    assert form.projector_support == ()
    assert form.resolve(()) == (0, frozenset({1, 2}))


def test_adaptive_form_sign_can_fire():
    # carrier of one group sits in the projector support of another
    g = hypergraph(4, [(0, 1, 2), (0, 2, 3)])
    form = adaptive_form(g, 0)
    assert form.projector_support == (1, 2)
    assert form.resolve((1, 1)) == (1, frozenset({3}))
    assert form.resolve((0, 1)) == (0, frozenset({3}))
    assert form.resolve((1, 0)) == (0, frozenset())


def test_adaptive_form_z_collision_with_pair_edge():
    # a 2-edge Z and a fired carrier Z on the same vertex cancel
    g = hypergraph(3, [(0, 2), (0, 1, 2)])
    form = adaptive_form(g, 0)
    assert form.resolve((0,)) == (0, frozenset({2}))
    assert form.resolve((1,)) == (0, frozenset())


def test_adaptive_dense_matches_conjugation(rng):
    for _ in range(12):
        n = int(rng.integers(2, 6))
        g = random_hypergraph(n, rng)
        for v in range(n):
            form = adaptive_form(g, v)
            assert np.max(np.abs(form.dense() - stabilizer_dense(g, v))) < 1e-10


def test_resolver_total_and_deterministic(rng):
    g = random_hypergraph(5, rng, edge_prob=0.8)
    form = adaptive_form(g, 0)
    width = len(form.projector_support)
    table = form.branch_table()
    assert len(table) == 1 << width
    for a, alpha, residual in table:
        again = form.resolve(a)
        assert again == (alpha, frozenset(residual))
        assert alpha in (0, 1)
        assert set(residual).isdisjoint(form.projector_support)
        assert form.vertex not in residual


def test_resolver_exhaustive_at_support_width_twelve():
    # twelve disjoint triples through vertex 0: support {1,3,...,23}
    edges = [(0, 2 * i + 1, 2 * i + 2) for i in range(12)]
    g = hypergraph(25, edges)
    form = adaptive_form(g, 0)
    assert len(form.projector_support) == 12
    seen = set()
    for key in range(1 << 12):
        a = tuple((key >> (11 - t)) & 1 for t in range(12))
        alpha, residual = form.resolve(a)
        assert alpha == 0  # disjoint groups never collide
        # fired groups contribute exactly their carriers
        want = {2 * i + 2 for i in range(12) if a[i]}
        assert residual == frozenset(want)
        seen.add((alpha, residual))
    assert len(seen) == 1 << 12


def test_resolver_rejects_bad_assignments():
    form = adaptive_form(hypergraph(3, [(0, 1, 2)]), 0)
    with pytest.raises(ValueError):
        form.resolve((0, 1))
    with pytest.raises(ValueError):
        form.resolve((2,))
    with pytest.raises(ValueError):
        adaptive_form(hypergraph(3, [(0, 1, 2)]), 5)


def test_random_instance_statistics(rng):
    g, z = random_bms_instance(3, 1.0, rng)
    assert len(g.edges) == 4  # 3 pairs + 1 triple
    assert z == (0, 1, 2)
    g, z = random_bms_instance(5, 0.0, rng)
    assert g.edges == () and z == ()
    # mean edge count at p = 1/2 over many draws
    n, draws = 6, 10_000
    total = sum(len(random_bms_instance(n, 0.5, rng)[0].edges) for _ in range(draws))
    expect = (15 + 20) / 2
    sigma = np.sqrt((15 + 20) * 0.25 / draws)
    assert abs(total / draws - expect) < 3 * sigma


def test_json_roundtrip(tmp_path):
    g = hypergraph(4, [(0, 1), (1, 2, 3)])
    path = tmp_path / "g.json"
    import json

    path.write_text(json.dumps(hypergraph_to_jsonable(g, (2,))))
    back, z = load_hypergraph(path)
    assert back == g and z == (2,)
    back, z = load_hypergraph({"n_vertices": 2, "edges": [[1, 0]]})
    assert back.edges == ((0, 1),) and z == ()
