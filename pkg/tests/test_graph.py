import itertools
from datetime import date, timedelta

import numpy as np
import pytest
import scipy.stats

from bugrank.graph import (
    BipartiteGraph,
    BugBugGraph,
    DegenerateInput,
    LengthMismatch,
    SingletonGraph,
    build_bipartite,
    centrality_heat_correlation,
    clustering_coefficient,
    degree_centrality,
    load_edge_list,
    pagerank,
    project,
    save_edge_list,
    spearman,
)
from tests import synth


def graph_from_pairs(n, id_pairs):
    ids = tuple(range(n))
    return BugBugGraph(ids, frozenset(tuple(sorted(p)) for p in id_pairs))


def brute_force_projection(bg: BipartiteGraph) -> set[tuple[int, int]]:
    # all bug pairs, all packages: O(|B|^2 * |P|)
    packages_of = {b: set() for b in range(len(bg.bug_ids))}
    for b, p, _ in bg.edges:
        packages_of[b].add(p)
    pairs = set()
    for i in range(len(bg.bug_ids)):
        for j in range(i + 1, len(bg.bug_ids)):
            if packages_of[i] & packages_of[j]:
                pairs.add((i, j))
    return pairs


def random_bipartite(rng, n_bugs, n_pkgs, p=0.3) -> BipartiteGraph:
    base = synth.ts(2017, 1, 1)
    edges = set()
    for b in range(n_bugs):
        for q in range(n_pkgs):
            if rng.random() < p:
                edges.add((b, q, base + timedelta(days=int(rng.integers(0, 100)))))
    return BipartiteGraph(
        tuple(range(1, n_bugs + 1)),
        tuple(f"p{q}" for q in range(n_pkgs)),
        frozenset(edges),
    )


class TestBipartite:
    def test_worked_affections_give_seven_edges(self, five_bug_corpus):
        bg = build_bipartite(five_bug_corpus, synth.ts(2019, 1, 1))
        assert len(bg.edges) == 7
        expected = {
            (45702, "mono"), (64371, "mono"), (64371, "banshee"),
            (1022921, "banshee"), (1566870, "banshee"), (1566870, "rhythmbox"),
            (1298939, "rhythmbox"),
        }
        got = {(bg.bug_ids[b], bg.package_ids[p]) for b, p, _ in bg.edges}
        assert got == expected

    def test_cutoff_before_everything(self, five_bug_corpus):
        bg = build_bipartite(five_bug_corpus, synth.ts(2000, 1, 1))
        assert bg.edges == frozenset()
        assert len(bg.bug_ids) == 5  # isolated bug nodes stay

    def test_duplicate_affection_keeps_earliest(self, tmp_path):
        t0 = synth.ts(2017, 1, 1)
        obj = synth.record_obj(
            9, [(t0 + timedelta(days=5), "mono"), (t0 + timedelta(days=1), "mono")],
            t0, [(t0 + timedelta(days=2), "hello")], [(date(2019, 11, 1), 1)],
        )
        path = tmp_path / "c.jsonl"
        synth.write_jsonl([obj], path)
        from bugrank.corpus import load_corpus

        bg = build_bipartite(load_corpus(path), synth.ts(2019, 1, 1))
        assert len(bg.edges) == 1
        (_, _, ts) = next(iter(bg.edges))
        assert ts == t0 + timedelta(days=1)


class TestProjection:
    def test_five_bug_projection(self, five_bug_corpus):
        g = project(build_bipartite(five_bug_corpus, synth.ts(2019, 1, 1)))
        got = {
            tuple(sorted((g.node_ids[i], g.node_ids[j]))) for i, j in g.adjacency
        }
        assert got == synth.FIVE_BUG_PROJECTION

    def test_no_shared_packages(self):
        bg = random_bipartite(np.random.default_rng(0), 4, 4, p=0.0)
        assert project(bg).adjacency == frozenset()

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            bg = random_bipartite(
                rng, int(rng.integers(1, 13)), int(rng.integers(1, 7)),
                p=float(rng.uniform(0.1, 0.6)),
            )
            assert project(bg).adjacency == brute_force_projection(bg)

    def test_matches_brute_force_200_bugs(self):
        bg = random_bipartite(np.random.default_rng(77), 200, 6, p=0.05)
        assert project(bg).adjacency == brute_force_projection(bg)

    def test_exhaustive_small_instances(self):
        # every bipartite graph with |B| <= 3, |P| <= 2
        base = synth.ts(2017, 1, 1)
        for n_bugs, n_pkgs in itertools.product((1, 2, 3), (1, 2)):
            cells = list(itertools.product(range(n_bugs), range(n_pkgs)))
            for bits in itertools.product((0, 1), repeat=len(cells)):
                edges = frozenset(
                    (b, q, base) for (b, q), bit in zip(cells, bits) if bit
                )
                bg = BipartiteGraph(
                    tuple(range(1, n_bugs + 1)),
                    tuple(f"p{q}" for q in range(n_pkgs)),
                    edges,
                )
                assert project(bg).adjacency == brute_force_projection(bg)

    def test_isomorphism_under_relabeling(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n_bugs, n_pkgs = int(rng.integers(2, 10)), int(rng.integers(1, 5))
            bg = random_bipartite(rng, n_bugs, n_pkgs, 0.4)
            perm = rng.permutation(n_bugs)
            # relabel bug i -> position perm[i], with fresh ids spaced apart
            new_ids = tuple(sorted(int(v) for v in rng.choice(10_000, n_bugs, replace=False) + 1))
            relabeled = BipartiteGraph(
                new_ids, bg.package_ids,
                frozenset((int(perm[b]), p, ts) for b, p, ts in bg.edges),
            )
            expected = {
                tuple(sorted((int(perm[i]), int(perm[j]))))
                for i, j in project(bg).adjacency
            }
            assert project(relabeled).adjacency == frozenset(expected)


class TestGraphValidation:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            BugBugGraph((1, 2), frozenset({(0, 0)}))

    def test_unordered_pair_rejected(self):
        with pytest.raises(ValueError):
            BugBugGraph((1, 2), frozenset({(1, 0)}))

    def test_descending_node_ids_rejected(self):
        with pytest.raises(ValueError):
            BugBugGraph((2, 1), frozenset())

    def test_duplicate_bipartite_pair_rejected(self):
        t = synth.ts(2017, 1, 1)
        with pytest.raises(ValueError):
            BipartiteGraph((1,), ("p",), frozenset({(0, 0, t), (0, 0, synth.ts(2017, 1, 2))}))


class TestCentrality:
    def test_star_center(self):
        g = graph_from_pairs(5, [(0, i) for i in range(1, 5)])
        dc = degree_centrality(g)
        assert dc[0] == 1.0

    def test_isolated_node(self):
        g = graph_from_pairs(3, [(0, 1)])
        assert degree_centrality(g)[2] == 0.0

    def test_shared_package_hub_node(self, five_bug_corpus):
        g = project(build_bipartite(five_bug_corpus, synth.ts(2019, 1, 1)))
        idx = g.index_of(64371)
        assert degree_centrality(g)[idx] == pytest.approx(0.75)

    def test_singleton_rejected(self):
        g = BugBugGraph((1,), frozenset())
        with pytest.raises(SingletonGraph):
            degree_centrality(g)

    def test_triangle_clustering(self):
        g = graph_from_pairs(3, [(0, 1), (1, 2), (0, 2)])
        assert clustering_coefficient(g).tolist() == [1.0, 1.0, 1.0]

    def test_path_middle_clustering(self):
        g = graph_from_pairs(3, [(0, 1), (1, 2)])
        assert clustering_coefficient(g)[1] == 0.0

    def test_clustering_matches_triple_enumeration(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            g = synth.random_bugbug_graph(int(rng.integers(3, 40)), 0.2, trial)
            mine = clustering_coefficient(g)
            n = g.n
            expected = np.zeros(n)
            for v in range(n):
                k = g.degree(v)
                if k < 2:
                    continue
                triangles = 0
                for a, b in itertools.combinations(range(n), 2):
                    if g.has_edge(v, a) and g.has_edge(v, b) and g.has_edge(a, b):
                        triangles += 1
                expected[v] = 2 * triangles / (k * (k - 1))
            assert np.array_equal(mine, expected)


def dense_pagerank_oracle(g: BugBugGraph, damping=0.85, iters=20_000):
    n = g.n
    A = g.adjacency_matrix().toarray()
    deg = A.sum(axis=1)
    google = np.full((n, n), (1 - damping) / n)
    for u in range(n):
        if deg[u] == 0:
            google[:, u] += damping / n
        else:
            google[:, u] += damping * A[:, u] / deg[u]
    x = np.full(n, 1 / n)
    for _ in range(iters):
        nx = google @ x
        if np.abs(nx - x).sum() < 1e-14:
            return nx
        x = nx
    return x


class TestCentralityReport:
    def test_invariants_on_random_graphs(self):
        from bugrank.graph import centrality_report

        for trial in range(6):
            g = synth.random_bugbug_graph(20 + trial * 7, 0.15, 40 + trial)
            report = centrality_report(g)
            assert abs(report.pagerank.sum() - 1.0) < 1e-9
            assert report.degree_centrality.min() >= 0.0
            assert report.degree_centrality.max() <= 1.0
            assert report.clustering_coefficient.min() >= 0.0
            assert report.clustering_coefficient.max() <= 1.0

    def test_length_validated(self):
        from bugrank.graph import CentralityReport

        with pytest.raises(LengthMismatch):
            CentralityReport((1, 2), np.zeros(2), np.zeros(2), np.ones(3) / 3)


class TestPagerank:
    def test_two_nodes(self):
        g = graph_from_pairs(2, [(0, 1)])
        assert pagerank(g) == pytest.approx([0.5, 0.5])

    def test_sums_to_one(self):
        g = synth.random_bugbug_graph(37, 0.1, 3)
        assert abs(pagerank(g).sum() - 1.0) < 1e-9

    def test_regular_graph_uniform(self):
        n = 20
        g = graph_from_pairs(n, [(i, (i + 1) % n) for i in range(n)])  # 2-regular ring
        assert np.allclose(pagerank(g), 1 / n, atol=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(17)
        for trial in range(8):
            g = synth.random_bugbug_graph(int(rng.integers(2, 51)), 0.15, 100 + trial)
            mine = pagerank(g, tol=1e-13)
            oracle = dense_pagerank_oracle(g)
            assert np.max(np.abs(mine - oracle)) < 1e-8

    def test_non_convergence_reported(self):
        from bugrank.graph import NonConvergence

        g = synth.random_bugbug_graph(8, 0.4, 2)
        with pytest.raises(NonConvergence):
            pagerank(g, tol=0.0)  # unreachable tolerance forces the cap


class TestSpearman:
    def test_identical(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)

    def test_reversed(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_scipy_with_ties(self):
        rng = np.random.default_rng(23)
        for trial in range(50):
            n = int(rng.integers(3, 31))
            a = rng.integers(0, 6, size=n).astype(float)  # plenty of ties
            # every other trial: ties on both sides
            b = rng.integers(0, 4, size=n).astype(float) if trial % 2 else rng.normal(size=n)
            if np.all(a == a[0]) or np.all(b == b[0]):
                continue
            expected = scipy.stats.spearmanr(a, b).statistic
            assert abs(spearman(a, b) - expected) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman([1, 2], [1, 2, 3])

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            spearman([1, 1, 1], [1, 2, 3])


class TestHeatCorrelation:
    def _threshold_graph(self, n=21):
        pairs = [
            (i, j) for i in range(n) for j in range(i + 1, n) if i + j >= n - 1
        ]
        return graph_from_pairs(n, pairs)

    def test_heat_equals_degree_order(self):
        g = self._threshold_graph()
        heat = g.degrees()
        report = centrality_heat_correlation(g, heat, 10)
        assert report["degree"]["top"] == pytest.approx(1.0)
        assert report["degree"]["bottom"] == pytest.approx(1.0)

    def test_k_too_large(self):
        g = self._threshold_graph()
        with pytest.raises(ValueError):
            centrality_heat_correlation(g, g.degrees(), 11)

    def test_degenerate_heat_propagates(self):
        g = self._threshold_graph()
        with pytest.raises(DegenerateInput):
            centrality_heat_correlation(g, np.zeros(g.n), 5)

    def test_matches_composed_oracle(self):
        rng = np.random.default_rng(31)
        g = synth.random_bugbug_graph(200, 0.05, 9)
        heat = rng.integers(0, 1000, size=200)
        k = 20
        report = centrality_heat_correlation(g, heat, k)
        order = np.lexsort((np.arange(200), -heat.astype(float)))
        measures = {
            "degree": degree_centrality(g),
            "clustering": clustering_coefficient(g),
            "pagerank": pagerank(g),
        }
        for name, values in measures.items():
            for side, idx in (("top", order[:k]), ("bottom", order[-k:])):
                expected = scipy.stats.spearmanr(heat[idx], values[idx]).statistic
                assert report[name][side] == pytest.approx(expected, abs=1e-12)


class TestEdgeListIO:
    def test_round_trip(self, tmp_path, five_bug_corpus):
        g = project(build_bipartite(five_bug_corpus, synth.ts(2019, 1, 1)))
        path = tmp_path / "edges.tsv"
        save_edge_list(g, path)
        again = load_edge_list(path)
        assert again.node_ids == g.node_ids
        assert again.adjacency == g.adjacency

    def test_rerun_byte_identical(self, tmp_path, five_bug_corpus):
        g = project(build_bipartite(five_bug_corpus, synth.ts(2019, 1, 1)))
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        save_edge_list(g, a)
        save_edge_list(g, b)
        assert a.read_bytes() == b.read_bytes()
