#include <doctest.h>

#include <algorithm>

#include "mtp2/graph.hpp"
#include "test_helpers.hpp"

using namespace mtp2;

TEST_CASE("threshold: basic rules") {
    SymmetricMatrix s = SymmetricMatrix::identity(3);
    SymmetricMatrix lam(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) lam.set(i, j, 0.1);

    SUBCASE("dominated off-diagonals give an empty matrix") {
        s.set(0, 1, 0.05);
        s.set(1, 2, 0.1);  // tie: no edge
        const auto t = threshold(s, lam);
        CHECK(t.entries().empty());
    }
    SUBCASE("positive excess survives") {
        s.set(0, 1, 0.5);
        const auto t = threshold(s, lam);
        REQUIRE(t.entries().size() == 1);
        CHECK(t.value(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(t.value(1, 0) == doctest::Approx(0.4).epsilon(1e-15));
    }
    SUBCASE("negative entries are thresholded to zero") {
        s.set(0, 1, -0.3);
        const auto t = threshold(s, lam);
        CHECK(t.entries().empty());
        CHECK(t.value(0, 1) == 0.0);
    }
    SUBCASE("assumption violation is reported with its indices") {
        s.set(0, 2, 1.0);
        CHECK_THROWS_AS(threshold(s, lam), AssumptionViolated);
        try {
            threshold(s, lam);
        } catch (const AssumptionViolated& e) {
            CHECK(e.i() == 0);
            CHECK(e.j() == 2);
        }
    }
    SUBCASE("negative lambda is rejected") {
        lam.set(0, 1, -0.1);
        CHECK_THROWS_AS(threshold(s, lam), std::invalid_argument);
    }
}

TEST_CASE("support_graph: empty, path, and figure pattern") {
    CHECK(support_graph(ThresholdedMatrix(4, {})).edge_count() == 0);

    const ThresholdedMatrix path(3, {{0, 1, 0.2}, {1, 2, 0.3}});
    const auto g = support_graph(path);
    CHECK(g.edge_count() == 2);
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});

    const auto fig = testing::figure_graph();
    auto [s, lam] = testing::instance_for_graph(fig);
    const auto t = threshold(s, lam);
    CHECK(support_graph(t).edges() == fig.edges());
}

TEST_CASE("find_bridges: named cases") {
    const UndirectedGraph path(3, {{0, 1}, {1, 2}});
    CHECK(find_bridges(path) == std::vector<Edge>{{0, 1}, {1, 2}});

    const UndirectedGraph triangle(3, {{0, 1}, {1, 2}, {0, 2}});
    CHECK(find_bridges(triangle).empty());

    const auto fig = testing::figure_graph();
    CHECK(find_bridges(fig) == std::vector<Edge>{{4, 5}, {8, 9}});
}

TEST_CASE("find_bridges agrees with the edge-removal oracle") {
    int graphs = 0;
    for (std::uint64_t seed = 1; graphs < 60; ++seed) {
        const int p = 4 + static_cast<int>(seed % 29);
        const double prob = (seed % 3 == 0) ? 0.05 : (seed % 3 == 1 ? 0.12 : 0.3);
        const auto g = testing::erdos_renyi(p, prob, seed);
        CHECK(find_bridges(g) == testing::brute_force_bridges(g));
        ++graphs;
    }
}

TEST_CASE("connected_components: counts") {
    const auto edgeless = connected_components(UndirectedGraph(5, {}));
    CHECK(*std::max_element(edgeless.begin(), edgeless.end()) == 4);

    const UndirectedGraph path(4, {{0, 1}, {1, 2}, {2, 3}});
    const auto labels = connected_components(path);
    CHECK(std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; }));

    // figure graph minus its bridges has three components
    auto edges = testing::figure_graph().edges();
    std::erase(edges, Edge{4, 5});
    std::erase(edges, Edge{8, 9});
    const auto labels2 = connected_components(UndirectedGraph(16, edges));
    CHECK(*std::max_element(labels2.begin(), labels2.end()) == 2);
}

TEST_CASE("bridge_block_decomposition: acyclic, triangle, figure graph") {
    const auto tree = testing::random_tree(12, 5);
    const auto part_tree = bridge_block_decomposition(tree, find_bridges(tree));
    CHECK(part_tree.cluster_count() == 12);  // every cluster a singleton

    const UndirectedGraph triangle(3, {{0, 1}, {1, 2}, {0, 2}});
    const auto part_tri = bridge_block_decomposition(triangle, find_bridges(triangle));
    CHECK(part_tri.cluster_count() == 1);
    CHECK(part_tri.clusters[0].size() == 3);

    const auto fig = testing::figure_graph();
    const auto part = bridge_block_decomposition(fig, find_bridges(fig));
    REQUIRE(part.cluster_count() == 3);
    CHECK(part.clusters[0] == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(part.clusters[1] == std::vector<int>{5, 6, 7, 8});
    CHECK(part.clusters[2] == std::vector<int>{9, 10, 11, 12, 13, 14, 15});
}

TEST_CASE("partition invariants: disjoint cover and psi/pi round trip") {
    for (std::uint64_t seed = 10; seed < 25; ++seed) {
        const auto g = testing::erdos_renyi(20, 0.08, seed);
        const auto part = bridge_block_decomposition(g, find_bridges(g));
        std::vector<bool> seen(20, false);
        int total = 0;
        for (int k = 0; k < part.cluster_count(); ++k) {
            CHECK(!part.clusters[k].empty());
            for (int v : part.clusters[k]) {
                CHECK(!seen[v]);
                seen[v] = true;
                ++total;
                CHECK(part.psi[v] == k);
                CHECK(part.clusters[k][part.pi[v]] == v);
            }
        }
        CHECK(total == 20);
        for (const Edge& b : part.bridges) CHECK(part.psi[b.first] != part.psi[b.second]);
    }
}

TEST_CASE("non-bridge edges stay inside one cluster") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        const auto g = testing::erdos_renyi(24, 0.09, seed);
        const auto bridges = find_bridges(g);
        const auto part = bridge_block_decomposition(g, bridges);
        for (const Edge& e : g.edges()) {
            const bool is_bridge = std::binary_search(bridges.begin(), bridges.end(), e);
            if (is_bridge)
                CHECK(part.psi[e.first] != part.psi[e.second]);
            else
                CHECK(part.psi[e.first] == part.psi[e.second]);
        }
    }
}

TEST_CASE("bridge tree: contracting clusters yields a forest") {
    for (std::uint64_t seed = 50; seed < 62; ++seed) {
        const auto g = testing::erdos_renyi(26, 0.07, seed);
        const auto part = bridge_block_decomposition(g, find_bridges(g));
        // forest: cluster components + bridge count == cluster count
        std::vector<Edge> contracted;
        for (const Edge& b : part.bridges)
            contracted.emplace_back(std::min(part.psi[b.first], part.psi[b.second]),
                                    std::max(part.psi[b.first], part.psi[b.second]));
        const int forest_components =
            testing::count_components(part.cluster_count(), contracted);
        CHECK(forest_components + static_cast<int>(part.bridges.size()) == part.cluster_count());
    }
}

TEST_CASE("trees decompose into p singleton clusters") {
    for (std::uint64_t seed = 70; seed < 76; ++seed) {
        const int p = 30;
        const auto tree = testing::random_tree(p, seed);
        const auto bridges = find_bridges(tree);
        CHECK(static_cast<int>(bridges.size()) == p - 1);
        const auto part = bridge_block_decomposition(tree, bridges);
        CHECK(part.cluster_count() == p);
    }
}

TEST_CASE("bridge_path: figure graph queries") {
    const auto fig = testing::figure_graph();
    const auto part = bridge_block_decomposition(fig, find_bridges(fig));

    // 1 -> 10 crosses (5,6) then (9,10); 1-based labels
    const auto forward = bridge_path(part, fig, 0, 9);
    CHECK(forward.bridges == std::vector<Edge>{{4, 5}, {8, 9}});

    // reversed query flips order and orientation
    const auto backward = bridge_path(part, fig, 9, 0);
    CHECK(backward.bridges == std::vector<Edge>{{9, 8}, {5, 4}});

    CHECK_THROWS_AS(bridge_path(part, fig, 0, 3), SameCluster);
}

TEST_CASE("bridge_path: disconnected pair yields the empty path") {
    const UndirectedGraph two(4, {{0, 1}, {2, 3}});
    const auto part = bridge_block_decomposition(two, find_bridges(two));
    // (0,1) and (2,3) are bridges, so 0 and 2 sit in singleton clusters
    const auto path = bridge_path(part, two, 0, 2);
    CHECK(path.empty());
}

TEST_CASE("bridge_path orientation invariants on random graphs") {
    for (std::uint64_t seed = 80; seed < 90; ++seed) {
        const auto g = testing::erdos_renyi(22, 0.08, seed);
        const auto part = bridge_block_decomposition(g, find_bridges(g));
        if (part.cluster_count() < 2) continue;
        for (int i = 0; i < 22; i += 3) {
            for (int j = 1; j < 22; j += 4) {
                if (part.psi[i] == part.psi[j]) continue;
                const auto path = bridge_path(part, g, i, j);
                if (path.empty()) continue;
                CHECK(part.psi[path.bridges.front().first] == part.psi[i]);
                CHECK(part.psi[path.bridges.back().second] == part.psi[j]);
                for (std::size_t t = 0; t + 1 < path.bridges.size(); ++t)
                    CHECK(part.psi[path.bridges[t].second] ==
                          part.psi[path.bridges[t + 1].first]);
            }
        }
    }
}
