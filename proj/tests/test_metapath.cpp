#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "smin/error.hpp"
#include "smin/metapath.hpp"

using namespace smin;

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

CollaborativeHeteroGraph three_user_graph() {
  // u0:{i0,i1}, u1:{i1}, u2:{i2}; i0,i1 in c0, i2 in c1.
  return {3, 3, Edges{{0, 0}, {0, 1}, {1, 1}, {2, 2}}, Edges{{0, 2}}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 1}}, 1, 2};
}

Edges upper_edges(const SparseMatrix& m) {
  Edges out;
  for (const auto& t : m.triplets())
    if (t.row < t.col) out.emplace_back(t.row, t.col);
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.uniform_index(i)]);
  return p;
}

}  // namespace

TEST_CASE("metapath kinds") {
  CHECK(domain_of(MetapathKind::UIKIU) == Domain::User);
  CHECK(domain_of(MetapathKind::IKI) == Domain::Item);
  for (auto kind : kAllMetapaths) CHECK(parse_metapath(to_string(kind)) == kind);
  CHECK_FALSE(parse_metapath("UIIU").has_value());
}

TEST_CASE("builders on the three-user graph") {
  const auto g = three_user_graph();
  CHECK(upper_edges(build_uu(g).adj) == Edges{{0, 2}});
  CHECK(upper_edges(build_uiu(g).adj) == Edges{{0, 1}});
  CHECK(upper_edges(build_uikiu(g).adj) == Edges{{0, 1}});
  CHECK(upper_edges(build_iui(g).adj) == Edges{{0, 1}});
  const auto iki = build_iki(g);
  CHECK(upper_edges(iki.adj) == Edges{{0, 1}});
  CHECK(iki.neighbor_counts == std::vector<std::size_t>{1, 1, 0});
  for (auto kind : kAllMetapaths) CHECK(build_metapath(g, kind).adj == oracle_paths(g, kind));
}

TEST_CASE("degenerate builders") {
  const CollaborativeHeteroGraph lone(1, 4, Edges{{0, 0}, {0, 1}, {0, 3}}, {}, {}, 0, 0);
  CHECK(build_uiu(lone).adj.nnz() == 0);
  CHECK(build_uikiu(lone).adj.nnz() == 0);
  CHECK(build_iki(lone).adj.nnz() == 0);
  const auto iui = build_iui(lone);
  CHECK(iui.neighbor_counts == std::vector<std::size_t>{2, 2, 0, 2});

  const CollaborativeHeteroGraph one_item(3, 1, Edges{{0, 0}, {2, 0}}, {}, {}, 0, 0);
  CHECK(build_iui(one_item).adj.nnz() == 0);
  CHECK(build_uiu(one_item).neighbor_counts == std::vector<std::size_t>{1, 0, 1});

  const CollaborativeHeteroGraph distinct(2, 3, Edges{{0, 0}, {1, 1}}, {}, {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}, 1, 3);
  CHECK(build_iki(distinct).adj.nnz() == 0);
  CHECK(build_uikiu(distinct).adj.nnz() == 0);

  const CollaborativeHeteroGraph empty(0, 0, {}, {}, {}, 0, 0);
  for (auto kind : kAllMetapaths) CHECK(oracle_paths(empty, kind).nnz() == 0);
}

TEST_CASE("one shared category links every co-active user pair") {
  const auto g = fixtures::random_graph(12, 10, 0, 0.2, 4);
  std::vector<RelationTriple> rel;
  for (std::size_t v = 0; v < 10; ++v) rel.push_back({v, 0, 0});
  Edges x;
  for (const auto& t : g.interactions().triplets()) x.emplace_back(t.row, t.col);
  const CollaborativeHeteroGraph h(12, 10, x, {}, rel, 1, 1);
  const auto adj = build_uikiu(h).adj;
  CHECK(adj == oracle_paths(h, MetapathKind::UIKIU));
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b) {
      const bool active = !h.user_items(a).empty() && !h.user_items(b).empty() && a != b;
      CHECK(adj.contains(a, b) == active);
    }
}

TEST_CASE("builders match path enumeration on random graphs") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t users = 3 + seed % 9, items = 2 + (seed * 7) % 11, entities = seed % 5;
    const auto g = fixtures::random_graph(users, items, entities, 0.15 + 0.01 * static_cast<double>(seed % 10), seed);
    for (auto kind : kAllMetapaths) {
      const auto mp = build_metapath(g, kind, {0});
      CAPTURE(seed);
      CAPTURE(to_string(kind));
      CHECK(mp.adj == oracle_paths(g, kind));
      CHECK(mp.adj.is_symmetric());
      for (std::size_t n = 0; n < mp.adj.rows(); ++n) {
        CHECK_FALSE(mp.adj.contains(n, n));
        CHECK(mp.neighbor_counts[n] == mp.adj.row_nnz(n));
      }
      for (double v : mp.adj.values()) CHECK(v == 1.0);
    }
  }
}

TEST_CASE("oracle refuses large graphs") {
  const CollaborativeHeteroGraph big(900, 200, Edges{{0, 0}}, {}, {}, 0, 0);
  CHECK_THROWS_AS(oracle_paths(big, MetapathKind::UIU), DomainError);
}

TEST_CASE("builders are permutation equivariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = fixtures::random_graph(14, 12, 4, 0.2, 100 + seed);
    const auto pu = permutation(14, seed);
    const auto pv = permutation(12, seed + 50);
    Edges x, s;
    std::vector<RelationTriple> rel;
    for (const auto& t : g.interactions().triplets()) x.emplace_back(pu[t.row], pv[t.col]);
    for (const auto& [a, b] : g.social_edges()) s.emplace_back(pu[a], pu[b]);
    for (const auto& t : g.item_relations()) rel.push_back({pv[t.item], t.relation, t.entity});
    const CollaborativeHeteroGraph h(14, 12, x, s, rel, g.relation_count(), g.entity_count());
    for (auto kind : kAllMetapaths) {
      const auto& p = domain_of(kind) == Domain::User ? pu : pv;
      const auto a = build_metapath(g, kind, {0}).adj;
      const auto b = build_metapath(h, kind, {0}).adj;
      std::vector<Triplet> conj;
      for (const auto& t : a.triplets()) conj.push_back({p[t.row], p[t.col], t.value});
      CHECK(SparseMatrix::from_triplets(a.rows(), a.cols(), conj) == b);
    }
  }
}

TEST_CASE("degree cap keeps the strongest co-occurrences") {
  // u0 shares 3 items with u1, 2 with u2, 1 with u3 and u4.
  const CollaborativeHeteroGraph g(5, 4, Edges{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1},
                                               {3, 2}, {4, 2}},
                                   {}, {}, 0, 0);
  const auto full = build_uiu(g, {0});
  CHECK(full.adj.row_nnz(0) == 4);
  CHECK(full.capped_rows == 0);
  const auto capped = build_uiu(g, {2});
  CHECK(capped.capped_rows > 0);
  CHECK(capped.adj.contains(0, 1));
  CHECK(capped.adj.contains(0, 2));
  CHECK(capped.adj.is_symmetric());
  // Capped edges are a subset of the full adjacency.
  for (const auto& t : capped.adj.triplets()) CHECK(full.adj.contains(t.row, t.col));
  // u3 ties u4 on count with u0; u3 keeps its own top picks and the row union restores symmetry.
  CHECK(capped.adj.contains(3, 0));
  CHECK(capped.adj.contains(0, 3));
}

TEST_CASE("gcn coefficients") {
  // Star: node 0 with 4 leaves, plus isolated node 5.
  MetapathAdjacency mp;
  mp.kind = MetapathKind::UU;
  std::vector<Triplet> t;
  for (std::size_t leaf = 1; leaf <= 4; ++leaf) {
    t.push_back({0, leaf, 1.0});
    t.push_back({leaf, 0, 1.0});
  }
  mp.adj = SparseMatrix::from_triplets(6, 6, t);
  mp.neighbor_counts = {4, 1, 1, 1, 1, 0};
  const auto c = gcn_coefficients(mp);
  CHECK(c.self[0] == 0.25);
  CHECK(c.self[1] == 1.0);
  CHECK(c.self[5] == 1.0);
  CHECK(c.propagation.at(0, 1) == 0.5);
  CHECK(c.propagation.at(3, 0) == 0.5);
  CHECK(c.propagation.at(0, 0) == 0.25);
  CHECK(c.propagation.at(5, 5) == 1.0);
  CHECK(c.propagation.is_symmetric());
  for (double v : c.propagation.values()) CHECK(v > 0.0);

  const auto g = fixtures::small_graph();
  for (auto kind : kAllMetapaths) {
    const auto mp2 = build_metapath(g, kind);
    const auto c2 = gcn_coefficients(mp2);
    for (const auto& e : c2.propagation.triplets()) {
      const double dr = std::max<double>(1, static_cast<double>(mp2.neighbor_counts[e.row]));
      const double want = e.row == e.col ? 1.0 / dr
                                         : 1.0 / std::sqrt(static_cast<double>(mp2.neighbor_counts[e.row]) *
                                                           static_cast<double>(mp2.neighbor_counts[e.col]));
      CHECK(e.value == doctest::Approx(want).epsilon(1e-15));
    }
  }
}
