#include "smin/metapath.hpp"

#include <algorithm>
#include <cmath>

#include "smin/error.hpp"

namespace smin {

namespace {

MetapathAdjacency finish(MetapathKind kind, SparseMatrix adj, std::size_t capped_rows) {
  MetapathAdjacency mp;
  mp.kind = kind;
  mp.adj = std::move(adj);
  mp.neighbor_counts.resize(mp.adj.rows());
  for (std::size_t r = 0; r < mp.adj.rows(); ++r) mp.neighbor_counts[r] = mp.adj.row_nnz(r);
  mp.capped_rows = capped_rows;
  return mp;
}

/// Neighbors of every row under binarize(A·Aᵀ) minus the diagonal, each row
/// truncated to the `cap` largest path counts, then symmetrized by union.
SparseMatrix capped_cooccurrence(const SparseMatrix& a, std::size_t cap, std::size_t& capped_rows) {
  const std::size_t n = a.rows();
  const SparseMatrix at = a.transpose();
  std::vector<std::vector<std::size_t>> kept(n);
  std::size_t capped = 0;
  const auto rows = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel reduction(+ : capped) if (n > 256)
  {
    std::vector<double> acc(n, 0.0);
    std::vector<std::size_t> touched;
#pragma omp for schedule(dynamic, 32)
    for (std::ptrdiff_t rr = 0; rr < rows; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      touched.clear();
      const auto mids = a.row_cols(r);
      const auto mid_vals = a.row_values(r);
      for (std::size_t p = 0; p < mids.size(); ++p) {
        const auto ends = at.row_cols(mids[p]);
        const auto end_vals = at.row_values(mids[p]);
        for (std::size_t q = 0; q < ends.size(); ++q) {
          const std::size_t c = ends[q];
          if (c == r) continue;
          if (acc[c] == 0.0) touched.push_back(c);
          acc[c] += mid_vals[p] * end_vals[q];
        }
      }
      if (cap != 0 && touched.size() > cap) {
        ++capped;
        auto stronger = [&](std::size_t x, std::size_t y) {
          return acc[x] != acc[y] ? acc[x] > acc[y] : x < y;
        };
        std::nth_element(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(cap - 1),
                         touched.end(), stronger);
        for (auto it = touched.begin() + static_cast<std::ptrdiff_t>(cap); it != touched.end(); ++it)
          acc[*it] = 0.0;
        touched.resize(cap);
      }
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched) acc[c] = 0.0;
      kept[r] = touched;
    }
  }
  capped_rows = capped;

  std::vector<Triplet> t;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c : kept[r]) {
      t.push_back({r, c, 1.0});
      t.push_back({c, r, 1.0});
    }
  return SparseMatrix::from_triplets(n, n, std::move(t)).binarized();
}

void require_small(const CollaborativeHeteroGraph& g) {
  const std::size_t nodes = g.user_count() + g.item_count() + g.entity_count();
  if (nodes > 1000)
    throw DomainError("oracle_paths: " + std::to_string(nodes) + " nodes exceeds the enumeration limit of 1000");
}

}  // namespace

Domain domain_of(MetapathKind kind) noexcept {
  switch (kind) {
    case MetapathKind::UU:
    case MetapathKind::UIU:
    case MetapathKind::UIKIU:
      return Domain::User;
    case MetapathKind::IUI:
    case MetapathKind::IKI:
      return Domain::Item;
  }
  return Domain::User;
}

std::string_view to_string(MetapathKind kind) noexcept {
  switch (kind) {
    case MetapathKind::UU: return "UU";
    case MetapathKind::UIU: return "UIU";
    case MetapathKind::UIKIU: return "UIKIU";
    case MetapathKind::IUI: return "IUI";
    case MetapathKind::IKI: return "IKI";
  }
  return "?";
}

std::optional<MetapathKind> parse_metapath(std::string_view name) noexcept {
  for (auto k : kAllMetapaths)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

MetapathAdjacency build_uu(const CollaborativeHeteroGraph& graph) {
  std::vector<Triplet> t;
  for (auto [a, b] : graph.social_edges()) {
    if (a == b) continue;
    t.push_back({a, b, 1.0});
    t.push_back({b, a, 1.0});
  }
  const std::size_t n = graph.user_count();
  return finish(MetapathKind::UU, SparseMatrix::from_triplets(n, n, std::move(t)).binarized(), 0);
}

MetapathAdjacency build_uiu(const CollaborativeHeteroGraph& graph, const MetapathOptions& options) {
  std::size_t capped = 0;
  auto adj = capped_cooccurrence(graph.interactions(), options.degree_cap, capped);
  return finish(MetapathKind::UIU, std::move(adj), capped);
}

MetapathAdjacency build_uikiu(const CollaborativeHeteroGraph& graph, const MetapathOptions& options) {
  // Row u of X·C counts the paths u → item → entity.
  const SparseMatrix user_entity = spgemm(graph.interactions(), graph.item_entity_incidence());
  std::size_t capped = 0;
  auto adj = capped_cooccurrence(user_entity, options.degree_cap, capped);
  return finish(MetapathKind::UIKIU, std::move(adj), capped);
}

MetapathAdjacency build_iui(const CollaborativeHeteroGraph& graph, const MetapathOptions& options) {
  std::size_t capped = 0;
  auto adj = capped_cooccurrence(graph.interactions().transpose(), options.degree_cap, capped);
  return finish(MetapathKind::IUI, std::move(adj), capped);
}

MetapathAdjacency build_iki(const CollaborativeHeteroGraph& graph, const MetapathOptions& options) {
  std::size_t capped = 0;
  auto adj = capped_cooccurrence(graph.item_entity_incidence(), options.degree_cap, capped);
  return finish(MetapathKind::IKI, std::move(adj), capped);
}

MetapathAdjacency build_metapath(const CollaborativeHeteroGraph& graph, MetapathKind kind,
                                 const MetapathOptions& options) {
  switch (kind) {
    case MetapathKind::UU: return build_uu(graph);
    case MetapathKind::UIU: return build_uiu(graph, options);
    case MetapathKind::UIKIU: return build_uikiu(graph, options);
    case MetapathKind::IUI: return build_iui(graph, options);
    case MetapathKind::IKI: return build_iki(graph, options);
  }
  throw DomainError("unknown metapath kind");
}

SparseMatrix oracle_paths(const CollaborativeHeteroGraph& graph, MetapathKind kind) {
  require_small(graph);
  const std::size_t nu = graph.user_count(), ni = graph.item_count(), ne = graph.entity_count();
  std::vector<std::vector<std::size_t>> user_items(nu), item_users(ni), item_entities(ni), entity_items(ne);
  for (const auto& t : graph.interactions().triplets()) {
    user_items[t.row].push_back(t.col);
    item_users[t.col].push_back(t.row);
  }
  for (const auto& tr : graph.item_relations()) {
    item_entities[tr.item].push_back(tr.entity);
    entity_items[tr.entity].push_back(tr.item);
  }

  const std::size_t n = domain_of(kind) == Domain::User ? nu : ni;
  std::vector<std::vector<char>> hit(n, std::vector<char>(n, 0));
  auto mark = [&](std::size_t a, std::size_t b) {
    if (a != b) hit[a][b] = 1;
  };

  switch (kind) {
    case MetapathKind::UU:
      for (auto [a, b] : graph.social_edges()) {
        mark(a, b);
        mark(b, a);
      }
      break;
    case MetapathKind::UIU:
      for (std::size_t u = 0; u < nu; ++u)
        for (auto i : user_items[u])
          for (auto u2 : item_users[i]) mark(u, u2);
      break;
    case MetapathKind::UIKIU:
      for (std::size_t u = 0; u < nu; ++u)
        for (auto i : user_items[u])
          for (auto c : item_entities[i])
            for (auto i2 : entity_items[c])
              for (auto u2 : item_users[i2]) mark(u, u2);
      break;
    case MetapathKind::IUI:
      for (std::size_t i = 0; i < ni; ++i)
        for (auto u : item_users[i])
          for (auto i2 : user_items[u]) mark(i, i2);
      break;
    case MetapathKind::IKI:
      for (std::size_t i = 0; i < ni; ++i)
        for (auto c : item_entities[i])
          for (auto i2 : entity_items[c]) mark(i, i2);
      break;
  }

  std::vector<Triplet> t;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (hit[a][b]) t.push_back({a, b, 1.0});
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

GcnCoefficients gcn_coefficients(const MetapathAdjacency& mp) {
  const std::size_t n = mp.adj.rows();
  GcnCoefficients out;
  out.self.resize(n);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto deg = static_cast<double>(mp.neighbor_counts[i]);
    out.self[i] = 1.0 / std::max(1.0, deg);
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  std::vector<Triplet> t;
  t.reserve(mp.adj.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    t.push_back({r, r, out.self[r]});
    for (std::size_t c : mp.adj.row_cols(r)) t.push_back({r, c, inv_sqrt[r] * inv_sqrt[c]});
  }
  out.propagation = SparseMatrix::from_triplets(n, n, std::move(t));
  return out;
}

}  // namespace smin
