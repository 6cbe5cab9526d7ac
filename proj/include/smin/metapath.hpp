#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "smin/graph.hpp"
#include "smin/sparse.hpp"

namespace smin {

/// The five meta-relations:
///   UU    user -social- user
///   UIU   user - item - user
///   UIKIU user - item - entity - item - user
///   IUI   item - user - item
///   IKI   item - entity - item
enum class MetapathKind : std::uint8_t { UU, UIU, UIKIU, IUI, IKI };

inline constexpr std::array<MetapathKind, 5> kAllMetapaths{MetapathKind::UU, MetapathKind::UIU,
                                                          MetapathKind::UIKIU, MetapathKind::IUI,
                                                          MetapathKind::IKI};
inline constexpr std::size_t kMetapathCount = kAllMetapaths.size();

enum class Domain : std::uint8_t { User, Item };

Domain domain_of(MetapathKind kind) noexcept;
std::string_view to_string(MetapathKind kind) noexcept;
std::optional<MetapathKind> parse_metapath(std::string_view name) noexcept;
inline std::size_t index_of(MetapathKind kind) noexcept { return static_cast<std::size_t>(kind); }

struct MetapathOptions {
  /// Maximum neighbors kept per row for the product-based metapaths, ranked
  /// by path count (ties to the smaller id). 0 disables the cap.
  std::size_t degree_cap = 500;
};

/// Binary symmetric neighbor matrix over one domain, zero diagonal.
struct MetapathAdjacency {
  MetapathKind kind = MetapathKind::UU;
  SparseMatrix adj;
  std::vector<std::size_t> neighbor_counts;
  /// Rows whose candidate list exceeded the degree cap.
  std::size_t capped_rows = 0;
};

MetapathAdjacency build_uu(const CollaborativeHeteroGraph& graph);
MetapathAdjacency build_uiu(const CollaborativeHeteroGraph& graph, const MetapathOptions& options = {});
MetapathAdjacency build_uikiu(const CollaborativeHeteroGraph& graph, const MetapathOptions& options = {});
MetapathAdjacency build_iui(const CollaborativeHeteroGraph& graph, const MetapathOptions& options = {});
MetapathAdjacency build_iki(const CollaborativeHeteroGraph& graph, const MetapathOptions& options = {});
MetapathAdjacency build_metapath(const CollaborativeHeteroGraph& graph, MetapathKind kind,
                                 const MetapathOptions& options = {});

/// Reference adjacency from explicit enumeration of every vertex sequence
/// matching the schema (endpoints distinct). No degree cap. Throws
/// DomainError above 1000 nodes.
SparseMatrix oracle_paths(const CollaborativeHeteroGraph& graph, MetapathKind kind);

/// Normalization used by one propagation layer:
///   self[n]      = 1 / max(1, |N_n|)
///   edge(n, n')  = 1 / sqrt(|N_n| |N_n'|)
/// `propagation` holds both as one symmetric matrix (self on the diagonal),
/// so a layer is prelu(propagation · H · W).
struct GcnCoefficients {
  std::vector<double> self;
  SparseMatrix propagation;
};

GcnCoefficients gcn_coefficients(const MetapathAdjacency& mp);

}  // namespace smin
