#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smin/sparse.hpp"

namespace smin {

/// (item, relation, entity): the item is linked to a knowledge entity
/// (e.g. a category) through a named relation.
struct RelationTriple {
  std::size_t item;
  std::size_t relation;
  std::size_t entity;
  friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
};

/// Users, items, binary interactions, directed social edges and item
/// knowledge triples. Immutable once constructed.
class CollaborativeHeteroGraph {
 public:
  CollaborativeHeteroGraph() = default;

  /// Interaction pairs are deduplicated; social edges are kept directed and
  /// deduplicated (self-edges are kept here and dropped by the UU builder).
  CollaborativeHeteroGraph(std::size_t user_count, std::size_t item_count,
                           std::vector<std::pair<std::size_t, std::size_t>> interactions,
                           std::vector<std::pair<std::size_t, std::size_t>> social_edges,
                           std::vector<RelationTriple> item_relations, std::size_t relation_count,
                           std::size_t entity_count);

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t relation_count() const noexcept { return relations_; }
  std::size_t entity_count() const noexcept { return entities_; }

  /// X, users × items, every stored value 1.
  const SparseMatrix& interactions() const noexcept { return interactions_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& social_edges() const noexcept { return social_; }
  const std::vector<RelationTriple>& item_relations() const noexcept { return triples_; }

  /// Item × entity incidence C (binary).
  SparseMatrix item_entity_incidence() const;

  std::span<const std::size_t> user_items(std::size_t user) const { return interactions_.row_cols(user); }
  bool has_interaction(std::size_t user, std::size_t item) const { return interactions_.contains(user, item); }
  std::size_t interaction_count() const noexcept { return interactions_.nnz(); }
  double density() const;

  /// Copy with a different interaction set; side information is shared.
  CollaborativeHeteroGraph with_interactions(std::vector<std::pair<std::size_t, std::size_t>> interactions) const;

  friend bool operator==(const CollaborativeHeteroGraph&, const CollaborativeHeteroGraph&) = default;

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::size_t relations_ = 0;
  std::size_t entities_ = 0;
  SparseMatrix interactions_;
  std::vector<std::pair<std::size_t, std::size_t>> social_;
  std::vector<RelationTriple> triples_;
};

/// Raw identifier for every internal index, per id space.
struct ReindexMaps {
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<std::string> relations;
  std::vector<std::string> entities;
  friend bool operator==(const ReindexMaps&, const ReindexMaps&) = default;
};

struct DatasetPaths {
  std::filesystem::path interactions;
  std::optional<std::filesystem::path> social;
  std::optional<std::filesystem::path> relations;
};

struct LoadStats {
  std::size_t interaction_lines = 0;
  std::size_t duplicate_interactions = 0;
  std::size_t below_threshold = 0;
  /// Social / relation lines naming a user or item absent from the interactions.
  std::size_t skipped_social = 0;
  std::size_t skipped_relations = 0;
};

struct Dataset {
  CollaborativeHeteroGraph graph;
  ReindexMaps maps;
  LoadStats stats;
};

/// Parses the three TSV files. Internal ids are assigned contiguously in
/// order of first appearance in the interactions file, unless `fixed_ids`
/// is given, in which case those maps define the ids and any raw id missing
/// from them is a DataError. A line with a rating below `rating_threshold`
/// is dropped; lines without a rating are kept.
///
/// Relation lines are `item<TAB>entity` (relation name "category") or
/// `item<TAB>relation<TAB>entity`.
Dataset load_dataset(const DatasetPaths& paths, std::optional<double> rating_threshold = std::nullopt,
                     const ReindexMaps* fixed_ids = nullptr);

/// Writes `raw_id<TAB>internal_id` lines.
void write_reindex_map(const std::filesystem::path& file, std::span<const std::string> raw_ids);
std::vector<std::string> read_reindex_map(const std::filesystem::path& file);

/// Writes the graph back as TSV files using raw ids. Loading the result with
/// `maps` as fixed ids reproduces the same graph.
void write_dataset(const CollaborativeHeteroGraph& graph, const ReindexMaps& maps, const DatasetPaths& paths);

}  // namespace smin
