#pragma once

#include <cstdint>

#include "smin/graph.hpp"

namespace smin {

/// Block-structured data: users and items are split into `blocks` groups;
/// a user interacts with an item of its own block with `in_block_prob` and
/// with any other item with `cross_block_prob`. Social ties and item
/// categories follow the same blocks. `background_items` adds items that
/// belong to no block and are interacted with at `cross_block_prob`.
struct PlantedConfig {
  std::size_t users = 50;
  std::size_t items = 60;
  std::size_t blocks = 3;
  double in_block_prob = 0.4;
  double cross_block_prob = 0.01;
  double social_in_block_prob = 0.15;
  double social_cross_block_prob = 0.01;
  /// Categories per block; every block item gets one of its block's categories.
  std::size_t categories_per_block = 2;
  std::size_t background_items = 0;
  /// Give every item nobody drew one interaction (with a user of its block
  /// when it has one), so the data survives a round trip through TSV files.
  bool cover_items = false;
  std::uint64_t seed = 1;
};

struct PlantedDataset {
  Dataset data;
  /// Block of every user / item; background items carry `blocks`.
  std::vector<std::size_t> user_block;
  std::vector<std::size_t> item_block;
};

/// Every user gets at least two interactions so leave-one-out yields a case
/// per user.
PlantedDataset make_planted_dataset(const PlantedConfig& config);

}  // namespace smin
