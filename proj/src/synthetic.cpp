#include "smin/synthetic.hpp"

#include <algorithm>
#include <string>

#include "smin/error.hpp"
#include "smin/rng.hpp"

namespace smin {

PlantedDataset make_planted_dataset(const PlantedConfig& config) {
  if (config.blocks == 0 || config.users < config.blocks || config.items < config.blocks)
    throw ConfigError("planted dataset needs at least one user and item per block");
  Rng rng(config.seed);
  PlantedDataset out;
  const std::size_t n_items = config.items + config.background_items;
  for (std::size_t u = 0; u < config.users; ++u) out.user_block.push_back(u * config.blocks / config.users);
  for (std::size_t i = 0; i < config.items; ++i) out.item_block.push_back(i * config.blocks / config.items);
  for (std::size_t i = 0; i < config.background_items; ++i) out.item_block.push_back(config.blocks);

  std::vector<std::pair<std::size_t, std::size_t>> interactions;
  for (std::size_t u = 0; u < config.users; ++u) {
    std::vector<std::size_t> own;
    std::vector<char> taken(n_items, 0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_items; ++i) {
      const bool same = out.item_block[i] == out.user_block[u];
      if (same) own.push_back(i);
      if (rng.bernoulli(same ? config.in_block_prob : config.cross_block_prob)) {
        taken[i] = 1;
        ++count;
      }
    }
    // Top up sparse users from their own block.
    while (count < 2 && count < own.size()) {
      const std::size_t i = own[rng.uniform_index(own.size())];
      if (!taken[i]) {
        taken[i] = 1;
        ++count;
      }
    }
    for (std::size_t i = 0; i < n_items; ++i)
      if (taken[i]) interactions.emplace_back(u, i);
  }

  std::vector<char> seen(n_items, 0);
  for (const auto& [u, i] : interactions) seen[i] = 1;
  for (std::size_t i = 0; i < n_items && config.cover_items; ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> pool;
    for (std::size_t u = 0; u < config.users; ++u)
      if (out.item_block[i] == config.blocks || out.user_block[u] == out.item_block[i]) pool.push_back(u);
    interactions.emplace_back(pool[rng.uniform_index(pool.size())], i);
  }

  std::vector<std::pair<std::size_t, std::size_t>> social;
  for (std::size_t a = 0; a < config.users; ++a)
    for (std::size_t b = 0; b < config.users; ++b) {
      if (a == b) continue;
      const bool same = out.user_block[a] == out.user_block[b];
      if (rng.bernoulli(same ? config.social_in_block_prob : config.social_cross_block_prob))
        social.emplace_back(a, b);
    }

  std::vector<RelationTriple> triples;
  const std::size_t cpb = std::max<std::size_t>(1, config.categories_per_block);
  for (std::size_t i = 0; i < config.items; ++i)
    triples.push_back({i, 0, out.item_block[i] * cpb + rng.uniform_index(cpb)});
  const std::size_t n_entities = config.blocks * cpb;

  auto& ds = out.data;
  ds.graph = CollaborativeHeteroGraph(config.users, n_items, std::move(interactions), std::move(social),
                                      std::move(triples), 1, n_entities);
  for (std::size_t u = 0; u < config.users; ++u) ds.maps.users.push_back("u" + std::to_string(u));
  for (std::size_t i = 0; i < n_items; ++i) ds.maps.items.push_back("i" + std::to_string(i));
  ds.maps.relations.push_back("category");
  for (std::size_t c = 0; c < n_entities; ++c) ds.maps.entities.push_back("c" + std::to_string(c));
  ds.stats.interaction_lines = ds.graph.interaction_count();
  return out;
}

}  // namespace smin
