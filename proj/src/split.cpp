#include "smin/split.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "smin/error.hpp"
#include "smin/rng.hpp"

namespace smin {

Split split_leave_one_out(const CollaborativeHeteroGraph& graph, std::uint64_t seed) {
  if (graph.interaction_count() == 0) throw DataError("split_leave_one_out: graph has no interactions");
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> train;
  train.reserve(graph.interaction_count());
  Split split;
  split.seed = seed;
  for (std::size_t u = 0; u < graph.user_count(); ++u) {
    const auto items = graph.user_items(u);
    std::size_t held = items.size();
    if (items.size() >= 2) {
      held = rng.uniform_index(items.size());
      split.test.push_back({u, items[held], {}});
    }
    for (std::size_t k = 0; k < items.size(); ++k)
      if (k != held) train.emplace_back(u, items[k]);
  }
  split.train = graph.with_interactions(std::move(train));
  return split;
}

std::vector<EvalCase> sample_eval_negatives(const CollaborativeHeteroGraph& full, const Split& split,
                                            std::uint64_t seed, std::size_t negatives) {
  Rng rng(seed);
  const std::size_t n_items = full.item_count();
  std::vector<EvalCase> cases = split.test;
  for (auto& c : cases) {
    const auto seen = full.user_items(c.user);
    const std::size_t eligible = n_items - seen.size();
    if (eligible < negatives) {
      throw SamplingError("user " + std::to_string(c.user) + " has only " + std::to_string(eligible) +
                          " non-interacted items; " + std::to_string(negatives) + " negatives required");
    }
    c.negatives.clear();
    c.negatives.reserve(negatives);
    if (eligible >= 2 * negatives) {
      // Rejection sampling: each accepted draw is uniform over the remaining pool.
      std::unordered_set<std::size_t> chosen;
      while (c.negatives.size() < negatives) {
        const std::size_t item = rng.uniform_index(n_items);
        if (std::binary_search(seen.begin(), seen.end(), item) || chosen.contains(item)) continue;
        chosen.insert(item);
        c.negatives.push_back(item);
      }
    } else {
      std::vector<std::size_t> pool;
      pool.reserve(eligible);
      for (std::size_t i = 0; i < n_items; ++i)
        if (!std::binary_search(seen.begin(), seen.end(), i)) pool.push_back(i);
      for (std::size_t k = 0; k < negatives; ++k) {
        const std::size_t j = k + rng.uniform_index(pool.size() - k);
        std::swap(pool[k], pool[j]);
        c.negatives.push_back(pool[k]);
      }
    }
  }
  return cases;
}

}  // namespace smin
