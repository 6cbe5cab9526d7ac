#pragma once

#include <string>
#include <vector>

#include "smin/graph.hpp"
#include "smin/optim.hpp"
#include "smin/rng.hpp"
#include "smin/trainer.hpp"

namespace fixtures {

// 8 users, 8 items, 3 entities under 2 relations. Hand-picked so every
// metapath has edges and every user has a negative.
inline smin::CollaborativeHeteroGraph small_graph() {
  std::vector<std::pair<std::size_t, std::size_t>> x{
      {0, 0}, {0, 1}, {0, 4}, {1, 1}, {1, 2}, {2, 0}, {2, 3}, {2, 5}, {3, 2}, {3, 6},
      {4, 4}, {4, 7}, {5, 5}, {5, 6}, {5, 0}, {6, 7}, {6, 3}, {7, 1}, {7, 6}, {7, 2}};
  std::vector<std::pair<std::size_t, std::size_t>> social{{0, 1}, {1, 2}, {3, 4}, {5, 6}, {6, 7}, {7, 0}, {2, 5}};
  std::vector<smin::RelationTriple> rel{{0, 0, 0}, {1, 0, 0}, {2, 0, 1}, {3, 0, 1}, {4, 1, 2},
                                        {5, 1, 2}, {6, 0, 0}, {7, 1, 2}, {3, 1, 2}};
  return {8, 8, x, social, rel, 2, 3};
}

inline smin::TrainConfig small_config() {
  smin::TrainConfig c;
  c.dim = 4;
  c.layers = 2;
  c.k = 2;
  c.lambda0 = 0.1;
  c.lambda_alpha = 0.1;
  c.lambda_beta = 0.1;
  c.lambda_gamma = 0.1;
  c.batch_size = 16;
  c.seed = 11;
  return c;
}

inline smin::CollaborativeHeteroGraph random_graph(std::size_t users, std::size_t items, std::size_t entities,
                                                   double p, std::uint64_t seed) {
  smin::Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> x, social;
  std::vector<smin::RelationTriple> rel;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t v = 0; v < items; ++v)
      if (rng.bernoulli(p)) x.emplace_back(u, v);
  for (std::size_t a = 0; a < users; ++a)
    for (std::size_t b = 0; b < users; ++b)
      if (a != b && rng.bernoulli(p)) social.emplace_back(a, b);
  for (std::size_t v = 0; v < items; ++v)
    for (std::size_t e = 0; e < entities; ++e)
      if (rng.bernoulli(p)) rel.push_back({v, 0, e});
  return {users, items, x, social, rel, entities ? 1u : 0u, entities};
}

}  // namespace fixtures
