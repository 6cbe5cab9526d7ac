#pragma once

#include <cstdint>
#include <vector>

#include "smin/graph.hpp"

namespace smin {

inline constexpr std::size_t kEvalNegatives = 99;

/// One held-out positive and the negatives it is ranked against.
struct EvalCase {
  std::size_t user = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
  friend bool operator==(const EvalCase&, const EvalCase&) = default;
};

struct Split {
  CollaborativeHeteroGraph train;
  /// Negatives stay empty until sample_eval_negatives fills them.
  std::vector<EvalCase> test;
  std::uint64_t seed = 0;
};

/// Holds out one uniformly chosen interaction for every user with at least
/// two; users with a single interaction stay train-only.
Split split_leave_one_out(const CollaborativeHeteroGraph& graph, std::uint64_t seed);

/// Fills 99 distinct negatives per case, uniform without replacement over the
/// items the user never interacted with in `full`. Throws SamplingError
/// naming the user when fewer than 99 such items exist.
std::vector<EvalCase> sample_eval_negatives(const CollaborativeHeteroGraph& full, const Split& split,
                                            std::uint64_t seed,
                                            std::size_t negatives = kEvalNegatives);

}  // namespace smin
