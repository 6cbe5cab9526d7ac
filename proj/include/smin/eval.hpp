#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smin/encoder.hpp"
#include "smin/graph.hpp"
#include "smin/split.hpp"

namespace smin {

/// Score of (user, item); higher ranks first. Must be safe to call concurrently.
using Scorer = std::function<double(std::size_t user, std::size_t item)>;

struct RankResult {
  std::size_t user = 0;
  std::size_t positive = 0;
  /// 1-based rank of the positive among the candidates.
  std::size_t rank = 0;
  /// Positive first, then the negatives in case order.
  std::vector<std::size_t> candidates;
  std::vector<double> scores;
};

/// rank = 1 + #{strictly greater score} + #{equal score with a smaller item id}.
RankResult rank_case(const EvalCase& c, const Scorer& scorer);

double hr_at_n(std::span<const RankResult> results, std::size_t n);
double ndcg_at_n(std::span<const RankResult> results, std::size_t n);

inline const std::vector<std::size_t> kDefaultCutoffs{5, 10, 15};

struct MetricsReport {
  std::vector<std::size_t> cutoffs;
  std::vector<double> hr;
  std::vector<double> ndcg;
  std::vector<RankResult> results;  // case order
  /// rank_histogram[r - 1] = number of cases at rank r.
  std::vector<std::size_t> rank_histogram;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Throws DomainError when `cases` is empty or a cutoff is 0.
MetricsReport evaluate(std::span<const EvalCase> cases, const Scorer& scorer,
                       const std::vector<std::size_t>& cutoffs = kDefaultCutoffs, std::uint64_t seed = 0,
                       std::uint64_t config_hash = 0);

/// h*_u · h*_v.
Scorer embedding_scorer(const FusedEmbeddings& fused);
/// Train interaction count of the item.
Scorer popularity_baseline(const CollaborativeHeteroGraph& train);

/// `n,hr,ndcg,cases,seed,config_hash`, one row per cutoff.
void write_metrics_csv(const std::filesystem::path& file, const MetricsReport& report);
std::string format_metrics_table(const MetricsReport& report, const std::string& title);
/// `user<TAB>item<TAB>is_positive<TAB>score` for every candidate of every case.
void write_rank_dump(const std::filesystem::path& file, const MetricsReport& report);

}  // namespace smin
