#include "smin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>

#include "smin/error.hpp"

namespace smin {

namespace {

void check_inputs(std::span<const RankResult> results, std::size_t n) {
  if (n < 1) throw DomainError("cutoff N must be >= 1");
  if (results.empty()) throw DomainError("no ranked cases");
}

std::ofstream open_output(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

}  // namespace

RankResult rank_case(const EvalCase& c, const Scorer& scorer) {
  RankResult r;
  r.user = c.user;
  r.positive = c.positive;
  r.candidates.reserve(c.negatives.size() + 1);
  r.candidates.push_back(c.positive);
  r.candidates.insert(r.candidates.end(), c.negatives.begin(), c.negatives.end());
  r.scores.reserve(r.candidates.size());
  for (auto v : r.candidates) r.scores.push_back(scorer(c.user, v));
  const double pos = r.scores.front();
  r.rank = 1;
  for (std::size_t i = 1; i < r.candidates.size(); ++i)
    if (r.scores[i] > pos || (r.scores[i] == pos && r.candidates[i] < c.positive)) ++r.rank;
  return r;
}

double hr_at_n(std::span<const RankResult> results, std::size_t n) {
  check_inputs(results, n);
  std::size_t hits = 0;
  for (const auto& r : results) hits += r.rank <= n;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double ndcg_at_n(std::span<const RankResult> results, std::size_t n) {
  check_inputs(results, n);
  double sum = 0.0;
  for (const auto& r : results)
    if (r.rank <= n) sum += 1.0 / std::log2(static_cast<double>(r.rank) + 1.0);
  return sum / static_cast<double>(results.size());
}

MetricsReport evaluate(std::span<const EvalCase> cases, const Scorer& scorer, const std::vector<std::size_t>& cutoffs,
                       std::uint64_t seed, std::uint64_t config_hash) {
  if (cases.empty()) throw DomainError("evaluation needs at least one test case");
  for (auto n : cutoffs)
    if (n < 1) throw DomainError("cutoff N must be >= 1");
  MetricsReport report;
  report.cutoffs = cutoffs;
  report.seed = seed;
  report.config_hash = config_hash;
  report.results.resize(cases.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      report.results[i] = rank_case(cases[i], scorer);
    } catch (...) {
#pragma omp critical(smin_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t max_rank = 0;
  for (const auto& r : report.results) max_rank = std::max(max_rank, r.candidates.size());
  report.rank_histogram.assign(max_rank, 0);
  for (const auto& r : report.results) ++report.rank_histogram[r.rank - 1];
  for (auto n : cutoffs) {
    report.hr.push_back(hr_at_n(report.results, n));
    report.ndcg.push_back(ndcg_at_n(report.results, n));
  }
  return report;
}

Scorer embedding_scorer(const FusedEmbeddings& fused) {
  auto f = std::make_shared<const FusedEmbeddings>(fused);
  return [f](std::size_t u, std::size_t v) {
    if (u >= f->users.rows() || v >= f->items.rows()) throw IndexError("score id out of range");
    const auto a = f->users.row(u);
    const auto b = f->items.row(v);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
    return s;
  };
}

Scorer popularity_baseline(const CollaborativeHeteroGraph& train) {
  auto counts = std::make_shared<std::vector<double>>(train.item_count(), 0.0);
  for (auto v : train.interactions().col_idx()) (*counts)[v] += 1.0;
  return [counts](std::size_t, std::size_t v) {
    if (v >= counts->size()) throw IndexError("item id out of range");
    return (*counts)[v];
  };
}

void write_metrics_csv(const std::filesystem::path& file, const MetricsReport& report) {
  auto out = open_output(file);
  out << "n,hr,ndcg,cases,seed,config_hash\n";
  char buf[256];
  for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu,%llu,%016llx\n", report.cutoffs[i], report.hr[i],
                  report.ndcg[i], report.results.size(), static_cast<unsigned long long>(report.seed),
                  static_cast<unsigned long long>(report.config_hash));
    out << buf;
  }
}

std::string format_metrics_table(const MetricsReport& report, const std::string& title) {
  std::ostringstream out;
  char buf[128];
  out << title << " (" << report.results.size() << " cases)\n";
  out << "   N      HR@N    NDCG@N\n";
  for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%4zu  %8.4f  %8.4f\n", report.cutoffs[i], report.hr[i], report.ndcg[i]);
    out << buf;
  }
  return out.str();
}

void write_rank_dump(const std::filesystem::path& file, const MetricsReport& report) {
  auto out = open_output(file);
  out << "user\titem\tis_positive\tscore\n";
  char buf[128];
  for (const auto& r : report.results)
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu\t%zu\t%d\t%.17g\n", r.user, r.candidates[i], i == 0 ? 1 : 0, r.scores[i]);
      out << buf;
    }
}

}  // namespace smin
