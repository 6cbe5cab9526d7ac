#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "smin/error.hpp"
#include "smin/eval.hpp"
#include "smin/rng.hpp"

using namespace smin;
namespace fs = std::filesystem;

namespace {

// Positive item 0, negatives 1..99.
EvalCase hundred(std::size_t user = 0, std::size_t positive = 0) {
  EvalCase c{user, positive, {}};
  for (std::size_t v = 0; c.negatives.size() < 99; ++v)
    if (v != positive) c.negatives.push_back(v);
  return c;
}

RankResult at_rank(std::size_t r) {
  RankResult out;
  out.rank = r;
  return out;
}

std::vector<RankResult> ranks(std::initializer_list<std::size_t> rs) {
  std::vector<RankResult> out;
  for (auto r : rs) out.push_back(at_rank(r));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double hash_score(std::size_t u, std::size_t v, std::uint64_t salt) {
  return static_cast<double>(derive_seed(salt + u * 1000003u + v, "score") >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("rank_case") {
  const auto c = hundred();
  const auto top = rank_case(c, [](std::size_t, std::size_t v) { return v == 0 ? 10.0 : 1.0; });
  CHECK(top.rank == 1);
  CHECK(top.candidates.size() == 100);
  CHECK(top.candidates.front() == 0);
  CHECK(top.scores.front() == 10.0);

  const auto last = rank_case(hundred(0, 99), [](std::size_t, std::size_t) { return 0.0; });
  CHECK(last.rank == 100);
  const auto first = rank_case(hundred(0, 0), [](std::size_t, std::size_t) { return 0.0; });
  CHECK(first.rank == 1);

  // Scores 5, 4, 3 (positive), then lower.
  const auto third = rank_case(hundred(0, 42), [](std::size_t, std::size_t v) {
    if (v == 7) return 5.0;
    if (v == 3) return 4.0;
    if (v == 42) return 3.0;
    return -static_cast<double>(v);
  });
  CHECK(third.rank == 3);

  // Equal score with a smaller id ranks ahead; with a larger id it does not.
  const auto tie = rank_case(hundred(0, 50), [](std::size_t, std::size_t v) { return v == 50 || v == 20 || v == 80 ? 1.0 : 0.0; });
  CHECK(tie.rank == 2);
}

TEST_CASE("hit ratio") {
  CHECK(hr_at_n(ranks({1, 1, 1}), 10) == 1.0);
  CHECK(hr_at_n(ranks({3, 12}), 10) == 0.5);
  CHECK(hr_at_n(ranks({10, 11}), 10) == 0.5);
  CHECK_THROWS_AS(hr_at_n(ranks({1}), 0), DomainError);
  CHECK_THROWS_AS(hr_at_n({}, 5), DomainError);

  // Random scoring ranks the positive uniformly.
  std::vector<EvalCase> cases;
  for (std::size_t u = 0; u < 4000; ++u) cases.push_back(hundred(u, u % 100));
  const auto report = evaluate(cases, [](std::size_t u, std::size_t v) { return hash_score(u, v, 1); }, {10});
  CHECK(std::abs(report.hr[0] - 0.10) < 0.02);
}

TEST_CASE("ndcg") {
  CHECK(ndcg_at_n(ranks({1}), 5) == 1.0);
  CHECK(ndcg_at_n(ranks({9}), 10) == doctest::Approx(0.30102999566398120).epsilon(1e-15));
  CHECK(ndcg_at_n(ranks({11}), 10) == 0.0);
  CHECK(ndcg_at_n(ranks({1, 3}), 5) == doctest::Approx((1.0 + 0.5) / 2.0));
  CHECK_THROWS_AS(ndcg_at_n(ranks({1}), 0), DomainError);
  CHECK_THROWS_AS(ndcg_at_n({}, 1), DomainError);
}

TEST_CASE("metric properties over random rank sets") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RankResult> rs;
    const std::size_t n = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) rs.push_back(at_rank(1 + rng.uniform_index(100)));
    double prev_hr = 0.0, prev_ndcg = 0.0;
    for (std::size_t cut = 1; cut <= 100; ++cut) {
      const double hr = hr_at_n(rs, cut), ndcg = ndcg_at_n(rs, cut);
      CHECK(hr >= prev_hr);
      CHECK(ndcg >= prev_ndcg);
      CHECK(ndcg <= hr);
      CHECK(hr <= 1.0);
      prev_hr = hr;
      prev_ndcg = ndcg;
    }
    CHECK(prev_hr == 1.0);
  }
}

TEST_CASE("evaluate") {
  std::vector<EvalCase> cases;
  for (std::size_t u = 0; u < 30; ++u) cases.push_back(hundred(u, (u * 37) % 100));

  const auto perfect = evaluate(cases, [&](std::size_t u, std::size_t v) { return v == (u * 37) % 100 ? 1.0 : 0.0; });
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(perfect.hr[i] == 1.0);
    CHECK(perfect.ndcg[i] == 1.0);
  }
  CHECK(perfect.cutoffs == kDefaultCutoffs);
  CHECK(perfect.rank_histogram.size() == 100);
  CHECK(perfect.rank_histogram[0] == 30);

  const Scorer scorer = [](std::size_t u, std::size_t v) { return hash_score(u, v, 9); };
  const auto a = evaluate(cases, scorer, {1, 5, 50}, 3, 77);
  const auto b = evaluate(cases, scorer, {1, 5, 50}, 3, 77);
  CHECK(a.hr == b.hr);
  CHECK(a.ndcg == b.ndcg);
  CHECK(a.seed == 3);
  CHECK(a.config_hash == 77);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CHECK(a.results[i].user == cases[i].user);
    CHECK(a.results[i].rank == b.results[i].rank);
  }
  CHECK(std::accumulate(a.rank_histogram.begin(), a.rank_histogram.end(), std::size_t{0}) == 30);

  // Strictly increasing transforms leave every rank unchanged.
  const auto t = evaluate(cases, [&](std::size_t u, std::size_t v) { return std::exp(3.0 * scorer(u, v)) - 7.0; },
                          {1, 5, 50});
  for (std::size_t i = 0; i < cases.size(); ++i) CHECK(t.results[i].rank == a.results[i].rank);
  CHECK(t.hr == a.hr);

  CHECK_THROWS_AS(evaluate({}, scorer), DomainError);
  CHECK_THROWS_AS(evaluate(cases, scorer, {0}), DomainError);
  CHECK_THROWS_AS(evaluate(cases, [](std::size_t, std::size_t) -> double { throw IndexError("boom"); }), IndexError);
}

TEST_CASE("popularity baseline") {
  // Train counts: i0 → 2, i1 → 2, i2 → 1.
  const CollaborativeHeteroGraph train(3, 4, {{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}}, {}, {}, 0, 0);
  const auto pop = popularity_baseline(train);
  CHECK(pop(0, 0) == 2.0);
  CHECK(pop(0, 2) == 1.0);
  CHECK(pop(0, 3) == 0.0);
  const auto r0 = rank_case({0, 0, {1, 2}}, pop);
  const auto r1 = rank_case({0, 1, {0, 2}}, pop);
  const auto r2 = rank_case({0, 2, {0, 1}}, pop);
  CHECK(r0.rank == 1);
  CHECK(r1.rank == 2);
  CHECK(r2.rank == 3);

  const CollaborativeHeteroGraph flat(2, 3, {{0, 0}, {0, 1}, {1, 2}}, {}, {}, 0, 0);
  CHECK(rank_case({0, 1, {2, 0}}, popularity_baseline(flat)).rank == 2);
}

TEST_CASE("report files") {
  const fs::path dir = fs::temp_directory_path() / "smin_eval_files";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<EvalCase> cases{hundred(0, 5), hundred(1, 9)};
  const auto r = evaluate(cases, [](std::size_t u, std::size_t v) { return hash_score(u, v, 2); }, {5, 10}, 4, 0xabc);
  write_metrics_csv(dir / "m.csv", r);
  const auto csv = slurp(dir / "m.csv");
  CHECK(csv.rfind("n,hr,ndcg,cases,seed,config_hash\n", 0) == 0);
  CHECK(csv.find("\n5,") != std::string::npos);
  CHECK(csv.find("0000000000000abc") != std::string::npos);

  write_rank_dump(dir / "r.tsv", r);
  std::ifstream in(dir / "r.tsv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "user\titem\tis_positive\tscore");
  std::size_t rows = 0, positives = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ss(line);
    std::size_t u, v;
    int pos;
    double s;
    ss >> u >> v >> pos >> s;
    positives += pos;
    CHECK(s == hash_score(u, v, 2));
  }
  CHECK(rows == 200);
  CHECK(positives == 2);

  const auto table = format_metrics_table(r, "model");
  CHECK(table.find("model") != std::string::npos);
  CHECK(table.find("HR@N") != std::string::npos);
  fs::remove_all(dir);
}
