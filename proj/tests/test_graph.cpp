#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "smin/error.hpp"
#include "smin/graph.hpp"
#include "smin/split.hpp"
#include "smin/synthetic.hpp"

using namespace smin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(path / file) << text;
    return path / file;
  }
};

}  // namespace

TEST_CASE("load_dataset parses, dedups and reindexes") {
  TempDir dir("smin_graph_load");
  const auto x = dir.write("x.tsv", "# comment\nalice\tbook\nalice\tbook\nbob\tpen\t4.0\n\ncarol\tbook\t2\t1700000000\r\n");
  const auto s = dir.write("s.tsv", "alice\tbob\nbob\talice\nzed\talice\n");
  const auto r = dir.write("r.tsv", "book\tc0\npen\tc0\nghost\tc1\n");
  const auto ds = load_dataset({x, s, r});
  const auto& g = ds.graph;
  CHECK(g.user_count() == 3);
  CHECK(g.item_count() == 2);
  CHECK(g.interaction_count() == 3);
  CHECK(ds.stats.duplicate_interactions == 1);
  CHECK(ds.maps.users == std::vector<std::string>{"alice", "bob", "carol"});
  CHECK(ds.maps.items == std::vector<std::string>{"book", "pen"});
  CHECK(g.social_edges().size() == 2);
  CHECK(ds.stats.skipped_social == 1);
  CHECK(ds.stats.skipped_relations == 1);
  CHECK(g.has_interaction(2, 0));
  CHECK(g.density() == doctest::Approx(3.0 / 6.0));

  SUBCASE("rating threshold drops low ratings and keeps unrated lines") {
    const auto t = load_dataset({x, s, r}, 3.0);
    CHECK(t.graph.interaction_count() == 2);
    CHECK(t.stats.below_threshold == 1);
  }
}

TEST_CASE("two-column relations become category triples") {
  TempDir dir("smin_graph_rel");
  const auto x = dir.write("x.tsv", "u\ti0\nu\ti1\nv\ti2\n");
  const auto r = dir.write("r.tsv", "i0\tc0\ni1\tc0\ni2\tc1\n");
  const auto ds = load_dataset({x, std::nullopt, r});
  CHECK(ds.maps.relations == std::vector<std::string>{"category"});
  CHECK(ds.maps.entities == std::vector<std::string>{"c0", "c1"});
  CHECK(ds.graph.item_relations() == std::vector<RelationTriple>{{0, 0, 0}, {1, 0, 0}, {2, 0, 1}});
  CHECK(ds.graph.item_entity_incidence().nnz() == 3);
}

TEST_CASE("load errors") {
  TempDir dir("smin_graph_err");
  std::string text;
  for (int i = 1; i <= 16; ++i) text += "u" + std::to_string(i) + "\ti" + std::to_string(i) + "\n";
  text += "broken-line-without-tab\n";
  const auto bad = dir.write("bad.tsv", text);
  try {
    load_dataset({bad, std::nullopt, std::nullopt});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 17);
    CHECK(std::string(e.what()).find(":17:") != std::string::npos);
  }
  const auto empty = dir.write("empty.tsv", "# nothing\n");
  CHECK_THROWS_AS(load_dataset({empty, std::nullopt, std::nullopt}), DataError);
  const auto rating = dir.write("rating.tsv", "u\ti\tfive\n");
  CHECK_THROWS_AS(load_dataset({rating, std::nullopt, std::nullopt}), ParseError);
  CHECK_THROWS(load_dataset({dir.path / "missing.tsv", std::nullopt, std::nullopt}));
  const auto x = dir.write("x.tsv", "u\ti\n");
  const auto social = dir.write("social.tsv", "");
  CHECK(load_dataset({x, social, std::nullopt}).graph.social_edges().empty());
}

TEST_CASE("reindex round trip reproduces the graph") {
  TempDir dir("smin_graph_roundtrip");
  PlantedConfig pc;
  pc.cover_items = true;
  const auto planted = make_planted_dataset(pc);
  const DatasetPaths paths{dir.path / "x.tsv", dir.path / "s.tsv", dir.path / "r.tsv"};
  write_dataset(planted.data.graph, planted.data.maps, paths);
  write_reindex_map(dir.path / "users.map", planted.data.maps.users);
  write_reindex_map(dir.path / "items.map", planted.data.maps.items);
  write_reindex_map(dir.path / "relations.map", planted.data.maps.relations);
  write_reindex_map(dir.path / "entities.map", planted.data.maps.entities);
  const ReindexMaps maps{read_reindex_map(dir.path / "users.map"), read_reindex_map(dir.path / "items.map"),
                         read_reindex_map(dir.path / "relations.map"), read_reindex_map(dir.path / "entities.map")};
  CHECK(maps == planted.data.maps);
  const auto reloaded = load_dataset(paths, std::nullopt, &maps);
  CHECK(reloaded.graph == planted.data.graph);

  // Without fixed ids the graph is the same up to relabeling.
  const auto fresh = load_dataset(paths);
  CHECK(fresh.graph.interaction_count() == planted.data.graph.interaction_count());
  CHECK(fresh.graph.item_count() == planted.data.graph.item_count());
}

TEST_CASE("leave-one-out split") {
  const CollaborativeHeteroGraph g(3, 6, {{0, 0}, {1, 0}, {1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 1}}, {}, {}, 0, 0);
  const auto s = split_leave_one_out(g, 4);
  REQUIRE(s.test.size() == 2);
  CHECK(s.train.has_interaction(0, 0));
  CHECK(s.train.user_items(1).size() == 4);
  CHECK(s.train.interaction_count() + s.test.size() == g.interaction_count());
  for (const auto& c : s.test) {
    CHECK(g.has_interaction(c.user, c.positive));
    CHECK_FALSE(s.train.has_interaction(c.user, c.positive));
  }
  const auto again = split_leave_one_out(g, 4);
  CHECK(again.test == s.test);
  CHECK(again.train == s.train);
}

TEST_CASE("evaluation negatives") {
  // 3 users, 200 items; user 0 has 5 interactions.
  std::vector<std::pair<std::size_t, std::size_t>> x{{0, 3}, {0, 7}, {0, 50}, {0, 120}, {0, 199}, {1, 1}, {1, 2}, {2, 9}};
  const CollaborativeHeteroGraph g(3, 200, x, {}, {}, 0, 0);
  const auto s = split_leave_one_out(g, 8);
  const auto cases = sample_eval_negatives(g, s, 21);
  REQUIRE(cases.size() == 2);
  for (const auto& c : cases) {
    CHECK(c.negatives.size() == kEvalNegatives);
    std::set<std::size_t> distinct(c.negatives.begin(), c.negatives.end());
    CHECK(distinct.size() == kEvalNegatives);
    CHECK_FALSE(distinct.count(c.positive));
    for (auto v : c.negatives) CHECK_FALSE(g.has_interaction(c.user, v));
  }
  CHECK(sample_eval_negatives(g, s, 21) == cases);
  CHECK(sample_eval_negatives(g, s, 22) != cases);

  const CollaborativeHeteroGraph small(1, 60, {{0, 0}, {0, 1}}, {}, {}, 0, 0);
  const auto ss = split_leave_one_out(small, 1);
  try {
    sample_eval_negatives(small, ss, 1);
    FAIL("expected a sampling error");
  } catch (const SamplingError& e) {
    CHECK(std::string(e.what()).find("user 0") != std::string::npos);
  }
}

TEST_CASE("planted dataset") {
  PlantedConfig pc;
  const auto p = make_planted_dataset(pc);
  const auto& g = p.data.graph;
  CHECK(g.user_count() == 50);
  CHECK(g.item_count() == 60);
  std::size_t in_block = 0;
  for (std::size_t u = 0; u < 50; ++u) {
    CHECK(g.user_items(u).size() >= 2);
    for (auto v : g.user_items(u)) in_block += p.user_block[u] == p.item_block[v];
  }
  CHECK(in_block > 0.9 * static_cast<double>(g.interaction_count()));
  CHECK(make_planted_dataset(pc).data.graph == g);

  pc.background_items = 100;
  const auto b = make_planted_dataset(pc);
  CHECK(b.data.graph.item_count() == 160);
  CHECK(b.item_block[159] == 3);
}
