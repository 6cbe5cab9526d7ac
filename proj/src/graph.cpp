#include "smin/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <tuple>
#include <unordered_map>

#include "smin/error.hpp"

namespace smin {

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

void sort_unique(Pairs& p) {
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
}

/// Raw string id → dense index, either growing on first sight or frozen.
class IdSpace {
 public:
  explicit IdSpace(const std::vector<std::string>* fixed) : frozen_(fixed != nullptr) {
    if (fixed) {
      for (const auto& raw : *fixed) lookup_or_add(raw);
    }
  }

  std::optional<std::size_t> find(const std::string& raw) const {
    auto it = index_.find(raw);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Returns nullopt only when frozen and unknown.
  std::optional<std::size_t> intern(const std::string& raw) {
    if (auto id = find(raw)) return id;
    if (frozen_) return std::nullopt;
    return lookup_or_add(raw);
  }

  std::size_t size() const noexcept { return raw_.size(); }
  std::vector<std::string> take() { return std::move(raw_); }

 private:
  std::size_t lookup_or_add(const std::string& raw) {
    auto [it, inserted] = index_.emplace(raw, raw_.size());
    if (inserted) raw_.push_back(raw);
    return it->second;
  }

  bool frozen_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> raw_;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

/// Calls `on_line(fields, line_no)` for each non-blank, non-comment line.
template <class F>
void for_each_record(const std::filesystem::path& file, F&& on_line) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError(file.string(), line_no, "empty field");
    }
    on_line(fields, line_no);
  }
}

double parse_real(const std::string& s, const std::filesystem::path& file, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(file.string(), line_no, "rating '" + s + "' is not a number");
  return v;
}

}  // namespace

CollaborativeHeteroGraph::CollaborativeHeteroGraph(std::size_t user_count, std::size_t item_count,
                                                   Pairs interactions, Pairs social_edges,
                                                   std::vector<RelationTriple> item_relations,
                                                   std::size_t relation_count, std::size_t entity_count)
    : users_(user_count),
      items_(item_count),
      relations_(relation_count),
      entities_(entity_count),
      social_(std::move(social_edges)),
      triples_(std::move(item_relations)) {
  sort_unique(interactions);
  std::vector<Triplet> t;
  t.reserve(interactions.size());
  for (auto [u, i] : interactions) t.push_back({u, i, 1.0});
  interactions_ = SparseMatrix::from_triplets(users_, items_, std::move(t));

  sort_unique(social_);
  for (auto [a, b] : social_) {
    if (a >= users_ || b >= users_) throw DataError("social edge references unknown user");
  }
  std::sort(triples_.begin(), triples_.end(), [](const RelationTriple& a, const RelationTriple& b) {
    return std::tie(a.item, a.relation, a.entity) < std::tie(b.item, b.relation, b.entity);
  });
  triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
  for (const auto& tr : triples_) {
    if (tr.item >= items_ || tr.relation >= relations_ || tr.entity >= entities_)
      throw DataError("relation triple references unknown item, relation or entity");
  }
}

SparseMatrix CollaborativeHeteroGraph::item_entity_incidence() const {
  std::vector<Triplet> t;
  t.reserve(triples_.size());
  for (const auto& tr : triples_) t.push_back({tr.item, tr.entity, 1.0});
  // Several relations may join the same (item, entity); incidence stays binary.
  return SparseMatrix::from_triplets(items_, entities_, std::move(t)).binarized();
}

double CollaborativeHeteroGraph::density() const {
  if (users_ == 0 || items_ == 0) return 0.0;
  return static_cast<double>(interactions_.nnz()) /
         (static_cast<double>(users_) * static_cast<double>(items_));
}

CollaborativeHeteroGraph CollaborativeHeteroGraph::with_interactions(Pairs interactions) const {
  return CollaborativeHeteroGraph(users_, items_, std::move(interactions), social_, triples_, relations_,
                                  entities_);
}

Dataset load_dataset(const DatasetPaths& paths, std::optional<double> rating_threshold,
                     const ReindexMaps* fixed_ids) {
  IdSpace users(fixed_ids ? &fixed_ids->users : nullptr);
  IdSpace items(fixed_ids ? &fixed_ids->items : nullptr);
  IdSpace relations(fixed_ids ? &fixed_ids->relations : nullptr);
  IdSpace entities(fixed_ids ? &fixed_ids->entities : nullptr);
  LoadStats stats;

  Pairs interactions;
  for_each_record(paths.interactions, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() < 2 || f.size() > 4)
      throw ParseError(paths.interactions.string(), line_no,
                       "expected user<TAB>item[<TAB>rating[<TAB>timestamp]], got " +
                           std::to_string(f.size()) + " fields");
    ++stats.interaction_lines;
    if (f.size() >= 3) {
      const double rating = parse_real(f[2], paths.interactions, line_no);
      if (rating_threshold && rating < *rating_threshold) {
        ++stats.below_threshold;
        return;
      }
    }
    auto u = users.intern(f[0]);
    auto i = items.intern(f[1]);
    if (!u || !i)
      throw DataError(paths.interactions.string() + ":" + std::to_string(line_no) +
                      ": id not present in the fixed reindex maps");
    interactions.emplace_back(*u, *i);
  });
  if (interactions.empty()) throw DataError("no interactions in " + paths.interactions.string());
  {
    const std::size_t before = interactions.size();
    sort_unique(interactions);
    stats.duplicate_interactions = before - interactions.size();
  }

  Pairs social;
  if (paths.social) {
    for_each_record(*paths.social, [&](const std::vector<std::string>& f, std::size_t line_no) {
      if (f.size() != 2)
        throw ParseError(paths.social->string(), line_no, "expected user<TAB>user");
      auto a = users.find(f[0]);
      auto b = users.find(f[1]);
      if (!a || !b) {
        ++stats.skipped_social;
        return;
      }
      social.emplace_back(*a, *b);
    });
  }

  std::vector<RelationTriple> triples;
  if (paths.relations) {
    for_each_record(*paths.relations, [&](const std::vector<std::string>& f, std::size_t line_no) {
      if (f.size() != 2 && f.size() != 3)
        throw ParseError(paths.relations->string(), line_no,
                         "expected item<TAB>entity or item<TAB>relation<TAB>entity");
      auto item = items.find(f[0]);
      if (!item) {
        ++stats.skipped_relations;
        return;
      }
      auto rel = relations.intern(f.size() == 3 ? f[1] : std::string("category"));
      auto ent = entities.intern(f.back());
      if (!rel || !ent)
        throw DataError(paths.relations->string() + ":" + std::to_string(line_no) +
                        ": relation or entity not present in the fixed reindex maps");
      triples.push_back({*item, *rel, *ent});
    });
  }

  Dataset ds;
  ds.stats = stats;
  ds.graph = CollaborativeHeteroGraph(users.size(), items.size(), std::move(interactions), std::move(social),
                                      std::move(triples), relations.size(), entities.size());
  ds.maps.users = users.take();
  ds.maps.items = items.take();
  ds.maps.relations = relations.take();
  ds.maps.entities = entities.take();
  return ds;
}

void write_reindex_map(const std::filesystem::path& file, std::span<const std::string> raw_ids) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  for (std::size_t i = 0; i < raw_ids.size(); ++i) out << raw_ids[i] << '\t' << i << '\n';
}

std::vector<std::string> read_reindex_map(const std::filesystem::path& file) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  for_each_record(file, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() != 2) throw ParseError(file.string(), line_no, "expected raw_id<TAB>internal_id");
    std::size_t id = 0;
    auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), id);
    if (ec != std::errc() || ptr != f[1].data() + f[1].size())
      throw ParseError(file.string(), line_no, "internal id is not an integer");
    rows.emplace_back(id, f[0]);
  });
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> raw;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) throw DataError(file.string() + ": internal ids are not contiguous from 0");
    raw.push_back(std::move(rows[i].second));
  }
  return raw;
}

void write_dataset(const CollaborativeHeteroGraph& graph, const ReindexMaps& maps, const DatasetPaths& paths) {
  {
    std::ofstream out(paths.interactions);
    if (!out) throw DataError("cannot write " + paths.interactions.string());
    for (const auto& t : graph.interactions().triplets())
      out << maps.users.at(t.row) << '\t' << maps.items.at(t.col) << '\n';
  }
  if (paths.social) {
    std::ofstream out(*paths.social);
    if (!out) throw DataError("cannot write " + paths.social->string());
    for (auto [a, b] : graph.social_edges()) out << maps.users.at(a) << '\t' << maps.users.at(b) << '\n';
  }
  if (paths.relations) {
    std::ofstream out(*paths.relations);
    if (!out) throw DataError("cannot write " + paths.relations->string());
    for (const auto& tr : graph.item_relations())
      out << maps.items.at(tr.item) << '\t' << maps.relations.at(tr.relation) << '\t'
          << maps.entities.at(tr.entity) << '\n';
  }
}

}  // namespace smin
