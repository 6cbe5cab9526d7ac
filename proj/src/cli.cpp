#include "smin/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "smin/config.hpp"
#include "smin/error.hpp"
#include "smin/eval.hpp"
#include "smin/infomax.hpp"
#include "smin/metapath.hpp"
#include "smin/split.hpp"
#include "smin/synthetic.hpp"
#include "smin/trainer.hpp"

namespace smin {

namespace {

namespace fs = std::filesystem;

/// Options shared by every command that reads a dataset and a config.
struct CommonOptions {
  std::string data_dir;
  std::string interactions;
  std::string social;
  std::string relations;
  std::string config_file;
  std::vector<std::string> settings;
  std::vector<std::string> ablate;
  std::vector<std::string> drop_metapath;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool model_flags) {
  cmd->add_option("--data", o.data_dir, "Directory with interactions.tsv and optional social.tsv, relations.tsv");
  cmd->add_option("--interactions", o.interactions, "User-item interactions TSV");
  cmd->add_option("--social", o.social, "User-user social TSV");
  cmd->add_option("--relations", o.relations, "Item-relation-entity TSV");
  cmd->add_option("--config", o.config_file, "key = value config file");
  cmd->add_option("--set", o.settings, "Override one config key (key=value); repeatable");
  cmd->add_option("--seed", o.seed, "Top-level seed");
  cmd->add_option("--out", o.out, "Output directory")->required();
  if (model_flags) {
    cmd->add_option("--ablate", o.ablate, "Disable a component: h, s, g, t or a; repeatable");
    cmd->add_option("--drop-metapath", o.drop_metapath, "Drop a metapath: UU, UIU, UIKIU, IUI or IKI; repeatable");
  }
}

/// Defaults, then the config file, then flags.
RunConfig resolve_config(const CommonOptions& o, const std::optional<fs::path>& fallback_file = std::nullopt) {
  RunConfig c;
  if (!o.config_file.empty()) apply_config_file(c, o.config_file);
  else if (fallback_file && fs::exists(*fallback_file)) apply_config_file(c, *fallback_file);

  if (!o.data_dir.empty()) {
    const fs::path dir = o.data_dir;
    c.data.interactions = dir / "interactions.tsv";
    c.data.social.reset();
    c.data.relations.reset();
    if (fs::exists(dir / "social.tsv")) c.data.social = dir / "social.tsv";
    if (fs::exists(dir / "relations.tsv")) c.data.relations = dir / "relations.tsv";
  }
  if (!o.interactions.empty()) c.data.interactions = o.interactions;
  if (!o.social.empty()) c.data.social = fs::path(o.social);
  if (!o.relations.empty()) c.data.relations = fs::path(o.relations);

  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    std::string key = s.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    apply_setting(c, key, std::string_view(s).substr(eq + 1));
  }
  if (o.seed) c.train.seed = *o.seed;
  for (const auto& a : o.ablate) apply_ablation(c.train.ablation, a);
  for (const auto& name : o.drop_metapath) {
    const auto kind = parse_metapath(name);
    if (!kind) throw ConfigError("unknown metapath '" + name + "' (expected UU, UIU, UIKIU, IUI or IKI)");
    c.train.ablation.metapaths[index_of(*kind)] = false;
  }
  finalize_config(c);
  return c;
}

void require_inputs(const RunConfig& c) {
  if (c.data.interactions.empty()) throw ConfigError("no interactions file given (use --data or --interactions)");
  for (const fs::path* p : {&c.data.interactions, c.data.social ? &*c.data.social : nullptr,
                            c.data.relations ? &*c.data.relations : nullptr})
    if (p && !fs::exists(*p)) throw DataError("input file " + p->string() + " does not exist");
}

fs::path prepare_out(const std::string& out, const std::string& command, const RunConfig& c) {
  const fs::path dir = out;
  fs::create_directories(dir);
  std::ofstream echo(dir / (command + ".config.txt"), std::ios::trunc);
  if (!echo) throw DataError("output directory " + dir.string() + " is not writable");
  echo << "# " << command << " run\n" << echo_config(c);
  return dir;
}

Dataset load(const RunConfig& c, std::ostream& err) {
  require_inputs(c);
  auto ds = load_dataset(c.data, c.rating_threshold);
  const auto& s = ds.stats;
  if (s.duplicate_interactions) err << "note: " << s.duplicate_interactions << " duplicate interactions merged\n";
  if (s.below_threshold) err << "note: " << s.below_threshold << " interactions below the rating threshold dropped\n";
  if (s.skipped_social) err << "note: " << s.skipped_social << " social lines with unknown users skipped\n";
  if (s.skipped_relations) err << "note: " << s.skipped_relations << " relation lines with unknown items skipped\n";
  return ds;
}

struct Experiment {
  Dataset dataset;
  Split split;
};

Experiment load_split(const RunConfig& c, std::ostream& err, bool with_negatives) {
  Experiment e{load(c, err), {}};
  e.split = split_leave_one_out(e.dataset.graph, derive_seed(c.train.seed, "split"));
  if (with_negatives) e.split.test = sample_eval_negatives(e.dataset.graph, e.split, derive_seed(c.train.seed, "negatives"));
  return e;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int cmd_ingest(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  const auto dir = prepare_out(o.out, "ingest", c);
  const auto ds = load(c, err);
  const auto& g = ds.graph;
  std::size_t social_users = 0;
  {
    std::vector<bool> seen(g.user_count(), false);
    for (auto [a, b] : g.social_edges()) {
      social_users += !seen[a];
      seen[a] = true;
      social_users += !seen[b];
      seen[b] = true;
    }
  }
  out << "users " << g.user_count() << "\n"
      << "items " << g.item_count() << "\n"
      << "interactions " << g.interaction_count() << "\n"
      << "density " << fmt("%.4f", 100.0 * g.density()) << "%\n"
      << "social_edges " << g.social_edges().size() << "\n"
      << "relations " << g.relation_count() << "\n"
      << "relation_entities " << g.entity_count() << "\n"
      << "item_relation_triples " << g.item_relations().size() << "\n";
  write_reindex_map(dir / "users.map", ds.maps.users);
  write_reindex_map(dir / "items.map", ds.maps.items);
  write_reindex_map(dir / "relations.map", ds.maps.relations);
  write_reindex_map(dir / "entities.map", ds.maps.entities);
  nlohmann::json summary{{"users", g.user_count()},
                         {"items", g.item_count()},
                         {"interactions", g.interaction_count()},
                         {"density", g.density()},
                         {"social_edges", g.social_edges().size()},
                         {"social_users", social_users},
                         {"relations", g.relation_count()},
                         {"relation_entities", g.entity_count()},
                         {"item_relation_triples", g.item_relations().size()},
                         {"duplicate_interactions", ds.stats.duplicate_interactions},
                         {"below_threshold", ds.stats.below_threshold},
                         {"skipped_social", ds.stats.skipped_social},
                         {"skipped_relations", ds.stats.skipped_relations}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  return 0;
}

int cmd_build_metapaths(const CommonOptions& o, std::optional<std::size_t> phi_k, std::ostream& out,
                        std::ostream& err) {
  const auto c = resolve_config(o);
  const auto dir = prepare_out(o.out, "build-metapaths", c);
  const auto ds = load(c, err);
  const MetapathOptions options{c.train.degree_cap};
  nlohmann::json stats = nlohmann::json::object();
  for (auto kind : kAllMetapaths) {
    if (!c.train.ablation.metapaths[index_of(kind)]) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const auto mp = build_metapath(ds.graph, kind, options);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& names = domain_of(kind) == Domain::User ? ds.maps.users : ds.maps.items;
    std::ofstream tsv(dir / ("metapath_" + std::string(to_string(kind)) + ".tsv"), std::ios::trunc);
    tsv << "src\tdst\n";
    std::size_t max_degree = 0;
    for (std::size_t r = 0; r < mp.adj.rows(); ++r) {
      max_degree = std::max(max_degree, mp.adj.row_nnz(r));
      for (auto col : mp.adj.row_cols(r))
        if (r < col) tsv << names[r] << '\t' << names[col] << '\n';
    }
    const double nodes = static_cast<double>(mp.adj.rows());
    stats[std::string(to_string(kind))] = {{"nodes", mp.adj.rows()},
                                           {"edges", mp.adj.nnz() / 2},
                                           {"mean_degree", nodes ? static_cast<double>(mp.adj.nnz()) / nodes : 0.0},
                                           {"max_degree", max_degree},
                                           {"capped_rows", mp.capped_rows},
                                           {"degree_cap", c.train.degree_cap},
                                           {"seconds", secs}};
    out << to_string(kind) << ": " << mp.adj.nnz() / 2 << " edges, " << mp.capped_rows << " capped rows\n";
  }
  if (phi_k) {
    const auto phi = build_phi(ds.graph.interactions());
    const auto adj = build_k_adj(phi.phi, *phi_k);
    const std::size_t users = ds.graph.user_count();
    auto label = [&](std::size_t n) { return n < users ? "u:" + ds.maps.users[n] : "i:" + ds.maps.items[n - users]; };
    std::ofstream tsv(dir / ("phi_k" + std::to_string(*phi_k) + ".tsv"), std::ios::trunc);
    tsv << "src\tdst\n";
    std::size_t edges = 0;
    for (std::size_t r = 0; r < adj.rows(); ++r)
      for (auto col : adj.row_cols(r))
        if (r < col) {
          tsv << label(r) << '\t' << label(col) << '\n';
          ++edges;
        }
    stats["phi_k"] = {{"k", *phi_k}, {"nodes", adj.rows()}, {"edges", edges}};
    out << "phi^(" << *phi_k << "): " << edges << " edges\n";
  }
  std::ofstream(dir / "metapaths.json") << stats.dump(2) << "\n";
  return 0;
}

int cmd_train(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  c.train.validate();
  const auto dir = prepare_out(o.out, "train", c);
  const auto hash = config_hash(c);
  const auto exp = load_split(c, err, false);
  err << "train split: " << exp.split.train.interaction_count() << " interactions, " << exp.split.test.size()
      << " held out\n";

  const auto t0 = std::chrono::steady_clock::now();
  const auto data = prepare_training_data(exp.split.train, c.train);
  err << "prepared metapaths and context in "
      << fmt("%.2f", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) << " s\n";

  const auto ckpt = dir / "checkpoint.bin";
  TrainHooks hooks;
  hooks.log = [&](const std::string& line) { err << line << "\n"; };
  hooks.on_epoch = [&](const TrainState& s) {
    save_checkpoint(ckpt, s.params, hash, s.epoch);
    write_history_csv(dir / "history.csv", s.history);
  };
  const auto outcome = train(data, c.train, hooks);
  save_checkpoint(ckpt, outcome.state.params, hash, outcome.state.epoch);
  write_history_csv(dir / "history.csv", outcome.state.history);
  if (outcome.diverged) {
    err << "error: " << outcome.diagnostics << "\n";
    return 1;
  }
  out << "trained " << outcome.state.epoch << " epochs, " << parameter_count(outcome.state.params)
      << " parameters\n";
  if (!outcome.state.history.empty()) out << "final loss " << fmt("%.6f", outcome.state.history.back().loss.total) << "\n";
  out << "checkpoint " << ckpt.string() << "\n";
  return 0;
}

/// Loads a checkpoint trained under `c`, refusing one trained under another config.
ModelParams load_model(const fs::path& file, const RunConfig& c, const CollaborativeHeteroGraph& graph) {
  if (!fs::exists(file)) throw DataError("checkpoint " + file.string() + " does not exist");
  const auto header = read_checkpoint_header(file);
  if (header.config_hash != config_hash(c)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "checkpoint config hash %016llx does not match the current config %016llx",
                  static_cast<unsigned long long>(header.config_hash), static_cast<unsigned long long>(config_hash(c)));
    throw ConfigError(std::string(buf) + "; pass the --config used for training");
  }
  return load_checkpoint(file, init_model_params(graph.user_count(), graph.item_count(), c.train)).params;
}

FusedEmbeddings model_embeddings(const RunConfig& c, const CollaborativeHeteroGraph& train_graph,
                                 const ModelParams& params) {
  TrainingData data{train_graph, {}, std::nullopt};
  if (c.train.ablation.heterogeneity)
    data.metapaths = build_metapath_set(train_graph, c.train.ablation.metapaths, MetapathOptions{c.train.degree_cap});
  return embed(data, params, c.train);
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint, const std::string& baseline, bool rank_dump,
                 std::ostream& out, std::ostream& err) {
  const fs::path ckpt = checkpoint;
  const auto c = resolve_config(o, ckpt.parent_path() / "train.config.txt");
  if (!baseline.empty() && baseline != "popularity")
    throw ConfigError("unknown baseline '" + baseline + "' (expected popularity)");
  if (!fs::exists(ckpt)) throw DataError("checkpoint " + ckpt.string() + " does not exist");
  const auto dir = prepare_out(o.out, "evaluate", c);
  const auto exp = load_split(c, err, true);
  const auto params = load_model(ckpt, c, exp.split.train);
  const auto fused = model_embeddings(c, exp.split.train, params);

  const auto report = evaluate(exp.split.test, embedding_scorer(fused), c.eval_n, c.train.seed, config_hash(c));
  write_metrics_csv(dir / "metrics.csv", report);
  const auto table = format_metrics_table(report, "SMIN");
  std::ofstream(dir / "metrics.txt") << table;
  out << table;
  if (rank_dump) write_rank_dump(dir / "ranks.tsv", report);

  if (!baseline.empty()) {
    const auto base = evaluate(exp.split.test, popularity_baseline(exp.split.train), c.eval_n, c.train.seed, 0);
    write_metrics_csv(dir / "baseline_metrics.csv", base);
    const auto base_table = format_metrics_table(base, "popularity");
    std::ofstream(dir / "metrics.txt", std::ios::app) << base_table;
    out << base_table;
  }
  return 0;
}

int cmd_export(const CommonOptions& o, const std::string& checkpoint, std::ostream& out, std::ostream& err) {
  const fs::path ckpt = checkpoint;
  const auto c = resolve_config(o, ckpt.parent_path() / "train.config.txt");
  if (!fs::exists(ckpt)) throw DataError("checkpoint " + ckpt.string() + " does not exist");
  const auto dir = prepare_out(o.out, "export-embeddings", c);
  const auto exp = load_split(c, err, false);
  const auto params = load_model(ckpt, c, exp.split.train);
  const auto fused = model_embeddings(c, exp.split.train, params);
  std::ofstream tsv(dir / "embeddings.tsv", std::ios::trunc);
  char buf[32];
  auto dump = [&](const DenseMatrix& m, const std::vector<std::string>& names, const char* domain) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      tsv << names[r] << '\t' << domain;
      for (double v : m.row(r)) {
        std::snprintf(buf, sizeof buf, "\t%.17g", v);
        tsv << buf;
      }
      tsv << '\n';
    }
  };
  dump(fused.users, exp.dataset.maps.users, "user");
  dump(fused.items, exp.dataset.maps.items, "item");
  out << "wrote " << fused.users.rows() + fused.items.rows() << " embeddings of dimension " << fused.users.cols()
      << " to " << (dir / "embeddings.tsv").string() << "\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, const PlantedConfig& pc, std::ostream& out) {
  fs::create_directories(out_dir);
  const auto planted = make_planted_dataset(pc);
  const fs::path dir = out_dir;
  write_dataset(planted.data.graph, planted.data.maps,
                {dir / "interactions.tsv", dir / "social.tsv", dir / "relations.tsv"});
  std::ofstream echo(dir / "synth.config.txt", std::ios::trunc);
  echo << "users = " << pc.users << "\nitems = " << pc.items << "\nblocks = " << pc.blocks
       << "\nin_block_prob = " << fmt("%.17g", pc.in_block_prob) << "\ncross_block_prob = "
       << fmt("%.17g", pc.cross_block_prob) << "\nbackground_items = " << pc.background_items << "\nseed = " << pc.seed
       << "\n";
  out << "wrote planted dataset: " << planted.data.graph.user_count() << " users, "
      << planted.data.graph.item_count() << " items, " << planted.data.graph.interaction_count()
      << " interactions\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SMIN knowledge-aware social recommender"};
  app.name("smin");
  app.require_subcommand(1);

  CommonOptions ingest_o, mp_o, train_o, eval_o, export_o;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset, print its summary and write reindex maps");
  add_common(ingest, ingest_o, false);

  auto* mp = app.add_subcommand("build-metapaths", "Build metapath neighbor lists as TSV with a JSON stats sidecar");
  add_common(mp, mp_o, true);
  std::optional<std::size_t> phi_k;
  mp->add_option("--phi-k", phi_k, "Also write the k-order user-item adjacency");

  auto* tr = app.add_subcommand("train", "Train on the leave-one-out split; writes checkpoint and loss history");
  add_common(tr, train_o, true);

  auto* ev = app.add_subcommand("evaluate", "HR@N / NDCG@N of a checkpoint on the leave-one-out split");
  add_common(ev, eval_o, true);
  std::string eval_ckpt, baseline;
  bool rank_dump = false;
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint written by train")->required();
  ev->add_option("--baseline", baseline, "Also evaluate a baseline (popularity)");
  ev->add_flag("--rank-dump", rank_dump, "Write per-candidate scores to ranks.tsv");

  auto* ex = app.add_subcommand("export-embeddings", "Write fused user and item embeddings as TSV");
  add_common(ex, export_o, true);
  std::string export_ckpt;
  ex->add_option("--checkpoint", export_ckpt, "Checkpoint written by train")->required();

  auto* sy = app.add_subcommand("synth", "Write a planted block-structured dataset");
  std::string synth_out;
  PlantedConfig pc;
  pc.cover_items = true;
  sy->add_option("--out", synth_out, "Output directory")->required();
  sy->add_option("--users", pc.users);
  sy->add_option("--items", pc.items);
  sy->add_option("--blocks", pc.blocks);
  sy->add_option("--in-block-prob", pc.in_block_prob);
  sy->add_option("--cross-block-prob", pc.cross_block_prob);
  sy->add_option("--background-items", pc.background_items);
  sy->add_option("--seed", pc.seed);

  std::vector<std::string> storage{"smin"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_o, out, err);
    if (mp->parsed()) return cmd_build_metapaths(mp_o, phi_k, out, err);
    if (tr->parsed()) return cmd_train(train_o, out, err);
    if (ev->parsed()) return cmd_evaluate(eval_o, eval_ckpt, baseline, rank_dump, out, err);
    if (ex->parsed()) return cmd_export(export_o, export_ckpt, out, err);
    if (sy->parsed()) return cmd_synth(synth_out, pc, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace smin
