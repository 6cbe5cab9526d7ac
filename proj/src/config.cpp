#include "smin/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "smin/error.hpp"

namespace smin {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_echo(const RunConfig& c) {
  const auto& t = c.train;
  std::ostringstream out;
  out << "d = " << t.dim << "\n"
      << "layers = " << t.layers << "\n"
      << "k = " << t.k << "\n"
      << "lr = " << format_double(t.lr) << "\n"
      << "lr_decay = " << format_double(t.lr_decay) << "\n"
      << "batch_size = " << t.batch_size << "\n"
      << "epochs = " << t.epochs << "\n"
      << "lambda0 = " << format_double(t.lambda0) << "\n"
      << "lambda_alpha = " << format_double(t.lambda_alpha) << "\n"
      << "lambda_beta = " << format_double(t.lambda_beta) << "\n"
      << "lambda_gamma = " << format_double(t.lambda_gamma) << "\n"
      << "neg_per_pos = " << t.neg_per_pos << "\n"
      << "seed = " << t.seed << "\n"
      << "degree_cap = " << t.degree_cap << "\n"
      << "rating_threshold = " << (c.rating_threshold ? format_double(*c.rating_threshold) : "none") << "\n"
      << "ablate = " << ablation_letters(t.ablation) << "\n";
  std::string dropped;
  for (auto kind : kAllMetapaths)
    if (!t.ablation.metapaths[index_of(kind)]) dropped += (dropped.empty() ? "" : ",") + std::string(to_string(kind));
  out << "drop_metapath = " << dropped << "\n";
  return out.str();
}

}  // namespace

void apply_ablation(AblationFlags& flags, std::string_view letters) {
  for (auto item : split_list(letters)) {
    for (char ch : item) {
      switch (ch) {
        case 'h': flags.heterogeneity = false; break;
        case 's': flags.mutual_information = false; break;
        case 'g': flags.global_context = false; break;
        case 't': flags.topology = false; break;
        case 'a': flags.attention = false; break;
        default: throw ConfigError("unknown ablation '" + std::string(1, ch) + "' (expected h, s, g, t or a)");
      }
    }
  }
}

std::string ablation_letters(const AblationFlags& flags) {
  std::string out;
  if (!flags.heterogeneity) out += 'h';
  if (!flags.mutual_information) out += 's';
  if (!flags.global_context) out += 'g';
  if (!flags.topology) out += 't';
  if (!flags.attention) out += 'a';
  return out;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  auto& t = config.train;
  using Size = std::size_t;
  if (key == "d") t.dim = parse_number<Size>(key, value);
  else if (key == "layers") t.layers = parse_number<Size>(key, value);
  else if (key == "k") t.k = parse_number<Size>(key, value);
  else if (key == "lr") t.lr = parse_number<double>(key, value);
  else if (key == "lr_decay") t.lr_decay = parse_number<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<Size>(key, value);
  else if (key == "epochs") t.epochs = parse_number<Size>(key, value);
  else if (key == "lambda0") t.lambda0 = parse_number<double>(key, value);
  else if (key == "lambda_alpha") t.lambda_alpha = parse_number<double>(key, value);
  else if (key == "lambda_beta") t.lambda_beta = parse_number<double>(key, value);
  else if (key == "lambda_gamma") t.lambda_gamma = parse_number<double>(key, value);
  else if (key == "neg_per_pos") t.neg_per_pos = parse_number<Size>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "degree_cap") t.degree_cap = parse_number<Size>(key, value);
  else if (key == "rating_threshold") {
    if (value.empty() || value == "none") config.rating_threshold.reset();
    else config.rating_threshold = parse_number<double>(key, value);
  } else if (key == "eval_n") {
    config.eval_n.clear();
    for (auto item : split_list(value)) {
      const auto n = parse_number<Size>(key, item);
      if (n < 1) throw ConfigError("eval_n entries must be >= 1");
      config.eval_n.push_back(n);
    }
    if (config.eval_n.empty()) throw ConfigError("eval_n needs at least one cutoff");
  } else if (key == "ablate") {
    const auto keep = t.ablation.metapaths;
    t.ablation = AblationFlags{};
    t.ablation.metapaths = keep;
    apply_ablation(t.ablation, value);
  } else if (key == "drop_metapath") {
    t.ablation.metapaths.fill(true);
    for (auto item : split_list(value)) {
      const auto kind = parse_metapath(item);
      if (!kind) throw ConfigError("unknown metapath '" + std::string(item) + "'");
      t.ablation.metapaths[index_of(*kind)] = false;
    }
  } else if (key == "interactions") config.data.interactions = std::string(value);
  else if (key == "social") {
    if (value.empty()) config.data.social.reset();
    else config.data.social = std::string(value);
  } else if (key == "relations") {
    if (value.empty()) config.data.relations.reset();
    else config.data.relations = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(file.string(), number, "expected key = value");
    const auto key = trim(view.substr(0, eq));
    try {
      apply_setting(config, key, view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(file.string(), number, e.what());
    }
  }
}

void finalize_config(RunConfig& config) {
  auto& t = config.train;
  if (!t.ablation.mutual_information) t.lambda_alpha = t.lambda_beta = t.lambda_gamma = 0.0;
}

std::string echo_config(const RunConfig& config) {
  std::ostringstream out;
  out << model_echo(config);
  out << "eval_n = ";
  for (std::size_t i = 0; i < config.eval_n.size(); ++i) out << (i ? "," : "") << config.eval_n[i];
  out << "\n";
  out << "interactions = " << config.data.interactions.string() << "\n";
  out << "social = " << (config.data.social ? config.data.social->string() : "") << "\n";
  out << "relations = " << (config.data.relations ? config.data.relations->string() : "") << "\n";
  return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : model_echo(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace smin
