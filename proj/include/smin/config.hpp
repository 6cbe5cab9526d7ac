#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smin/graph.hpp"
#include "smin/trainer.hpp"

namespace smin {

/// Everything a command needs to reproduce a run.
struct RunConfig {
  DatasetPaths data;
  TrainConfig train;
  std::optional<double> rating_threshold;
  std::vector<std::size_t> eval_n{5, 10, 15};
};

/// Sets one `key = value` pair. Keys: d, layers, k, lr, lr_decay, batch_size,
/// epochs, lambda0, lambda_alpha, lambda_beta, lambda_gamma, neg_per_pos,
/// seed, degree_cap, rating_threshold, eval_n, ablate, drop_metapath,
/// interactions, social, relations. Throws ConfigError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Applies every `key = value` line of a file on top of `config`; `#` starts
/// a comment. Throws ParseError with the line number.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);

/// Applies ablation letters ("h", "s", "g", "t", "a").
void apply_ablation(AblationFlags& flags, std::string_view letters);
std::string ablation_letters(const AblationFlags& flags);

/// Final fix-ups after all sources are applied: ablating mutual information
/// forces λ_α = λ_β = λ_γ = 0.
void finalize_config(RunConfig& config);

/// Every resolved value as `key = value` lines, doubles with 17 significant
/// digits. Reading the echo back yields an equal config.
std::string echo_config(const RunConfig& config);

/// FNV-1a over the model-defining part of the echo (everything except the
/// evaluation cutoffs).
std::uint64_t config_hash(const RunConfig& config);

}  // namespace smin
