#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smin/encoder.hpp"
#include "smin/graph.hpp"
#include "smin/infomax.hpp"
#include "smin/optim.hpp"

namespace smin {

/// Component switches. Each `false` corresponds to one ablated variant:
/// heterogeneity (-h), mutual_information (-s), global_context (-g),
/// topology (-t), attention (-a); `metapaths` drops individual meta-relations.
struct AblationFlags {
  bool heterogeneity = true;
  bool mutual_information = true;
  bool global_context = true;
  bool topology = true;
  bool attention = true;
  std::array<bool, kMetapathCount> metapaths{true, true, true, true, true};

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  std::size_t k = 2;
  double lr = 0.05;
  double lr_decay = 0.95;
  std::size_t batch_size = 2048;
  std::size_t epochs = 100;
  double lambda0 = 0.05;
  double lambda_alpha = 0.1;
  double lambda_beta = 0.1;
  double lambda_gamma = 0.1;
  std::size_t neg_per_pos = 1;
  std::uint64_t seed = 2021;
  std::size_t degree_cap = 500;
  AblationFlags ablation;

  /// Throws ConfigError: d ∈ [8, 128], L ∈ {1, 2, 3}, k ≥ 1, λ ≥ 0, rates > 0,
  /// at least one metapath per domain.
  void validate() const;

  EncoderConfig encoder_config() const;
  InfomaxFlags infomax_flags() const;
  /// True when any mutual-information term is active.
  bool uses_infomax() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ModelParams {
  EncoderParams encoder;
  InfomaxParams infomax;
};

template <class Params, class F>
  requires std::is_same_v<std::remove_const_t<Params>, ModelParams>
void for_each_tensor(Params& p, F&& f) {
  for_each_tensor(p.encoder, f);
  for_each_tensor(p.infomax, f);
}

ModelParams init_model_params(std::size_t users, std::size_t items, const TrainConfig& config);
ModelParams zeros_like(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

/// Everything derived from the training graph that stays fixed across steps.
struct TrainingData {
  CollaborativeHeteroGraph graph;
  MetapathSet metapaths;
  std::optional<InfomaxContext> infomax;
};

TrainingData prepare_training_data(const CollaborativeHeteroGraph& train, const TrainConfig& config);

struct BprTriple {
  std::size_t user;
  std::size_t positive;
  std::size_t negative;
  friend bool operator==(const BprTriple&, const BprTriple&) = default;
};

/// Inner product of the fused user and item embeddings.
double score(std::size_t user, std::size_t item, const FusedEmbeddings& fused);

/// −(1/N) Σ log σ(score(u, v⁺) − score(u, v⁻)). Throws DomainError on an empty batch.
double bpr_batch_loss(std::span<const BprTriple> batch, const FusedEmbeddings& fused);

/// `batch_size` positives drawn uniformly with replacement from the observed
/// interactions, each paired with `neg_per_pos` uniform non-interacted items
/// (redrawn on collision).
std::vector<BprTriple> sample_bpr_batch(const CollaborativeHeteroGraph& train, std::size_t batch_size, Rng& rng,
                                        std::size_t neg_per_pos = 1);

/// Contributions to the joint loss (already multiplied by their λ) plus the
/// raw value of each weighted term.
struct LossBreakdown {
  double total = 0.0;
  double bpr = 0.0;
  double l2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double raw_l2 = 0.0;
  double raw_alpha = 0.0;
  double raw_beta = 0.0;
  double raw_gamma = 0.0;
};

/// Joint objective on one batch. Fills `grads` (zeroed first) when given.
LossBreakdown joint_loss(const TrainingData& data, const ModelParams& params, const TrainConfig& config,
                         std::span<const BprTriple> batch, std::uint64_t corruption_seed,
                         ModelParams* grads = nullptr);

/// Full forward pass of the encoder for scoring and export.
FusedEmbeddings embed(const TrainingData& data, const ModelParams& params, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  /// Batch means.
  LossBreakdown loss;
};

struct TrainState {
  ModelParams params;
  std::vector<AdamState> adam;  // for_each_tensor order
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<EpochRecord> history;
};

TrainState init_train_state(const TrainingData& data, const TrainConfig& config);

struct TrainHooks {
  std::function<void(const TrainState&)> on_epoch;
  std::function<void(const std::string&)> log;
};

struct TrainOutcome {
  TrainState state;
  bool diverged = false;
  std::string diagnostics;
};

/// Runs config.epochs epochs of ceil(nnz / batch_size) Adam steps each, with
/// the learning rate multiplied by lr_decay after every epoch. On a non-finite
/// loss or parameter the state is rolled back to the end of the last
/// completed epoch and `diverged` is set.
TrainOutcome train(const TrainingData& data, const TrainConfig& config, const TrainHooks& hooks = {},
                   std::optional<TrainState> resume = std::nullopt);

// Persistence.

/// Binary dump of every parameter tensor with a name and shape header.
void save_checkpoint(const std::filesystem::path& file, const ModelParams& params, std::uint64_t config_hash,
                     std::size_t epoch);

struct Checkpoint {
  ModelParams params;
  std::uint64_t config_hash = 0;
  std::size_t epoch = 0;
};

/// Config hash and epoch without reading the tensors.
Checkpoint read_checkpoint_header(const std::filesystem::path& file);

/// Reads a checkpoint into tensors shaped like `layout`; names and shapes must match.
Checkpoint load_checkpoint(const std::filesystem::path& file, const ModelParams& layout);

/// `epoch,total,bpr,l2,alpha,beta,gamma`, one row per epoch.
void write_history_csv(const std::filesystem::path& file, std::span<const EpochRecord> history);

}  // namespace smin
