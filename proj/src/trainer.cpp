#include "smin/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smin/error.hpp"

namespace smin {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'M', 'I', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<DenseMatrix*> tensors(ModelParams& p) {
  std::vector<DenseMatrix*> out;
  for_each_tensor(p, [&](const std::string&, DenseMatrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const DenseMatrix*> tensors(const ModelParams& p) {
  std::vector<const DenseMatrix*> out;
  for_each_tensor(p, [&](const std::string&, const DenseMatrix& m) { out.push_back(&m); });
  return out;
}

void check_finite(const LossBreakdown& loss) {
  const double parts[] = {loss.total, loss.bpr, loss.l2, loss.alpha, loss.beta, loss.gamma};
  for (double v : parts)
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite joint loss (bpr=" << loss.bpr << " l2=" << loss.raw_l2 << " alpha=" << loss.raw_alpha
          << " beta=" << loss.raw_beta << " gamma=" << loss.raw_gamma << ")";
      throw NumericError(msg.str());
    }
}

void accumulate(LossBreakdown& acc, const LossBreakdown& x) {
  acc.total += x.total;
  acc.bpr += x.bpr;
  acc.l2 += x.l2;
  acc.alpha += x.alpha;
  acc.beta += x.beta;
  acc.gamma += x.gamma;
  acc.raw_l2 += x.raw_l2;
  acc.raw_alpha += x.raw_alpha;
  acc.raw_beta += x.raw_beta;
  acc.raw_gamma += x.raw_gamma;
}

LossBreakdown scaled(LossBreakdown x, double s) {
  for (double* v : {&x.total, &x.bpr, &x.l2, &x.alpha, &x.beta, &x.gamma, &x.raw_l2, &x.raw_alpha, &x.raw_beta,
                    &x.raw_gamma})
    *v *= s;
  return x;
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::filesystem::path& file) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated checkpoint " + file.string());
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (dim < 8 || dim > 128) throw ConfigError("d must lie in [8, 128], got " + std::to_string(dim));
  if (layers < 1 || layers > 3) throw ConfigError("layers must be 1, 2 or 3, got " + std::to_string(layers));
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (!(lr_decay > 0.0) || !std::isfinite(lr_decay)) throw ConfigError("lr_decay must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
  if (neg_per_pos == 0) throw ConfigError("neg_per_pos must be > 0");
  if (degree_cap == 0) throw ConfigError("degree_cap must be > 0");
  for (double l : {lambda0, lambda_alpha, lambda_beta, lambda_gamma})
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("every lambda must be finite and >= 0");
  if (ablation.heterogeneity) {
    const auto enc = encoder_config();
    active_metapaths(enc, Domain::User);
    active_metapaths(enc, Domain::Item);
  }
}

EncoderConfig TrainConfig::encoder_config() const {
  EncoderConfig c;
  c.dim = dim;
  c.layers = layers;
  c.heterogeneity = ablation.heterogeneity;
  c.attention = ablation.attention;
  c.enabled = ablation.metapaths;
  return c;
}

InfomaxFlags TrainConfig::infomax_flags() const {
  return {ablation.mutual_information && ablation.global_context, ablation.mutual_information && ablation.topology};
}

bool TrainConfig::uses_infomax() const {
  const auto f = infomax_flags();
  return f.global || f.topology;
}

ModelParams init_model_params(std::size_t users, std::size_t items, const TrainConfig& config) {
  Rng enc_rng(derive_seed(config.seed, "init.encoder"));
  Rng mi_rng(derive_seed(config.seed, "init.infomax"));
  return {init_encoder_params(users, items, config.encoder_config(), enc_rng),
          init_infomax_params(config.dim, mi_rng)};
}

ModelParams zeros_like(const ModelParams& params) { return {zeros_like(params.encoder), zeros_like(params.infomax)}; }

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto* m : tensors(params)) n += m->size();
  return n;
}

TrainingData prepare_training_data(const CollaborativeHeteroGraph& train, const TrainConfig& config) {
  TrainingData data{train, {}, std::nullopt};
  if (config.ablation.heterogeneity)
    data.metapaths = build_metapath_set(train, config.ablation.metapaths, MetapathOptions{config.degree_cap});
  if (config.uses_infomax()) data.infomax = make_infomax_context(train.interactions(), config.k);
  return data;
}

double score(std::size_t user, std::size_t item, const FusedEmbeddings& fused) {
  if (user >= fused.users.rows()) throw IndexError("user id " + std::to_string(user) + " out of range");
  if (item >= fused.items.rows()) throw IndexError("item id " + std::to_string(item) + " out of range");
  const auto a = fused.users.row(user);
  const auto b = fused.items.row(item);
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

double bpr_batch_loss(std::span<const BprTriple> batch, const FusedEmbeddings& fused) {
  if (batch.empty()) throw DomainError("BPR loss of an empty batch");
  double sum = 0.0;
  for (const auto& t : batch) sum -= log_sigmoid(score(t.user, t.positive, fused) - score(t.user, t.negative, fused));
  return sum / static_cast<double>(batch.size());
}

std::vector<BprTriple> sample_bpr_batch(const CollaborativeHeteroGraph& train, std::size_t batch_size, Rng& rng,
                                        std::size_t neg_per_pos) {
  const auto& x = train.interactions();
  if (x.nnz() == 0) throw SamplingError("cannot sample BPR triples from an empty interaction matrix");
  const auto& row_ptr = x.row_ptr();
  const auto& cols = x.col_idx();
  std::vector<BprTriple> batch;
  batch.reserve(batch_size * neg_per_pos);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t e = rng.uniform_index(x.nnz());
    const std::size_t u = static_cast<std::size_t>(std::upper_bound(row_ptr.begin(), row_ptr.end(), e) - row_ptr.begin()) - 1;
    if (x.row_nnz(u) >= x.cols())
      throw SamplingError("user " + std::to_string(u) + " has interacted with every item; no negative exists");
    for (std::size_t n = 0; n < neg_per_pos; ++n) {
      std::size_t v;
      do v = rng.uniform_index(x.cols());
      while (x.contains(u, v));
      batch.push_back({u, cols[e], v});
    }
  }
  return batch;
}

FusedEmbeddings embed(const TrainingData& data, const ModelParams& params, const TrainConfig& config) {
  return forward(data.metapaths, params.encoder, config.encoder_config());
}

LossBreakdown joint_loss(const TrainingData& data, const ModelParams& params, const TrainConfig& config,
                         std::span<const BprTriple> batch, std::uint64_t corruption_seed, ModelParams* grads) {
  const auto enc_config = config.encoder_config();
  const auto flags = config.infomax_flags();
  const bool mi = flags.global || flags.topology;
  if (mi && !data.infomax) throw ConfigError("training data was prepared without the infomax context");

  const EncoderForward enc = encoder_forward(data.metapaths, params.encoder, enc_config);
  const auto& fused = enc.fused;

  LossBreakdown out;
  out.bpr = bpr_batch_loss(batch, fused);

  double sq = 0.0;
  for (const auto* m : tensors(params)) sq += sum_squares(*m);
  out.raw_l2 = sq;
  out.l2 = config.lambda0 * sq;

  std::optional<InfomaxForward> mi_fwd;
  if (mi) {
    const DenseMatrix h = vconcat(fused.users, fused.items);
    mi_fwd = infomax_forward(h, *data.infomax, params.infomax, flags, corruption_seed);
    if (flags.global) {
      out.raw_alpha = mi_fwd->terms.alpha;
      out.alpha = config.lambda_alpha * out.raw_alpha;
    }
    if (flags.topology) {
      out.raw_beta = mi_fwd->terms.beta;
      out.raw_gamma = mi_fwd->terms.gamma;
      out.beta = config.lambda_beta * out.raw_beta;
      out.gamma = config.lambda_gamma * out.raw_gamma;
    }
  }
  out.total = out.bpr + out.l2 + out.alpha + out.beta + out.gamma;
  check_finite(out);

  if (!grads) return out;
  *grads = zeros_like(params);

  DenseMatrix grad_users(fused.users.rows(), fused.users.cols());
  DenseMatrix grad_items(fused.items.rows(), fused.items.cols());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    const double diff = score(t.user, t.positive, fused) - score(t.user, t.negative, fused);
    const double g = -(1.0 - sigmoid(diff)) * inv_n;
    auto gu = grad_users.row(t.user);
    auto gp = grad_items.row(t.positive);
    auto gn = grad_items.row(t.negative);
    const auto hu = fused.users.row(t.user);
    const auto hp = fused.items.row(t.positive);
    const auto hn = fused.items.row(t.negative);
    for (std::size_t c = 0; c < gu.size(); ++c) {
      gu[c] += g * (hp[c] - hn[c]);
      gp[c] += g * hu[c];
      gn[c] -= g * hu[c];
    }
  }

  if (mi) {
    DenseMatrix grad_h(fused.users.rows() + fused.items.rows(), fused.users.cols());
    infomax_backward(*mi_fwd, *data.infomax, params.infomax, flags,
                     {config.lambda_alpha, config.lambda_beta, config.lambda_gamma}, grad_h, grads->infomax);
    add_inplace(grad_users, row_block(grad_h, 0, fused.users.rows()));
    add_inplace(grad_items, row_block(grad_h, fused.users.rows(), fused.items.rows()));
  }

  encoder_backward(enc, data.metapaths, params.encoder, enc_config, grad_users, grad_items, grads->encoder);

  auto g = tensors(*grads);
  const auto p = tensors(params);
  for (std::size_t i = 0; i < g.size(); ++i) add_inplace(*g[i], *p[i], 2.0 * config.lambda0);
  return out;
}

TrainState init_train_state(const TrainingData& data, const TrainConfig& config) {
  TrainState state;
  state.params = init_model_params(data.graph.user_count(), data.graph.item_count(), config);
  for (const auto* m : tensors(state.params)) state.adam.emplace_back(m->rows(), m->cols());
  return state;
}

TrainOutcome train(const TrainingData& data, const TrainConfig& config, const TrainHooks& hooks,
                   std::optional<TrainState> resume) {
  config.validate();
  TrainOutcome outcome{resume ? std::move(*resume) : init_train_state(data, config), false, {}};
  TrainState& state = outcome.state;
  if (state.adam.size() != tensors(state.params).size()) throw ConfigError("optimizer state does not match parameters");

  const std::size_t nnz = data.graph.interactions().nnz();
  if (nnz == 0) throw DataError("training graph has no interactions");
  const std::size_t batches = (nnz + config.batch_size - 1) / config.batch_size;

  while (state.epoch < config.epochs) {
    const double lr = config.lr * std::pow(config.lr_decay, static_cast<double>(state.epoch));
    const ModelParams good_params = state.params;
    const std::vector<AdamState> good_adam = state.adam;
    const std::size_t good_step = state.step;
    Rng batch_rng(derive_seed(config.seed, "batches", state.epoch));
    LossBreakdown mean;
    try {
      for (std::size_t b = 0; b < batches; ++b) {
        const auto batch = sample_bpr_batch(data.graph, config.batch_size, batch_rng, config.neg_per_pos);
        ModelParams grads;
        const auto loss =
            joint_loss(data, state.params, config, batch, derive_seed(config.seed, "corruption", state.step), &grads);
        accumulate(mean, loss);
        auto p = tensors(state.params);
        const auto g = tensors(grads);
        for (std::size_t i = 0; i < p.size(); ++i) {
          adam_update(*p[i], *g[i], state.adam[i], lr);
          if (!all_finite(*p[i])) throw NumericError("non-finite parameter after step " + std::to_string(state.step));
        }
        ++state.step;
      }
    } catch (const NumericError& e) {
      state.params = good_params;
      state.adam = good_adam;
      state.step = good_step;
      outcome.diverged = true;
      outcome.diagnostics = "diverged in epoch " + std::to_string(state.epoch + 1) + ": " + e.what() +
                            "; restored parameters from epoch " + std::to_string(state.epoch);
      if (hooks.log) hooks.log(outcome.diagnostics);
      return outcome;
    }
    ++state.epoch;
    state.history.push_back({state.epoch, lr, scaled(mean, 1.0 / static_cast<double>(batches))});
    if (hooks.log) {
      const auto& l = state.history.back().loss;
      std::ostringstream msg;
      msg << "epoch " << state.epoch << " lr=" << lr << " total=" << l.total << " bpr=" << l.bpr << " l2=" << l.l2
          << " alpha=" << l.alpha << " beta=" << l.beta << " gamma=" << l.gamma;
      hooks.log(msg.str());
    }
    if (hooks.on_epoch) hooks.on_epoch(state);
  }
  return outcome;
}

void save_checkpoint(const std::filesystem::path& file, const ModelParams& params, std::uint64_t config_hash,
                     std::size_t epoch) {
  const auto tmp = std::filesystem::path(file.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put(out, kCheckpointVersion);
    put(out, config_hash);
    put(out, static_cast<std::uint64_t>(epoch));
    put(out, static_cast<std::uint64_t>(tensors(params).size()));
    for_each_tensor(params, [&](const std::string& name, const DenseMatrix& m) {
      put(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put(out, static_cast<std::uint64_t>(m.rows()));
      put(out, static_cast<std::uint64_t>(m.cols()));
      out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    });
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

namespace {

std::ifstream open_checkpoint(const std::filesystem::path& file, Checkpoint& header) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + file.string());
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw DataError(file.string() + " is not a checkpoint");
  if (const auto v = get<std::uint32_t>(in, file); v != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  header.config_hash = get<std::uint64_t>(in, file);
  header.epoch = static_cast<std::size_t>(get<std::uint64_t>(in, file));
  return in;
}

}  // namespace

Checkpoint read_checkpoint_header(const std::filesystem::path& file) {
  Checkpoint header;
  open_checkpoint(file, header);
  return header;
}

Checkpoint load_checkpoint(const std::filesystem::path& file, const ModelParams& layout) {
  Checkpoint ck{layout, 0, 0};
  auto in = open_checkpoint(file, ck);
  const auto count = get<std::uint64_t>(in, file);
  if (count != tensors(layout).size()) throw DataError("checkpoint tensor count does not match the model");
  for_each_tensor(ck.params, [&](const std::string& name, DenseMatrix& m) {
    const auto len = get<std::uint32_t>(in, file);
    std::string stored(len, '\0');
    if (!in.read(stored.data(), len)) throw DataError("truncated checkpoint " + file.string());
    const auto rows = get<std::uint64_t>(in, file);
    const auto cols = get<std::uint64_t>(in, file);
    if (stored != name || rows != m.rows() || cols != m.cols())
      throw DataError("checkpoint tensor " + stored + " (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      ") does not match " + name + " (" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      ")");
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw DataError("truncated checkpoint " + file.string());
  });
  return ck;
}

void write_history_csv(const std::filesystem::path& file, std::span<const EpochRecord> history) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << "epoch,total,bpr,l2,alpha,beta,gamma\n";
  char buf[512];
  for (const auto& r : history) {
    const auto& l = r.loss;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, l.total, l.bpr, l.l2,
                  l.alpha, l.beta, l.gamma);
    out << buf;
  }
}

}  // namespace smin
