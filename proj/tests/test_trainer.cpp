#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "smin/error.hpp"
#include "smin/synthetic.hpp"
#include "smin/trainer.hpp"

using namespace smin;

namespace {

struct GradientSetup {
  TrainConfig config;
  TrainingData data;
  ModelParams params;
  std::vector<BprTriple> batch;
};

GradientSetup gradient_setup(const TrainConfig& config) {
  GradientSetup s{config, prepare_training_data(fixtures::small_graph(), config), {}, {}};
  s.params = init_model_params(8, 8, config);
  Rng rng(5);
  s.batch = sample_bpr_batch(s.data.graph, 12, rng);
  return s;
}

GradCheckReport check_gradients(GradientSetup& s) {
  ModelParams grads;
  joint_loss(s.data, s.params, s.config, s.batch, 99, &grads);
  std::vector<GradTensor> tensors;
  std::vector<DenseMatrix*> values;
  for_each_tensor(s.params, [&](const std::string&, DenseMatrix& m) { values.push_back(&m); });
  std::size_t i = 0;
  for_each_tensor(grads, [&](const std::string& name, const DenseMatrix& g) {
    tensors.push_back({name, values[i++], &g});
  });
  return finite_diff_check([&] { return joint_loss(s.data, s.params, s.config, s.batch, 99).total; }, tensors, 1e-5);
}

FusedEmbeddings fused_from(const DenseMatrix& users, const DenseMatrix& items) {
  FusedEmbeddings f;
  f.users = users;
  f.items = items;
  return f;
}

}  // namespace

TEST_CASE("joint loss gradient matches central differences on the 8x8 fixture") {
  auto s = gradient_setup(fixtures::small_config());
  const auto report = check_gradients(s);
  for (const auto& e : report.entries) {
    INFO(e.name << " rel=" << e.relative_error << " norm=" << e.analytic_norm);
    CHECK(e.relative_error < 1e-4);
  }
}

TEST_CASE("gradients hold under every ablation") {
  for (int variant = 0; variant < 7; ++variant) {
    auto config = fixtures::small_config();
    auto& a = config.ablation;
    switch (variant) {
      case 0: a.heterogeneity = false; break;
      case 1: a.mutual_information = false; break;
      case 2: a.global_context = false; break;
      case 3: a.topology = false; break;
      case 4: a.attention = false; break;
      case 5: a.metapaths[index_of(MetapathKind::UU)] = false; break;
      case 6: config.lambda0 = 0.0; break;
    }
    auto s = gradient_setup(config);
    const auto report = check_gradients(s);
    CAPTURE(variant);
    CHECK(report.max_relative_error() < 1e-4);
  }
}

TEST_CASE("score is an inner product") {
  const auto f = fused_from(DenseMatrix::from_rows({{1, 0, 0}, {1, 2, 3}}),
                            DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {4, -5, 6}}));
  CHECK(score(0, 0, f) == 1.0);
  CHECK(score(0, 1, f) == 0.0);
  CHECK(score(1, 2, f) == doctest::Approx(1 * 4 - 2 * 5 + 3 * 6));
  CHECK_THROWS_AS(score(2, 0, f), IndexError);
  CHECK_THROWS_AS(score(0, 3, f), IndexError);
}

TEST_CASE("BPR batch loss") {
  const auto f = fused_from(DenseMatrix::from_rows({{1, 0}, {0, 1}}),
                            DenseMatrix::from_rows({{1, 0}, {0, 1}, {2, 2}, {-1, 0}}));
  const std::vector<BprTriple> tie{{0, 1, 1}};
  CHECK(bpr_batch_loss(tie, f) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // scores: u0·i0 = 1, u0·i1 = 0, u0·i2 = 2, u1·i2 = 2, u1·i3 = 0
  const std::vector<BprTriple> three{{0, 0, 1}, {0, 1, 2}, {1, 2, 3}};
  const double expected = (std::log(1 + std::exp(-1.0)) + std::log(1 + std::exp(2.0)) + std::log(1 + std::exp(-2.0))) / 3;
  CHECK(bpr_batch_loss(three, f) == doctest::Approx(expected).epsilon(1e-12));

  const auto far = fused_from(DenseMatrix::from_rows({{1}}), DenseMatrix::from_rows({{1e6}, {-1e6}}));
  const std::vector<BprTriple> sep{{0, 0, 1}};
  CHECK(bpr_batch_loss(sep, far) < 1e-12);
  CHECK_THROWS_AS(bpr_batch_loss(std::span<const BprTriple>{}, f), DomainError);
}

TEST_CASE("BPR sampling") {
  const auto g = fixtures::small_graph();
  Rng a(3), b(3);
  const auto ba = sample_bpr_batch(g, 500, a);
  CHECK(ba == sample_bpr_batch(g, 500, b));
  CHECK(ba.size() == 500);  // larger than nnz = 20: drawn with replacement
  std::set<std::pair<std::size_t, std::size_t>> positives;
  for (const auto& t : ba) {
    CHECK(g.has_interaction(t.user, t.positive));
    CHECK_FALSE(g.has_interaction(t.user, t.negative));
    positives.emplace(t.user, t.positive);
  }
  CHECK(positives.size() == g.interaction_count());

  Rng c(4);
  CHECK(sample_bpr_batch(g, 10, c, 3).size() == 30);

  const CollaborativeHeteroGraph full(2, 2, {{0, 0}, {0, 1}, {1, 0}}, {}, {}, 0, 0);
  Rng d(1);
  CHECK_THROWS_AS(sample_bpr_batch(full, 200, d), SamplingError);
}

TEST_CASE("joint loss decomposition") {
  auto config = fixtures::small_config();
  auto s = gradient_setup(config);
  const auto full = joint_loss(s.data, s.params, config, s.batch, 7);
  CHECK(std::abs(full.bpr + full.l2 + full.alpha + full.beta + full.gamma - full.total) < 1e-12);
  CHECK(full.alpha == config.lambda_alpha * full.raw_alpha);
  CHECK(full.raw_alpha > 0.0);
  CHECK(full.raw_beta > 0.0);

  auto zero = config;
  zero.lambda0 = zero.lambda_alpha = zero.lambda_beta = zero.lambda_gamma = 0.0;
  const auto z = joint_loss(s.data, s.params, zero, s.batch, 7);
  CHECK(z.total == z.bpr);
  CHECK(z.bpr == full.bpr);

  auto no_mi = config;
  no_mi.ablation.mutual_information = false;
  auto lambdas_zero = config;
  lambdas_zero.lambda_alpha = lambdas_zero.lambda_beta = lambdas_zero.lambda_gamma = 0.0;
  CHECK(joint_loss(s.data, s.params, no_mi, s.batch, 7).total ==
        joint_loss(s.data, s.params, lambdas_zero, s.batch, 7).total);

  // Affine in each λ with slope equal to the raw term.
  for (double lam : {0.0, 0.3, 1.7}) {
    auto c = config;
    c.lambda_gamma = lam;
    const auto l = joint_loss(s.data, s.params, c, s.batch, 7);
    CHECK(l.total - (full.total - full.gamma) == doctest::Approx(lam * full.raw_gamma).epsilon(1e-12));
  }
}

TEST_CASE("disabling a loss term leaves the others unchanged") {
  auto config = fixtures::small_config();
  auto s = gradient_setup(config);
  const auto full = joint_loss(s.data, s.params, config, s.batch, 7);

  auto g = config;
  g.ablation.global_context = false;
  const auto lg = joint_loss(s.data, s.params, g, s.batch, 7);
  CHECK(lg.alpha == 0.0);
  CHECK(lg.bpr == full.bpr);
  CHECK(lg.l2 == full.l2);
  CHECK(lg.beta == full.beta);
  CHECK(lg.gamma == full.gamma);
  CHECK(std::abs(full.total - lg.total - full.alpha) < 1e-12);

  auto t = config;
  t.ablation.topology = false;
  const auto lt = joint_loss(s.data, s.params, t, s.batch, 7);
  CHECK(lt.beta == 0.0);
  CHECK(lt.gamma == 0.0);
  CHECK(lt.alpha == full.alpha);
  CHECK(std::abs(full.total - lt.total - full.beta - full.gamma) < 1e-12);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.dim = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.layers = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.lambda_beta = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.ablation.metapaths[index_of(MetapathKind::IUI)] = false;
  bad.ablation.metapaths[index_of(MetapathKind::IKI)] = false;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.ablation.heterogeneity = false;
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("training") {
  auto config = fixtures::small_config();
  config.dim = 8;
  const auto data = prepare_training_data(fixtures::small_graph(), config);

  SUBCASE("zero epochs keep the initialization") {
    config.epochs = 0;
    const auto out = train(data, config);
    const auto init = init_model_params(8, 8, config);
    bool same = true;
    std::vector<const DenseMatrix*> a;
    for_each_tensor(init, [&](const std::string&, const DenseMatrix& m) { a.push_back(&m); });
    std::size_t i = 0;
    for_each_tensor(out.state.params, [&](const std::string&, const DenseMatrix& m) { same &= m == *a[i++]; });
    CHECK(same);
    CHECK(out.state.history.empty());
  }

  SUBCASE("deterministic with history and decay") {
    config.epochs = 4;
    std::size_t calls = 0;
    TrainHooks hooks;
    hooks.on_epoch = [&](const TrainState& s) { CHECK(s.epoch == ++calls); };
    const auto a = train(data, config, hooks);
    const auto b = train(data, config);
    CHECK(calls == 4);
    REQUIRE(a.state.history.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
      CHECK(a.state.history[e].epoch == e + 1);
      CHECK(a.state.history[e].loss.total == b.state.history[e].loss.total);
      CHECK(a.state.history[e].lr == doctest::Approx(config.lr * std::pow(config.lr_decay, double(e))));
    }
  }

  SUBCASE("resume continues exactly") {
    config.epochs = 4;
    const auto whole = train(data, config);
    auto half_config = config;
    half_config.epochs = 2;
    auto half = train(data, half_config);
    const auto rest = train(data, config, {}, std::move(half.state));
    REQUIRE(rest.state.history.size() == 4);
    CHECK(rest.state.history[3].loss.total == whole.state.history[3].loss.total);
  }

  SUBCASE("divergence rolls back") {
    config.epochs = 3;
    config.lr = 1e300;
    const auto out = train(data, config);
    CHECK(out.diverged);
    CHECK_FALSE(out.diagnostics.empty());
    bool finite = true;
    for_each_tensor(out.state.params, [&](const std::string&, const DenseMatrix& m) { finite &= all_finite(m); });
    CHECK(finite);
  }
}

TEST_CASE("loss decreases on planted data") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PlantedConfig pc;
    pc.seed = seed;
    const auto planted = make_planted_dataset(pc);
    TrainConfig config;
    config.dim = 16;
    config.batch_size = 256;
    config.epochs = 50;
    config.seed = seed;
    const auto data = prepare_training_data(planted.data.graph, config);
    const auto out = train(data, config);
    REQUIRE(out.state.history.size() == 50);
    CAPTURE(seed);
    CHECK(out.state.history.back().loss.total < out.state.history.front().loss.total);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto config = fixtures::small_config();
  const auto params = init_model_params(8, 8, config);
  const auto dir = std::filesystem::temp_directory_path() / "smin_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "model.ckpt";
  save_checkpoint(file, params, 1234, 7);
  const auto ck = load_checkpoint(file, zeros_like(params));
  CHECK(ck.config_hash == 1234);
  CHECK(ck.epoch == 7);
  CHECK(ck.params.encoder.user_embedding == params.encoder.user_embedding);
  CHECK(ck.params.infomax.disc_beta == params.infomax.disc_beta);

  auto other = config;
  other.layers = 1;
  CHECK_THROWS_AS(load_checkpoint(file, init_model_params(8, 8, other)), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt", params), DataError);

  std::vector<EpochRecord> history{{1, 0.05, {}}};
  history[0].loss.total = 1.5;
  write_history_csv(dir / "history.csv", history);
  std::ifstream in(dir / "history.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,total,bpr,l2,alpha,beta,gamma");
  CHECK(row.rfind("1,1.5,0,", 0) == 0);
  std::filesystem::remove_all(dir);
}
