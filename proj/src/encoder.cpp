#include "smin/encoder.hpp"

#include <cmath>
#include <string>

#include "smin/error.hpp"
#include "smin/sparse.hpp"

namespace smin {

namespace {

constexpr double kInitialSlope = 0.25;

DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

std::size_t domain_index(Domain d) { return static_cast<std::size_t>(d); }

/// row n of `m` scaled by column `col` of `weights`.
DenseMatrix scale_rows(const DenseMatrix& m, const DenseMatrix& weights, std::size_t col) {
  DenseMatrix out = m;
  for (std::size_t n = 0; n < out.rows(); ++n)
    for (double& v : out.row(n)) v *= weights(n, col);
  return out;
}

}  // namespace

EncoderParams init_encoder_params(std::size_t users, std::size_t items, const EncoderConfig& config, Rng& rng) {
  if (config.dim == 0 || config.layers == 0) throw ConfigError("encoder needs d >= 1 and L >= 1");
  const std::size_t d = config.dim, L = config.layers;
  const double bound = std::sqrt(6.0 / static_cast<double>(d));
  EncoderParams p;
  p.user_embedding = uniform_matrix(users, d, bound, rng);
  p.item_embedding = uniform_matrix(items, d, bound, rng);
  for (auto kind : kAllMetapaths)
    for (std::size_t l = 0; l < L; ++l) p.layer_weights[index_of(kind)].push_back(uniform_matrix(d, d, bound, rng));
  p.prelu_slopes = DenseMatrix(1, L, kInitialSlope);
  for (auto& head : p.heads) {
    head.projection = uniform_matrix((L + 1) * d, d, bound, rng);
    head.att_w1 = uniform_matrix(d, d, bound, rng);
    head.att_b1 = DenseMatrix(1, d);
    head.att_w2 = uniform_matrix(d, 1, bound, rng);
  }
  return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams z = params;
  for_each_tensor(z, [](const std::string&, DenseMatrix& m) { m.fill(0.0); });
  return z;
}

MetapathSet build_metapath_set(const CollaborativeHeteroGraph& graph, const std::array<bool, kMetapathCount>& enabled,
                               const MetapathOptions& options) {
  MetapathSet set;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < kMetapathCount; ++k) {
    if (!enabled[k]) continue;
    MetapathChannel ch;
    ch.adjacency = build_metapath(graph, kAllMetapaths[k], options);
    ch.coefficients = gcn_coefficients(ch.adjacency);
    set[k] = std::move(ch);
  }
  return set;
}

std::vector<MetapathKind> active_metapaths(const EncoderConfig& config, Domain domain) {
  std::vector<MetapathKind> out;
  for (auto kind : kAllMetapaths)
    if (domain_of(kind) == domain && config.enabled[index_of(kind)]) out.push_back(kind);
  if (out.empty())
    throw ConfigError(std::string("every ") + (domain == Domain::User ? "user" : "item") +
                      "-domain metapath is disabled; keep at least one");
  return out;
}

DenseMatrix propagate_layer(const GcnCoefficients& coefficients, const DenseMatrix& h, const DenseMatrix& w,
                            double slope) {
  if (coefficients.propagation.cols() != h.rows())
    throw DimensionError("propagate_layer: embedding rows do not match the metapath domain");
  return prelu(spmm(coefficients.propagation, matmul(h, w)), slope);
}

DenseMatrix encode_metapath(const GcnCoefficients& coefficients, const DenseMatrix& base,
                            std::span<const DenseMatrix> weights, std::span<const double> slopes) {
  if (weights.empty() || weights.size() != slopes.size())
    throw ConfigError("encode_metapath: need L >= 1 layer weights and one slope per layer");
  std::vector<DenseMatrix> hidden{base};
  for (std::size_t l = 0; l < weights.size(); ++l)
    hidden.push_back(propagate_layer(coefficients, hidden.back(), weights[l], slopes[l]));
  return hconcat(hidden);
}

DomainFusion attention_fuse(std::span<const DenseMatrix> tilde, const DomainHead& head) {
  if (tilde.empty()) throw ConfigError("attention_fuse: no metapath embeddings");
  const std::size_t n = tilde.front().rows(), d = tilde.front().cols(), paths = tilde.size();
  for (const auto& t : tilde)
    if (t.rows() != n || t.cols() != d) throw DimensionError("attention_fuse: metapath embeddings differ in shape");

  DenseMatrix scores(n, paths);
  for (std::size_t p = 0; p < paths; ++p) {
    DenseMatrix q = matmul(tilde[p], head.att_w1);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) q(r, c) = std::tanh(q(r, c) + head.att_b1(0, c));
    const DenseMatrix s = matmul(q, head.att_w2);
    for (std::size_t r = 0; r < n; ++r) scores(r, p) = s(r, 0);
  }
  DomainFusion out{DenseMatrix(n, d), DenseMatrix(n, paths)};
  for (std::size_t r = 0; r < n; ++r) {
    double mx = scores(r, 0);
    for (std::size_t p = 1; p < paths; ++p) mx = std::max(mx, scores(r, p));
    double z = 0.0;
    for (std::size_t p = 0; p < paths; ++p) z += out.weights(r, p) = std::exp(scores(r, p) - mx);
    for (std::size_t p = 0; p < paths; ++p) out.weights(r, p) /= z;
  }
  for (std::size_t p = 0; p < paths; ++p)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) out.fused(r, c) += out.weights(r, p) * tilde[p](r, c);
  return out;
}

DomainFusion mean_fuse(std::span<const DenseMatrix> tilde) {
  if (tilde.empty()) throw ConfigError("mean_fuse: no metapath embeddings");
  const std::size_t n = tilde.front().rows(), d = tilde.front().cols(), paths = tilde.size();
  DomainFusion out{DenseMatrix(n, d), DenseMatrix(n, paths, 1.0 / static_cast<double>(paths))};
  for (const auto& t : tilde) add_inplace(out.fused, t, 1.0 / static_cast<double>(paths));
  return out;
}

EncoderForward encoder_forward(const MetapathSet& metapaths, const EncoderParams& params, const EncoderConfig& config) {
  EncoderForward out;
  auto& fused = out.fused;
  if (!config.heterogeneity) {
    fused.users = params.user_embedding;
    fused.items = params.item_embedding;
    return out;
  }
  const std::size_t L = config.layers;
  if (params.prelu_slopes.cols() != L) throw ConfigError("encoder params were built for a different depth");

  for (Domain domain : {Domain::User, Domain::Item}) {
    const std::size_t di = domain_index(domain);
    const auto kinds = active_metapaths(config, domain);
    const DenseMatrix& base = domain == Domain::User ? params.user_embedding : params.item_embedding;
    auto& tapes = out.tape.domains[di];
    tapes.resize(kinds.size());
    std::vector<DenseMatrix> tildes(kinds.size());

    for (auto kind : kinds)
      if (!metapaths[index_of(kind)]) throw ConfigError("metapath " + std::string(to_string(kind)) + " was not built");

    // Metapaths are independent given the parameters.
#pragma omp parallel for schedule(dynamic, 1) if (kinds.size() > 1)
    for (std::size_t p = 0; p < kinds.size(); ++p) {
      const auto& channel = metapaths[index_of(kinds[p])];
      auto& t = tapes[p];
      t.kind = kinds[p];
      t.hidden.push_back(base);
      for (std::size_t l = 0; l < L; ++l) {
        t.pre.push_back(spmm(channel->coefficients.propagation,
                             matmul(t.hidden.back(), params.layer_weights[index_of(kinds[p])][l])));
        t.hidden.push_back(prelu(t.pre.back(), params.prelu_slopes(0, l)));
      }
      t.concat = hconcat(t.hidden);
      t.tilde = matmul(t.concat, params.heads[di].projection);
      tildes[p] = t.tilde;
    }

    DomainFusion fusion;
    if (config.attention) {
      fusion = attention_fuse(tildes, params.heads[di]);
      for (auto& t : tapes) {
        t.q = matmul(t.tilde, params.heads[di].att_w1);
        for (std::size_t r = 0; r < t.q.rows(); ++r)
          for (std::size_t c = 0; c < t.q.cols(); ++c)
            t.q(r, c) = std::tanh(t.q(r, c) + params.heads[di].att_b1(0, c));
      }
    } else {
      fusion = mean_fuse(tildes);
    }
    if (domain == Domain::User) {
      fused.users = std::move(fusion.fused);
      fused.user_weights = std::move(fusion.weights);
      fused.user_paths = kinds;
    } else {
      fused.items = std::move(fusion.fused);
      fused.item_weights = std::move(fusion.weights);
      fused.item_paths = kinds;
    }
  }
  return out;
}

void encoder_backward(const EncoderForward& fwd, const MetapathSet& metapaths, const EncoderParams& params,
                      const EncoderConfig& config, const DenseMatrix& grad_users, const DenseMatrix& grad_items,
                      EncoderParams& grads) {
  if (!config.heterogeneity) {
    add_inplace(grads.user_embedding, grad_users);
    add_inplace(grads.item_embedding, grad_items);
    return;
  }
  const std::size_t L = config.layers, d = config.dim;

  for (Domain domain : {Domain::User, Domain::Item}) {
    const std::size_t di = domain_index(domain);
    const DenseMatrix& grad_fused = domain == Domain::User ? grad_users : grad_items;
    const DenseMatrix& weights = domain == Domain::User ? fwd.fused.user_weights : fwd.fused.item_weights;
    const auto& tapes = fwd.tape.domains[di];
    const auto& head = params.heads[di];
    auto& ghead = grads.heads[di];
    const std::size_t n = grad_fused.rows(), paths = tapes.size();

    std::vector<DenseMatrix> grad_tilde(paths);
    for (std::size_t p = 0; p < paths; ++p) grad_tilde[p] = scale_rows(grad_fused, weights, p);

    if (config.attention) {
      // Softmax backward: d score_p = w_p (g_p − Σ_p' w_p' g_p'), g_p = ⟨dh*, h̃_p⟩.
      DenseMatrix g(n, paths);
      for (std::size_t p = 0; p < paths; ++p) {
        const auto dots = rowwise_dot(grad_fused, tapes[p].tilde);
        for (std::size_t r = 0; r < n; ++r) g(r, p) = dots[r];
      }
      DenseMatrix grad_score(n, paths);
      for (std::size_t r = 0; r < n; ++r) {
        double mean = 0.0;
        for (std::size_t p = 0; p < paths; ++p) mean += weights(r, p) * g(r, p);
        for (std::size_t p = 0; p < paths; ++p) grad_score(r, p) = weights(r, p) * (g(r, p) - mean);
      }
      for (std::size_t p = 0; p < paths; ++p) {
        const DenseMatrix& q = tapes[p].q;
        DenseMatrix grad_pre(n, d);
        for (std::size_t r = 0; r < n; ++r) {
          const double gs = grad_score(r, p);
          for (std::size_t c = 0; c < d; ++c) {
            ghead.att_w2(c, 0) += q(r, c) * gs;
            grad_pre(r, c) = gs * head.att_w2(c, 0) * (1.0 - q(r, c) * q(r, c));
          }
        }
        add_inplace(ghead.att_w1, matmul_at_b(tapes[p].tilde, grad_pre));
        add_inplace(ghead.att_b1, column_sums(grad_pre));
        add_inplace(grad_tilde[p], matmul_a_bt(grad_pre, head.att_w1));
      }
    }

    DenseMatrix& grad_base = domain == Domain::User ? grads.user_embedding : grads.item_embedding;
    for (std::size_t p = 0; p < paths; ++p) {
      const auto& t = tapes[p];
      const auto& propagation = metapaths[index_of(t.kind)]->coefficients.propagation;
      auto& gweights = grads.layer_weights[index_of(t.kind)];
      const auto& pweights = params.layer_weights[index_of(t.kind)];

      add_inplace(ghead.projection, matmul_at_b(t.concat, grad_tilde[p]));
      const DenseMatrix grad_concat = matmul_a_bt(grad_tilde[p], head.projection);

      DenseMatrix grad_hidden = column_block(grad_concat, L * d, d);
      for (std::size_t l = L; l-- > 0;) {
        double grad_slope = 0.0;
        const DenseMatrix grad_pre = prelu_backward(t.pre[l], params.prelu_slopes(0, l), grad_hidden, grad_slope);
        grads.prelu_slopes(0, l) += grad_slope;
        // propagation is symmetric, so it is its own transpose here.
        const DenseMatrix grad_hw = spmm(propagation, grad_pre);
        add_inplace(gweights[l], matmul_at_b(t.hidden[l], grad_hw));
        DenseMatrix below = matmul_a_bt(grad_hw, pweights[l]);
        add_inplace(below, column_block(grad_concat, l * d, d));
        grad_hidden = std::move(below);
      }
      add_inplace(grad_base, grad_hidden);
    }
  }
}

}  // namespace smin
