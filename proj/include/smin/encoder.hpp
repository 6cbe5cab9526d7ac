#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "smin/dense.hpp"
#include "smin/metapath.hpp"
#include "smin/rng.hpp"

namespace smin {

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  /// Off: fused embeddings are the base tables themselves (no metapath encoder).
  bool heterogeneity = true;
  /// Off: metapath embeddings are averaged instead of attention-weighted.
  bool attention = true;
  std::array<bool, kMetapathCount> enabled{true, true, true, true, true};
};

/// Cross-layer projection and attention parameters of one domain.
struct DomainHead {
  DenseMatrix projection;  // (L+1)d × d
  DenseMatrix att_w1;      // d × d
  DenseMatrix att_b1;      // 1 × d
  DenseMatrix att_w2;      // d × 1
};

struct EncoderParams {
  DenseMatrix user_embedding;  // I × d
  DenseMatrix item_embedding;  // J × d
  /// layer_weights[kind][l]: d × d, one per metapath and layer.
  std::array<std::vector<DenseMatrix>, kMetapathCount> layer_weights;
  /// 1 × L; one PReLU slope per layer shared by every metapath.
  DenseMatrix prelu_slopes;
  std::array<DomainHead, 2> heads;  // indexed by Domain
};

/// Uniform in ±sqrt(6/d) for embeddings and weight matrices, zero attention
/// bias, PReLU slopes 0.25.
EncoderParams init_encoder_params(std::size_t users, std::size_t items, const EncoderConfig& config, Rng& rng);

/// Zero tensors shaped like `params`.
EncoderParams zeros_like(const EncoderParams& params);

template <class Params, class F>
  requires std::is_same_v<std::remove_const_t<Params>, EncoderParams>
void for_each_tensor(Params& p, F&& f) {
  f("user_embedding", p.user_embedding);
  f("item_embedding", p.item_embedding);
  for (auto kind : kAllMetapaths)
    for (std::size_t l = 0; l < p.layer_weights[index_of(kind)].size(); ++l)
      f(std::string("layer_weight.") + std::string(to_string(kind)) + "." + std::to_string(l),
        p.layer_weights[index_of(kind)][l]);
  f("prelu_slopes", p.prelu_slopes);
  for (std::size_t d = 0; d < 2; ++d) {
    const std::string prefix = d == 0 ? "user_head." : "item_head.";
    f(prefix + "projection", p.heads[d].projection);
    f(prefix + "att_w1", p.heads[d].att_w1);
    f(prefix + "att_b1", p.heads[d].att_b1);
    f(prefix + "att_w2", p.heads[d].att_w2);
  }
}

/// One built metapath with its propagation coefficients.
struct MetapathChannel {
  MetapathAdjacency adjacency;
  GcnCoefficients coefficients;
};

using MetapathSet = std::array<std::optional<MetapathChannel>, kMetapathCount>;

/// Builds the metapaths flagged in `enabled`; the rest stay empty.
MetapathSet build_metapath_set(const CollaborativeHeteroGraph& graph, const std::array<bool, kMetapathCount>& enabled,
                               const MetapathOptions& options = {});

/// Enabled metapaths of a domain, in kind order. Throws ConfigError when none.
std::vector<MetapathKind> active_metapaths(const EncoderConfig& config, Domain domain);

/// H_next = prelu(propagation · H · W, slope).
DenseMatrix propagate_layer(const GcnCoefficients& coefficients, const DenseMatrix& h, const DenseMatrix& w,
                            double slope);

/// [H⁰ | H¹ | … | Hᴸ] with H⁰ = base and Hˡ⁺¹ = propagate_layer(Hˡ).
DenseMatrix encode_metapath(const GcnCoefficients& coefficients, const DenseMatrix& base,
                            std::span<const DenseMatrix> weights, std::span<const double> slopes);

struct DomainFusion {
  DenseMatrix fused;    // N × d
  DenseMatrix weights;  // N × P, each row sums to 1
};

/// q = tanh(h̃ W¹ + b¹), score = q W², weights = softmax over metapaths,
/// fused = Σ_p weight_p h̃_p. Throws ConfigError on an empty input set.
DomainFusion attention_fuse(std::span<const DenseMatrix> tilde, const DomainHead& head);
DomainFusion mean_fuse(std::span<const DenseMatrix> tilde);

struct FusedEmbeddings {
  DenseMatrix users;  // I × d
  DenseMatrix items;  // J × d
  DenseMatrix user_weights;
  DenseMatrix item_weights;
  std::vector<MetapathKind> user_paths;
  std::vector<MetapathKind> item_paths;
};

/// Intermediate values kept for the backward pass.
struct EncoderTape {
  struct Path {
    MetapathKind kind;
    std::vector<DenseMatrix> hidden;  // H⁰ … Hᴸ
    std::vector<DenseMatrix> pre;     // pre-activations of layers 1 … L
    DenseMatrix concat;
    DenseMatrix tilde;
    DenseMatrix q;
  };
  std::array<std::vector<Path>, 2> domains;
};

struct EncoderForward {
  FusedEmbeddings fused;
  EncoderTape tape;
};

EncoderForward encoder_forward(const MetapathSet& metapaths, const EncoderParams& params, const EncoderConfig& config);

inline FusedEmbeddings forward(const MetapathSet& metapaths, const EncoderParams& params, const EncoderConfig& config) {
  return encoder_forward(metapaths, params, config).fused;
}

/// Accumulates into `grads` the gradient of a scalar whose partials with
/// respect to the fused user / item embeddings are `grad_users`, `grad_items`.
void encoder_backward(const EncoderForward& fwd, const MetapathSet& metapaths, const EncoderParams& params,
                      const EncoderConfig& config, const DenseMatrix& grad_users, const DenseMatrix& grad_items,
                      EncoderParams& grads);

}  // namespace smin
