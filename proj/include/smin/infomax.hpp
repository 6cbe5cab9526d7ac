#pragma once

#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "smin/dense.hpp"
#include "smin/rng.hpp"
#include "smin/sparse.hpp"

namespace smin {

/// Fixed negative slope of the PReLU inside the user-item GCN layer.
inline constexpr double kGcnSlope = 0.25;
/// Discriminator probabilities are clamped to [ε, 1 − ε] before the log.
inline constexpr double kProbabilityClamp = 1e-12;

/// Symmetric user-item adjacency over users followed by items,
///   Φ = [0 X; Xᵀ 0] + I,
/// with its D^{-1/2} Φ D^{-1/2} normalization and the observed (u, I+v) edges.
struct BipartitePhi {
  std::size_t users = 0;
  std::size_t items = 0;
  SparseMatrix phi;
  std::vector<double> degree;
  SparseMatrix normalized;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t nodes() const noexcept { return users + items; }
};

BipartitePhi build_phi(const SparseMatrix& interactions);

struct InfomaxParams {
  DenseMatrix gcn_weight;  // d × d
  DenseMatrix disc_alpha;  // d × d, global-context discriminator
  DenseMatrix disc_beta;   // d × d, node-transformation discriminator
};

InfomaxParams init_infomax_params(std::size_t dim, Rng& rng);
InfomaxParams zeros_like(const InfomaxParams& params);

template <class Params, class F>
  requires std::is_same_v<std::remove_const_t<Params>, InfomaxParams>
void for_each_tensor(Params& p, F&& f) {
  f(std::string("infomax.gcn_weight"), p.gcn_weight);
  f(std::string("infomax.disc_alpha"), p.disc_alpha);
  f(std::string("infomax.disc_beta"), p.disc_beta);
}

/// Y = prelu(D^{-1/2} Φ D^{-1/2} H W).
DenseMatrix gcn_embed(const DenseMatrix& h, const BipartitePhi& phi, const DenseMatrix& w);

/// Φ⁽¹⁾ = Φ; Φ⁽ᵏ⁾ = Φ⁽ᵏ⁻¹⁾ + (Φ Φᵀ Φ …, k factors). Each added term and the
/// running sum are binarized. Throws DomainError for k < 1.
SparseMatrix build_k_adj(const SparseMatrix& phi, std::size_t k);

/// Z[n] = mean of Y over the support of row n of `phi_k` (weighted by its values).
DenseMatrix global_context(const SparseMatrix& phi_k, const DenseMatrix& y);

/// Uniformly random cyclic permutation (Sattolo); no fixed points when n > 1.
std::vector<std::size_t> fixed_point_free_permutation(std::size_t n, std::uint64_t seed);

struct Corruption {
  std::vector<std::size_t> permutation;  // h_tilde[n] = h[permutation[n]]
  DenseMatrix h_tilde;
  DenseMatrix y_tilde;
  /// False when there is a single node and nothing to shuffle.
  bool valid = false;
};

Corruption corrupt(const DenseMatrix& h, const BipartitePhi& phi, const DenseMatrix& w, std::uint64_t seed);

/// σ(a_n W b_nᵀ) for every row n.
std::vector<double> discriminator_scores(const DenseMatrix& a, const DenseMatrix& w, const DenseMatrix& b);

/// −(1/N) Σ_n [log D(pos_n, ctx_n) + log(1 − D(neg_n, ctx_n))], D(x, c) = σ(x W cᵀ).
double bilinear_infomax_loss(const DenseMatrix& pos, const DenseMatrix& ctx, const DenseMatrix& neg,
                             const DenseMatrix& w);

/// Global-context loss: positives (y_n, z_n), negatives (ỹ_n, z_n).
double loss_alpha(const DenseMatrix& y, const DenseMatrix& z, const DenseMatrix& y_tilde, const DenseMatrix& w_alpha);
/// Node-transformation loss: positives (y_n, h_n), negatives (ỹ_n, h_n).
double loss_beta(const DenseMatrix& h, const DenseMatrix& y, const DenseMatrix& y_tilde, const DenseMatrix& w_beta);
/// Mean of (1 − z_u·z_v)² over observed interaction edges; 0 when there are none.
double loss_gamma(const DenseMatrix& z, const BipartitePhi& phi);

/// Φ plus the row-normalized k-order context operator and its transpose.
struct InfomaxContext {
  BipartitePhi phi;
  SparseMatrix context;
  SparseMatrix context_t;
  std::size_t k = 2;
};

InfomaxContext make_infomax_context(const SparseMatrix& interactions, std::size_t k);

struct InfomaxFlags {
  bool global = true;    // L_alpha
  bool topology = true;  // L_beta and L_gamma
};

struct InfomaxTerms {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct InfomaxForward {
  DenseMatrix h;
  DenseMatrix pre;  // pre-activation of Y
  DenseMatrix y;
  DenseMatrix z;
  Corruption corruption;
  DenseMatrix pre_tilde;
  InfomaxTerms terms;
  std::vector<std::string> warnings;
};

/// `h` stacks fused user rows then item rows.
InfomaxForward infomax_forward(const DenseMatrix& h, const InfomaxContext& ctx, const InfomaxParams& params,
                               const InfomaxFlags& flags, std::uint64_t corruption_seed);

struct InfomaxWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Gradient of α·L_α + β·L_β + γ·L_γ, accumulated into `grad_h` and `grads`.
void infomax_backward(const InfomaxForward& fwd, const InfomaxContext& ctx, const InfomaxParams& params,
                      const InfomaxFlags& flags, const InfomaxWeights& weights, DenseMatrix& grad_h,
                      InfomaxParams& grads);

}  // namespace smin
