#include "smin/infomax.hpp"

#include <algorithm>
#include <cmath>

#include "smin/error.hpp"

namespace smin {

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

/// Per-row logits x_n W c_nᵀ.
std::vector<double> bilinear_logits(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& c) {
  return rowwise_dot(matmul(x, w), c);
}

DenseMatrix permute_rows(const DenseMatrix& h, const std::vector<std::size_t>& perm) {
  DenseMatrix out(h.rows(), h.cols());
  for (std::size_t n = 0; n < perm.size(); ++n) std::copy(h.row(perm[n]).begin(), h.row(perm[n]).end(), out.row(n).begin());
  return out;
}

DenseMatrix scale_rows(const DenseMatrix& m, const std::vector<double>& s) {
  DenseMatrix out = m;
  for (std::size_t n = 0; n < out.rows(); ++n)
    for (double& v : out.row(n)) v *= s[n];
  return out;
}

struct BilinearGrads {
  DenseMatrix pos, ctx, neg, w;
};

/// Gradient of scale · bilinear_infomax_loss. Where the probability clamp is
/// active the loss is flat and the gradient is zero.
BilinearGrads bilinear_backward(const DenseMatrix& pos, const DenseMatrix& ctx, const DenseMatrix& neg,
                                const DenseMatrix& w, double scale) {
  const std::size_t n = pos.rows();
  const double inv_n = scale / static_cast<double>(n);
  const auto a = bilinear_logits(pos, w, ctx);
  const auto b = bilinear_logits(neg, w, ctx);
  std::vector<double> ga(n), gb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sa = sigmoid(a[i]);
    const double sb = sigmoid(b[i]);
    ga[i] = sa > 1.0 - kProbabilityClamp || sa < kProbabilityClamp ? 0.0 : -inv_n * (1.0 - sa);
    gb[i] = sb > 1.0 - kProbabilityClamp || sb < kProbabilityClamp ? 0.0 : inv_n * sb;
  }
  const DenseMatrix ctx_wt = matmul_a_bt(ctx, w);  // rows c_n Wᵀ
  BilinearGrads g;
  g.pos = scale_rows(ctx_wt, ga);
  g.neg = scale_rows(ctx_wt, gb);
  g.ctx = add(scale_rows(matmul(pos, w), ga), scale_rows(matmul(neg, w), gb));
  g.w = add(matmul_at_b(scale_rows(pos, ga), ctx), matmul_at_b(scale_rows(neg, gb), ctx));
  return g;
}

/// Backward through Y = prelu(A · X · W) for symmetric A; returns dX and accumulates dW.
DenseMatrix gcn_backward(const SparseMatrix& normalized, const DenseMatrix& x, const DenseMatrix& pre,
                         const DenseMatrix& w, const DenseMatrix& grad_y, DenseMatrix& grad_w) {
  double unused_slope_grad = 0.0;
  const DenseMatrix grad_pre = prelu_backward(pre, kGcnSlope, grad_y, unused_slope_grad);
  const DenseMatrix grad_xw = spmm(normalized, grad_pre);
  add_inplace(grad_w, matmul_at_b(x, grad_xw));
  return matmul_a_bt(grad_xw, w);
}

}  // namespace

BipartitePhi build_phi(const SparseMatrix& interactions) {
  BipartitePhi out;
  out.users = interactions.rows();
  out.items = interactions.cols();
  const std::size_t n = out.nodes();
  std::vector<Triplet> t;
  t.reserve(2 * interactions.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  for (const auto& e : interactions.triplets()) {
    const std::size_t item = out.users + e.col;
    t.push_back({e.row, item, 1.0});
    t.push_back({item, e.row, 1.0});
    out.edges.emplace_back(e.row, item);
  }
  out.phi = SparseMatrix::from_triplets(n, n, std::move(t)).binarized();
  out.degree = out.phi.row_sums();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(out.degree[i]);
  std::vector<Triplet> norm;
  norm.reserve(out.phi.nnz());
  for (const auto& e : out.phi.triplets()) norm.push_back({e.row, e.col, inv_sqrt[e.row] * inv_sqrt[e.col]});
  out.normalized = SparseMatrix::from_triplets(n, n, std::move(norm));
  return out;
}

InfomaxParams init_infomax_params(std::size_t dim, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(dim));
  auto draw = [&] {
    DenseMatrix m(dim, dim);
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
    return m;
  };
  InfomaxParams p;
  p.gcn_weight = draw();
  p.disc_alpha = draw();
  p.disc_beta = draw();
  return p;
}

InfomaxParams zeros_like(const InfomaxParams& params) {
  return {DenseMatrix(params.gcn_weight.rows(), params.gcn_weight.cols()),
          DenseMatrix(params.disc_alpha.rows(), params.disc_alpha.cols()),
          DenseMatrix(params.disc_beta.rows(), params.disc_beta.cols())};
}

DenseMatrix gcn_embed(const DenseMatrix& h, const BipartitePhi& phi, const DenseMatrix& w) {
  if (h.rows() != phi.nodes()) throw DimensionError("gcn_embed: H must have one row per user and item");
  return prelu(spmm(phi.normalized, matmul(h, w)), kGcnSlope);
}

SparseMatrix build_k_adj(const SparseMatrix& phi, std::size_t k) {
  if (k < 1) throw DomainError("build_k_adj: k must be at least 1");
  const SparseMatrix base = phi.binarized();
  const SparseMatrix base_t = base.transpose();
  SparseMatrix result = base;
  SparseMatrix term = base;
  for (std::size_t order = 2; order <= k; ++order) {
    // Factors alternate Φ, Φᵀ, Φ, …; binarizing between products keeps the
    // support and avoids path-count growth.
    term = spgemm(term, order % 2 == 0 ? base_t : base).binarized();
    result = sparse_add(result, term).binarized();
  }
  return result;
}

DenseMatrix global_context(const SparseMatrix& phi_k, const DenseMatrix& y) {
  return spmm(phi_k.row_normalized(), y);
}

std::vector<std::size_t> fixed_point_free_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.uniform_index(i)]);
  return perm;
}

Corruption corrupt(const DenseMatrix& h, const BipartitePhi& phi, const DenseMatrix& w, std::uint64_t seed) {
  Corruption c;
  if (h.rows() < 2) return c;
  c.permutation = fixed_point_free_permutation(h.rows(), seed);
  c.h_tilde = permute_rows(h, c.permutation);
  c.y_tilde = gcn_embed(c.h_tilde, phi, w);
  c.valid = true;
  return c;
}

std::vector<double> discriminator_scores(const DenseMatrix& a, const DenseMatrix& w, const DenseMatrix& b) {
  auto logits = bilinear_logits(a, w, b);
  for (double& v : logits) v = sigmoid(v);
  return logits;
}

double bilinear_infomax_loss(const DenseMatrix& pos, const DenseMatrix& ctx, const DenseMatrix& neg,
                             const DenseMatrix& w) {
  if (!pos.same_shape(ctx) || !pos.same_shape(neg)) throw DimensionError("infomax loss: shape mismatch");
  if (pos.rows() == 0) return 0.0;
  const auto sp = discriminator_scores(pos, w, ctx);
  const auto sn = discriminator_scores(neg, w, ctx);
  double total = 0.0;
  for (std::size_t n = 0; n < sp.size(); ++n)
    total += std::log(clamp_probability(sp[n])) + std::log(1.0 - clamp_probability(sn[n]));
  return -total / static_cast<double>(sp.size());
}

double loss_alpha(const DenseMatrix& y, const DenseMatrix& z, const DenseMatrix& y_tilde, const DenseMatrix& w_alpha) {
  return bilinear_infomax_loss(y, z, y_tilde, w_alpha);
}

double loss_beta(const DenseMatrix& h, const DenseMatrix& y, const DenseMatrix& y_tilde, const DenseMatrix& w_beta) {
  return bilinear_infomax_loss(y, h, y_tilde, w_beta);
}

double loss_gamma(const DenseMatrix& z, const BipartitePhi& phi) {
  if (phi.edges.empty()) return 0.0;
  double total = 0.0;
  for (auto [u, v] : phi.edges) {
    double dot = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) dot += z(u, c) * z(v, c);
    total += (1.0 - dot) * (1.0 - dot);
  }
  return total / static_cast<double>(phi.edges.size());
}

InfomaxContext make_infomax_context(const SparseMatrix& interactions, std::size_t k) {
  InfomaxContext ctx;
  ctx.phi = build_phi(interactions);
  ctx.k = k;
  ctx.context = build_k_adj(ctx.phi.phi, k).row_normalized();
  ctx.context_t = ctx.context.transpose();
  return ctx;
}

InfomaxForward infomax_forward(const DenseMatrix& h, const InfomaxContext& ctx, const InfomaxParams& params,
                               const InfomaxFlags& flags, std::uint64_t corruption_seed) {
  if (h.rows() != ctx.phi.nodes()) throw DimensionError("infomax_forward: H must have one row per user and item");
  InfomaxForward f;
  f.h = h;
  f.pre = spmm(ctx.phi.normalized, matmul(h, params.gcn_weight));
  f.y = prelu(f.pre, kGcnSlope);
  f.z = spmm(ctx.context, f.y);

  const bool need_corruption = flags.global || flags.topology;
  if (need_corruption) {
    f.corruption = corrupt(h, ctx.phi, params.gcn_weight, corruption_seed);
    if (f.corruption.valid) {
      f.pre_tilde = spmm(ctx.phi.normalized, matmul(f.corruption.h_tilde, params.gcn_weight));
    } else {
      f.warnings.push_back("single node graph: corruption impossible, discriminator losses skipped");
    }
  }
  if (flags.global && f.corruption.valid) f.terms.alpha = loss_alpha(f.y, f.z, f.corruption.y_tilde, params.disc_alpha);
  if (flags.topology) {
    if (f.corruption.valid) f.terms.beta = loss_beta(h, f.y, f.corruption.y_tilde, params.disc_beta);
    if (ctx.phi.edges.empty()) f.warnings.push_back("no interaction edges: edge reconstruction loss is 0");
    f.terms.gamma = loss_gamma(f.z, ctx.phi);
  }
  return f;
}

void infomax_backward(const InfomaxForward& fwd, const InfomaxContext& ctx, const InfomaxParams& params,
                      const InfomaxFlags& flags, const InfomaxWeights& weights, DenseMatrix& grad_h,
                      InfomaxParams& grads) {
  const std::size_t n = fwd.y.rows(), d = fwd.y.cols();
  DenseMatrix grad_y(n, d), grad_z(n, d), grad_y_tilde(n, d);
  bool tilde_used = false;

  if (flags.global && fwd.corruption.valid && weights.alpha != 0.0) {
    auto g = bilinear_backward(fwd.y, fwd.z, fwd.corruption.y_tilde, params.disc_alpha, weights.alpha);
    add_inplace(grad_y, g.pos);
    add_inplace(grad_z, g.ctx);
    add_inplace(grad_y_tilde, g.neg);
    add_inplace(grads.disc_alpha, g.w);
    tilde_used = true;
  }
  if (flags.topology && fwd.corruption.valid && weights.beta != 0.0) {
    auto g = bilinear_backward(fwd.y, fwd.h, fwd.corruption.y_tilde, params.disc_beta, weights.beta);
    add_inplace(grad_y, g.pos);
    add_inplace(grad_h, g.ctx);
    add_inplace(grad_y_tilde, g.neg);
    add_inplace(grads.disc_beta, g.w);
    tilde_used = true;
  }
  if (flags.topology && !ctx.phi.edges.empty() && weights.gamma != 0.0) {
    const double scale = -2.0 * weights.gamma / static_cast<double>(ctx.phi.edges.size());
    for (auto [u, v] : ctx.phi.edges) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += fwd.z(u, c) * fwd.z(v, c);
      const double g = scale * (1.0 - dot);
      for (std::size_t c = 0; c < d; ++c) {
        grad_z(u, c) += g * fwd.z(v, c);
        grad_z(v, c) += g * fwd.z(u, c);
      }
    }
  }

  add_inplace(grad_y, spmm(ctx.context_t, grad_z));
  add_inplace(grad_h, gcn_backward(ctx.phi.normalized, fwd.h, fwd.pre, params.gcn_weight, grad_y, grads.gcn_weight));

  if (tilde_used) {
    const DenseMatrix grad_h_tilde = gcn_backward(ctx.phi.normalized, fwd.corruption.h_tilde, fwd.pre_tilde,
                                                  params.gcn_weight, grad_y_tilde, grads.gcn_weight);
    const auto& perm = fwd.corruption.permutation;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) grad_h(perm[r], c) += grad_h_tilde(r, c);
  }
}

}  // namespace smin
