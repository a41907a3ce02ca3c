#include "vectorpose/losses.hpp"

#include <array>
#include <cmath>

namespace vectorpose {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int phi_wrap_candidate(double phi_norm, double prediction) {
  const std::array<double, 3> candidates{phi_norm, phi_norm - 2.0, phi_norm + 2.0};
  int best = 0;
  double best_err = std::abs(candidates[0] - prediction);
  for (int j = 1; j < 3; ++j) {
    const double err = std::abs(candidates[std::size_t(j)] - prediction);
    if (err < best_err) {
      best = j;
      best_err = err;
    }
  }
  return best;
}

VpLossTerms vp_loss_terms(std::span<const VpLogit> logits, const VpTargetSet& targets,
                          std::span<VpLogit> grad) {
  if (logits.size() != targets.size()) {
    throw InvalidArgument("vp_loss: " + std::to_string(logits.size()) + " logit triples for " +
                          std::to_string(targets.size()) + " targets");
  }
  if (!grad.empty() && grad.size() != logits.size()) {
    throw InvalidArgument("vp_loss: gradient buffer size mismatch");
  }
  VpLossTerms out;
  const std::size_t n = logits.size();
  if (n == 0) return out;
  const double inv_n = 1.0 / double(n);
  for (std::size_t m = 0; m < n; ++m) {
    const VpLogit& l = logits[m];
    const VpTarget& t = targets.targets[m];
    const double sr = sigmoid(l.r);
    const double st = sigmoid(l.theta);
    const double tp = std::tanh(l.phi);
    const int j = phi_wrap_candidate(t.phi_norm, tp);
    const double cand = t.phi_norm + (j == 1 ? -2.0 : (j == 2 ? 2.0 : 0.0));

    const double er = t.r_norm - sr;
    const double et = t.theta_norm - st;
    const double ep = cand - tp;
    out.r += std::abs(er);
    out.theta += std::abs(et);
    out.phi += std::abs(ep);
    if (!grad.empty()) {
      grad[m].r = -sign(er) * sr * (1.0 - sr) * inv_n;
      grad[m].theta = -sign(et) * st * (1.0 - st) * inv_n;
      grad[m].phi = -sign(ep) * (1.0 - tp * tp) * inv_n;
    }
  }
  out.r *= inv_n;
  out.theta *= inv_n;
  out.phi *= inv_n;
  out.loss = out.r + out.theta + out.phi;
  return out;
}

template <typename T>
BfrLossTerms bfr_loss_terms(std::span<const T> voxel_logits, std::span<const T> boundary_logits,
                            std::span<const T> voxel_target, std::span<const T> boundary_target,
                            double alpha, ReconNorm voxel_norm, std::span<T> voxel_grad,
                            std::span<T> boundary_grad) {
  const std::size_t n = voxel_logits.size();
  if (boundary_logits.size() != n || voxel_target.size() != n || boundary_target.size() != n) {
    throw InvalidArgument("bfr_loss: logits and targets must have identical sizes");
  }
  if ((!voxel_grad.empty() && voxel_grad.size() != n) ||
      (!boundary_grad.empty() && boundary_grad.size() != n)) {
    throw InvalidArgument("bfr_loss: gradient buffer size mismatch");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("bfr_loss: alpha must be >= 0");
  BfrLossTerms out;
  if (n == 0) return out;
  const double inv_n = 1.0 / double(n);
  double voxel_sum = 0.0;
  double boundary_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sv = sigmoid(double(voxel_logits[i]));
    const double ev = double(voxel_target[i]) - sv;
    if (voxel_norm == ReconNorm::kL1) {
      voxel_sum += std::abs(ev);
      if (!voxel_grad.empty()) voxel_grad[i] = T(-sign(ev) * sv * (1.0 - sv) * inv_n);
    } else {
      voxel_sum += ev * ev;
      if (!voxel_grad.empty()) voxel_grad[i] = T(-2.0 * ev * sv * (1.0 - sv) * inv_n);
    }
    const double sb = sigmoid(double(boundary_logits[i]));
    const double eb = double(boundary_target[i]) - sb;
    boundary_sum += std::abs(eb);
    if (!boundary_grad.empty()) boundary_grad[i] = T(-alpha * sign(eb) * sb * (1.0 - sb) * inv_n);
  }
  out.voxel = voxel_sum * inv_n;
  out.boundary = boundary_sum * inv_n;
  out.loss = out.voxel + alpha * out.boundary;
  return out;
}

template BfrLossTerms bfr_loss_terms<float>(std::span<const float>, std::span<const float>,
                                            std::span<const float>, std::span<const float>, double,
                                            ReconNorm, std::span<float>, std::span<float>);
template BfrLossTerms bfr_loss_terms<double>(std::span<const double>, std::span<const double>,
                                             std::span<const double>, std::span<const double>,
                                             double, ReconNorm, std::span<double>,
                                             std::span<double>);

double bfr_loss(const Grid3f& voxel_logits, const Grid3f& boundary_logits,
                const Grid3f& voxel_target, const Grid3f& boundary_target, double alpha) {
  const Extents3 e = voxel_logits.extents();
  if (!(boundary_logits.extents() == e) || !(voxel_target.extents() == e) ||
      !(boundary_target.extents() == e)) {
    throw InvalidArgument("bfr_loss: extent mismatch between logits and targets");
  }
  return bfr_loss_terms<float>(voxel_logits.values(), boundary_logits.values(),
                               voxel_target.values(), boundary_target.values(), alpha)
      .loss;
}

double total_loss(double l_vp, double l_bfr, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("total_loss: lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  return lambda * l_bfr + (1.0 - lambda) * l_vp;
}

}  // namespace vectorpose
