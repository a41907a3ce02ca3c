#pragma once

#include <span>

#include "vectorpose/geometry.hpp"
#include "vectorpose/grid.hpp"

namespace vectorpose {

/// Raw (pre-activation) outputs for one vector: r and theta go through a
/// sigmoid, phi through tanh.
struct VpLogit {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

struct VpLossTerms {
  double loss = 0.0;   // mean over vectors of the three L1 terms
  double r = 0.0;      // mean |r_norm - sigmoid(r_hat)|
  double theta = 0.0;  // mean |theta_norm - sigmoid(theta_hat)|
  double phi = 0.0;    // mean wrap-aware |phi_norm - tanh(phi_hat)|
};

/// Vector-prediction loss. The phi term takes the minimum over the wrap
/// candidates {phi_norm, phi_norm - 2, phi_norm + 2}; ties resolve to the
/// first candidate in that order. When `grad` is non-empty it receives
/// d loss / d logits (sign(0) = 0 at the L1 kink).
VpLossTerms vp_loss_terms(std::span<const VpLogit> logits, const VpTargetSet& targets,
                          std::span<VpLogit> grad = {});

inline double vp_loss(std::span<const VpLogit> logits, const VpTargetSet& targets) {
  return vp_loss_terms(logits, targets).loss;
}

/// Index of the wrap candidate selected for a target/prediction pair.
int phi_wrap_candidate(double phi_norm, double prediction);

enum class ReconNorm : std::uint8_t { kL1, kL2 };

struct BfrLossTerms {
  double loss = 0.0;      // voxel + alpha * boundary
  double voxel = 0.0;     // mean voxel reconstruction error
  double boundary = 0.0;  // mean boundary reconstruction error (before alpha)
};

/// Boundary-focused reconstruction loss over one crop:
/// mean |y_v - sigmoid(v_hat)| + alpha * mean |y_b - sigmoid(b_hat)|.
/// `voxel_norm` switches the voxel term to squared error for the plain
/// reconstruction control. Gradients are written when the grad spans are non-empty.
template <typename T>
BfrLossTerms bfr_loss_terms(std::span<const T> voxel_logits, std::span<const T> boundary_logits,
                            std::span<const T> voxel_target, std::span<const T> boundary_target,
                            double alpha, ReconNorm voxel_norm = ReconNorm::kL1,
                            std::span<T> voxel_grad = {}, std::span<T> boundary_grad = {});

/// Grid form: validates that all four arrays share extents.
double bfr_loss(const Grid3f& voxel_logits, const Grid3f& boundary_logits,
                const Grid3f& voxel_target, const Grid3f& boundary_target, double alpha);

/// lambda * l_bfr + (1 - lambda) * l_vp; lambda must lie in [0, 1].
double total_loss(double l_vp, double l_bfr, double lambda);

struct LossBreakdown {
  double l_vp = 0.0;
  double l_bfr = 0.0;
  double l_total = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double voxel = 0.0;
  double boundary = 0.0;
};

double sigmoid(double x);

extern template BfrLossTerms bfr_loss_terms<float>(std::span<const float>, std::span<const float>,
                                                   std::span<const float>, std::span<const float>,
                                                   double, ReconNorm, std::span<float>,
                                                   std::span<float>);
extern template BfrLossTerms bfr_loss_terms<double>(std::span<const double>, std::span<const double>,
                                                    std::span<const double>,
                                                    std::span<const double>, double, ReconNorm,
                                                    std::span<double>, std::span<double>);

}  // namespace vectorpose
