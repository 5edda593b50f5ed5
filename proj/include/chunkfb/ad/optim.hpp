#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "chunkfb/ad/tensor.hpp"
#include "chunkfb/error.hpp"

namespace chunkfb::ad {

template <typename Scalar>
double global_norm(const std::vector<Tensor<Scalar>>& grads) {
  double sq = 0;
  for (const auto& g : grads) sq += static_cast<double>(g.squaredNorm());
  return std::sqrt(sq);
}

/// In-place p <- p - lr * g, with g rescaled to norm `clip` when its global
/// norm exceeds it (clip <= 0 disables clipping). Returns the unclipped norm.
template <typename Scalar>
double sgd_update(std::vector<Tensor<Scalar>>& params, const std::vector<Tensor<Scalar>>& grads,
                  double lr, double clip) {
  if (params.size() != grads.size()) {
    throw Error("sgd_step: " + std::to_string(params.size()) + " parameters vs " +
                std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols()) {
      throw Error("sgd_step: shape mismatch " + shape_string(params[i]) + " vs " + shape_string(grads[i]));
    }
  }
  const double norm = global_norm(grads);
  double factor = lr;
  if (clip > 0 && norm > clip) factor *= clip / norm;
  const Scalar step = static_cast<Scalar>(factor);
  if (step == Scalar(0)) return norm;
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= step * grads[i];
  return norm;
}

template <typename Scalar>
ParamSet<Scalar> sgd_step(const ParamSet<Scalar>& params, const std::vector<Tensor<Scalar>>& grads,
                          double lr, double clip = 0.0) {
  ParamSet<Scalar> out = params;
  sgd_update(out.values, grads, lr, clip);
  return out;
}

/// Constant `base_lr` before `decay_start`, then base_lr * decay^(epoch -
/// decay_start + 1), clamped below at `floor`.
inline double lr_schedule(int epoch, double base_lr, int decay_start, double floor, double decay = 0.5) {
  if (epoch < 0) throw Error("lr_schedule: negative epoch");
  if (epoch < decay_start) return base_lr;
  const double lr = base_lr * std::pow(decay, epoch - decay_start + 1);
  return std::max(floor, lr);
}

}  // namespace chunkfb::ad
