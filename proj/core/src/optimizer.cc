#include "kgcopy/optimizer.h"

#include <cmath>

namespace kgcopy {

Adam::Adam(const ModelDims& dims, AdamConfig config)
    : config_(config),
      first_moment_(ModelParams::Zeros(dims)),
      second_moment_(ModelParams::Zeros(dims)) {}

void Adam::Step(ModelParams& params, const ModelParams& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  auto p = params.Tensors();
  auto g = grads.Tensors();
  auto m = first_moment_.Tensors();
  auto v = second_moment_.Tensors();
  for (size_t i = 0; i < p.size(); ++i) {
    const double lr =
        p[i].group == ParamGroup::kEncoder ? config_.lr_encoder : config_.lr_decoder;
    auto pm = p[i].map();
    auto gm = g[i].map();
    auto mm = m[i].map();
    auto vm = v[i].map();
    mm = config_.beta1 * mm + (1.0 - config_.beta1) * gm;
    vm = config_.beta2 * vm + (1.0 - config_.beta2) * gm.cwiseAbs2();
    pm.array() -= lr * (mm.array() / bc1) /
                  ((vm.array() / bc2).sqrt() + config_.epsilon);
  }
}

double ClipGradNorm(ModelParams& grads, double max_norm) {
  const double norm = std::sqrt(grads.SquaredNorm());
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& t : grads.Tensors()) t.map() *= scale;
  }
  return norm;
}

}  // namespace kgcopy
