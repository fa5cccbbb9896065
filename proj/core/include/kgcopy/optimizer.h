#ifndef KGCOPY_OPTIMIZER_H_
#define KGCOPY_OPTIMIZER_H_

#include "kgcopy/model.h"

namespace kgcopy {

struct AdamConfig {
  double lr_encoder = 1e-3;
  double lr_decoder = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with one learning rate per ParamGroup.
class Adam {
 public:
  Adam(const ModelDims& dims, AdamConfig config);

  void Step(ModelParams& params, const ModelParams& grads);
  long long steps() const { return step_; }

 private:
  AdamConfig config_;
  ModelParams first_moment_;
  ModelParams second_moment_;
  long long step_ = 0;
};

// Rescales `grads` in place so the global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGradNorm(ModelParams& grads, double max_norm);

}  // namespace kgcopy

#endif  // KGCOPY_OPTIMIZER_H_
