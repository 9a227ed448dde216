#include "laya/train/optim.hpp"

#include <cmath>

#include "laya/error.hpp"
#include "laya/simd/kernels.hpp"

namespace laya::train {

Adam::Adam(std::vector<ad::Parameter*> params, AdamSettings settings)
    : params_(std::move(params)), settings_(settings) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double t = static_cast<double>(t_);
  const simd::AdamCoefficients coef{settings_.learning_rate,
                                    settings_.beta1,
                                    settings_.beta2,
                                    settings_.eps,
                                    1.0 - std::pow(settings_.beta1, t),
                                    1.0 - std::pow(settings_.beta2, t)};
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Parameter& p = *params_[i];
    if (p.grad.empty() && !p.value.empty()) p.zero_grad();
    if (p.grad.shape() != p.value.shape()) {
      throw ContractError("adam: gradient of " + p.name + " has shape " + shape_str(p.grad.shape()) +
                          ", parameter has " + shape_str(p.value.shape()));
    }
    k.adam_update(p.value.size(), coef, p.grad.data(), p.value.data(), m_[i].data(), v_[i].data());
  }
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ParameterError("patience must be at least 1");
}

bool EarlyStopper::observe(double score) {
  ++epochs_;
  if (best_epoch_ == 0 || score > best_) {
    best_ = score;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

}  // namespace laya::train
