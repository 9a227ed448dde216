#include "laya/nn/model.hpp"

#include "laya/error.hpp"

namespace laya::nn {

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(seed, Stream::init);
  backbone_ = make_backbone(config_.backbone, rng);
  head_ = std::make_unique<Head>(config_.head, backbone_->dims(), rng);
}

HeadOutput Model::forward(Tape& tape, const BatchInput& batch) {
  return head_->forward(tape, backbone_->forward(tape, batch));
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : backbone_->params()) out.push_back(&p);
  for (auto& p : head_->params()) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : backbone_->params()) out.push_back(&p);
  for (const auto& p : head_->params()) out.push_back(&p);
  return out;
}

std::size_t Model::parameter_count() const {
  return backbone_->params().scalar_count() + head_->params().scalar_count();
}

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  for (const Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

void Model::restore(const std::vector<Tensor>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ContractError("snapshot has the wrong number of tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i]->value.shape()) {
      throw ContractError("snapshot tensor for " + params[i]->name + " has the wrong shape");
    }
    params[i]->value = values[i];
  }
}

}  // namespace laya::nn
