#include "laya/train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <mutex>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "laya/error.hpp"
#include "laya/random.hpp"

namespace laya::train {

namespace {

using Clock = std::chrono::steady_clock;

// Step tensors are large and short-lived; keeping them on the heap instead of
// fresh mmap pages avoids a page-fault storm on every step.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs task(i) for i in [0, n) on up to `parallel` threads. The first failure
// in index order is rethrown after all workers finish.
template <typename Task>
void run_parallel(std::size_t n, std::size_t parallel, Task task) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallel, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Fn>
auto with_seed_context(std::uint64_t seed, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    rethrow_with_prefix(e, "seed " + std::to_string(seed) + ": ");
  }
}

std::vector<ad::Parameter*> trainable(nn::Model& model) { return model.parameters(); }

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train.max_epochs must be at least 1");
  if (patience == 0) throw ConfigError("train.patience must be at least 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("train.val_fraction must lie in (0, 1)");
  if (seeds.empty()) throw ConfigError("train.seeds must list at least one seed");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ConfigError("train: adam betas must lie in [0, 1) and eps must be positive");
  }
  if (eval_batch_size == 0) throw ConfigError("train.eval_batch_size must be positive");
}

DataView DataView::all(const data::Dataset& ds) {
  DataView v{&ds, std::vector<std::size_t>(ds.size())};
  std::iota(v.indices.begin(), v.indices.end(), std::size_t{0});
  return v;
}

RunData DataSource::for_seed(std::uint64_t seed, double val_fraction) const {
  if (pool == nullptr) throw ContractError("data source has no training pool");
  RunData rd;
  if (train_indices && val_indices) {
    rd.train = {pool, *train_indices};
    rd.val = {pool, *val_indices};
  } else {
    auto split = data::validation_split(train_indices ? train_indices->size() : pool->size(), val_fraction, seed);
    if (train_indices) {
      for (auto& i : split.train) i = (*train_indices)[i];
      for (auto& i : split.val) i = (*train_indices)[i];
    }
    rd.train = {pool, std::move(split.train)};
    rd.val = {pool, std::move(split.val)};
  }
  if (test_indices) {
    rd.test = {test != nullptr ? test : pool, *test_indices};
  } else {
    rd.test = DataView::all(test != nullptr ? *test : *pool);
  }
  return rd;
}

Evaluation evaluate(nn::Model& model, const DataView& view, std::size_t batch_size) {
  Evaluation ev;
  const std::size_t n = view.size();
  const std::size_t C = model.config().head.num_classes;
  double loss_sum = 0.0;
  std::vector<double> alpha;
  std::size_t layers = 0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    const std::span<const std::size_t> idx(view.indices.data() + start, end - start);
    const nn::BatchInput batch = data::gather(*view.dataset, idx);
    ad::Tape tape(false);
    const nn::HeadOutput out = model.forward(tape, batch);
    loss_sum += ops::cross_entropy(out.logits, batch.labels).value()[0] * static_cast<double>(idx.size());
    const auto preds = argmax_rows(out.logits.value());
    ev.predictions.insert(ev.predictions.end(), preds.begin(), preds.end());
    ev.labels.insert(ev.labels.end(), batch.labels.begin(), batch.labels.end());
    if (out.alpha.valid()) {
      const Tensor& a = out.alpha.value();
      layers = a.cols();
      alpha.insert(alpha.end(), a.values().begin(), a.values().end());
    }
  }
  if (layers > 0) ev.alpha = Tensor({n, layers}, std::move(alpha));
  ev.metrics = compute_metrics(ev.labels, ev.predictions, C);
  ev.loss = n == 0 ? 0.0 : loss_sum / static_cast<double>(n);
  return ev;
}

SeedResult train_model(nn::Model& model, const RunData& data, const TrainConfig& config, std::uint64_t seed,
                       const TrainHooks& hooks) {
  config.validate();
  keep_large_blocks_on_heap();
  if (data.train.size() == 0) throw DataError("empty training set");
  if (data.val.size() == 0) throw DataError("empty validation set");
  const auto start = Clock::now();
  SeedResult result;
  result.seed = seed;

  auto params = trainable(model);
  Adam adam(params, config.adam());
  EarlyStopper stopper(config.patience);
  Rng shuffle_rng(seed, Stream::shuffle);
  std::vector<std::size_t> order = data.train.indices;
  std::vector<Tensor> best = model.snapshot();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const nn::BatchInput batch = data::gather(*data.train.dataset, {order.data() + b, end - b});
      for (auto* p : params) p->zero_grad();
      ad::Tape tape;
      const nn::HeadOutput out = model.forward(tape, batch);
      const ad::Var loss = ops::cross_entropy(out.logits, batch.labels);
      loss_sum += loss.value()[0] * static_cast<double>(end - b);
      tape.backward(loss);
      adam.step();
    }
    result.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

    double val_acc = evaluate(model, data.val, config.eval_batch_size).metrics.accuracy;
    if (hooks.validation_override) val_acc = hooks.validation_override(epoch, val_acc);
    result.val_curve.push_back(val_acc);
    if (stopper.observe(val_acc)) best = model.snapshot();
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
    if (hooks.log) {
      hooks.log("seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) + " loss " +
                std::to_string(result.train_loss.back()) + " val_acc " + std::to_string(val_acc));
    }
    if (stopper.should_stop()) break;
  }
  model.restore(best);
  result.epochs_run = stopper.epochs();
  result.best_epoch = stopper.best_epoch();
  result.best_val_accuracy = stopper.best_score();
  result.parameters = std::move(best);
  result.test = evaluate(model, data.test, config.eval_batch_size);
  result.seconds = seconds_since(start);
  return result;
}

SeedResult run_seed(const nn::ModelConfig& model_config, const TrainConfig& config, const DataSource& source,
                    std::uint64_t seed, const TrainHooks& hooks) {
  return with_seed_context(seed, [&] {
    nn::Model model(model_config, seed);
    return train_model(model, source.for_seed(seed, config.val_fraction), config, seed, hooks);
  });
}

RunReport multi_seed_run(const nn::ModelConfig& model_config, const TrainConfig& config, const DataSource& source,
                         std::size_t parallel, const TrainHooks& hooks) {
  config.validate();
  const auto start = Clock::now();
  RunReport report;
  report.model = model_config;
  report.train = config;
  report.seeds.resize(config.seeds.size());
  run_parallel(config.seeds.size(), parallel, [&](std::size_t i) {
    report.seeds[i] = run_seed(model_config, config, source, config.seeds[i], hooks);
  });
  std::vector<double> acc, f1, val;
  for (const auto& s : report.seeds) {
    acc.push_back(s.test.metrics.accuracy);
    f1.push_back(s.test.metrics.macro_f1);
    val.push_back(s.best_val_accuracy);
  }
  report.accuracy = summarize(acc);
  report.macro_f1 = summarize(f1);
  report.val_accuracy = summarize(val);
  nn::Model probe(model_config, config.seeds.front());
  report.parameter_count = probe.parameter_count();
  report.head_parameter_count = probe.head().params().scalar_count();
  report.wall_seconds = seconds_since(start);
  return report;
}

std::vector<GridPoint> enumerate_grid(const GridSpace& space, const nn::HeadConfig& base, const TrainConfig& train) {
  std::vector<GridPoint> out;
  for (std::size_t d : space.d_star) {
    for (double tau : space.tau) {
      for (nn::PsiKind psi : space.psi) {
        for (std::size_t f : space.scorer_width_factor) {
          GridPoint p{base, train};
          p.head.kind = nn::HeadKind::laya;
          p.head.d_star = d;
          p.head.tau = tau;
          p.head.psi = psi;
          p.head.scorer_width = f * d;
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> GridResult::ranking() const {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    return entries[a].val_accuracy.mean > entries[b].val_accuracy.mean;
  });
  return order;
}

GridResult grid_search(const std::vector<GridPoint>& points, const nn::BackboneConfig& backbone,
                       const std::vector<std::uint64_t>& grid_seeds, const DataSource& source, std::size_t parallel,
                       const TrainHooks& hooks) {
  if (points.empty()) throw ParameterError("grid search over an empty space");
  if (grid_seeds.empty()) throw ParameterError("grid search needs at least one seed");
  for (const auto& p : points) {
    p.head.validate();
    p.train.validate();
  }
  const std::size_t S = grid_seeds.size();
  std::vector<double> val(points.size() * S);
  run_parallel(points.size() * S, parallel, [&](std::size_t task) {
    const GridPoint& p = points[task / S];
    const std::uint64_t seed = grid_seeds[task % S];
    const nn::ModelConfig mc{backbone, p.head};
    val[task] = run_seed(mc, p.train, source, seed, hooks).best_val_accuracy;
  });
  GridResult result;
  for (std::size_t i = 0; i < points.size(); ++i) {
    GridEntry e{points[i], {val.begin() + static_cast<std::ptrdiff_t>(i * S),
                            val.begin() + static_cast<std::ptrdiff_t>((i + 1) * S)}, {}};
    e.val_accuracy = summarize(e.val_accuracies);
    result.entries.push_back(std::move(e));
  }
  result.best = result.ranking().front();
  return result;
}

}  // namespace laya::train
