#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gstnet/network.hpp"
#include "gstnet/synthetic.hpp"

namespace gstnet {

struct TrainConfig {
  int batch_size = 16;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double decay_factor = 0.1;
  std::vector<int> milestones{15, 25};  // epochs at which lr decays
  int epochs = 30;
  int segments = 8;  // frames sampled per clip
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  // seconds column omitted so reruns with the same seed are byte-identical
  void write_csv(std::ostream& os) const;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<int> per_class_count;
};

// One SGD-with-momentum update: vel = momentum*vel + (grad + wd*value),
// value -= lr*vel.
void sgd_step(std::vector<double>& value, const std::vector<double>& grad,
              std::vector<double>& velocity, double lr, double momentum, double weight_decay);

// Plain SGD with momentum and step decay at the milestones. Deterministic
// given the seed; throws std::runtime_error on non-finite loss.
TrainHistory train(Network& net, const Dataset& train_set, const Dataset& eval_set,
                   const TrainConfig& cfg);

// Eval-mode forward with middle-frame segment sampling; top-1 accuracy.
EvalResult evaluate(Network& net, const Dataset& dataset, int segments, int batch_size = 32);

// Same protocol with an arbitrary logits source (batch -> N x K x 1 x 1 x 1).
EvalResult evaluate_with(const std::function<Tensor5(const Tensor5&)>& logits_fn,
                         const Dataset& dataset, int segments, int batch_size = 32);

}  // namespace gstnet
