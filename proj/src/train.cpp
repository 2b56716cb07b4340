#include "gstnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "gstnet/ops.hpp"
#include "gstnet/sampler.hpp"

namespace gstnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("train: learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum in [0,1)");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (segments < 1) throw std::invalid_argument("train: segments must be >= 1");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) {
      throw std::invalid_argument("train: milestones must be increasing");
    }
  }
}

void TrainHistory::write_csv(std::ostream& os) const {
  os << "epoch,train_loss,train_acc,eval_acc\n";
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    os << (e + 1) << "," << epochs[e].train_loss << "," << epochs[e].train_acc << ","
       << epochs[e].eval_acc << "\n";
  }
}

namespace {

// Stacks segment-sampled frames of the selected clips into one batch tensor.
Tensor5 assemble_batch(const Dataset& data, const std::vector<int>& order, std::size_t begin,
                       std::size_t end, int segments, Mode mode, std::mt19937_64& rng,
                       std::vector<int>* labels) {
  const Tensor5& first = data[order[begin]].clip;
  Tensor5 batch(static_cast<int>(end - begin), first.c(), segments, first.h(), first.w());
  labels->clear();
  const std::size_t frame = static_cast<std::size_t>(first.h()) * first.w();
  for (std::size_t i = begin; i < end; ++i) {
    const Sample& s = data[order[i]];
    const std::vector<int> idx = sample_segments(s.clip.t(), segments, mode, rng);
    for (int c = 0; c < s.clip.c(); ++c) {
      for (int k = 0; k < segments; ++k) {
        std::copy_n(s.clip.data() + s.clip.index(0, c, idx[k], 0, 0), frame,
                    batch.data() + batch.index(static_cast<int>(i - begin), c, k, 0, 0));
      }
    }
    labels->push_back(s.label);
  }
  return batch;
}

int argmax_logit(const Tensor5& logits, int n) {
  int best = 0;
  for (int k = 1; k < logits.c(); ++k) {
    if (logits.at(n, k, 0, 0, 0) > logits.at(n, best, 0, 0, 0)) best = k;
  }
  return best;
}

}  // namespace

void sgd_step(std::vector<double>& value, const std::vector<double>& grad,
              std::vector<double>& velocity, double lr, double momentum, double weight_decay) {
  if (grad.size() != value.size() || velocity.size() != value.size()) {
    throw std::invalid_argument("sgd_step: size mismatch");
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    double g = grad[i];
    if (weight_decay != 0.0) g += weight_decay * value[i];
    velocity[i] = momentum * velocity[i] + g;
    value[i] -= lr * velocity[i];
  }
}

TrainHistory train(Network& net, const Dataset& train_set, const Dataset& eval_set,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");

  std::mt19937_64 rng(mix_seed(cfg.seed));
  std::vector<std::vector<double>> velocity;
  net.for_each_param([&](const std::string&, std::vector<double>& v, std::vector<double>&) {
    velocity.emplace_back(v.size(), 0.0);
  });

  TrainHistory history;
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    for (int m : cfg.milestones) {
      if (epoch == m) lr *= cfg.decay_factor;
    }
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    long long correct = 0, seen = 0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<int> labels;
      const Tensor5 batch =
          assemble_batch(train_set, order, begin, end, cfg.segments, Mode::Train, rng, &labels);

      ForwardCache cache;
      ForwardOptions opts;
      opts.mode = Mode::Train;
      opts.rng = &rng;
      const NetOutput out = net.forward(batch, opts, &cache);

      Tensor5 grad_logits;
      const double loss = softmax_cross_entropy(out.logits, labels, &grad_logits);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                 ", step " + std::to_string(steps + 1));
      }
      loss_sum += loss;
      ++steps;
      for (std::size_t n = 0; n < labels.size(); ++n) {
        correct += argmax_logit(out.logits, static_cast<int>(n)) == labels[n] ? 1 : 0;
      }
      seen += static_cast<long long>(labels.size());

      net.zero_grad();
      net.backward(cache, grad_logits);

      std::size_t vi = 0;
      net.for_each_param([&](const std::string&, std::vector<double>& v, std::vector<double>& g) {
        sgd_step(v, g, velocity[vi++], lr, cfg.momentum, cfg.weight_decay);
      });
    }

    EpochStats stats;
    stats.train_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
    stats.train_acc = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    stats.eval_acc = eval_set.empty() ? 0.0 : evaluate(net, eval_set, cfg.segments).accuracy;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    history.epochs.push_back(stats);
  }
  return history;
}

EvalResult evaluate(Network& net, const Dataset& dataset, int segments, int batch_size) {
  return evaluate_with(
      [&net](const Tensor5& batch) {
        return net.forward(batch, ForwardOptions{Mode::Eval}).logits;
      },
      dataset, segments, batch_size);
}

EvalResult evaluate_with(const std::function<Tensor5(const Tensor5&)>& logits_fn,
                         const Dataset& dataset, int segments, int batch_size) {
  EvalResult result;
  if (dataset.empty()) return result;

  int num_classes = 0;
  for (const Sample& s : dataset) num_classes = std::max(num_classes, s.label + 1);
  result.per_class_accuracy.assign(num_classes, 0.0);
  result.per_class_count.assign(num_classes, 0);
  std::vector<long long> per_class_correct(num_classes, 0);

  std::mt19937_64 rng(0);  // unused in eval-mode sampling
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  long long correct = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<int> labels;
    const Tensor5 batch =
        assemble_batch(dataset, order, begin, end, segments, Mode::Eval, rng, &labels);
    const Tensor5 logits = logits_fn(batch);
    for (std::size_t n = 0; n < labels.size(); ++n) {
      const int pred = argmax_logit(logits, static_cast<int>(n));
      result.per_class_count[labels[n]] += 1;
      if (pred == labels[n]) {
        ++correct;
        per_class_correct[labels[n]] += 1;
      }
    }
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  for (int c = 0; c < num_classes; ++c) {
    result.per_class_accuracy[c] =
        result.per_class_count[c] > 0
            ? static_cast<double>(per_class_correct[c]) / result.per_class_count[c]
            : 0.0;
  }
  return result;
}

}  // namespace gstnet
