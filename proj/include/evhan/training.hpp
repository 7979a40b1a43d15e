#pragma once

// Cross-entropy training with AdamW, early stopping on validation accuracy,
// and evaluation metrics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evhan/han.hpp"

namespace evhan {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// -log softmax(logits)[label], computed with max subtraction.
double cross_entropy(std::span<const double> logits, std::size_t label);
/// softmax(logits) - onehot(label).
std::vector<double> cross_entropy_grad(std::span<const double> logits, std::size_t label);

/// Per-tensor first and second moments plus the shared step counter.
struct AdamState {
  std::size_t t = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

/// One decoupled-weight-decay Adam update on raw buffers:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + lambda theta)
/// with m_hat, v_hat bias-corrected for step t (already incremented).
void adamw_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                  std::size_t t, const TrainConfig& config);

/// Advances state.t and updates every tensor from its gradient buffer.
void adamw_step(std::map<std::string, Tensor>& params, AdamState& state, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  bool best = false;
};

std::string epoch_to_json(const EpochLog& log);

struct TrainResult {
  HanParams params;  // best-validation parameters
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch training, one sample at a time with gradients averaged over
/// the batch. Epoch order is a seeded shuffle. Training stops after
/// `patience` epochs without a strictly better validation accuracy.
TrainResult train(HanParams init, const std::vector<SampleInput>& train_set, const std::vector<SampleInput>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

struct MetricsReport {
  std::size_t categories = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
  std::vector<double> precision;  // 0 for classes never predicted
  std::vector<double> recall;     // 0 for classes never present
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

MetricsReport evaluate(const HanParams& params, const std::vector<SampleInput>& samples);
std::string metrics_to_json(const MetricsReport& report);

}  // namespace evhan
