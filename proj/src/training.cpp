#include "evhan/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("weight decay must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) throw UsageError("Adam betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw UsageError("Adam epsilon must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (patience == 0) throw UsageError("patience must be at least 1");
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw UsageError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - mx);
  return std::log(total) - (logits[label] - mx);
}

std::vector<double> cross_entropy_grad(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw UsageError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> g(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) total += g[i] = std::exp(logits[i] - mx);
  for (auto& x : g) x /= total;
  g[label] -= 1.0;
  return g;
}

void adamw_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                  std::size_t t, const TrainConfig& c) {
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    throw ShapeError("adamw: parameter, gradient and moment sizes differ");
  }
  if (t == 0) throw UsageError("adamw: step counter must be at least 1");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] -= c.lr * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * theta[i]);
  }
}

void adamw_step(std::map<std::string, Tensor>& params, AdamState& state, const TrainConfig& config) {
  ++state.t;
  for (auto& [name, t] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(t.size(), 0.0);
      v.assign(t.size(), 0.0);
    }
    if (!t.has_grad()) t.ensure_grad();
    adamw_update(t.values(), t.grad(), m, v, state.t, config);
  }
}

std::string epoch_to_json(const EpochLog& log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["train_loss"] = log.train_loss;
  j["val_acc"] = log.val_acc;
  j["best"] = log.best;
  return j.dump();
}

TrainResult train(HanParams params, const std::vector<SampleInput>& train_set, const std::vector<SampleInput>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  if (val_set.empty()) throw DataError("validation split is empty");
  std::mt19937_64 rng(config.seed);
  AdamState state;
  TrainResult result;
  result.params = params;
  result.best_val_acc = -1.0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const SampleInput& s = train_set[order[b]];
        ad::Graph g;
        const ad::Var logits = forward(g, params, s);
        const ad::Var loss = ad::softmax_cross_entropy(logits, static_cast<std::size_t>(s.label));
        loss_sum += g.value(loss)[0];
        g.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& [name, t] : params.tensors) {
        for (auto& gr : t.grad()) gr *= inv;
      }
      adamw_step(params.tensors, state, config);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_set.size());
    log.val_acc = evaluate(params, val_set).accuracy;
    if (log.val_acc > result.best_val_acc) {
      log.best = true;
      result.best_val_acc = log.val_acc;
      result.best_epoch = epoch;
      result.params = params;
      stale = 0;
    } else {
      ++stale;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stale >= config.patience) break;
  }
  for (auto& [name, t] : result.params.tensors) t.drop_grad();
  return result;
}

MetricsReport evaluate(const HanParams& params, const std::vector<SampleInput>& samples) {
  const std::size_t C = params.config.categories;
  MetricsReport r;
  r.categories = C;
  r.total = samples.size();
  r.confusion.assign(C, std::vector<std::size_t>(C, 0));
  double loss = 0.0;
  for (const auto& s : samples) {
    const Prediction p = predict(params, s);
    loss += cross_entropy(p.logits, static_cast<std::size_t>(s.label));
    ++r.confusion.at(static_cast<std::size_t>(s.label)).at(static_cast<std::size_t>(p.category));
  }
  std::size_t correct = 0;
  r.precision.assign(C, 0.0);
  r.recall.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    correct += r.confusion[c][c];
    std::size_t row = 0, col = 0;
    for (std::size_t k = 0; k < C; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    if (col) r.precision[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(col);
    if (row) r.recall[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(row);
  }
  if (r.total) {
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    r.loss = loss / static_cast<double>(r.total);
  }
  return r;
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["categories"] = r.categories;
  j["total"] = r.total;
  j["accuracy"] = r.accuracy;
  j["loss"] = r.loss;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["confusion"] = r.confusion;
  return j.dump();
}

}  // namespace evhan
