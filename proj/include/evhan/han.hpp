#pragma once

// Hierarchical attention network over event streams: events (composed from
// words or taken from precomputed vectors) are pooled into news, news into
// days and days into a single window vector that feeds an MLP head.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evhan/autodiff.hpp"
#include "evhan/corpus_io.hpp"
#include "evhan/labeling.hpp"
#include "evhan/tensor.hpp"

namespace evhan {

enum class EmbedMode { word_compose, precomputed };

std::string to_string(EmbedMode mode);
EmbedMode parse_embed_mode(const std::string& text);

struct HanConfig {
  EmbedMode mode = EmbedMode::word_compose;
  std::size_t d_w = 50;         // word embedding width (word_compose)
  std::size_t event_dim = 0;    // precomputed event vector width (precomputed)
  std::size_t hidden = 64;      // GRU state per direction
  std::size_t d_a = 64;         // attention width
  std::size_t mlp_hidden = 64;  // MLP hidden layer width
  std::size_t categories = 2;
  std::size_t max_words = 20;   // N: words kept per event

  /// Width of the event vectors that enter the event-level block.
  std::size_t event_input_dim() const { return mode == EmbedMode::word_compose ? 2 * hidden : event_dim; }
  void validate() const;
};

struct HanParams {
  HanConfig config;
  std::vector<std::string> vocabulary;  // row i of embed.table (word_compose)
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  friend bool operator==(const HanParams& a, const HanParams& b) {
    return a.vocabulary == b.vocabulary && a.tensors == b.tensors;
  }
};

/// Names and shapes of every tensor implied by the configuration.
std::map<std::string, Shape> expected_shapes(const HanConfig& config, std::size_t vocab_size);

/// Uniform +-1/sqrt(fan_in) weights, zero biases, uniform +-1 embeddings.
HanParams init_params(const HanConfig& config, std::vector<std::string> vocabulary, std::uint64_t seed);

/// Copies GloVe rows into embed.table for every vocabulary word the table
/// knows; other rows follow the table's OOV policy.
void load_pretrained_embeddings(HanParams& params, const EmbeddingTable& table);

void save_checkpoint(const HanParams& params, const std::string& path);
/// Strict: unknown, missing or mis-shaped tensors are errors.
HanParams load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Model input

struct EventInput {
  std::vector<std::int64_t> tokens;       // vocabulary rows, -1 for OOV (word_compose)
  std::vector<std::uint8_t> token_mask;   // empty means every token is valid
  std::vector<double> vector;             // precomputed mode
  bool pad = false;
  std::string text;
  EventKey key;
};

struct NewsInput {
  std::string news_id;
  std::vector<EventInput> events;
  bool pad = false;
};

struct DayInput {
  std::string date;
  std::vector<NewsInput> news;  // empty means a masked day
  bool pad = false;
};

struct SampleInput {
  std::string date;
  std::string asset;
  int label = 0;
  std::vector<DayInput> days;

  std::size_t event_count() const;
};

/// Lowercased whitespace tokens of a1 p a2.
std::vector<std::string> event_tokens(const EventTuple& e);
std::vector<std::string> build_vocabulary(const std::vector<SampleInput>& samples);

/// Resolves manifest ids into model input. word_compose maps tokens through
/// the vocabulary (truncated to N); precomputed fetches vectors from the
/// store and fails naming any missing key.
SampleInput encode_sample(const DaySample& sample, const NewsIndex& news, const HanParams& params,
                          const EventVectorStore* vectors = nullptr);
/// Same, for callers that have not built parameters yet (tokens left empty,
/// texts kept) so that a vocabulary can be derived first.
SampleInput encode_sample_text(const DaySample& sample, const NewsIndex& news);
void assign_tokens(std::vector<SampleInput>& samples, const HanParams& params);
void assign_vectors(std::vector<SampleInput>& samples, const HanParams& params, const EventVectorStore& vectors);

// ---------------------------------------------------------------------------
// Blocks

/// Bidirectional GRU under a parameter prefix ("event" reads event.fwd.*
/// and event.bwd.*). Returns [T, 2h]; masked positions keep the previous
/// state and emit a zero row.
ad::Var bigru(ad::Graph& g, HanParams& params, const std::string& prefix, ad::Var x,
              std::span<const std::uint8_t> mask);

struct Pooled {
  ad::Var vector;   // [1, 2h]
  ad::Var weights;  // [T]
};

ad::Var embed_event(ad::Graph& g, HanParams& params, const EventInput& event, std::vector<double>* word_weights);

Pooled attention_pool(ad::Graph& g, HanParams& params, const std::string& prefix, ad::Var states,
                      std::span<const std::uint8_t> mask);

struct AttentionTrace {
  std::vector<double> day;                                // [K]
  std::vector<std::vector<double>> news;                  // [K][news]
  std::vector<std::vector<std::vector<double>>> event;    // [K][news][events]
  std::vector<std::vector<std::vector<std::vector<double>>>> word;  // word_compose only
};

/// Builds the forward pass on g and returns the logits node [C].
ad::Var forward(ad::Graph& g, HanParams& params, const SampleInput& sample, AttentionTrace* trace = nullptr);

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  int category = 0;  // argmax, ties to the lowest index
  AttentionTrace trace;
};

/// Inference with immutable parameters; safe to call concurrently.
Prediction predict(const HanParams& params, const SampleInput& sample);

struct ExplainedEvent {
  std::size_t day = 0;  // index into SampleInput::days
  std::string date;
  std::string news_id;
  std::string text;
  double score = 0.0;  // beta_event * beta_news * beta_day
  double beta_event = 0.0;
  double beta_news = 0.0;
  double beta_day = 0.0;
};

struct Explanation {
  Prediction prediction;
  std::vector<ExplainedEvent> events;  // ranked, at most top_k (per day when asked)
};

/// Ranks every event by the product of its attention weights along the
/// hierarchy. Ties keep input order. With per_day, keeps the top_k of each
/// day, days in input order.
Explanation explain(const HanParams& params, const SampleInput& sample, std::size_t top_k, bool per_day = false);

}  // namespace evhan
