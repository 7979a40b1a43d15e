#include "evhan/han.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <unordered_map>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

const char* const kGates[] = {"z", "r", "h"};

std::vector<std::string> block_names(const HanConfig& c) {
  if (c.mode == EmbedMode::word_compose) return {"word", "event", "news", "day"};
  return {"event", "news", "day"};
}

std::size_t block_input_dim(const HanConfig& c, const std::string& block) {
  if (block == "word") return c.d_w;
  if (block == "event") return c.event_input_dim();
  return 2 * c.hidden;
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t parse_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint is missing '" + key + "'");
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw DataError("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("checkpoint field '" + key + "' is not a number: " + it->second);
  }
}

std::vector<double> values_of(const ad::Graph& g, ad::Var v) {
  const auto s = g.value(v).values();
  return {s.begin(), s.end()};
}

// One direction of the GRU. Rows come back in time order whichever way the
// recurrence runs.
std::vector<ad::Var> gru_direction(ad::Graph& g, HanParams& p, const std::string& prefix, ad::Var x,
                                   std::span<const std::uint8_t> mask, bool reverse) {
  const std::size_t T = g.value(x).dim(0);
  const std::size_t h = p.config.hidden;
  ad::Var proj[3];
  ad::Var U[3];
  for (int k = 0; k < 3; ++k) {
    const std::string gname = kGates[k];
    proj[k] = ad::add_bias(ad::matmul(x, g.param(p.at(prefix + ".W_" + gname))), g.param(p.at(prefix + ".b_" + gname)));
    U[k] = g.param(p.at(prefix + ".U_" + gname));
  }
  const ad::Var zero_row = g.constant(Tensor::zeros({1, h}));
  ad::Var state = zero_row;
  std::vector<ad::Var> rows(T, zero_row);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    if (!mask.empty() && !mask[t]) continue;
    const ad::Var xz = ad::slice(proj[0], 0, t, t + 1);
    const ad::Var xr = ad::slice(proj[1], 0, t, t + 1);
    const ad::Var xh = ad::slice(proj[2], 0, t, t + 1);
    const ad::Var z = ad::sigmoid(ad::add(xz, ad::matmul(state, U[0])));
    const ad::Var r = ad::sigmoid(ad::add(xr, ad::matmul(state, U[1])));
    const ad::Var cand = ad::tanh(ad::add(xh, ad::matmul(ad::mul(r, state), U[2])));
    // (1 - z) * h + z * cand, written as h + z * (cand - h)
    state = ad::add(state, ad::mul(z, ad::sub(cand, state)));
    rows[t] = state;
  }
  return rows;
}

ad::Var stack_rows(std::span<const ad::Var> rows) {
  if (rows.size() == 1) return rows[0];
  return ad::concat(rows, 0);
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

std::string to_string(EmbedMode mode) { return mode == EmbedMode::word_compose ? "word-compose" : "precomputed"; }

EmbedMode parse_embed_mode(const std::string& text) {
  if (text == "word-compose" || text == "word_compose") return EmbedMode::word_compose;
  if (text == "precomputed") return EmbedMode::precomputed;
  throw UsageError("unknown embedder mode '" + text + "' (expected word-compose or precomputed)");
}

void HanConfig::validate() const {
  if (hidden == 0 || d_a == 0 || mlp_hidden == 0) throw UsageError("hidden, attention and MLP widths must be positive");
  if (categories != 2 && categories != 3 && categories != 5) {
    throw UsageError("category count must be 2, 3 or 5, got " + std::to_string(categories));
  }
  if (mode == EmbedMode::word_compose && (d_w == 0 || max_words == 0)) {
    throw UsageError("word-compose mode needs positive d_w and N");
  }
  if (mode == EmbedMode::precomputed && event_dim == 0) throw UsageError("precomputed mode needs the event vector width");
}

Tensor& HanParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw InvariantError("no parameter named '" + name + "'");
  return it->second;
}

const Tensor& HanParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw InvariantError("no parameter named '" + name + "'");
  return it->second;
}

std::size_t HanParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

void HanParams::zero_grad() {
  for (auto& [name, t] : tensors) t.zero_grad();
}

std::map<std::string, Shape> expected_shapes(const HanConfig& c, std::size_t vocab_size) {
  c.validate();
  std::map<std::string, Shape> shapes;
  const std::size_t h = c.hidden;
  if (c.mode == EmbedMode::word_compose) {
    if (vocab_size == 0) throw UsageError("word-compose mode needs a non-empty vocabulary");
    shapes["embed.table"] = {vocab_size, c.d_w};
  }
  for (const auto& block : block_names(c)) {
    const std::size_t d_in = block_input_dim(c, block);
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string base = block + "." + dir + ".";
      for (const char* gate : kGates) {
        shapes[base + "W_" + gate] = {d_in, h};
        shapes[base + "U_" + gate] = {h, h};
        shapes[base + "b_" + gate] = {h};
      }
    }
    shapes[block + ".att.W_n"] = {2 * h, c.d_a};
    shapes[block + ".att.b_n"] = {c.d_a};
    shapes[block + ".att.theta"] = {c.d_a, 1};
  }
  shapes["mlp.W1"] = {2 * h, c.mlp_hidden};
  shapes["mlp.b1"] = {c.mlp_hidden};
  shapes["mlp.W2"] = {c.mlp_hidden, c.categories};
  shapes["mlp.b2"] = {c.categories};
  return shapes;
}

HanParams init_params(const HanConfig& config, std::vector<std::string> vocabulary, std::uint64_t seed) {
  HanParams p;
  p.config = config;
  if (config.mode == EmbedMode::precomputed) vocabulary.clear();
  p.vocabulary = std::move(vocabulary);
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : expected_shapes(config, p.vocabulary.size())) {
    Tensor t(shape);
    if (shape.size() == 2) {
      const double bound = name == "embed.table" ? 1.0 : 1.0 / std::sqrt(static_cast<double>(shape[0]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : t.values()) v = dist(rng);
    }
    p.tensors.emplace(name, std::move(t));
  }
  return p;
}

void load_pretrained_embeddings(HanParams& params, const EmbeddingTable& table) {
  if (params.config.mode != EmbedMode::word_compose) throw UsageError("embeddings apply to word-compose mode only");
  if (table.dim() != params.config.d_w) {
    throw DataError("embedding width " + std::to_string(table.dim()) + " does not match d_w=" +
                    std::to_string(params.config.d_w));
  }
  Tensor& emb = params.at("embed.table");
  const std::size_t d = params.config.d_w;
  for (std::size_t i = 0; i < params.vocabulary.size(); ++i) {
    const auto v = table.lookup(params.vocabulary[i]);
    std::copy(v.begin(), v.end(), emb.values().begin() + static_cast<std::ptrdiff_t>(i * d));
  }
}

void save_checkpoint(const HanParams& params, const std::string& path) {
  const HanConfig& c = params.config;
  Container box;
  box.kind = "han-checkpoint";
  box.meta["mode"] = to_string(c.mode);
  box.meta["d_w"] = std::to_string(c.d_w);
  box.meta["event_dim"] = std::to_string(c.event_dim);
  box.meta["hidden"] = std::to_string(c.hidden);
  box.meta["d_a"] = std::to_string(c.d_a);
  box.meta["mlp_hidden"] = std::to_string(c.mlp_hidden);
  box.meta["categories"] = std::to_string(c.categories);
  box.meta["max_words"] = std::to_string(c.max_words);
  std::string vocab;
  for (const auto& w : params.vocabulary) {
    if (!vocab.empty()) vocab += '\n';
    vocab += w;
  }
  box.meta["vocabulary"] = vocab;
  for (const auto& [name, t] : params.tensors) box.tensors.push_back({name, t});
  write_container(path, box);
}

HanParams load_checkpoint(const std::string& path) {
  Container box = read_container(path);
  if (box.kind != "han-checkpoint") throw DataError(path + ": container holds '" + box.kind + "', not a checkpoint");
  HanParams p;
  HanConfig& c = p.config;
  try {
    c.mode = parse_embed_mode(box.meta["mode"]);
  } catch (const UsageError& e) {
    throw DataError(path + ": " + e.what());
  }
  c.d_w = parse_size(box.meta, "d_w");
  c.event_dim = parse_size(box.meta, "event_dim");
  c.hidden = parse_size(box.meta, "hidden");
  c.d_a = parse_size(box.meta, "d_a");
  c.mlp_hidden = parse_size(box.meta, "mlp_hidden");
  c.categories = parse_size(box.meta, "categories");
  c.max_words = parse_size(box.meta, "max_words");
  const std::string& vocab = box.meta["vocabulary"];
  if (!vocab.empty()) {
    std::size_t start = 0;
    while (true) {
      const auto nl = vocab.find('\n', start);
      p.vocabulary.push_back(vocab.substr(start, nl - start));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  std::map<std::string, Shape> expected;
  try {
    expected = expected_shapes(c, p.vocabulary.size());
  } catch (const UsageError& e) {
    throw DataError(path + ": inconsistent checkpoint header: " + e.what());
  }
  for (auto& nt : box.tensors) {
    auto it = expected.find(nt.name);
    if (it == expected.end()) throw DataError(path + ": unknown tensor '" + nt.name + "'");
    if (nt.tensor.shape() != it->second) {
      throw DataError(path + ": tensor '" + nt.name + "' has shape " + shape_to_string(nt.tensor.shape()) +
                      ", expected " + shape_to_string(it->second));
    }
    if (!p.tensors.emplace(nt.name, std::move(nt.tensor)).second) {
      throw DataError(path + ": duplicate tensor '" + nt.name + "'");
    }
  }
  for (const auto& [name, shape] : expected) {
    if (!p.tensors.contains(name)) throw DataError(path + ": missing tensor '" + name + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------

std::size_t SampleInput::event_count() const {
  std::size_t n = 0;
  for (const auto& d : days) {
    if (d.pad) continue;
    for (const auto& news : d.news) {
      if (news.pad) continue;
      for (const auto& e : news.events) n += e.pad ? 0 : 1;
    }
  }
  return n;
}

std::vector<std::string> event_tokens(const EventTuple& e) {
  auto words = event_words(e);
  for (auto& w : words) w = lower(std::move(w));
  return words;
}

std::vector<std::string> build_vocabulary(const std::vector<SampleInput>& samples) {
  std::vector<std::string> vocab;
  for (const auto& s : samples) {
    for (const auto& d : s.days) {
      for (const auto& n : d.news) {
        for (const auto& e : n.events) {
          for (auto& w : split_ws(e.text)) vocab.push_back(lower(std::move(w)));
        }
      }
    }
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return vocab;
}

SampleInput encode_sample_text(const DaySample& sample, const NewsIndex& news) {
  SampleInput in;
  in.date = format_date(sample.date);
  in.asset = sample.asset;
  in.label = sample.label;
  const std::size_t K = sample.window.size();
  for (std::size_t k = 0; k < K; ++k) {
    DayInput day;
    day.date = "t-" + std::to_string(K - 1 - k);
    for (const auto& id : sample.window[k]) {
      auto it = news.find(id);
      if (it == news.end()) throw DataError("sample " + in.date + " references unknown news '" + id + "'");
      NewsInput n;
      n.news_id = id;
      for (std::size_t i = 0; i < it->second.events.size(); ++i) {
        const auto& ev = it->second.events[i];
        EventInput e;
        e.text = event_text(ev);
        e.key = {ev.news_id, ev.sentence_idx, it->second.ordinals.at(i)};
        n.events.push_back(std::move(e));
      }
      if (!n.events.empty()) day.news.push_back(std::move(n));
    }
    in.days.push_back(std::move(day));
  }
  return in;
}

void assign_tokens(std::vector<SampleInput>& samples, const HanParams& params) {
  std::unordered_map<std::string, std::int64_t> index;
  for (std::size_t i = 0; i < params.vocabulary.size(); ++i) index.emplace(params.vocabulary[i], static_cast<std::int64_t>(i));
  for (auto& s : samples) {
    for (auto& d : s.days) {
      for (auto& n : d.news) {
        for (auto& e : n.events) {
          e.tokens.clear();
          e.token_mask.clear();
          for (auto& w : split_ws(e.text)) {
            if (e.tokens.size() == params.config.max_words) break;
            auto it = index.find(lower(std::move(w)));
            e.tokens.push_back(it == index.end() ? -1 : it->second);
          }
        }
      }
    }
  }
}

void assign_vectors(std::vector<SampleInput>& samples, const HanParams& params, const EventVectorStore& vectors) {
  if (vectors.dim() != params.config.event_dim) {
    throw DataError("event vectors have width " + std::to_string(vectors.dim()) + ", model expects " +
                    std::to_string(params.config.event_dim));
  }
  for (auto& s : samples) {
    for (auto& d : s.days) {
      for (auto& n : d.news) {
        for (auto& e : n.events) {
          const auto* v = vectors.find(e.key);
          if (v == nullptr) throw DataError("no event vector for " + to_string(e.key));
          e.vector = *v;
        }
      }
    }
  }
}

SampleInput encode_sample(const DaySample& sample, const NewsIndex& news, const HanParams& params,
                          const EventVectorStore* vectors) {
  std::vector<SampleInput> one{encode_sample_text(sample, news)};
  if (params.config.mode == EmbedMode::word_compose) {
    assign_tokens(one, params);
  } else {
    if (vectors == nullptr) throw UsageError("precomputed mode needs an event vector store");
    assign_vectors(one, params, *vectors);
  }
  return std::move(one.front());
}

// ---------------------------------------------------------------------------

ad::Var bigru(ad::Graph& g, HanParams& params, const std::string& prefix, ad::Var x,
              std::span<const std::uint8_t> mask) {
  const Tensor& xv = g.value(x);
  if (xv.rank() != 2 || xv.dim(0) == 0) throw ShapeError("bigru expects a non-empty [T, d] sequence");
  if (!mask.empty() && mask.size() != xv.dim(0)) throw ShapeError("bigru mask length differs from sequence length");
  const auto fwd = gru_direction(g, params, prefix + ".fwd", x, mask, false);
  const auto bwd = gru_direction(g, params, prefix + ".bwd", x, mask, true);
  return ad::concat(stack_rows(fwd), stack_rows(bwd), 1);
}

Pooled attention_pool(ad::Graph& g, HanParams& params, const std::string& prefix, ad::Var states,
                      std::span<const std::uint8_t> mask) {
  const std::size_t T = g.value(states).dim(0);
  const std::vector<std::uint8_t> all(T, 1);
  if (mask.empty()) mask = all;
  const ad::Var u = ad::sigmoid(ad::add_bias(ad::matmul(states, g.param(params.at(prefix + ".att.W_n"))),
                                             g.param(params.at(prefix + ".att.b_n"))));
  const ad::Var scores = ad::reshape(ad::matmul(u, g.param(params.at(prefix + ".att.theta"))), {T});
  const ad::Var beta = ad::masked_softmax(scores, mask);
  const ad::Var pooled = ad::matmul(ad::reshape(beta, {1, T}), states);
  return {pooled, beta};
}

ad::Var embed_event(ad::Graph& g, HanParams& params, const EventInput& event, std::vector<double>* word_weights) {
  const HanConfig& c = params.config;
  if (c.mode == EmbedMode::precomputed) {
    if (event.vector.size() != c.event_dim) {
      throw ShapeError("event vector of width " + std::to_string(event.vector.size()) + ", expected " +
                       std::to_string(c.event_dim));
    }
    return g.constant(Tensor({1, c.event_dim}, event.vector));
  }
  if (event.tokens.empty()) throw DataError("event '" + event.text + "' has no tokens");
  const ad::Var words = ad::gather_rows(g.param(params.at("embed.table")), event.tokens);
  const ad::Var states = bigru(g, params, "word", words, event.token_mask);
  const Pooled pooled = attention_pool(g, params, "word", states, event.token_mask);
  if (word_weights) *word_weights = values_of(g, pooled.weights);
  return pooled.vector;
}

ad::Var forward(ad::Graph& g, HanParams& params, const SampleInput& sample, AttentionTrace* trace) {
  const std::size_t h2 = 2 * params.config.hidden;
  const std::size_t K = sample.days.size();
  if (K == 0) throw DataError("sample " + sample.date + " has no days");
  if (trace) {
    *trace = AttentionTrace{};
    trace->day.assign(K, 0.0);
    trace->news.resize(K);
    trace->event.resize(K);
    trace->word.resize(K);
  }
  const ad::Var zero_h2 = g.constant(Tensor::zeros({1, h2}));
  std::vector<ad::Var> day_rows;
  std::vector<std::uint8_t> day_mask;
  for (std::size_t k = 0; k < K; ++k) {
    const DayInput& day = sample.days[k];
    std::vector<ad::Var> news_rows;
    std::vector<std::uint8_t> news_mask;
    if (trace) {
      trace->event[k].resize(day.news.size());
      trace->word[k].resize(day.news.size());
    }
    for (std::size_t j = 0; j < day.news.size() && !day.pad; ++j) {
      const NewsInput& news = day.news[j];
      bool live = !news.pad;
      std::vector<ad::Var> event_rows;
      std::vector<std::uint8_t> event_mask;
      if (live) {
        const ad::Var zero_e = g.constant(Tensor::zeros({1, params.config.event_input_dim()}));
        if (trace) trace->word[k][j].resize(news.events.size());
        for (std::size_t i = 0; i < news.events.size(); ++i) {
          const EventInput& e = news.events[i];
          if (e.pad) {
            event_rows.push_back(zero_e);
            event_mask.push_back(0);
            continue;
          }
          event_rows.push_back(embed_event(g, params, e, trace ? &trace->word[k][j][i] : nullptr));
          event_mask.push_back(1);
        }
        live = std::find(event_mask.begin(), event_mask.end(), 1) != event_mask.end();
      }
      if (!live) {
        news_rows.push_back(zero_h2);
        news_mask.push_back(0);
        if (trace) trace->event[k][j].assign(news.events.size(), 0.0);
        continue;
      }
      const ad::Var events = stack_rows(event_rows);
      const Pooled pooled = attention_pool(g, params, "event", bigru(g, params, "event", events, event_mask), event_mask);
      if (trace) trace->event[k][j] = values_of(g, pooled.weights);
      news_rows.push_back(pooled.vector);
      news_mask.push_back(1);
    }
    const bool day_live = std::find(news_mask.begin(), news_mask.end(), 1) != news_mask.end();
    if (!day_live) {
      day_rows.push_back(zero_h2);
      day_mask.push_back(0);
      if (trace) trace->news[k].assign(day.news.size(), 0.0);
      continue;
    }
    const ad::Var news_seq = stack_rows(news_rows);
    const Pooled pooled = attention_pool(g, params, "news", bigru(g, params, "news", news_seq, news_mask), news_mask);
    if (trace) trace->news[k] = values_of(g, pooled.weights);
    day_rows.push_back(pooled.vector);
    day_mask.push_back(1);
  }
  if (std::find(day_mask.begin(), day_mask.end(), 1) == day_mask.end()) {
    throw DataError("sample " + sample.date + " has no events");
  }
  const ad::Var days = stack_rows(day_rows);
  const Pooled window = attention_pool(g, params, "day", bigru(g, params, "day", days, day_mask), day_mask);
  if (trace) trace->day = values_of(g, window.weights);

  const ad::Var hidden = ad::tanh(
      ad::add_bias(ad::matmul(window.vector, g.param(params.at("mlp.W1"))), g.param(params.at("mlp.b1"))));
  const ad::Var logits = ad::add_bias(ad::matmul(hidden, g.param(params.at("mlp.W2"))), g.param(params.at("mlp.b2")));
  return ad::reshape(logits, {params.config.categories});
}

Prediction predict(const HanParams& params, const SampleInput& sample) {
  ad::Graph g;
  Prediction out;
  // The graph only reads parameters; backward() is never called on it.
  const ad::Var logits = forward(g, const_cast<HanParams&>(params), sample, &out.trace);
  out.logits = values_of(g, logits);
  const double mx = *std::max_element(out.logits.begin(), out.logits.end());
  double total = 0.0;
  for (double l : out.logits) {
    out.probabilities.push_back(std::exp(l - mx));
    total += out.probabilities.back();
  }
  for (auto& p : out.probabilities) p /= total;
  out.category = argmax(out.logits);
  return out;
}

Explanation explain(const HanParams& params, const SampleInput& sample, std::size_t top_k, bool per_day) {
  Explanation ex;
  ex.prediction = predict(params, sample);
  const AttentionTrace& tr = ex.prediction.trace;
  for (std::size_t k = 0; k < sample.days.size(); ++k) {
    const DayInput& day = sample.days[k];
    for (std::size_t j = 0; j < day.news.size(); ++j) {
      const NewsInput& news = day.news[j];
      for (std::size_t i = 0; i < news.events.size(); ++i) {
        if (news.events[i].pad || news.pad || day.pad) continue;
        ExplainedEvent e;
        e.day = k;
        e.date = day.date;
        e.news_id = news.news_id;
        e.text = news.events[i].text;
        e.beta_day = tr.day[k];
        e.beta_news = tr.news[k][j];
        e.beta_event = tr.event[k][j][i];
        e.score = e.beta_event * e.beta_news * e.beta_day;
        ex.events.push_back(std::move(e));
      }
    }
  }
  std::stable_sort(ex.events.begin(), ex.events.end(),
                   [](const ExplainedEvent& a, const ExplainedEvent& b) { return a.score > b.score; });
  if (!per_day) {
    if (ex.events.size() > top_k) ex.events.resize(top_k);
    return ex;
  }
  std::vector<std::size_t> kept(sample.days.size(), 0);
  std::vector<ExplainedEvent> out;
  for (auto& e : ex.events) {
    if (kept[e.day]++ < top_k) out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const ExplainedEvent& a, const ExplainedEvent& b) { return a.day < b.day; });
  ex.events = std::move(out);
  return ex;
}

}  // namespace evhan
