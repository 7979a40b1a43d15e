#pragma once

// Random model inputs shared by the HAN, training and acceptance tests.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "evhan/han.hpp"

namespace evhan::testing {

inline HanConfig tiny_config(std::size_t width, std::size_t categories, EmbedMode mode = EmbedMode::word_compose) {
  HanConfig c;
  c.mode = mode;
  c.d_w = c.hidden = c.d_a = c.mlp_hidden = width;
  c.event_dim = mode == EmbedMode::precomputed ? width : 0;
  c.categories = categories;
  c.max_words = 4;
  return c;
}

inline std::vector<std::string> numbered_vocabulary(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("w" + std::to_string(i));
  return v;
}

struct SampleShape {
  std::size_t days = 2;
  std::size_t news = 2;
  std::size_t events = 3;
  std::size_t words = 4;
};

/// Every level filled to the given counts; tokens drawn from the vocabulary
/// (with the odd OOV) or vectors drawn uniformly, depending on the mode.
inline SampleInput random_sample(const HanParams& params, const SampleShape& shape, std::mt19937_64& rng) {
  const HanConfig& c = params.config;
  std::uniform_int_distribution<std::int64_t> tok(-1, static_cast<std::int64_t>(params.vocabulary.size()) - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  SampleInput s;
  s.date = "2020-01-02";
  s.asset = "TEST";
  s.label = static_cast<int>(rng() % c.categories);
  for (std::size_t k = 0; k < shape.days; ++k) {
    DayInput day;
    day.date = "t-" + std::to_string(shape.days - 1 - k);
    for (std::size_t j = 0; j < shape.news; ++j) {
      NewsInput news;
      news.news_id = "n" + std::to_string(k) + "_" + std::to_string(j);
      for (std::size_t i = 0; i < shape.events; ++i) {
        EventInput e;
        e.text = news.news_id + "#" + std::to_string(i);
        e.key = {news.news_id, static_cast<int>(i), 0};
        if (c.mode == EmbedMode::word_compose) {
          for (std::size_t w = 0; w < shape.words; ++w) e.tokens.push_back(tok(rng));
        } else {
          for (std::size_t d = 0; d < c.event_dim; ++d) e.vector.push_back(val(rng));
        }
        news.events.push_back(std::move(e));
      }
      day.news.push_back(std::move(news));
    }
    s.days.push_back(std::move(day));
  }
  return s;
}

/// Gives biases (zero at initialisation) random values so that gradient
/// checks exercise every term.
inline void randomize_biases(HanParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(-0.5, 0.5);
  for (auto& [name, t] : params.tensors) {
    if (t.rank() == 1) {
      for (auto& v : t.values()) v = val(rng);
    }
  }
}

}  // namespace evhan::testing
