#include "evhan/synthetic.hpp"

#include <algorithm>
#include <random>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

SampleInput make_sample(const SyntheticSpec& spec, std::mt19937_64& rng, const std::string& id, bool& has_marker) {
  std::bernoulli_distribution marked(spec.strength);
  has_marker = marked(rng);
  const std::size_t label = uniform_index(rng, spec.categories);
  const std::size_t per_window = spec.days * spec.news_per_day * spec.events_per_news;
  const std::size_t marker_slot = uniform_index(rng, per_window);
  const std::size_t marker_word = uniform_index(rng, spec.words_per_event);

  SampleInput s;
  s.date = id;
  s.asset = "SYN";
  s.label = static_cast<int>(label);
  std::size_t slot = 0;
  for (std::size_t k = 0; k < spec.days; ++k) {
    DayInput day;
    day.date = "t-" + std::to_string(spec.days - 1 - k);
    for (std::size_t j = 0; j < spec.news_per_day; ++j) {
      NewsInput news;
      news.news_id = id + "-" + std::to_string(k) + "-" + std::to_string(j);
      for (std::size_t i = 0; i < spec.events_per_news; ++i, ++slot) {
        EventInput e;
        for (std::size_t w = 0; w < spec.words_per_event; ++w) {
          if (!e.text.empty()) e.text += ' ';
          if (has_marker && slot == marker_slot && w == marker_word) {
            e.text += marker_token(label);
          } else {
            e.text += "w" + std::to_string(uniform_index(rng, spec.noise_words));
          }
        }
        e.key = {news.news_id, static_cast<int>(i), 0};
        news.events.push_back(std::move(e));
      }
      day.news.push_back(std::move(news));
    }
    s.days.push_back(std::move(day));
  }
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (categories != 2 && categories != 3 && categories != 5) {
    throw UsageError("category count must be 2, 3 or 5, got " + std::to_string(categories));
  }
  if (!(strength >= 0.0 && strength <= 1.0)) throw UsageError("signal strength must lie in [0, 1]");
  if (noise_words == 0 || days == 0 || news_per_day == 0 || events_per_news == 0 || words_per_event == 0) {
    throw UsageError("synthetic window sizes must be positive");
  }
}

double synthetic_bayes_accuracy(double strength, std::size_t categories) {
  return strength + (1.0 - strength) / static_cast<double>(categories);
}

std::string marker_token(std::size_t category) { return "marker" + std::to_string(category); }

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticData data;
  data.bayes_accuracy = synthetic_bayes_accuracy(spec.strength, spec.categories);
  std::size_t counter = 0;
  auto fill = [&](std::vector<SampleInput>& out, std::size_t n, std::vector<bool>* markers) {
    for (std::size_t i = 0; i < n; ++i) {
      bool has_marker = false;
      out.push_back(make_sample(spec, rng, "syn" + std::to_string(counter++), has_marker));
      if (markers) markers->push_back(has_marker);
    }
  };
  fill(data.train, spec.n_train, nullptr);
  fill(data.val, spec.n_val, nullptr);
  fill(data.test, spec.n_test, &data.test_has_marker);
  for (std::size_t w = 0; w < spec.noise_words; ++w) data.vocabulary.push_back("w" + std::to_string(w));
  for (std::size_t c = 0; c < spec.categories; ++c) data.vocabulary.push_back(marker_token(c));
  std::sort(data.vocabulary.begin(), data.vocabulary.end());
  return data;
}

std::vector<SampleInput> shuffle_labels(std::vector<SampleInput> samples, std::uint64_t seed) {
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].label = labels[i];
  return samples;
}

}  // namespace evhan
