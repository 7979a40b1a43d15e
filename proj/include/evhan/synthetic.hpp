#pragma once

// Planted-signal corpus: windows of random events in which a class marker
// token appears in exactly one event with a known probability.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evhan/han.hpp"

namespace evhan {

struct SyntheticSpec {
  std::size_t n_train = 2000;
  std::size_t n_val = 400;
  std::size_t n_test = 400;
  std::size_t categories = 5;
  double strength = 0.9;       // probability that a window carries its marker
  std::size_t noise_words = 200;
  std::size_t days = 3;
  std::size_t news_per_day = 2;
  std::size_t events_per_news = 3;
  std::size_t words_per_event = 4;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticData {
  std::vector<SampleInput> train;
  std::vector<SampleInput> val;
  std::vector<SampleInput> test;
  std::vector<std::string> vocabulary;  // noise words and markers, sorted
  std::vector<bool> test_has_marker;
  double bayes_accuracy = 0.0;
};

/// strength + (1 - strength) / C: marked windows are decidable, the rest
/// carry a uniformly drawn label.
double synthetic_bayes_accuracy(double strength, std::size_t categories);

std::string marker_token(std::size_t category);

/// Samples carry event texts only; call assign_tokens once parameters exist.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Returns a copy whose labels are permuted by a seeded shuffle.
std::vector<SampleInput> shuffle_labels(std::vector<SampleInput> samples, std::uint64_t seed);

}  // namespace evhan
