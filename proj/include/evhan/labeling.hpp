#pragma once

// Returns, movement categories and K-day windowed samples.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evhan/corpus_io.hpp"
#include "evhan/date.hpp"
#include "evhan/events.hpp"

namespace evhan {

struct ReturnPoint {
  Date date;
  double r = 0.0;
};

struct ReturnSeries {
  std::string asset;
  std::vector<ReturnPoint> points;

  std::optional<double> on(Date d) const;
};

/// r(t) = (open(t) - open(t-1)) / open(t-1), t-1 being the previous row.
ReturnSeries compute_returns(const PriceSeries& series);

struct LabelScheme {
  int categories = 2;
  std::vector<double> thresholds;  // empty for C=2, which labels by sign
  std::vector<std::string> names;

  static LabelScheme binary();
  /// Throws UsageError unless thresholds has C-1 strictly increasing values.
  static LabelScheme with_thresholds(int categories, std::vector<double> thresholds);
};

/// Category names in ascending order of return.
std::vector<std::string> category_names(int categories);
/// Index of a category name for a C-category scheme; throws DataError if absent.
int category_index(std::string_view name, int categories);

/// Balanced thresholds: for sorted training returns x and n = |x|, threshold
/// k is the midpoint of x[j-1] and x[j] with j = floor(k n / C).
LabelScheme fit_thresholds(std::span<const double> train_returns, int categories);

/// C=2: UP iff r > 0. Otherwise the number of thresholds strictly below r.
int assign_label(double r, const LabelScheme& scheme);

struct NewsRef {
  std::string id;
  std::string timestamp;
  Date date;
};

struct Alignment {
  std::map<Date, std::vector<NewsRef>> buckets;  // per market date, ordered by timestamp then id
  std::size_t dropped = 0;                       // news dated on or after the last market date
};

/// News dated d is assigned to the first market date >= d + 1.
Alignment align_news(std::vector<NewsRef> news, std::span<const Date> market_dates);

/// Fraction of common dates on which both series move the same way
/// (zero counts as DOWN).
double movement_agreement(const ReturnSeries& a, const ReturnSeries& b);

// ---------------------------------------------------------------------------

struct SplitRange {
  std::string name;
  Date first;
  Date last;  // inclusive
};

/// Parses "train:2006-10-20..2012-06-18,val:...,test:..." and checks that the
/// ranges are well formed, ordered and disjoint.
std::vector<SplitRange> parse_splits(std::string_view text);
void validate_splits(const std::vector<SplitRange>& splits);

struct DaySample {
  Date date;
  std::string asset;
  int label = 0;
  double r = 0.0;
  std::string split;
  std::vector<std::vector<std::string>> window;  // K buckets of news ids, oldest first
};

/// Events grouped per news item, each list in (sentence, extraction) order.
struct NewsEvents {
  std::string timestamp;
  std::vector<EventTuple> events;
  std::vector<int> ordinals;  // ordinal of each event within its sentence
};
using NewsIndex = std::map<std::string, NewsEvents>;

NewsIndex index_events(const std::vector<EventTuple>& events);

struct SampleOptions {
  int categories = 2;
  std::size_t k = 10;
  std::size_t l = 500;
  std::size_t m = 100;
};

struct SampleSet {
  LabelScheme scheme;
  std::vector<DaySample> samples;  // ordered by date
  NewsIndex news;                  // events truncated to M per news
  std::size_t dropped_news = 0;
  std::size_t dropped_events = 0;

  std::map<std::string, std::vector<std::size_t>> class_counts() const;
};

/// Windows of K market-date buckets ending at each target date with at least
/// one news item. Thresholds come from the training split's returns. Samples
/// whose date lies outside every split are dropped; with no splits everything
/// goes to "train".
SampleSet build_samples(const std::vector<EventTuple>& events, const PriceSeries& prices,
                        const SampleOptions& options, const std::vector<SplitRange>& splits);

// Manifest: one JSON line per sample {"date","asset","label","window","split"}.
void write_manifest(std::ostream& out, const std::vector<DaySample>& samples, const LabelScheme& scheme);
void write_manifest(const std::string& path, const std::vector<DaySample>& samples, const LabelScheme& scheme);
std::vector<DaySample> read_manifest(std::istream& in, int categories);
std::vector<DaySample> read_manifest(const std::string& path, int categories);

std::string scheme_to_json(const LabelScheme& scheme);

}  // namespace evhan
