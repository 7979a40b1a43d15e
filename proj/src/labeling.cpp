#include "evhan/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

bool date_less(Date a, Date b) { return to_days(a) < to_days(b); }

}  // namespace

std::optional<double> ReturnSeries::on(Date d) const {
  auto it = std::lower_bound(points.begin(), points.end(), d,
                             [](const ReturnPoint& p, Date x) { return date_less(p.date, x); });
  if (it == points.end() || it->date != d) return std::nullopt;
  return it->r;
}

ReturnSeries compute_returns(const PriceSeries& series) {
  if (series.points.size() < 2) {
    throw DataError("price series '" + series.asset + "' needs at least 2 rows to compute returns");
  }
  ReturnSeries out;
  out.asset = series.asset;
  out.points.reserve(series.points.size() - 1);
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    const double prev = series.points[i - 1].open;
    out.points.push_back({series.points[i].date, (series.points[i].open - prev) / prev});
  }
  return out;
}

std::vector<std::string> category_names(int categories) {
  switch (categories) {
    case 2: return {"DOWN", "UP"};
    case 3: return {"DOWN", "PRESERVE", "UP"};
    case 5: return {"DOWN-", "DOWN", "PRESERVE", "UP", "UP+"};
    default: throw UsageError("category count must be 2, 3 or 5, got " + std::to_string(categories));
  }
}

int category_index(std::string_view name, int categories) {
  const auto names = category_names(categories);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw DataError("unknown category '" + std::string(name) + "' for C=" + std::to_string(categories));
}

LabelScheme LabelScheme::binary() {
  LabelScheme s;
  s.categories = 2;
  s.names = category_names(2);
  return s;
}

LabelScheme LabelScheme::with_thresholds(int categories, std::vector<double> thresholds) {
  if (categories != 3 && categories != 5) {
    throw UsageError("thresholded schemes need C in {3, 5}, got " + std::to_string(categories));
  }
  if (thresholds.size() != static_cast<std::size_t>(categories - 1)) {
    throw UsageError("C=" + std::to_string(categories) + " needs " + std::to_string(categories - 1) + " thresholds");
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i - 1] < thresholds[i])) throw UsageError("thresholds must be strictly increasing");
  }
  LabelScheme s;
  s.categories = categories;
  s.thresholds = std::move(thresholds);
  s.names = category_names(categories);
  return s;
}

LabelScheme fit_thresholds(std::span<const double> train_returns, int categories) {
  if (categories != 3 && categories != 5) {
    throw UsageError("fit_thresholds needs C in {3, 5}, got " + std::to_string(categories));
  }
  const std::size_t n = train_returns.size();
  if (n < static_cast<std::size_t>(categories)) {
    throw DataError("need at least " + std::to_string(categories) + " training returns, got " + std::to_string(n));
  }
  std::vector<double> x(train_returns.begin(), train_returns.end());
  std::sort(x.begin(), x.end());
  std::vector<double> th;
  for (int k = 1; k < categories; ++k) {
    const std::size_t j = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(categories);
    th.push_back(0.5 * (x[j - 1] + x[j]));
  }
  for (std::size_t i = 1; i < th.size(); ++i) {
    if (!(th[i - 1] < th[i])) throw DataError("training returns too tied to separate categories");
  }
  return LabelScheme::with_thresholds(categories, std::move(th));
}

int assign_label(double r, const LabelScheme& scheme) {
  if (scheme.categories == 2) return r > 0.0 ? 1 : 0;
  int idx = 0;
  for (double t : scheme.thresholds) idx += t < r ? 1 : 0;
  return idx;
}

Alignment align_news(std::vector<NewsRef> news, std::span<const Date> market_dates) {
  Alignment out;
  std::sort(news.begin(), news.end(), [](const NewsRef& a, const NewsRef& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  for (auto& n : news) {
    const auto next = to_days(n.date) + std::chrono::days{1};
    auto it = std::lower_bound(market_dates.begin(), market_dates.end(), next,
                               [](Date m, std::chrono::sys_days x) { return to_days(m) < x; });
    if (it == market_dates.end()) {
      ++out.dropped;
      continue;
    }
    out.buckets[*it].push_back(std::move(n));
  }
  return out;
}

double movement_agreement(const ReturnSeries& a, const ReturnSeries& b) {
  std::size_t common = 0, same = 0;
  for (const auto& p : a.points) {
    const auto q = b.on(p.date);
    if (!q) continue;
    ++common;
    same += (p.r > 0.0) == (*q > 0.0) ? 1 : 0;
  }
  if (common == 0) throw DataError("series '" + a.asset + "' and '" + b.asset + "' share no dates");
  return static_cast<double>(same) / static_cast<double>(common);
}

// ---------------------------------------------------------------------------

void validate_splits(const std::vector<SplitRange>& splits) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& s = splits[i];
    if (s.name.empty()) throw UsageError("split with empty name");
    if (!names.insert(s.name).second) throw UsageError("duplicate split '" + s.name + "'");
    if (date_less(s.last, s.first)) throw UsageError("split '" + s.name + "' ends before it starts");
    if (i > 0 && !date_less(splits[i - 1].last, s.first)) {
      throw UsageError("split '" + s.name + "' overlaps or precedes '" + splits[i - 1].name + "'");
    }
  }
}

std::vector<SplitRange> parse_splits(std::string_view text) {
  std::vector<SplitRange> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto colon = item.find(':');
    const auto dots = item.find("..");
    if (colon == std::string_view::npos || dots == std::string_view::npos || dots < colon) {
      throw UsageError("bad split '" + std::string(item) + "', expected name:YYYY-MM-DD..YYYY-MM-DD");
    }
    const auto first = parse_date(item.substr(colon + 1, dots - colon - 1));
    const auto last = parse_date(item.substr(dots + 2));
    if (!first || !last) throw UsageError("bad date in split '" + std::string(item) + "'");
    out.push_back({std::string(item.substr(0, colon)), *first, *last});
  }
  validate_splits(out);
  return out;
}

NewsIndex index_events(const std::vector<EventTuple>& events) {
  NewsIndex index;
  std::map<std::pair<std::string, int>, int> next_ordinal;
  for (const auto& e : events) {
    auto& n = index[e.news_id];
    if (n.events.empty()) {
      n.timestamp = e.timestamp;
    } else if (n.timestamp != e.timestamp) {
      throw DataError("news '" + e.news_id + "' has events with different timestamps");
    }
    n.events.push_back(e);
    n.ordinals.push_back(next_ordinal[{e.news_id, e.sentence_idx}]++);
  }
  for (auto& [id, n] : index) {
    std::vector<std::size_t> order(n.events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&n](std::size_t a, std::size_t b) {
      const auto& ea = n.events[a];
      const auto& eb = n.events[b];
      return ea.sentence_idx != eb.sentence_idx ? ea.sentence_idx < eb.sentence_idx : n.ordinals[a] < n.ordinals[b];
    });
    NewsEvents sorted;
    sorted.timestamp = n.timestamp;
    for (auto i : order) {
      sorted.events.push_back(std::move(n.events[i]));
      sorted.ordinals.push_back(n.ordinals[i]);
    }
    n = std::move(sorted);
  }
  return index;
}

std::map<std::string, std::vector<std::size_t>> SampleSet::class_counts() const {
  std::map<std::string, std::vector<std::size_t>> counts;
  for (const auto& s : samples) {
    auto& c = counts[s.split];
    c.resize(static_cast<std::size_t>(scheme.categories), 0);
    ++c[static_cast<std::size_t>(s.label)];
  }
  return counts;
}

SampleSet build_samples(const std::vector<EventTuple>& events, const PriceSeries& prices, const SampleOptions& opt,
                        const std::vector<SplitRange>& splits) {
  if (opt.k == 0 || opt.l == 0 || opt.m == 0) throw UsageError("K, L and M must be positive");
  category_names(opt.categories);
  validate_splits(splits);

  SampleSet set;
  set.news = index_events(events);
  for (auto& [id, n] : set.news) {
    if (n.events.size() > opt.m) {
      set.dropped_events += n.events.size() - opt.m;
      n.events.resize(opt.m);
      n.ordinals.resize(opt.m);
    }
  }

  std::vector<NewsRef> refs;
  for (const auto& [id, n] : set.news) {
    const auto d = timestamp_date(n.timestamp);
    if (!d) throw DataError("news '" + id + "' has an invalid timestamp '" + n.timestamp + "'");
    refs.push_back({id, n.timestamp, *d});
  }

  std::vector<Date> market;
  for (const auto& p : prices.points) market.push_back(p.date);
  Alignment aligned = align_news(std::move(refs), market);
  set.dropped_news = aligned.dropped;
  for (auto& [day, bucket] : aligned.buckets) {
    if (bucket.size() > opt.l) {
      set.dropped_news += bucket.size() - opt.l;
      bucket.resize(opt.l);
    }
  }
  // Keep only news that made it into a bucket.
  std::set<std::string> kept;
  for (const auto& [day, bucket] : aligned.buckets) {
    for (const auto& n : bucket) kept.insert(n.id);
  }
  for (auto it = set.news.begin(); it != set.news.end();) {
    it = kept.contains(it->first) ? std::next(it) : set.news.erase(it);
  }

  const ReturnSeries returns = compute_returns(prices);
  auto split_of = [&splits](Date d) -> std::optional<std::string> {
    if (splits.empty()) return std::string("train");
    for (const auto& s : splits) {
      if (!date_less(d, s.first) && !date_less(s.last, d)) return s.name;
    }
    return std::nullopt;
  };

  // Market index i >= 1 has a return; its window is buckets i-K+1..i.
  for (std::size_t i = 1; i < market.size(); ++i) {
    DaySample s;
    s.date = market[i];
    s.asset = prices.asset;
    s.r = returns.points[i - 1].r;
    std::size_t n_news = 0;
    for (std::size_t j = 0; j < opt.k; ++j) {
      std::vector<std::string> ids;
      if (i + j + 1 >= opt.k) {
        const std::size_t idx = i + j + 1 - opt.k;
        if (auto b = aligned.buckets.find(market[idx]); b != aligned.buckets.end()) {
          for (const auto& n : b->second) ids.push_back(n.id);
        }
      }
      n_news += ids.size();
      s.window.push_back(std::move(ids));
    }
    if (n_news == 0) continue;
    auto split = split_of(s.date);
    if (!split) continue;
    s.split = *split;
    set.samples.push_back(std::move(s));
  }

  if (opt.categories == 2) {
    set.scheme = LabelScheme::binary();
  } else {
    const std::string train_name = splits.empty() ? "train" : splits.front().name;
    std::vector<double> train_r;
    for (const auto& s : set.samples) {
      if (s.split == train_name) train_r.push_back(s.r);
    }
    set.scheme = fit_thresholds(train_r, opt.categories);
  }
  for (auto& s : set.samples) s.label = assign_label(s.r, set.scheme);
  return set;
}

void write_manifest(std::ostream& out, const std::vector<DaySample>& samples, const LabelScheme& scheme) {
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["date"] = format_date(s.date);
    j["asset"] = s.asset;
    j["label"] = scheme.names.at(static_cast<std::size_t>(s.label));
    j["window"] = s.window;
    j["split"] = s.split;
    out << j.dump() << '\n';
  }
}

void write_manifest(const std::string& path, const std::vector<DaySample>& samples, const LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open manifest for writing: " + path);
  write_manifest(out, samples, scheme);
  if (!out) throw DataError("failed writing manifest: " + path);
}

std::vector<DaySample> read_manifest(std::istream& in, int categories) {
  std::vector<DaySample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DaySample s;
      const auto d = parse_date(j.at("date").get<std::string>());
      if (!d) throw DataError("bad date");
      s.date = *d;
      s.asset = j.at("asset").get<std::string>();
      s.label = category_index(j.at("label").get<std::string>(), categories);
      s.window = j.at("window").get<std::vector<std::vector<std::string>>>();
      s.split = j.value("split", std::string("train"));
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DaySample> read_manifest(const std::string& path, int categories) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + path);
  return read_manifest(in, categories);
}

std::string scheme_to_json(const LabelScheme& scheme) {
  nlohmann::ordered_json j;
  j["categories"] = scheme.categories;
  j["names"] = scheme.names;
  j["thresholds"] = scheme.thresholds;
  return j.dump();
}

}  // namespace evhan
