#include "evhan/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string& need_input(const std::string& path, const char* key) {
  if (path.empty()) throw UsageError(std::string("missing input path ") + key);
  if (!fs::exists(path)) throw DataError(std::string(key) + " not found: " + path);
  return path;
}

const std::string& need_output(const std::string& path, const char* key) {
  if (path.empty()) throw UsageError(std::string("missing output path ") + key);
  return path;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

void emit(const Logger& log, const std::string& line) {
  if (log) log(line);
}

void truncate_events(NewsIndex& news, std::size_t m) {
  for (auto& [id, n] : news) {
    if (n.events.size() > m) {
      n.events.resize(m);
      n.ordinals.resize(m);
    }
  }
}

bool is_val_split(const std::string& name) { return name == "val" || name == "validation"; }

// Samples of the manifest and the events they reference, as text inputs.
struct ManifestInputs {
  std::vector<DaySample> samples;
  std::vector<SampleInput> inputs;
};

ManifestInputs load_manifest_inputs(const RunConfig& c, int categories) {
  ManifestInputs out;
  out.samples = read_manifest(need_input(c.paths.manifest, "paths.manifest"), categories);
  NewsIndex news = index_events(read_events_jsonl(need_input(c.paths.events, "paths.events")));
  truncate_events(news, c.label.m);
  out.inputs.reserve(out.samples.size());
  for (const auto& s : out.samples) out.inputs.push_back(encode_sample_text(s, news));
  return out;
}

void attach_features(std::vector<SampleInput>& inputs, const HanParams& params, const EventVectorStore* store) {
  if (params.config.mode == EmbedMode::word_compose) {
    assign_tokens(inputs, params);
  } else {
    assign_vectors(inputs, params, *store);
  }
}

std::vector<SampleInput> select_split(const ManifestInputs& m, const std::string& split) {
  std::vector<SampleInput> out;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto& name = m.samples[i].split;
    const bool hit = split == "all" || name == split || (is_val_split(split) && is_val_split(name));
    if (hit) out.push_back(m.inputs[i]);
  }
  return out;
}

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

// Quotes a CSV field when it holds a separator, quote or line break.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", s);
  return buf;
}

}  // namespace

std::string run_extract(const RunConfig& c, const Logger& log) {
  const auto& in_path = need_input(c.paths.news, "paths.news");
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw DataError("cannot read " + in_path);
  auto out = open_output(need_output(c.paths.events, "paths.events"));
  const auto stats = text::extract_corpus(in, out, c.extract, c.extract_splits);
  out.close();
  if (!out) throw DataError("write failed: " + c.paths.events);
  for (const auto& w : stats.warnings) emit(log, "warning: " + w);
  const std::string report = text::stats_to_json(stats);
  if (!c.paths.stats.empty()) write_text(c.paths.stats, report + "\n");
  return report;
}

std::string run_label(const RunConfig& c, const Logger& log) {
  const PriceSeries prices = load_prices(need_input(c.paths.prices, "paths.prices"));
  const auto events = read_events_jsonl(need_input(c.paths.events, "paths.events"));
  const auto& manifest = need_output(c.paths.manifest, "paths.manifest");
  const SampleSet set = build_samples(events, prices, c.label, c.splits);
  write_manifest(manifest, set.samples, set.scheme);
  if (set.dropped_news > 0) {
    emit(log, "dropped " + std::to_string(set.dropped_news) + " news items dated after the last market date");
  }
  json counts = json::object();
  for (const auto& [split, per_class] : set.class_counts()) {
    json row = json::object();
    for (std::size_t k = 0; k < per_class.size(); ++k) row[set.scheme.names[k]] = per_class[k];
    counts[split] = row;
  }
  json report = {
      {"asset", prices.asset},
      {"samples", set.samples.size()},
      {"scheme", json::parse(scheme_to_json(set.scheme))},
      {"class_counts", counts},
      {"dropped_news", set.dropped_news},
      {"dropped_events", set.dropped_events},
  };
  return report.dump(2);
}

std::string run_train(const RunConfig& c, const Logger& log) {
  ManifestInputs m = load_manifest_inputs(c, c.model.categories);
  const auto& ckpt_path = need_output(c.paths.checkpoint, "paths.checkpoint");
  std::vector<SampleInput> train_set = select_split(m, "train");
  std::vector<SampleInput> val_set = select_split(m, "val");
  std::vector<SampleInput> test_set = select_split(m, "test");
  if (train_set.empty()) throw DataError("manifest has no samples in split 'train': " + c.paths.manifest);
  if (val_set.empty()) throw DataError("manifest has no samples in split 'val': " + c.paths.manifest);

  HanConfig model = c.model;
  std::optional<EventVectorStore> store;
  std::vector<std::string> vocabulary;
  if (model.mode == EmbedMode::precomputed) {
    store = EventVectorStore::load(need_input(c.paths.vectors, "paths.vectors"));
    if (model.event_dim == 0) model.event_dim = store->dim();
  } else {
    vocabulary = build_vocabulary(train_set);
  }
  HanParams params = init_params(model, std::move(vocabulary), c.seed);
  if (model.mode == EmbedMode::word_compose && !c.paths.embeddings.empty()) {
    load_pretrained_embeddings(params, load_glove(need_input(c.paths.embeddings, "paths.embeddings"), c.oov));
  }
  const EventVectorStore* sp = store ? &*store : nullptr;
  attach_features(train_set, params, sp);
  attach_features(val_set, params, sp);
  attach_features(test_set, params, sp);

  std::ofstream log_out;
  if (!c.paths.log.empty()) log_out = open_output(c.paths.log);
  const auto start = std::chrono::steady_clock::now();
  TrainResult result = train(std::move(params), train_set, val_set, c.train, [&](const EpochLog& e) {
    const std::string line = epoch_to_json(e);
    if (log_out.is_open()) log_out << line << '\n' << std::flush;
    emit(log, line);
  });
  save_checkpoint(result.params, ckpt_path);
  emit(log, "trained in " + format_seconds(seconds_since(start)));

  json report = {
      {"train_samples", train_set.size()},
      {"val_samples", val_set.size()},
      {"test_samples", test_set.size()},
      {"parameters", result.params.parameter_count()},
      {"epochs", result.log.size()},
      {"best_epoch", result.best_epoch},
      {"best_val_acc", result.best_val_acc},
      {"test", nullptr},
  };
  if (!test_set.empty()) report["test"] = json::parse(metrics_to_json(evaluate(result.params, test_set)));
  const std::string text = report.dump(2);
  if (!c.paths.report.empty()) write_text(c.paths.report, text + "\n");
  return text;
}

std::string run_predict(const RunConfig& c, const Logger& /*log*/) {
  const HanParams params = load_checkpoint(need_input(c.paths.checkpoint, "paths.checkpoint"));
  const auto& out_path = need_output(c.paths.predictions, "paths.predictions");
  ManifestInputs m = load_manifest_inputs(c, static_cast<int>(params.config.categories));
  std::optional<EventVectorStore> store;
  if (params.config.mode == EmbedMode::precomputed) {
    store = EventVectorStore::load(need_input(c.paths.vectors, "paths.vectors"));
  }
  std::vector<SampleInput> inputs = select_split(m, c.predict_split);
  attach_features(inputs, params, store ? &*store : nullptr);

  const auto names = category_names(static_cast<int>(params.config.categories));
  auto out = open_output(out_path);
  out << "date,asset,category,prob\n";
  for (const auto& s : inputs) {
    const Prediction p = predict(params, s);
    const auto k = static_cast<std::size_t>(p.category);
    out << s.date << ',' << csv_field(s.asset) << ',' << names[k] << ',' << format_prob(p.probabilities[k]) << '\n';
  }
  out.close();
  if (!out) throw DataError("write failed: " + out_path);
  json report = {{"split", c.predict_split}, {"rows", inputs.size()}, {"path", out_path}};
  return report.dump(2);
}

std::string run_explain(const RunConfig& c, const Logger& /*log*/) {
  const HanParams params = load_checkpoint(need_input(c.paths.checkpoint, "paths.checkpoint"));
  ManifestInputs m = load_manifest_inputs(c, static_cast<int>(params.config.categories));
  std::optional<EventVectorStore> store;
  if (params.config.mode == EmbedMode::precomputed) {
    store = EventVectorStore::load(need_input(c.paths.vectors, "paths.vectors"));
  }
  std::vector<SampleInput> inputs = select_split(m, c.explain_split);
  attach_features(inputs, params, store ? &*store : nullptr);

  const auto names = category_names(static_cast<int>(params.config.categories));
  std::ostringstream csv;
  csv << "date,asset,predicted,prob,day,rank,weight,news_id,event\n";
  for (const auto& s : inputs) {
    const Explanation ex = explain(params, s, c.explain_top_k, true);
    const auto k = static_cast<std::size_t>(ex.prediction.category);
    const std::string head = s.date + ',' + csv_field(s.asset) + ',' + names[k] + ',' +
                             format_prob(ex.prediction.probabilities[k]) + ',';
    std::size_t rank = 0;
    std::size_t day = static_cast<std::size_t>(-1);
    for (const auto& e : ex.events) {
      rank = e.day == day ? rank + 1 : 1;
      day = e.day;
      csv << head << e.date << ',' << rank << ',' << format_prob(e.score) << ',' << csv_field(e.news_id) << ','
          << csv_field(e.text) << '\n';
    }
  }
  const std::string text = csv.str();
  if (!c.paths.explain.empty()) write_text(c.paths.explain, text);
  return text;
}

std::string run_backtest(const RunConfig& c, const Logger& /*log*/) {
  const auto predictions = read_predictions_csv(need_input(c.paths.predictions, "paths.predictions"));
  const auto prices = load_price_dir(need_input(c.paths.price_dir, "paths.price_dir"));
  const BacktestResult result = evhan::run_backtest(predictions, prices, c.backtest);
  if (!c.paths.ledger.empty()) {
    auto out = open_output(c.paths.ledger);
    write_ledger_csv(out, result.fills);
    out.close();
    if (!out) throw DataError("write failed: " + c.paths.ledger);
  }
  const std::string summary = summary_to_json(result);
  if (!c.paths.summary.empty()) write_text(c.paths.summary, summary + "\n");
  return summary;
}

std::string run_synth(const RunConfig& c, const Logger& log) {
  const auto start = std::chrono::steady_clock::now();
  SyntheticData data = generate_synthetic(c.synth);
  HanConfig model;
  model.mode = EmbedMode::word_compose;
  model.d_w = model.hidden = model.d_a = model.mlp_hidden = c.synth_dim;
  model.categories = c.synth.categories;
  model.max_words = c.synth.words_per_event;
  const HanParams init = init_params(model, data.vocabulary, c.seed);
  assign_tokens(data.train, init);
  assign_tokens(data.val, init);
  assign_tokens(data.test, init);

  const auto on_epoch = [&](const EpochLog& e) { emit(log, epoch_to_json(e)); };
  const TrainResult result = train(init, data.train, data.val, c.synth_train, on_epoch);
  const MetricsReport test = evaluate(result.params, data.test);
  const double target = 0.95 * data.bayes_accuracy;

  json report = {
      {"categories", c.synth.categories},
      {"strength", c.synth.strength},
      {"seed", c.seed},
      {"bayes_accuracy", data.bayes_accuracy},
      {"target_accuracy", target},
      {"test_accuracy", test.accuracy},
      {"best_epoch", result.best_epoch},
      {"epochs", result.log.size()},
      {"pass", test.accuracy >= target},
  };
  if (c.synth_control) {
    emit(log, "control: training on shuffled labels");
    const auto shuffled_train = shuffle_labels(data.train, c.seed + 1);
    const auto shuffled_val = shuffle_labels(data.val, c.seed + 2);
    const TrainResult ctl = train(init, shuffled_train, shuffled_val, c.synth_train, on_epoch);
    const double acc = evaluate(ctl.params, data.test).accuracy;
    // Chance level plus a margin of 0.1 (0.30 for five categories).
    const double cats = static_cast<double>(c.synth.categories);
    const double limit = (1.0 + 0.1 * cats) / cats;
    report["control"] = {{"test_accuracy", acc}, {"limit", limit}, {"pass", acc <= limit}};
  }
  emit(log, "finished in " + format_seconds(seconds_since(start)));
  const std::string text = report.dump(2);
  if (!c.paths.report.empty()) write_text(c.paths.report, text + "\n");
  return text;
}

}  // namespace evhan
