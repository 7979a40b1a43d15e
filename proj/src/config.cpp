#include "evhan/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool bare_key(std::string_view k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

// Value of a TOML right-hand side; a trailing comment is allowed.
std::string parse_value(std::string_view v, const std::string& where) {
  if (v.empty()) throw UsageError(where + "missing value");
  if (v.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < v.size() && v[i] != '"'; ++i) {
      if (v[i] != '\\') {
        out += v[i];
        continue;
      }
      if (++i == v.size()) break;
      switch (v[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: throw UsageError(where + "unsupported escape \\" + std::string(1, v[i]));
      }
    }
    if (i >= v.size()) throw UsageError(where + "unterminated string");
    const auto rest = trim(v.substr(i + 1));
    if (!rest.empty() && rest.front() != '#') throw UsageError(where + "unexpected text after string");
    return out;
  }
  if (v.front() == '\'') {
    const auto end = v.find('\'', 1);
    if (end == std::string_view::npos) throw UsageError(where + "unterminated string");
    const auto rest = trim(v.substr(end + 1));
    if (!rest.empty() && rest.front() != '#') throw UsageError(where + "unexpected text after string");
    return std::string(v.substr(1, end - 1));
  }
  const auto hash = v.find('#');
  std::string bare(trim(v.substr(0, hash)));
  bare.erase(std::remove(bare.begin(), bare.end(), '_'), bare.end());
  if (bare == "true" || bare == "false") return bare;
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(bare.data() + (bare.size() && bare[0] == '+' ? 1 : 0),
                                         bare.data() + bare.size(), d);
  if (bare.empty() || ec != std::errc{} || ptr != bare.data() + bare.size()) {
    throw UsageError(where + "value must be a string, number or boolean");
  }
  return bare;
}

template <typename T>
T to_number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (b == e || ec != std::errc{} || ptr != e) throw UsageError("config key '" + key + "' needs a number, got '" + text + "'");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_number<unsigned long long>(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw UsageError("config key '" + key + "' needs true or false, got '" + text + "'");
}

}  // namespace

ConfigValues parse_toml(std::istream& in, const std::string& source) {
  ConfigValues values;
  std::string table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    if (row.front() == '[') {
      const auto close = row.find(']');
      if (close == std::string_view::npos) throw UsageError(where + "unterminated table header");
      const auto rest = trim(row.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw UsageError(where + "unexpected text after table header");
      const auto name = trim(row.substr(1, close - 1));
      if (!bare_key(name)) throw UsageError(where + "unsupported table name '" + std::string(name) + "'");
      table = std::string(name);
      continue;
    }
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) throw UsageError(where + "expected key = value");
    const auto key = trim(row.substr(0, eq));
    if (!bare_key(key)) throw UsageError(where + "unsupported key '" + std::string(key) + "'");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (values.contains(full)) throw UsageError(where + "duplicate key '" + full + "'");
    values[full] = parse_value(trim(row.substr(eq + 1)), where);
  }
  return values;
}

ConfigValues load_toml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  return parse_toml(in, path);
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "paths.news", "paths.events", "paths.prices", "paths.price_dir", "paths.embeddings", "paths.vectors",
      "paths.manifest", "paths.checkpoint", "paths.predictions", "paths.ledger", "paths.summary", "paths.report",
      "paths.log", "paths.stats", "paths.explain",
      "model.preset", "model.mode", "model.d_w", "model.event_dim", "model.hidden", "model.d_a", "model.mlp_hidden",
      "model.max_words", "model.oov",
      "label.categories", "label.k", "label.l", "label.m", "label.splits",
      "train.lr", "train.weight_decay", "train.beta1", "train.beta2", "train.eps", "train.batch_size",
      "train.max_epochs", "train.patience",
      "extract.lexical_filter", "extract.splits",
      "backtest.cost_bps", "backtest.initial_cash", "backtest.top",
      "predict.split",
      "explain.split", "explain.top_k",
      "synth.categories", "synth.strength", "synth.n_train", "synth.n_val", "synth.n_test", "synth.noise_words",
      "synth.days", "synth.news_per_day", "synth.events_per_news", "synth.words_per_event", "synth.dim",
      "synth.control"};
  return keys;
}

RunConfig resolve_config(const ConfigValues& values) {
  const auto& known = known_config_keys();
  for (const auto& [k, v] : values) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw UsageError("unknown config key '" + k + "'");
  }
  RunConfig c;
  c.label.k = 5;
  c.label.l = 100;
  c.label.m = 30;
  if (auto it = values.find("model.preset"); it != values.end()) c.preset = it->second;
  if (c.preset == "paper") {
    c.label.k = 10;
    c.label.l = 500;
    c.label.m = 100;
    c.model.max_words = 20;
    c.model.hidden = 1024;
    c.model.d_a = 1024;
    c.model.mlp_hidden = 1024;
    c.model.d_w = 100;
  } else if (c.preset != "desk") {
    throw UsageError("unknown preset '" + c.preset + "' (expected desk or paper)");
  }

  for (const auto& [k, v] : values) {
    if (k == "seed") {
      c.seed = to_number<std::uint64_t>(k, v);
    } else if (k.rfind("paths.", 0) == 0) {
      std::string* slot = nullptr;
      const std::string name = k.substr(6);
      PathConfig& p = c.paths;
      const std::pair<const char*, std::string*> table[] = {
          {"news", &p.news}, {"events", &p.events}, {"prices", &p.prices}, {"price_dir", &p.price_dir},
          {"embeddings", &p.embeddings}, {"vectors", &p.vectors}, {"manifest", &p.manifest},
          {"checkpoint", &p.checkpoint}, {"predictions", &p.predictions}, {"ledger", &p.ledger},
          {"summary", &p.summary}, {"report", &p.report}, {"log", &p.log}, {"stats", &p.stats},
          {"explain", &p.explain}};
      for (const auto& [n, s] : table) {
        if (name == n) slot = s;
      }
      *slot = v;
    } else if (k == "model.preset") {
      // applied before the loop
    } else if (k == "model.mode") {
      c.model.mode = parse_embed_mode(v);
    } else if (k == "model.d_w") {
      c.model.d_w = to_size(k, v);
    } else if (k == "model.event_dim") {
      c.model.event_dim = to_size(k, v);
    } else if (k == "model.hidden") {
      c.model.hidden = to_size(k, v);
    } else if (k == "model.d_a") {
      c.model.d_a = to_size(k, v);
    } else if (k == "model.mlp_hidden") {
      c.model.mlp_hidden = to_size(k, v);
    } else if (k == "model.max_words") {
      c.model.max_words = to_size(k, v);
    } else if (k == "model.oov") {
      if (v == "zero") {
        c.oov = OovPolicy::zero;
      } else if (v == "mean") {
        c.oov = OovPolicy::mean;
      } else {
        throw UsageError("model.oov must be zero or mean, got '" + v + "'");
      }
    } else if (k == "label.categories") {
      c.label.categories = to_number<int>(k, v);
      category_names(c.label.categories);
    } else if (k == "label.k") {
      c.label.k = to_size(k, v);
    } else if (k == "label.l") {
      c.label.l = to_size(k, v);
    } else if (k == "label.m") {
      c.label.m = to_size(k, v);
    } else if (k == "label.splits") {
      c.splits = parse_splits(v);
    } else if (k == "train.lr") {
      c.train.lr = to_number<double>(k, v);
    } else if (k == "train.weight_decay") {
      c.train.weight_decay = to_number<double>(k, v);
    } else if (k == "train.beta1") {
      c.train.beta1 = to_number<double>(k, v);
    } else if (k == "train.beta2") {
      c.train.beta2 = to_number<double>(k, v);
    } else if (k == "train.eps") {
      c.train.eps = to_number<double>(k, v);
    } else if (k == "train.batch_size") {
      c.train.batch_size = to_size(k, v);
    } else if (k == "train.max_epochs") {
      c.train.max_epochs = to_size(k, v);
    } else if (k == "train.patience") {
      c.train.patience = to_size(k, v);
    } else if (k == "extract.lexical_filter") {
      c.extract.lexical_min_occurrences = to_size(k, v);
    } else if (k == "extract.splits") {
      for (const auto& s : parse_splits(v)) c.extract_splits.push_back({s.name, format_date(s.first), format_date(s.last)});
    } else if (k == "backtest.cost_bps") {
      c.backtest.cost_rate = to_number<double>(k, v) / 10000.0;
    } else if (k == "backtest.initial_cash") {
      c.backtest.initial_cash = to_number<double>(k, v);
    } else if (k == "backtest.top") {
      c.backtest.reentry_top = to_size(k, v);
    } else if (k == "predict.split") {
      c.predict_split = v;
    } else if (k == "explain.split") {
      c.explain_split = v;
    } else if (k == "explain.top_k") {
      c.explain_top_k = to_size(k, v);
    } else if (k == "synth.categories") {
      c.synth.categories = to_size(k, v);
    } else if (k == "synth.strength") {
      c.synth.strength = to_number<double>(k, v);
    } else if (k == "synth.n_train") {
      c.synth.n_train = to_size(k, v);
    } else if (k == "synth.n_val") {
      c.synth.n_val = to_size(k, v);
    } else if (k == "synth.n_test") {
      c.synth.n_test = to_size(k, v);
    } else if (k == "synth.noise_words") {
      c.synth.noise_words = to_size(k, v);
    } else if (k == "synth.days") {
      c.synth.days = to_size(k, v);
    } else if (k == "synth.news_per_day") {
      c.synth.news_per_day = to_size(k, v);
    } else if (k == "synth.events_per_news") {
      c.synth.events_per_news = to_size(k, v);
    } else if (k == "synth.words_per_event") {
      c.synth.words_per_event = to_size(k, v);
    } else if (k == "synth.dim") {
      c.synth_dim = to_size(k, v);
    } else if (k == "synth.control") {
      c.synth_control = to_bool(k, v);
    }
  }
  c.model.categories = static_cast<std::size_t>(c.label.categories);
  c.synth.seed = c.seed;
  c.train.seed = c.seed;
  c.train.validate();
  c.synth_train = c.train;
  if (!values.contains("train.lr")) c.synth_train.lr = 3e-3;
  if (!values.contains("train.patience")) c.synth_train.patience = 10;
  if (c.label.k == 0 || c.label.l == 0 || c.label.m == 0) throw UsageError("label.k, label.l and label.m must be positive");
  if (c.backtest.cost_rate < 0.0) throw UsageError("backtest.cost_bps must be non-negative");
  if (c.synth_dim == 0) throw UsageError("synth.dim must be positive");
  return c;
}

std::string config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["paths"] = {{"news", c.paths.news},       {"events", c.paths.events},         {"prices", c.paths.prices},
                {"price_dir", c.paths.price_dir}, {"embeddings", c.paths.embeddings}, {"vectors", c.paths.vectors},
                {"manifest", c.paths.manifest}, {"checkpoint", c.paths.checkpoint}, {"predictions", c.paths.predictions},
                {"ledger", c.paths.ledger},     {"summary", c.paths.summary},       {"report", c.paths.report},
                {"log", c.paths.log},           {"stats", c.paths.stats},           {"explain", c.paths.explain}};
  j["model"] = {{"mode", to_string(c.model.mode)}, {"d_w", c.model.d_w},     {"event_dim", c.model.event_dim},
                {"hidden", c.model.hidden},        {"d_a", c.model.d_a},     {"mlp_hidden", c.model.mlp_hidden},
                {"max_words", c.model.max_words},  {"categories", c.model.categories},
                {"oov", c.oov == OovPolicy::zero ? "zero" : "mean"}};
  j["label"] = {{"categories", c.label.categories}, {"k", c.label.k}, {"l", c.label.l}, {"m", c.label.m}};
  j["train"] = {{"lr", c.train.lr},
                {"weight_decay", c.train.weight_decay},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"eps", c.train.eps},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience}};
  j["backtest"] = {{"cost_rate", c.backtest.cost_rate},
                   {"initial_cash", c.backtest.initial_cash},
                   {"top", c.backtest.reentry_top}};
  return j.dump(2);
}

}  // namespace evhan
