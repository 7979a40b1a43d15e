#include "evhan/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = s.find(',');
    out.push_back(trim(s.substr(0, c)));
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_sell(Signal s) { return s == Signal::down || s == Signal::down_minus; }
bool is_buy(Signal s) { return s == Signal::up || s == Signal::up_plus; }

Fill make_fill(Date date, const std::string& asset, Side side, std::int64_t units, double price, double rate) {
  return {date, asset, side, units, price, rate * static_cast<double>(units) * price};
}

}  // namespace

Signal parse_signal(std::string_view name) {
  if (name == "DOWN-") return Signal::down_minus;
  if (name == "DOWN") return Signal::down;
  if (name == "PRESERVE") return Signal::preserve;
  if (name == "UP") return Signal::up;
  if (name == "UP+") return Signal::up_plus;
  throw DataError("unknown category '" + std::string(name) + "'");
}

std::string_view signal_name(Signal s) {
  switch (s) {
    case Signal::down_minus: return "DOWN-";
    case Signal::down: return "DOWN";
    case Signal::preserve: return "PRESERVE";
    case Signal::up: return "UP";
    case Signal::up_plus: return "UP+";
  }
  return "?";
}

std::vector<PredictionRow> read_predictions_csv(std::istream& in, const std::string& source) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (!header) {
      if (fields.size() != 4 || fields[0] != "date" || fields[1] != "asset" || fields[2] != "category" ||
          fields[3] != "prob") {
        throw DataError(where + "expected header 'date,asset,category,prob'");
      }
      header = true;
      continue;
    }
    if (fields.size() != 4) throw DataError(where + "expected 4 fields");
    PredictionRow r;
    const auto d = parse_date(fields[0]);
    if (!d) throw DataError(where + "unparseable date");
    r.date = *d;
    r.asset = std::string(fields[1]);
    if (r.asset.empty()) throw DataError(where + "empty asset");
    try {
      r.signal = parse_signal(fields[2]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    try {
      std::size_t pos = 0;
      r.prob = std::stod(std::string(fields[3]), &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where + "unparseable probability");
    }
    if (!(r.prob >= 0.0 && r.prob <= 1.0)) throw DataError(where + "probability outside [0, 1]");
    rows.push_back(std::move(r));
  }
  if (!header) throw DataError(source + ": empty predictions file");
  return rows;
}

std::vector<PredictionRow> read_predictions_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open predictions file: " + path);
  return read_predictions_csv(in, path);
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows) {
  out << "date,asset,category,prob\n";
  for (const auto& r : rows) {
    out << format_date(r.date) << ',' << r.asset << ',' << signal_name(r.signal) << ',' << fmt(r.prob) << '\n';
  }
}

double Portfolio::equity(const std::map<std::string, double>& prices) const {
  double e = cash;
  for (const auto& [asset, n] : units) {
    if (n == 0) continue;
    e += static_cast<double>(n) * prices.at(asset);
  }
  return e;
}

std::vector<Fill> apply_signal(Portfolio& pf, const std::string& asset, Signal signal, double price, Date date,
                               const BacktestConfig& cfg) {
  if (!(price > 0.0)) throw UsageError("price for " + asset + " must be positive");
  std::vector<Fill> fills;
  pf.last_signal[asset] = signal;
  std::int64_t& held = pf.units[asset];
  if (is_sell(signal)) {
    const std::int64_t n = signal == Signal::down_minus ? held : held / 2;
    if (n > 0) {
      Fill f = make_fill(date, asset, Side::sell, n, price, cfg.cost_rate);
      held -= n;
      pf.cash += static_cast<double>(n) * price - f.cost;
      fills.push_back(std::move(f));
    }
  } else if (is_buy(signal) && held > 0) {
    const double fraction = signal == Signal::up_plus ? 1.0 : 0.5;
    const double target = fraction * static_cast<double>(held) * price;
    const double affordable = pf.cash / (price * (1.0 + cfg.cost_rate));
    const auto n = static_cast<std::int64_t>(std::floor(std::min(target / price, affordable)));
    if (n > 0) {
      Fill f = make_fill(date, asset, Side::buy, n, price, cfg.cost_rate);
      held += n;
      pf.cash -= static_cast<double>(n) * price + f.cost;
      fills.push_back(std::move(f));
    }
  }
  if (pf.cash < 0.0) throw InvariantError("cash went negative after a fill on " + asset);
  return fills;
}

std::vector<Fill> reenter(Portfolio& pf, std::vector<ReentryCandidate> candidates, Date date,
                          const BacktestConfig& cfg) {
  std::erase_if(candidates, [&pf](const ReentryCandidate& c) {
    auto it = pf.units.find(c.asset);
    return it != pf.units.end() && it->second > 0;
  });
  std::sort(candidates.begin(), candidates.end(), [](const ReentryCandidate& a, const ReentryCandidate& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.asset < b.asset;
  });
  if (candidates.size() > cfg.reentry_top) candidates.resize(cfg.reentry_top);
  std::vector<Fill> fills;
  if (candidates.empty()) return fills;
  const double budget = pf.cash / static_cast<double>(candidates.size());
  for (const auto& c : candidates) {
    if (!(c.price > 0.0)) throw UsageError("price for " + c.asset + " must be positive");
    const double spend = std::min(budget, pf.cash);
    const auto n = static_cast<std::int64_t>(std::floor(spend / (c.price * (1.0 + cfg.cost_rate))));
    if (n <= 0) continue;
    Fill f = make_fill(date, c.asset, Side::buy, n, c.price, cfg.cost_rate);
    pf.units[c.asset] += n;
    pf.cash -= static_cast<double>(n) * c.price + f.cost;
    if (pf.cash < 0.0) throw InvariantError("cash went negative after re-entry into " + c.asset);
    fills.push_back(std::move(f));
  }
  return fills;
}

double annualize(double final_equity, double initial_equity, std::size_t n_dates, double days_per_year) {
  if (n_dates == 0 || !(initial_equity > 0.0)) return 0.0;
  return std::pow(final_equity / initial_equity, days_per_year / static_cast<double>(n_dates)) - 1.0;
}

BacktestResult run_backtest(const std::vector<PredictionRow>& predictions,
                            const std::map<std::string, PriceSeries>& prices, const BacktestConfig& cfg) {
  if (!(cfg.initial_cash > 0.0)) throw UsageError("initial cash must be positive");
  if (!(cfg.cost_rate >= 0.0)) throw UsageError("cost rate must be non-negative");
  BacktestResult result;
  if (predictions.empty()) throw DataError("no predictions to simulate");

  std::map<Date, std::map<std::string, const PredictionRow*>> by_date;
  std::set<std::string> assets;
  for (const auto& p : predictions) {
    auto ps = prices.find(p.asset);
    if (ps == prices.end()) throw DataError("prediction for unknown asset '" + p.asset + "'");
    if (!ps->second.open_on(p.date)) {
      throw DataError("no open price for " + p.asset + " on " + format_date(p.date));
    }
    if (!by_date[p.date].emplace(p.asset, &p).second) {
      throw DataError("duplicate prediction for " + p.asset + " on " + format_date(p.date));
    }
    assets.insert(p.asset);
  }
  result.assets.assign(assets.begin(), assets.end());

  auto prices_on = [&](Date d) {
    std::map<std::string, double> px;
    for (const auto& a : assets) {
      const auto v = prices.at(a).open_on(d);
      if (!v) throw DataError("no open price for " + a + " on " + format_date(d));
      px[a] = *v;
    }
    return px;
  };

  Portfolio pf;
  pf.cash = cfg.initial_cash;
  result.initial_equity = cfg.initial_cash;
  bool first = true;
  for (const auto& [date, preds] : by_date) {
    const auto px = prices_on(date);
    if (first) {
      const double share = cfg.initial_cash / static_cast<double>(assets.size());
      for (const auto& a : assets) {
        const auto n = static_cast<std::int64_t>(std::floor(share / px.at(a)));
        pf.units[a] = n;
        pf.cash -= static_cast<double>(n) * px.at(a);
      }
      first = false;
    }
    auto signal_of = [&preds](const std::string& a) {
      auto it = preds.find(a);
      return it == preds.end() ? Signal::preserve : it->second->signal;
    };
    std::vector<Fill> day;
    auto take = [&day](std::vector<Fill> f) { day.insert(day.end(), f.begin(), f.end()); };
    for (const auto& a : assets) {
      if (is_sell(signal_of(a))) take(apply_signal(pf, a, signal_of(a), px.at(a), date, cfg));
    }
    // Held positions grow in probability order so scarce cash goes to the
    // most confident signals first.
    std::vector<const PredictionRow*> buys;
    std::vector<ReentryCandidate> sold_out;
    for (const auto& a : assets) {
      const Signal s = signal_of(a);
      if (!is_buy(s)) continue;
      if (pf.units[a] > 0) {
        buys.push_back(preds.at(a));
      } else {
        sold_out.push_back({a, preds.at(a)->prob, px.at(a)});
      }
    }
    std::stable_sort(buys.begin(), buys.end(),
                     [](const PredictionRow* x, const PredictionRow* y) { return x->prob > y->prob; });
    for (const auto* b : buys) take(apply_signal(pf, b->asset, b->signal, px.at(b->asset), date, cfg));
    take(reenter(pf, std::move(sold_out), date, cfg));
    for (const auto& a : assets) {
      if (!is_sell(signal_of(a)) && !is_buy(signal_of(a))) pf.last_signal[a] = Signal::preserve;
    }

    EquityPoint ep;
    ep.date = date;
    ep.cash = pf.cash;
    ep.equity = pf.equity(px);
    for (const auto& f : day) ep.cost += f.cost;
    result.total_cost += ep.cost;
    result.equity.push_back(ep);
    result.fills.insert(result.fills.end(), day.begin(), day.end());
  }
  result.n_trades = result.fills.size();
  result.final_equity = result.equity.back().equity;
  result.cumulative_return = result.final_equity / result.initial_equity - 1.0;
  result.annualized_return =
      annualize(result.final_equity, result.initial_equity, result.equity.size(), cfg.trading_days_per_year);
  return result;
}

void write_ledger_csv(std::ostream& out, const std::vector<Fill>& fills) {
  out << "date,asset,side,units,price,cost\n";
  for (const auto& f : fills) {
    out << format_date(f.date) << ',' << f.asset << ',' << (f.side == Side::buy ? "buy" : "sell") << ',' << f.units
        << ',' << fmt(f.price) << ',' << fmt(f.cost) << '\n';
  }
}

std::string summary_to_json(const BacktestResult& r) {
  nlohmann::ordered_json j;
  j["cumulative_return"] = r.cumulative_return;
  j["annualized_return"] = r.annualized_return;
  j["n_trades"] = r.n_trades;
  j["total_cost"] = r.total_cost;
  j["initial_equity"] = r.initial_equity;
  j["final_equity"] = r.final_equity;
  j["n_dates"] = r.equity.size();
  return j.dump(2);
}

std::map<std::string, PriceSeries> load_price_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("price directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .csv price files in " + dir);
  std::map<std::string, PriceSeries> out;
  for (const auto& f : files) {
    auto s = load_prices(f.string());
    out.emplace(s.asset, std::move(s));
  }
  return out;
}

}  // namespace evhan
