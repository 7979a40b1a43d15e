#pragma once

// Daily long-only trading simulation driven by movement predictions.
//
// Each simulated date, at the open: sells for DOWN/DOWN- signals, then buys
// that add to held positions for UP/UP+, then re-entry into sold-out assets
// predicted UP/UP+. Units are whole; every fill pays cost_rate of notional.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evhan/corpus_io.hpp"
#include "evhan/date.hpp"

namespace evhan {

enum class Signal { down_minus, down, preserve, up, up_plus };

/// Accepts the category names of any scheme (DOWN-, DOWN, PRESERVE, UP, UP+).
Signal parse_signal(std::string_view name);
std::string_view signal_name(Signal s);

struct PredictionRow {
  Date date;
  std::string asset;
  Signal signal = Signal::preserve;
  double prob = 0.0;  // probability of the predicted category
};

std::vector<PredictionRow> read_predictions_csv(std::istream& in, const std::string& source = "predictions");
std::vector<PredictionRow> read_predictions_csv(const std::string& path);
void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows);

struct BacktestConfig {
  double cost_rate = 0.003;
  double initial_cash = 1'000'000.0;
  std::size_t reentry_top = 5;
  double trading_days_per_year = 252.0;
};

enum class Side { buy, sell };

struct Fill {
  Date date;
  std::string asset;
  Side side = Side::buy;
  std::int64_t units = 0;
  double price = 0.0;
  double cost = 0.0;
};

struct Portfolio {
  double cash = 0.0;
  std::map<std::string, std::int64_t> units;
  std::map<std::string, Signal> last_signal;

  double equity(const std::map<std::string, double>& prices) const;
};

/// Sells for DOWN/DOWN-, adds to a held position for UP/UP+ (50% / 100% of
/// its current value, capped by cash). A zero position is left to reenter().
std::vector<Fill> apply_signal(Portfolio& portfolio, const std::string& asset, Signal signal, double price, Date date,
                               const BacktestConfig& config);

struct ReentryCandidate {
  std::string asset;
  double prob = 0.0;
  double price = 0.0;
};

/// Buys back the top `reentry_top` sold-out candidates by probability (ties by
/// asset id), splitting the cash available at entry equally among them.
std::vector<Fill> reenter(Portfolio& portfolio, std::vector<ReentryCandidate> candidates, Date date,
                          const BacktestConfig& config);

struct EquityPoint {
  Date date;
  double cash = 0.0;
  double equity = 0.0;
  double cost = 0.0;  // costs paid on this date
};

struct BacktestResult {
  std::vector<Fill> fills;
  std::vector<EquityPoint> equity;
  std::vector<std::string> assets;
  double initial_equity = 0.0;
  double final_equity = 0.0;
  double cumulative_return = 0.0;
  double annualized_return = 0.0;
  std::size_t n_trades = 0;
  double total_cost = 0.0;
};

/// Simulates every date that carries predictions. The universe is the set of
/// predicted assets, initially held in equal value (whole units, no cost).
/// Assets without a prediction on a date are treated as PRESERVE.
BacktestResult run_backtest(const std::vector<PredictionRow>& predictions,
                            const std::map<std::string, PriceSeries>& prices, const BacktestConfig& config);

/// (final / initial)^(days_per_year / n_dates) - 1.
double annualize(double final_equity, double initial_equity, std::size_t n_dates, double days_per_year = 252.0);

void write_ledger_csv(std::ostream& out, const std::vector<Fill>& fills);
std::string summary_to_json(const BacktestResult& result);

/// Loads every *.csv in a directory, keyed by file stem.
std::map<std::string, PriceSeries> load_price_dir(const std::string& dir);

}  // namespace evhan
