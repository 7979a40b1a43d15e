#pragma once

// End-to-end subcommands over a resolved RunConfig. Each returns the report
// printed on standard output and writes its artifacts to the configured paths.

#include <functional>
#include <string>

#include "evhan/config.hpp"

namespace evhan {

/// Receives progress lines (epoch logs, warnings).
using Logger = std::function<void(const std::string&)>;

/// news JSONL -> events JSONL; report is the corpus statistics JSON.
std::string run_extract(const RunConfig& config, const Logger& log = {});

/// prices CSV + events -> sample manifest; report holds the scheme and counts.
std::string run_label(const RunConfig& config, const Logger& log = {});

/// manifest + events -> checkpoint, epoch log and test metrics.
std::string run_train(const RunConfig& config, const Logger& log = {});

/// checkpoint + manifest -> predictions CSV (date,asset,category,prob).
std::string run_predict(const RunConfig& config, const Logger& log = {});

/// checkpoint + manifest -> per-day top-k attention report (CSV text).
std::string run_explain(const RunConfig& config, const Logger& log = {});

/// predictions + price directory -> ledger CSV and summary JSON.
std::string run_backtest(const RunConfig& config, const Logger& log = {});

/// Planted-signal experiment; report carries accuracy, Bayes bound and pass.
std::string run_synth(const RunConfig& config, const Logger& log = {});

}  // namespace evhan
