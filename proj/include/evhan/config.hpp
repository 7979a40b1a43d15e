#pragma once

// Run configuration: a flat TOML file (one table per module) plus key=value
// overrides, resolved into typed settings.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evhan/backtest.hpp"
#include "evhan/han.hpp"
#include "evhan/labeling.hpp"
#include "evhan/synthetic.hpp"
#include "evhan/text.hpp"
#include "evhan/training.hpp"

namespace evhan {

/// Flattened "table.key" -> raw value text (strings unquoted).
using ConfigValues = std::map<std::string, std::string>;

/// Minimal TOML reader: comments, [table] headers, and key = value with
/// basic/literal strings, integers, floats and booleans.
ConfigValues parse_toml(std::istream& in, const std::string& source = "config");
ConfigValues load_toml(const std::string& path);

/// Every key the resolver understands, in documentation order.
const std::vector<std::string>& known_config_keys();

struct PathConfig {
  std::string news;
  std::string events;
  std::string prices;       // one asset's CSV (label)
  std::string price_dir;    // directory of CSVs (backtest)
  std::string embeddings;
  std::string vectors;
  std::string manifest;
  std::string checkpoint;
  std::string predictions;
  std::string ledger;
  std::string summary;
  std::string report;
  std::string log;
  std::string stats;
  std::string explain;
};

struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 0;
  PathConfig paths;
  HanConfig model;
  OovPolicy oov = OovPolicy::zero;
  SampleOptions label;
  std::vector<SplitRange> splits;
  TrainConfig train;
  text::ExtractOptions extract;
  std::vector<text::DateRange> extract_splits;
  BacktestConfig backtest;
  std::string predict_split = "test";
  std::string explain_split = "test";
  std::size_t explain_top_k = 5;
  SyntheticSpec synth;
  // Training settings for the synth experiment: lr 3e-3 and patience 10
  // unless train.lr / train.patience are given explicitly.
  TrainConfig synth_train;
  std::size_t synth_dim = 16;
  bool synth_control = false;
};

/// Applies the preset named by model.preset first, then every explicit key.
/// Unknown keys and malformed values raise UsageError.
RunConfig resolve_config(const ConfigValues& values);

std::string config_to_json(const RunConfig& config);

}  // namespace evhan
