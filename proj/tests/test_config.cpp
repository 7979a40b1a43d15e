#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "evhan/config.hpp"
#include "evhan/errors.hpp"

using namespace evhan;

namespace {

ConfigValues toml(const std::string& text) {
  std::istringstream in(text);
  return parse_toml(in, "t.toml");
}

}  // namespace

TEST_CASE("toml: tables, comments, strings, numbers and booleans") {
  const auto v = toml(
      "# experiment\n"
      "seed = 7\n"
      "[paths]\n"
      "events = \"out/events.jsonl\"  # produced by extract\n"
      "news = 'raw\\news'\n"
      "[train]\n"
      "lr = 1e-3\n"
      "max_epochs = 1_000\n"
      "[synth]\n"
      "control = true\n");
  CHECK(v.at("seed") == "7");
  CHECK(v.at("paths.events") == "out/events.jsonl");
  CHECK(v.at("paths.news") == "raw\\news");
  CHECK(v.at("train.lr") == "1e-3");
  CHECK(v.at("train.max_epochs") == "1000");
  CHECK(v.at("synth.control") == "true");
}

TEST_CASE("toml: malformed lines name the line") {
  auto msg = [](const std::string& text) {
    try {
      toml(text);
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("a = 1\nb\n").find("t.toml:2") != std::string::npos);
  CHECK(msg("[paths\n").find("t.toml:1") != std::string::npos);
  CHECK(msg("a = \"open\n").find("unterminated") != std::string::npos);
  CHECK(msg("a = 1\na = 2\n").find("duplicate") != std::string::npos);
  CHECK(msg("a = [1, 2]\n").find("t.toml:1") != std::string::npos);
  CHECK(msg("a = \"x\" y\n").find("t.toml:1") != std::string::npos);
}

TEST_CASE("config: desk defaults") {
  const auto c = resolve_config({});
  CHECK(c.preset == "desk");
  CHECK(c.label.k == 5);
  CHECK(c.label.l == 100);
  CHECK(c.label.m == 30);
  CHECK(c.label.categories == 2);
  CHECK(c.model.categories == 2);
  CHECK(c.backtest.cost_rate == doctest::Approx(0.003));
  CHECK(c.backtest.reentry_top == 5);
}

TEST_CASE("config: the paper preset sets the full-scale sizes") {
  const auto c = resolve_config({{"model.preset", "paper"}});
  CHECK(c.label.k == 10);
  CHECK(c.label.l == 500);
  CHECK(c.label.m == 100);
  CHECK(c.model.max_words == 20);
  CHECK(c.model.hidden == 1024);
  CHECK(c.model.d_a == 1024);
  CHECK(c.model.mlp_hidden == 1024);
  CHECK(c.model.d_w == 100);
}

TEST_CASE("config: explicit keys override the preset") {
  const auto c = resolve_config({{"model.preset", "paper"}, {"label.k", "3"}, {"model.hidden", "64"}});
  CHECK(c.label.k == 3);
  CHECK(c.model.hidden == 64);
  CHECK(c.label.l == 500);
}

TEST_CASE("config: typed values") {
  const auto c = resolve_config({{"seed", "42"},
                                 {"backtest.cost_bps", "30"},
                                 {"label.categories", "3"},
                                 {"model.mode", "precomputed"},
                                 {"model.oov", "mean"},
                                 {"train.lr", "0.01"},
                                 {"synth.control", "true"},
                                 {"label.splits", "train:2020-01-01..2020-06-30,test:2020-07-01..2020-12-31"}});
  CHECK(c.seed == 42);
  CHECK(c.train.seed == 42);
  CHECK(c.synth.seed == 42);
  CHECK(c.backtest.cost_rate == doctest::Approx(0.003).epsilon(1e-15));
  CHECK(c.model.categories == 3);
  CHECK(c.model.mode == EmbedMode::precomputed);
  CHECK(c.oov == OovPolicy::mean);
  CHECK(c.train.lr == 0.01);
  CHECK(c.synth_control);
  REQUIRE(c.splits.size() == 2);
  CHECK(c.splits[1].name == "test");
}

TEST_CASE("config: unknown keys and bad values are usage errors") {
  CHECK_THROWS_AS(resolve_config({{"train.learning_rate", "0.1"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"model.preset", "huge"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"label.k", "-1"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"label.k", "0"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"label.categories", "4"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"train.lr", "fast"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"model.oov", "random"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"synth.control", "yes"}}), UsageError);
  CHECK_THROWS_AS(resolve_config({{"backtest.cost_bps", "-5"}}), UsageError);
}

TEST_CASE("config: every known key resolves from a TOML file") {
  // Each key appears in known_config_keys, so an unknown-key error would
  // point at a table the resolver forgot.
  const auto& keys = known_config_keys();
  CHECK(std::find(keys.begin(), keys.end(), "backtest.cost_bps") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "model.preset") != keys.end());
  const auto c = resolve_config(toml("[paths]\nevents = \"e.jsonl\"\n[explain]\ntop_k = 3\n"));
  CHECK(c.paths.events == "e.jsonl");
  CHECK(c.explain_top_k == 3);
}

TEST_CASE("config: the JSON dump reflects the resolved values") {
  const auto j = config_to_json(resolve_config({{"model.preset", "paper"}, {"backtest.cost_bps", "10"}}));
  CHECK(j.find("\"preset\": \"paper\"") != std::string::npos);
  CHECK(j.find("\"hidden\": 1024") != std::string::npos);
  CHECK(j.find("\"cost_rate\": 0.001") != std::string::npos);
}

TEST_CASE("config: the synth experiment has its own optimiser defaults") {
  const auto c = resolve_config({});
  CHECK(c.train.lr == 1e-3);
  CHECK(c.train.patience == 5);
  CHECK(c.synth_train.lr == 3e-3);
  CHECK(c.synth_train.patience == 10);
  CHECK(c.synth_train.max_epochs == 30);
  const auto e = resolve_config({{"train.lr", "0.01"}, {"train.patience", "2"}, {"seed", "4"}});
  CHECK(e.synth_train.lr == 0.01);
  CHECK(e.synth_train.patience == 2);
  CHECK(e.synth_train.seed == 4);
}
