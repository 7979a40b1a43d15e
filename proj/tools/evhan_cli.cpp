// evhan command-line front end. Talks to the library only through evhan.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evhan/evhan.h"

namespace {

// A command-line flag that fills one configuration key.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  bool boolean = false;
};

struct Command {
  const char* name;
  const char* help;
  evhan_status (*run)(const evhan_config*, char**);
  std::vector<FlagSpec> flags;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"extract",
       "Extract event tuples from news JSONL",
       &evhan_run_extract,
       {
           {"--in", "paths.news", "News JSONL input"},
           {"--out", "paths.events", "Events JSONL output"},
           {"--lexical-filter", "extract.lexical_filter", "Minimum corpus count of a relation phrase (0 = off)"},
           {"--stats", "paths.stats", "Write corpus statistics JSON here"},
           {"--splits", "extract.splits", "Statistics ranges, name:first..last,..."},
       }},
      {"label",
       "Build labeled K-day samples from prices and events",
       &evhan_run_label,
       {
           {"--prices", "paths.prices", "Price CSV (date,open) of one asset"},
           {"--events", "paths.events", "Events JSONL"},
           {"--out", "paths.manifest", "Sample manifest JSONL output"},
           {"--categories", "label.categories", "Movement categories: 2, 3 or 5"},
           {"--k", "label.k", "History days per sample"},
           {"--l", "label.l", "Maximum news per day"},
           {"--m", "label.m", "Maximum events per news"},
           {"--splits", "label.splits", "Date splits, train:a..b,val:c..d,test:e..f"},
           {"--preset", "model.preset", "Preset: desk or paper"},
       }},
      {"train",
       "Train the attention network on a manifest",
       &evhan_run_train,
       {
           {"--manifest", "paths.manifest", "Sample manifest JSONL"},
           {"--events", "paths.events", "Events JSONL"},
           {"--vectors", "paths.vectors", "Precomputed event vectors (precomputed mode)"},
           {"--embeddings", "paths.embeddings", "GloVe text file (word-compose mode)"},
           {"--checkpoint", "paths.checkpoint", "Checkpoint output"},
           {"--log", "paths.log", "Epoch log JSONL output"},
           {"--report", "paths.report", "Test metrics JSON output"},
           {"--preset", "model.preset", "Preset: desk or paper"},
           {"--mode", "model.mode", "Event embedder: word-compose or precomputed"},
           {"--oov", "model.oov", "Out-of-vocabulary policy: zero or mean"},
           {"--categories", "label.categories", "Movement categories: 2, 3 or 5"},
           {"--m", "label.m", "Maximum events per news"},
           {"--d-w", "model.d_w", "Word embedding width"},
           {"--hidden", "model.hidden", "GRU hidden width"},
           {"--d-a", "model.d_a", "Attention width"},
           {"--mlp-hidden", "model.mlp_hidden", "Classifier hidden width"},
           {"--max-words", "model.max_words", "Maximum words per event"},
           {"--lr", "train.lr", "Learning rate"},
           {"--weight-decay", "train.weight_decay", "Decoupled weight decay"},
           {"--batch-size", "train.batch_size", "Samples per update"},
           {"--epochs", "train.max_epochs", "Maximum epochs"},
           {"--patience", "train.patience", "Epochs without validation gain before stopping"},
       }},
      {"predict",
       "Write the predictions CSV for one split",
       &evhan_run_predict,
       {
           {"--checkpoint", "paths.checkpoint", "Trained checkpoint"},
           {"--manifest", "paths.manifest", "Sample manifest JSONL"},
           {"--events", "paths.events", "Events JSONL"},
           {"--vectors", "paths.vectors", "Precomputed event vectors (precomputed mode)"},
           {"--out", "paths.predictions", "Predictions CSV output"},
           {"--split", "predict.split", "Split to predict, or all"},
           {"--m", "label.m", "Maximum events per news"},
       }},
      {"explain",
       "Rank events by attention for each predicted sample",
       &evhan_run_explain,
       {
           {"--checkpoint", "paths.checkpoint", "Trained checkpoint"},
           {"--manifest", "paths.manifest", "Sample manifest JSONL"},
           {"--events", "paths.events", "Events JSONL"},
           {"--vectors", "paths.vectors", "Precomputed event vectors (precomputed mode)"},
           {"--out", "paths.explain", "Report CSV output (default: standard output only)"},
           {"--split", "explain.split", "Split to explain, or all"},
           {"--top-k", "explain.top_k", "Events kept per day"},
           {"--m", "label.m", "Maximum events per news"},
       }},
      {"backtest",
       "Simulate trading on predictions",
       &evhan_run_backtest,
       {
           {"--predictions", "paths.predictions", "Predictions CSV (date,asset,category,prob)"},
           {"--prices", "paths.price_dir", "Directory of per-asset price CSVs"},
           {"--cost-bps", "backtest.cost_bps", "Transaction cost in basis points of notional"},
           {"--initial-cash", "backtest.initial_cash", "Starting equity"},
           {"--top", "backtest.top", "Assets bought back per day"},
           {"--ledger", "paths.ledger", "Fills CSV output"},
           {"--summary", "paths.summary", "Summary JSON output"},
       }},
      {"synth",
       "Run the planted-signal learnability experiment",
       &evhan_run_synth,
       {
           {"--c", "synth.categories", "Categories: 2, 3 or 5"},
           {"--strength", "synth.strength", "Probability that a sample carries its class marker"},
           {"--n-train", "synth.n_train", "Training samples"},
           {"--n-val", "synth.n_val", "Validation samples"},
           {"--n-test", "synth.n_test", "Test samples"},
           {"--dim", "synth.dim", "Model width"},
           {"--epochs", "train.max_epochs", "Maximum epochs"},
           {"--lr", "train.lr", "Learning rate (3e-3 unless set)"},
           {"--patience", "train.patience", "Epochs without validation gain before stopping (10 unless set)"},
           {"--report", "paths.report", "Report JSON output"},
           {"--control", "synth.control", "Also train on shuffled labels", true},
       }},
  };
  return table;
}

int report_error(evhan_status status, const std::string& message) {
  std::fprintf(stderr, "evhan:%s: %s\n", evhan_status_name(status), message.c_str());
  return static_cast<int>(status);
}

void log_line(const char* line, void* /*user*/) { std::fprintf(stderr, "evhan: %s\n", line); }

struct ConfigDeleter {
  void operator()(evhan_config* c) const { evhan_config_free(c); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven stock movement prediction with hierarchical attention", "evhan"};
  app.set_version_flag("--version", evhan_version());
  app.require_subcommand(1);

  struct Bound {
    const Command* command = nullptr;
    CLI::App* sub = nullptr;
    std::string config_path;
    std::string seed;
    std::vector<std::string> values;
    std::vector<bool> flags;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : commands()) {
    auto b = std::make_unique<Bound>();
    b->command = &cmd;
    b->sub = app.add_subcommand(cmd.name, cmd.help);
    b->sub->add_option("--config", b->config_path, "TOML configuration file (flags override it)");
    b->sub->add_option("--seed", b->seed, "Seed for every random choice");
    b->values.resize(cmd.flags.size());
    b->flags.assign(cmd.flags.size(), false);
    for (std::size_t i = 0; i < cmd.flags.size(); ++i) {
      const FlagSpec& f = cmd.flags[i];
      const std::string help = std::string(f.help) + " [" + f.key + "]";
      if (f.boolean) {
        b->sub->add_flag_callback(f.flag, [bp = b.get(), i] { bp->flags[i] = true; }, help);
      } else {
        b->sub->add_option(f.flag, b->values[i], help);
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(EVHAN_USAGE_ERROR, e.what());
  }

  const Bound* chosen = nullptr;
  for (const auto& b : bound) {
    if (b->sub->parsed()) chosen = b.get();
  }
  if (chosen == nullptr) return report_error(EVHAN_USAGE_ERROR, "no subcommand given");

  evhan_config* raw = nullptr;
  if (evhan_config_new(&raw) != EVHAN_OK) return report_error(EVHAN_INTERNAL_ERROR, evhan_last_error());
  std::unique_ptr<evhan_config, ConfigDeleter> config(raw);

  evhan_status st = EVHAN_OK;
  if (!chosen->config_path.empty()) st = evhan_config_load(config.get(), chosen->config_path.c_str());
  if (st == EVHAN_OK && !chosen->seed.empty()) st = evhan_config_set(config.get(), "seed", chosen->seed.c_str());
  const auto& flags = chosen->command->flags;
  for (std::size_t i = 0; st == EVHAN_OK && i < flags.size(); ++i) {
    const auto* opt = chosen->sub->get_option_no_throw(flags[i].flag);
    if (flags[i].boolean) {
      if (chosen->flags[i]) st = evhan_config_set(config.get(), flags[i].key, "true");
    } else if (opt != nullptr && opt->count() > 0) {
      st = evhan_config_set(config.get(), flags[i].key, chosen->values[i].c_str());
    }
  }
  if (st != EVHAN_OK) return report_error(st, evhan_last_error());

  evhan_config_set_logger(config.get(), &log_line, nullptr);
  char* report = nullptr;
  st = chosen->command->run(config.get(), &report);
  if (st != EVHAN_OK) return report_error(st, evhan_last_error());
  std::fputs(report, stdout);
  const std::size_t n = std::char_traits<char>::length(report);
  if (n == 0 || report[n - 1] != '\n') std::fputc('\n', stdout);
  evhan_string_free(report);
  return 0;
}
