#include "evhan/evhan.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "evhan/config.hpp"
#include "evhan/errors.hpp"
#include "evhan/pipeline.hpp"

struct evhan_config {
  evhan::ConfigValues values;
  evhan_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct evhan_model {
  evhan::HanParams params;
};

namespace {

thread_local std::string g_last_error;

evhan_status fail(evhan_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, mapping the library's exception types onto status codes.
template <class Fn>
evhan_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EVHAN_OK;
  } catch (const evhan::UsageError& e) {
    return fail(EVHAN_USAGE_ERROR, e.what());
  } catch (const evhan::DataError& e) {
    return fail(EVHAN_DATA_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(EVHAN_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(EVHAN_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(EVHAN_INTERNAL_ERROR, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check_arg(const void* p, const char* name) {
  if (p == nullptr) throw evhan::UsageError(std::string("null argument: ") + name);
}

using Runner = std::string (*)(const evhan::RunConfig&, const evhan::Logger&);

evhan_status run(const evhan_config* config, char** out_report, Runner runner) {
  return guarded([&] {
    check_arg(config, "config");
    check_arg(out_report, "out_report");
    *out_report = nullptr;
    const evhan::RunConfig rc = evhan::resolve_config(config->values);
    evhan::Logger log;
    if (config->log != nullptr) {
      log = [fn = config->log, user = config->log_user](const std::string& line) { fn(line.c_str(), user); };
    }
    *out_report = dup_string(runner(rc, log));
  });
}

}  // namespace

extern "C" {

const char* evhan_version(void) { return "0.1.0"; }

const char* evhan_last_error(void) { return g_last_error.c_str(); }

const char* evhan_status_name(evhan_status status) {
  switch (status) {
    case EVHAN_OK:
      return "ok";
    case EVHAN_USAGE_ERROR:
      return "usage-error";
    case EVHAN_DATA_ERROR:
      return "data-error";
    case EVHAN_INTERNAL_ERROR:
      return "internal-error";
  }
  return "internal-error";
}

void evhan_string_free(char* s) { std::free(s); }

evhan_status evhan_config_new(evhan_config** out) {
  return guarded([&] {
    check_arg(out, "out");
    *out = new evhan_config();
  });
}

void evhan_config_free(evhan_config* config) { delete config; }

evhan_status evhan_config_load(evhan_config* config, const char* toml_path) {
  return guarded([&] {
    check_arg(config, "config");
    check_arg(toml_path, "toml_path");
    const auto& known = evhan::known_config_keys();
    for (auto& [key, value] : evhan::load_toml(toml_path)) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw evhan::UsageError(std::string(toml_path) + ": unknown key '" + key + "'");
      }
      config->values[key] = value;
    }
  });
}

evhan_status evhan_config_set(evhan_config* config, const char* key, const char* value) {
  return guarded([&] {
    check_arg(config, "config");
    check_arg(key, "key");
    check_arg(value, "value");
    const auto& known = evhan::known_config_keys();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw evhan::UsageError(std::string("unknown config key '") + key + "'");
    }
    config->values[key] = value;
  });
}

evhan_status evhan_config_set_logger(evhan_config* config, evhan_log_fn fn, void* user) {
  return guarded([&] {
    check_arg(config, "config");
    config->log = fn;
    config->log_user = user;
  });
}

evhan_status evhan_config_dump(const evhan_config* config, char** out_json) {
  return guarded([&] {
    check_arg(config, "config");
    check_arg(out_json, "out_json");
    *out_json = dup_string(evhan::config_to_json(evhan::resolve_config(config->values)));
  });
}

evhan_status evhan_run_extract(const evhan_config* c, char** out) { return run(c, out, &evhan::run_extract); }
evhan_status evhan_run_label(const evhan_config* c, char** out) { return run(c, out, &evhan::run_label); }
evhan_status evhan_run_train(const evhan_config* c, char** out) { return run(c, out, &evhan::run_train); }
evhan_status evhan_run_predict(const evhan_config* c, char** out) { return run(c, out, &evhan::run_predict); }
evhan_status evhan_run_explain(const evhan_config* c, char** out) { return run(c, out, &evhan::run_explain); }
evhan_status evhan_run_backtest(const evhan_config* c, char** out) { return run(c, out, &evhan::run_backtest); }
evhan_status evhan_run_synth(const evhan_config* c, char** out) { return run(c, out, &evhan::run_synth); }

evhan_status evhan_model_load(const char* path, evhan_model** out) {
  return guarded([&] {
    check_arg(path, "path");
    check_arg(out, "out");
    *out = nullptr;
    *out = new evhan_model{evhan::load_checkpoint(path)};
  });
}

void evhan_model_free(evhan_model* model) { delete model; }

evhan_status evhan_model_info(const evhan_model* model, char** out_json) {
  return guarded([&] {
    check_arg(model, "model");
    check_arg(out_json, "out_json");
    const auto& c = model->params.config;
    const nlohmann::json info = {
        {"mode", evhan::to_string(c.mode)},
        {"d_w", c.d_w},
        {"event_dim", c.event_dim},
        {"hidden", c.hidden},
        {"d_a", c.d_a},
        {"mlp_hidden", c.mlp_hidden},
        {"categories", c.categories},
        {"max_words", c.max_words},
        {"vocabulary", model->params.vocabulary.size()},
        {"parameters", model->params.parameter_count()},
    };
    *out_json = dup_string(info.dump(2));
  });
}

}  // extern "C"
