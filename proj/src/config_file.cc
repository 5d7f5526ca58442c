#include "servesim/config_file.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "servesim/errors.h"

namespace servesim {

namespace {

const char* const kEngineKeys[] = {"bucket_ladder", "block_size", "total_blocks",
                                   "max_decode_batch", "prefill_token_budget",
                                   "max_model_len", "batching"};
const char* const kCostKeys[] = {"c_prefill_per_token", "c_decode_fixed", "c_decode_per_seq",
                                 "c_decode_per_ctx"};
const char* const kGeneratorKeys[] = {"seed", "n_requests", "arrival", "rate",
                                      "prompt_min", "prompt_max", "output_min", "output_max"};
const char* const kEnginePrefixes[] = {"", "variant_a.", "variant_b."};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t to_int(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const std::int64_t v = to_int(key, text);
  if (v < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::size_t>(v);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::string num(double v) {
  char buf[64];
  if (std::floor(v) == v && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  // Shortest text that reads back to the same value.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

void apply_engine(const std::map<std::string, std::string>& kv, const std::string& prefix,
                  EngineConfig& cfg) {
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(prefix + key);
    return it == kv.end() ? nullptr : &it->second;
  };
  const std::string e = prefix + "engine.";
  const std::string c = prefix + "cost.";
  if (auto* v = get("engine.bucket_ladder")) cfg.bucket_ladder = BucketLadder::parse(*v);
  if (auto* v = get("engine.block_size")) cfg.block_size = to_int(e + "block_size", *v);
  if (auto* v = get("engine.total_blocks")) cfg.total_blocks = to_count(e + "total_blocks", *v);
  if (auto* v = get("engine.max_decode_batch")) {
    cfg.max_decode_batch = to_count(e + "max_decode_batch", *v);
  }
  if (auto* v = get("engine.prefill_token_budget")) {
    cfg.prefill_token_budget = to_int(e + "prefill_token_budget", *v);
  }
  if (auto* v = get("engine.max_model_len")) cfg.max_model_len = to_int(e + "max_model_len", *v);
  if (auto* v = get("engine.batching")) cfg.batching = parse_batching_mode(*v);
  if (auto* v = get("cost.c_prefill_per_token")) {
    cfg.cost_model.c_prefill_per_token = to_int(c + "c_prefill_per_token", *v);
  }
  if (auto* v = get("cost.c_decode_fixed")) {
    cfg.cost_model.c_decode_fixed = to_int(c + "c_decode_fixed", *v);
  }
  if (auto* v = get("cost.c_decode_per_seq")) {
    cfg.cost_model.c_decode_per_seq = to_int(c + "c_decode_per_seq", *v);
  }
  if (auto* v = get("cost.c_decode_per_ctx")) {
    cfg.cost_model.c_decode_per_ctx = to_int(c + "c_decode_per_ctx", *v);
  }
}

void check_engine(const EngineConfig& cfg, const std::string& label) {
  if (Verdict v = validate_config(cfg); !v) throw ConfigError(label + ": " + v.reason);
}

void append_engine(std::vector<std::pair<std::string, std::string>>& out,
                   const std::string& prefix, const EngineConfig& cfg) {
  const std::string e = prefix + "engine.";
  const std::string c = prefix + "cost.";
  out.emplace_back(e + "bucket_ladder", cfg.bucket_ladder.to_string());
  out.emplace_back(e + "block_size", std::to_string(cfg.block_size));
  out.emplace_back(e + "total_blocks", std::to_string(cfg.total_blocks));
  out.emplace_back(e + "max_decode_batch", std::to_string(cfg.max_decode_batch));
  out.emplace_back(e + "prefill_token_budget", std::to_string(cfg.prefill_token_budget));
  out.emplace_back(e + "max_model_len", std::to_string(cfg.max_model_len));
  out.emplace_back(e + "batching", std::string(to_string(cfg.batching)));
  out.emplace_back(c + "c_prefill_per_token", std::to_string(cfg.cost_model.c_prefill_per_token));
  out.emplace_back(c + "c_decode_fixed", std::to_string(cfg.cost_model.c_decode_fixed));
  out.emplace_back(c + "c_decode_per_seq", std::to_string(cfg.cost_model.c_decode_per_seq));
  out.emplace_back(c + "c_decode_per_ctx", std::to_string(cfg.cost_model.c_decode_per_ctx));
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const char* p : kEnginePrefixes) {
      for (const char* n : kEngineKeys) k.push_back(std::string(p) + "engine." + n);
      for (const char* n : kCostKeys) k.push_back(std::string(p) + "cost." + n);
    }
    for (const char* n : kGeneratorKeys) k.push_back(std::string("workload.") + n);
    k.push_back("workload.trace");
    k.push_back("split.mode");
    k.push_back("split.b_weight");
    return k;
  }();
  return keys;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  const auto& known = known_config_keys();
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
    if (!kv.emplace(key, std::move(value)).second) {
      throw ParseError(line_no, "duplicate key '" + key + "'");
    }
  }
  return kv;
}

ExperimentConfig build_experiment(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  apply_engine(kv, "", cfg.engine);
  check_engine(cfg.engine, "engine");

  cfg.split.variant_a = cfg.engine;
  cfg.split.variant_b = cfg.engine;
  apply_engine(kv, "variant_a.", cfg.split.variant_a);
  apply_engine(kv, "variant_b.", cfg.split.variant_b);
  check_engine(cfg.split.variant_a, "variant_a");
  check_engine(cfg.split.variant_b, "variant_b");
  cfg.split.b_weight = 0.5;
  if (auto it = kv.find("split.b_weight"); it != kv.end()) {
    cfg.split.b_weight = to_double(it->first, it->second);
  }
  if (auto it = kv.find("split.mode"); it != kv.end()) {
    cfg.split.mode = parse_split_mode(it->second);
  }
  if (Verdict v = validate_split(cfg.split); !v) throw ConfigError(v.reason);

  WorkloadSpec& w = cfg.workload;
  w.max_model_len = cfg.engine.max_model_len;
  bool generator_keys = false;
  auto get = [&](const char* name) -> const std::string* {
    auto it = kv.find(std::string("workload.") + name);
    if (it == kv.end()) return nullptr;
    generator_keys = true;
    return &it->second;
  };
  if (auto* v = get("seed")) w.seed = static_cast<std::uint64_t>(to_int("workload.seed", *v));
  if (auto* v = get("n_requests")) w.n_requests = to_count("workload.n_requests", *v);
  if (auto* v = get("arrival")) {
    if (*v == "poisson") {
      w.arrival = ArrivalPattern::kPoisson;
    } else if (*v == "burst") {
      w.arrival = ArrivalPattern::kBurst;
    } else {
      throw ConfigError("workload.arrival must be 'poisson' or 'burst', got '" + *v + "'");
    }
  }
  if (auto* v = get("rate")) w.rate = to_double("workload.rate", *v);
  if (auto* v = get("prompt_min")) w.prompt_min = to_int("workload.prompt_min", *v);
  if (auto* v = get("prompt_max")) w.prompt_max = to_int("workload.prompt_max", *v);
  if (auto* v = get("output_min")) w.output_min = to_int("workload.output_min", *v);
  if (auto* v = get("output_max")) w.output_max = to_int("workload.output_max", *v);
  if (auto it = kv.find("workload.trace"); it != kv.end()) {
    if (generator_keys) {
      throw ConfigError("workload.trace cannot be combined with generator keys");
    }
    cfg.trace = it->second;
  } else if (Verdict v = validate_spec(w); generator_keys && !v) {
    // Untouched defaults are checked when a workload is actually generated,
    // so a trace can still be replayed against a small engine.
    throw ConfigError("workload: " + v.reason);
  }
  return cfg;
}

ExperimentConfig load_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg = build_experiment(parse_key_values(text.str()));
  // Relative trace paths resolve against the config file's directory.
  if (cfg.trace && cfg.trace->is_relative()) cfg.trace = path.parent_path() / *cfg.trace;
  return cfg;
}

std::vector<std::pair<std::string, std::string>> resolved_config(const ExperimentConfig& cfg,
                                                                 bool include_split) {
  std::vector<std::pair<std::string, std::string>> out;
  if (include_split) {
    append_engine(out, "variant_a.", cfg.split.variant_a);
    append_engine(out, "variant_b.", cfg.split.variant_b);
    out.emplace_back("split.mode", std::string(to_string(cfg.split.mode)));
    out.emplace_back("split.b_weight", num(cfg.split.b_weight));
  } else {
    append_engine(out, "", cfg.engine);
  }
  if (cfg.trace) {
    out.emplace_back("workload.trace", cfg.trace->generic_string());
  } else {
    const WorkloadSpec& w = cfg.workload;
    out.emplace_back("workload.seed", std::to_string(w.seed));
    out.emplace_back("workload.n_requests", std::to_string(w.n_requests));
    out.emplace_back("workload.arrival", w.arrival == ArrivalPattern::kPoisson ? "poisson" : "burst");
    out.emplace_back("workload.rate", num(w.rate));
    out.emplace_back("workload.prompt_min", std::to_string(w.prompt_min));
    out.emplace_back("workload.prompt_max", std::to_string(w.prompt_max));
    out.emplace_back("workload.output_min", std::to_string(w.output_min));
    out.emplace_back("workload.output_max", std::to_string(w.output_max));
  }
  return out;
}

}  // namespace servesim
