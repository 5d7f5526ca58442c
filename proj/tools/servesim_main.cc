// servesim: command-line driver for the simulated serving engine.
//
// Exit codes: 0 success, 1 configuration or input error, 2 engine deadlock.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "servesim/config_file.h"
#include "servesim/errors.h"
#include "servesim/gateway.h"
#include "servesim/metrics.h"
#include "servesim/scheduler.h"
#include "servesim/service.h"
#include "servesim/workload.h"

namespace {

using namespace servesim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDeadlock = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::string trace;
};

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config.empty()
                             ? build_experiment({})
                             : load_experiment_file(flags.config);
  if (flags.seed) cfg.workload.seed = *flags.seed;
  if (!flags.trace.empty()) cfg.trace = flags.trace;
  return cfg;
}

std::vector<Request> load_requests(const ExperimentConfig& cfg) {
  return cfg.trace ? load_trace(*cfg.trace) : generate(cfg.workload);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("failed writing " + path);
}

std::string extension(ReportFormat f) { return f == ReportFormat::kJson ? "json" : "csv"; }

// Runs body, mapping errors onto the exit-code contract.
template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const Deadlock& e) {
    std::cerr << "servesim: deadlock: " << e.what() << "\n";
    return kExitDeadlock;
  } catch (const std::exception& e) {
    std::cerr << "servesim: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_run(const CommonFlags& flags, const std::string& events_path) {
  const ExperimentConfig cfg = load_config(flags);
  const ReportFormat format = parse_report_format(flags.format);
  const std::vector<Request> requests = load_requests(cfg);
  const RunResult result = simulate(cfg.engine, requests);

  if (!flags.out.empty()) {
    ReportMeta meta{SERVESIM_VERSION, resolved_config(cfg, false)};
    write_file(flags.out, write_report(result.report, format, &meta));
  }
  if (!events_path.empty()) write_file(events_path, format_event_log(result.events));
  std::cout << "requests: " << requests.size() << "\n" << format_summary(result.report);
  return kExitOk;
}

int cmd_compare(const CommonFlags& flags, const std::string& mode,
                std::optional<double> b_weight) {
  ExperimentConfig cfg = load_config(flags);
  if (!mode.empty()) cfg.split.mode = parse_split_mode(mode);
  if (b_weight) cfg.split.b_weight = *b_weight;
  if (Verdict v = validate_split(cfg.split); !v) throw ConfigError(v.reason);
  const ReportFormat format = parse_report_format(flags.format);
  const std::vector<Request> requests = load_requests(cfg);
  const PairedRun run = dispatch_workload(requests, cfg.split);
  const auto diff = diff_report(run.a.report, run.b.report);

  if (!flags.out.empty()) {
    ReportMeta meta{SERVESIM_VERSION, resolved_config(cfg, true)};
    meta.config.emplace_back("report.variant", "A");
    write_file(flags.out + ".a." + extension(format), write_report(run.a.report, format, &meta));
    meta.config.back().second = "B";
    write_file(flags.out + ".b." + extension(format), write_report(run.b.report, format, &meta));
    write_file(flags.out + ".diff.csv", format_diff_csv(diff));
  }
  std::cout << "mode: " << to_string(cfg.split.mode) << "  requests: " << requests.size()
            << "\n"
            << format_diff_table(diff);
  return kExitOk;
}

int cmd_gen(const CommonFlags& flags, const WorkloadSpec& overrides_applied) {
  if (flags.out.empty()) throw ConfigError("gen requires --out");
  save_trace(flags.out, generate(overrides_applied));
  std::cout << "wrote " << overrides_applied.n_requests << " requests to " << flags.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"servesim: simulated LLM serving engine with bucketed prefill, "
               "paged KV-cache accounting and continuous batching"};
  app.set_version_flag("--version", SERVESIM_VERSION);
  app.require_subcommand(1);

  CommonFlags flags;
  std::string events_path;
  std::string mode;
  std::optional<double> b_weight;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config file");
    sub->add_option("--seed", flags.seed, "override workload.seed");
    sub->add_option("--trace", flags.trace, "replay a trace CSV instead of generating");
    sub->add_option("--format", flags.format, "report format: json or csv");
  };

  CLI::App* run = app.add_subcommand("run", "run one engine to completion");
  add_common(run);
  run->add_option("--out", flags.out, "report output path");
  run->add_option("--events", events_path, "write the engine event log here");

  CLI::App* compare = app.add_subcommand("compare", "A/B or shadow comparison of two variants");
  add_common(compare);
  compare->add_option("--out", flags.out,
                      "output prefix: writes <out>.a.<fmt>, <out>.b.<fmt>, <out>.diff.csv");
  compare->add_option("--mode", mode, "ab or shadow");
  compare->add_option("--b-weight", b_weight, "fraction of traffic routed to B");

  CLI::App* gen = app.add_subcommand("gen", "generate a seeded workload trace");
  std::optional<std::size_t> n;
  std::optional<std::string> arrival;
  std::optional<double> rate;
  std::optional<std::int64_t> prompt_min, prompt_max, output_min, output_max;
  gen->add_option("--config", flags.config, "take workload.* defaults from this config");
  gen->add_option("--seed", flags.seed, "PRNG seed");
  gen->add_option("--n", n, "number of requests");
  gen->add_option("--arrival", arrival, "poisson or burst");
  gen->add_option("--rate", rate, "Poisson rate, requests per 10^6 cu");
  gen->add_option("--prompt-min", prompt_min);
  gen->add_option("--prompt-max", prompt_max);
  gen->add_option("--output-min", output_min);
  gen->add_option("--output-max", output_max);
  gen->add_option("--out", flags.out, "trace CSV output path")->required();

  CLI::App* serve = app.add_subcommand("serve", "line-delimited JSON gateway over TCP");
  std::uint16_t port = 7070;
  std::size_t max_connections = 0;
  serve->add_option("--config", flags.config, "experiment config file");
  serve->add_option("--port", port, "listen port on 127.0.0.1 (0 picks one)");
  serve->add_option("--mode", mode, "ab or shadow");
  serve->add_option("--b-weight", b_weight, "fraction of traffic routed to B");
  serve->add_option("--max-connections", max_connections, "exit after N connections (0 = never)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed()) return guarded([&] { return cmd_run(flags, events_path); });
  if (compare->parsed()) return guarded([&] { return cmd_compare(flags, mode, b_weight); });
  if (gen->parsed()) {
    return guarded([&] {
      ExperimentConfig cfg = load_config(flags);
      WorkloadSpec spec = cfg.workload;
      if (n) spec.n_requests = *n;
      if (arrival) {
        if (*arrival == "poisson") {
          spec.arrival = ArrivalPattern::kPoisson;
        } else if (*arrival == "burst") {
          spec.arrival = ArrivalPattern::kBurst;
        } else {
          throw ConfigError("--arrival must be poisson or burst");
        }
      }
      if (rate) spec.rate = *rate;
      if (prompt_min) spec.prompt_min = *prompt_min;
      if (prompt_max) spec.prompt_max = *prompt_max;
      if (output_min) spec.output_min = *output_min;
      if (output_max) spec.output_max = *output_max;
      return cmd_gen(flags, spec);
    });
  }
  return guarded([&] {
    ExperimentConfig cfg = load_config(flags);
    if (!mode.empty()) cfg.split.mode = parse_split_mode(mode);
    if (b_weight) cfg.split.b_weight = *b_weight;
    serve_tcp(cfg.split, port, [](std::uint16_t p) {
      std::cout << "listening on 127.0.0.1:" << p << std::endl;
    }, max_connections);
    return kExitOk;
  });
}
