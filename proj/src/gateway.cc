#include "servesim/gateway.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <future>

#include "servesim/errors.h"

namespace servesim {

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::kABSplit ? "ab" : "shadow";
}

std::string_view to_string(Variant v) { return v == Variant::kA ? "A" : "B"; }

SplitMode parse_split_mode(const std::string& text) {
  if (text == "ab") return SplitMode::kABSplit;
  if (text == "shadow") return SplitMode::kShadow;
  throw ConfigError("split mode must be 'ab' or 'shadow', got '" + text + "'");
}

Verdict validate_split(const SplitConfig& split) {
  if (!(split.b_weight >= 0.0 && split.b_weight <= 1.0)) {
    return Verdict::reject("b_weight must be in [0, 1]");
  }
  if (Verdict v = validate_config(split.variant_a); !v) return Verdict::reject("variant A: " + v.reason);
  if (Verdict v = validate_config(split.variant_b); !v) return Verdict::reject("variant B: " + v.reason);
  return Verdict::accept();
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Variant route(RequestId id, const SplitConfig& split) {
  if (split.mode != SplitMode::kABSplit) throw WrongMode("route() requires ABSplit mode");
  std::array<std::uint8_t, 8> le{};
  for (std::size_t i = 0; i < le.size(); ++i) le[i] = static_cast<std::uint8_t>(id >> (8 * i));
  const auto threshold = static_cast<std::uint64_t>(std::llround(split.b_weight * 10000.0));
  return fnv1a64(le) % 10000 < threshold ? Variant::kB : Variant::kA;
}

namespace {

template <typename E>
[[noreturn]] void retag(const E& e, Variant v) {
  throw E(std::string("variant ") + std::string(to_string(v)) + ": " + e.what());
}

RunResult run_variant(const EngineConfig& cfg, std::vector<Request> requests, Variant v) {
  try {
    return simulate(cfg, requests);
  } catch (const Deadlock& e) {
    retag(e, v);
  } catch (const ConfigError& e) {
    retag(e, v);
  } catch (const Error& e) {
    retag(e, v);
  }
}

}  // namespace

PairedRun dispatch_workload(std::span<const Request> requests, const SplitConfig& split) {
  if (Verdict v = validate_split(split); !v) throw ConfigError(v.reason);
  std::vector<Request> to_a;
  std::vector<Request> to_b;
  if (split.mode == SplitMode::kShadow) {
    to_a.assign(requests.begin(), requests.end());
    to_b = to_a;
  } else {
    for (const Request& r : requests) {
      (route(r.id, split) == Variant::kA ? to_a : to_b).push_back(r);
    }
  }
  auto b = std::async(std::launch::async, run_variant, std::cref(split.variant_b),
                      std::move(to_b), Variant::kB);
  PairedRun out;
  out.a = run_variant(split.variant_a, std::move(to_a), Variant::kA);
  out.b = b.get();
  return out;
}

std::vector<DiffRow> diff_report(const MetricsReport& a, const MetricsReport& b) {
  const auto rows_a = aggregate_rows(a.aggregates);
  const auto rows_b = aggregate_rows(b.aggregates);
  std::vector<DiffRow> out;
  out.reserve(rows_a.size());
  for (std::size_t i = 0; i < rows_a.size(); ++i) {
    DiffRow row{rows_a[i].first, rows_a[i].second, rows_b[i].second,
                round6(rows_b[i].second - rows_a[i].second), std::nullopt};
    if (row.a != 0.0) row.rel_delta_pct = round6((row.b - row.a) / row.a * 100.0);
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

std::string rel_text(const DiffRow& r) {
  return r.rel_delta_pct ? format_number(*r.rel_delta_pct) : "n/a";
}

}  // namespace

std::string format_diff_csv(std::span<const DiffRow> rows) {
  std::string out = "metric,a,b,abs_delta,rel_delta_pct\n";
  for (const DiffRow& r : rows) {
    out += r.metric + ',' + format_number(r.a) + ',' + format_number(r.b) + ',' +
           format_number(r.abs_delta) + ',' + rel_text(r) + '\n';
  }
  return out;
}

std::string format_diff_table(std::span<const DiffRow> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %16s %16s %16s %12s\n", "metric", "A", "B",
                "delta", "delta %");
  std::string out = line;
  for (const DiffRow& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %16s %16s %16s %12s\n", r.metric.c_str(),
                  format_number(r.a).c_str(), format_number(r.b).c_str(),
                  format_number(r.abs_delta).c_str(), rel_text(r).c_str());
    out += line;
  }
  return out;
}

}  // namespace servesim
