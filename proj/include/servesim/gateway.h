#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "servesim/config.h"
#include "servesim/metrics.h"
#include "servesim/scheduler.h"

namespace servesim {

enum class SplitMode { kABSplit, kShadow };
enum class Variant { kA, kB };

std::string_view to_string(SplitMode mode);
std::string_view to_string(Variant v);
SplitMode parse_split_mode(const std::string& text);

// Two engine configurations behind one front end. In Shadow mode variant_a
// is authoritative and variant_b only sees duplicates.
struct SplitConfig {
  EngineConfig variant_a;
  EngineConfig variant_b;
  double b_weight = 0.0;
  SplitMode mode = SplitMode::kABSplit;
};

Verdict validate_split(const SplitConfig& split);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

// B iff fnv1a64(id as 8 little-endian bytes) % 10000 < round(b_weight * 10000).
// Throws WrongMode outside ABSplit.
Variant route(RequestId id, const SplitConfig& split);

struct PairedRun {
  RunResult a;
  RunResult b;
};

// ABSplit: each request runs on the variant route() picks. Shadow: every
// request runs on A, and a duplicate of every request on B. The two engines
// run concurrently. Engine errors are rethrown with the variant in the
// message, keeping their type.
PairedRun dispatch_workload(std::span<const Request> requests, const SplitConfig& split);

struct DiffRow {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double abs_delta = 0.0;
  // Percent change of B relative to A; nullopt when A is 0.
  std::optional<double> rel_delta_pct;
};

std::vector<DiffRow> diff_report(const MetricsReport& a, const MetricsReport& b);

// Columns: metric,a,b,abs_delta,rel_delta_pct ("n/a" when undefined).
std::string format_diff_csv(std::span<const DiffRow> rows);
std::string format_diff_table(std::span<const DiffRow> rows);

}  // namespace servesim
