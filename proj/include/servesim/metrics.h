#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "servesim/types.h"

namespace servesim {

// Outcome of one finished request. ttft_cu and e2e_cu are measured from
// arrival.
struct RequestRecord {
  RequestId request_id = 0;
  Cu arrival_cu = 0;
  Tokens prompt_tokens = 0;
  Tokens output_tokens = 0;
  Cu ttft_cu = 0;
  Cu e2e_cu = 0;
  int preemptions = 0;

  bool operator==(const RequestRecord&) const = default;
};

// Pool observations sampled by the engine at every step boundary.
struct EngineSamples {
  double peak_block_utilization = 0.0;
  Tokens internal_frag_sum = 0;
  std::size_t sample_count = 0;
  std::size_t rejected_count = 0;

  bool operator==(const EngineSamples&) const = default;
};

struct Aggregates {
  Cu makespan_cu = 0;
  std::size_t completed_count = 0;
  Tokens total_output_tokens = 0;
  double throughput_tokens_per_cu = 0.0;
  double mean_ttft_cu = 0.0;
  Cu median_ttft_cu = 0;
  Cu p99_ttft_cu = 0;
  double mean_e2e_cu = 0.0;
  Cu median_e2e_cu = 0;
  Cu p99_e2e_cu = 0;
  double peak_block_utilization = 0.0;
  double mean_internal_frag_tokens = 0.0;
  std::size_t rejected_count = 0;

  bool operator==(const Aggregates&) const = default;
};

struct MetricsReport {
  std::vector<RequestRecord> per_request;  // sorted by request_id
  Aggregates aggregates;

  bool operator==(const MetricsReport&) const = default;
};

// Nearest-rank percentile: sorted[ceil(p * n) - 1]. Requires 0 < p <= 1.
// Throws EmptyInput on an empty input.
Cu percentile(std::span<const Cu> sorted, double p);

// Integral values print without decimals, others with exactly 6.
std::string format_number(double x);

// Rounds to 6 decimal places; every fractional aggregate is stored this way.
double round6(double x);

MetricsReport summarize(std::vector<RequestRecord> per_request,
                        const EngineSamples& samples);

enum class ReportFormat { kJson, kCsv };

ReportFormat parse_report_format(const std::string& text);

// Provenance embedded into JSON reports: artifact version and the fully
// resolved configuration as flat key/value pairs.
struct ReportMeta {
  std::string version;
  std::vector<std::pair<std::string, std::string>> config;
};

// Column order of the CSV per-request table.
inline constexpr const char* kReportCsvHeader =
    "request_id,arrival_cu,prompt_tokens,output_tokens,ttft_cu,e2e_cu,preemptions";

// Stable key and column order; equal inputs serialize byte-identically.
std::string write_report(const MetricsReport& report, ReportFormat format,
                         const ReportMeta* meta = nullptr);

// Parses the JSON produced by write_report (meta is ignored).
MetricsReport read_report_json(const std::string& text);

// Aggregate rows of a report in serialization order, as (name, value).
std::vector<std::pair<std::string, double>> aggregate_rows(const Aggregates& a);

// Human-readable aggregate table for standard output.
std::string format_summary(const MetricsReport& report);

}  // namespace servesim
