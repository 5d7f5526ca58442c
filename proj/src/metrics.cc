#include "servesim/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "servesim/errors.h"

namespace servesim {

using ordered_json = nlohmann::ordered_json;

Cu percentile(std::span<const Cu> sorted, double p) {
  if (sorted.empty()) throw EmptyInput("percentile of an empty list");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile p must be in (0, 1]");
  const double n = static_cast<double>(sorted.size());
  // Tolerance keeps products like 0.07 * 100 = 7.000000000000001 on rank 7.
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

namespace {

struct Distribution {
  double mean = 0.0;
  Cu median = 0;
  Cu p99 = 0;
};

Distribution describe(std::vector<Cu> values) {
  Distribution d;
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  const Cu sum = std::accumulate(values.begin(), values.end(), Cu{0});
  d.mean = round6(static_cast<double>(sum) / static_cast<double>(values.size()));
  d.median = percentile(values, 0.5);
  d.p99 = percentile(values, 0.99);
  return d;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  if (std::floor(x) == x && std::fabs(x) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(x));
  } else {
    std::snprintf(buf, sizeof buf, "%.6f", x);
  }
  return buf;
}

MetricsReport summarize(std::vector<RequestRecord> per_request, const EngineSamples& samples) {
  std::sort(per_request.begin(), per_request.end(),
            [](const RequestRecord& a, const RequestRecord& b) {
              return a.request_id < b.request_id;
            });
  MetricsReport report;
  Aggregates& agg = report.aggregates;
  std::vector<Cu> ttft;
  std::vector<Cu> e2e;
  ttft.reserve(per_request.size());
  e2e.reserve(per_request.size());
  for (const RequestRecord& r : per_request) {
    agg.makespan_cu = std::max(agg.makespan_cu, r.arrival_cu + r.e2e_cu);
    agg.total_output_tokens += r.output_tokens;
    ttft.push_back(r.ttft_cu);
    e2e.push_back(r.e2e_cu);
  }
  agg.completed_count = per_request.size();
  if (agg.makespan_cu > 0) {
    agg.throughput_tokens_per_cu = round6(static_cast<double>(agg.total_output_tokens) /
                                          static_cast<double>(agg.makespan_cu));
  }
  const Distribution t = describe(std::move(ttft));
  const Distribution e = describe(std::move(e2e));
  agg.mean_ttft_cu = t.mean;
  agg.median_ttft_cu = t.median;
  agg.p99_ttft_cu = t.p99;
  agg.mean_e2e_cu = e.mean;
  agg.median_e2e_cu = e.median;
  agg.p99_e2e_cu = e.p99;
  agg.peak_block_utilization = round6(samples.peak_block_utilization);
  if (samples.sample_count > 0) {
    agg.mean_internal_frag_tokens = round6(static_cast<double>(samples.internal_frag_sum) /
                                           static_cast<double>(samples.sample_count));
  }
  agg.rejected_count = samples.rejected_count;
  report.per_request = std::move(per_request);
  return report;
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  throw ConfigError("report format must be 'json' or 'csv', got '" + text + "'");
}

std::vector<std::pair<std::string, double>> aggregate_rows(const Aggregates& a) {
  auto d = [](auto v) { return static_cast<double>(v); };
  return {
      {"makespan_cu", d(a.makespan_cu)},
      {"completed_count", d(a.completed_count)},
      {"total_output_tokens", d(a.total_output_tokens)},
      {"throughput_tokens_per_cu", a.throughput_tokens_per_cu},
      {"mean_ttft_cu", a.mean_ttft_cu},
      {"median_ttft_cu", d(a.median_ttft_cu)},
      {"p99_ttft_cu", d(a.p99_ttft_cu)},
      {"mean_e2e_cu", a.mean_e2e_cu},
      {"median_e2e_cu", d(a.median_e2e_cu)},
      {"p99_e2e_cu", d(a.p99_e2e_cu)},
      {"peak_block_utilization", a.peak_block_utilization},
      {"mean_internal_frag_tokens", a.mean_internal_frag_tokens},
      {"rejected_count", d(a.rejected_count)},
  };
}

std::string write_report(const MetricsReport& report, ReportFormat format,
                         const ReportMeta* meta) {
  if (format == ReportFormat::kCsv) {
    std::string out = kReportCsvHeader;
    out += '\n';
    for (const RequestRecord& r : report.per_request) {
      out += std::to_string(r.request_id) + ',' + std::to_string(r.arrival_cu) + ',' +
             std::to_string(r.prompt_tokens) + ',' + std::to_string(r.output_tokens) + ',' +
             std::to_string(r.ttft_cu) + ',' + std::to_string(r.e2e_cu) + ',' +
             std::to_string(r.preemptions) + '\n';
    }
    return out;
  }

  const Aggregates& a = report.aggregates;
  ordered_json doc;
  if (meta) {
    doc["version"] = meta->version;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : meta->config) cfg[k] = v;
    doc["config"] = std::move(cfg);
  }
  doc["aggregates"] = {
      {"makespan_cu", a.makespan_cu},
      {"completed_count", a.completed_count},
      {"total_output_tokens", a.total_output_tokens},
      {"throughput_tokens_per_cu", a.throughput_tokens_per_cu},
      {"mean_ttft_cu", a.mean_ttft_cu},
      {"median_ttft_cu", a.median_ttft_cu},
      {"p99_ttft_cu", a.p99_ttft_cu},
      {"mean_e2e_cu", a.mean_e2e_cu},
      {"median_e2e_cu", a.median_e2e_cu},
      {"p99_e2e_cu", a.p99_e2e_cu},
      {"peak_block_utilization", a.peak_block_utilization},
      {"mean_internal_frag_tokens", a.mean_internal_frag_tokens},
      {"rejected_count", a.rejected_count},
  };
  ordered_json rows = ordered_json::array();
  for (const RequestRecord& r : report.per_request) {
    rows.push_back({{"request_id", r.request_id},
                    {"arrival_cu", r.arrival_cu},
                    {"prompt_tokens", r.prompt_tokens},
                    {"output_tokens", r.output_tokens},
                    {"ttft_cu", r.ttft_cu},
                    {"e2e_cu", r.e2e_cu},
                    {"preemptions", r.preemptions}});
  }
  doc["per_request"] = std::move(rows);
  return doc.dump(2) + "\n";
}

MetricsReport read_report_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  MetricsReport report;
  const auto& j = doc.at("aggregates");
  Aggregates& a = report.aggregates;
  a.makespan_cu = j.at("makespan_cu").get<Cu>();
  a.completed_count = j.at("completed_count").get<std::size_t>();
  a.total_output_tokens = j.at("total_output_tokens").get<Tokens>();
  a.throughput_tokens_per_cu = j.at("throughput_tokens_per_cu").get<double>();
  a.mean_ttft_cu = j.at("mean_ttft_cu").get<double>();
  a.median_ttft_cu = j.at("median_ttft_cu").get<Cu>();
  a.p99_ttft_cu = j.at("p99_ttft_cu").get<Cu>();
  a.mean_e2e_cu = j.at("mean_e2e_cu").get<double>();
  a.median_e2e_cu = j.at("median_e2e_cu").get<Cu>();
  a.p99_e2e_cu = j.at("p99_e2e_cu").get<Cu>();
  a.peak_block_utilization = j.at("peak_block_utilization").get<double>();
  a.mean_internal_frag_tokens = j.at("mean_internal_frag_tokens").get<double>();
  a.rejected_count = j.at("rejected_count").get<std::size_t>();
  for (const auto& r : doc.at("per_request")) {
    report.per_request.push_back(RequestRecord{
        r.at("request_id").get<RequestId>(), r.at("arrival_cu").get<Cu>(),
        r.at("prompt_tokens").get<Tokens>(), r.at("output_tokens").get<Tokens>(),
        r.at("ttft_cu").get<Cu>(), r.at("e2e_cu").get<Cu>(), r.at("preemptions").get<int>()});
  }
  return report;
}

std::string format_summary(const MetricsReport& report) {
  std::string out;
  for (const auto& [name, value] : aggregate_rows(report.aggregates)) {
    char line[128];
    std::snprintf(line, sizeof line, "%-28s %s\n", name.c_str(), format_number(value).c_str());
    out += line;
  }
  return out;
}

}  // namespace servesim
