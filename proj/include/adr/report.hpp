#pragma once

// CSV tables, SVG line plots and the run-directory manifest.
//
// Doubles are written in shortest round-trip form; infinities as "inf" and
// "-inf"; NaN (undefined statistics) as an empty field.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adr/harness.hpp"

namespace adr {

std::string format_double(double x);
/// Inverse of format_double; an empty field reads as NaN. Throws ParseError.
double parse_double(std::string_view text);

struct EntropyPoint {
  std::uint64_t t = 0;
  std::uint64_t version = 0;
  double entropy = 0.0;

  friend bool operator==(const EntropyPoint&, const EntropyPoint&) = default;
};

/// Picks the {"type": "phi"} lines of an event log, in order.
std::vector<EntropyPoint> entropy_timeline(std::span<const nlohmann::json> log_lines);

inline constexpr std::string_view kEntropyCsvHeader = "t,version,entropy_npd";
inline constexpr std::string_view kSuccessIndexCsvHeader =
    "series,index,completed_trials,mean_time_s,stderr_time_s,alive,failed,failure_prob";
inline constexpr std::string_view kCurriculumCsvHeader = "run,episodes,eval_performance,entropy_npd";

std::string entropy_csv(std::span<const EntropyPoint> points);
/// Throws ParseError on a wrong header or malformed row.
std::vector<EntropyPoint> parse_entropy_csv(std::string_view text);

std::string success_index_csv(std::span<const PerturbationSeries> series);
std::string curriculum_csv(std::span<const CurriculumRun> runs);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // non-finite points are skipped
};

/// Standalone SVG line plot: one polyline per series, a legend, and dashed
/// vertical markers at `markers`.
std::string svg_plot(std::string_view title, std::string_view x_label, std::string_view y_label,
                     std::span<const PlotSeries> series, std::span<const double> markers = {});

/// Mean time per success index for every series, with trigger markers.
std::string perturbation_time_svg(const PerturbationReport& report);
std::string perturbation_failure_svg(const PerturbationReport& report);
std::string curriculum_eval_svg(const CurriculumReport& report);
std::string curriculum_entropy_svg(const CurriculumReport& report);
std::string entropy_svg(std::span<const EntropyPoint> points);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

/// Writes the perturbation tables, plots and metadata under `dir`; returns
/// the file names written.
std::vector<std::string> emit_perturbation_report(const PerturbationReport& report,
                                                  const std::filesystem::path& dir);
std::vector<std::string> emit_curriculum_report(std::span<const CurriculumReport> reports,
                                                const std::filesystem::path& dir);
std::vector<std::string> emit_entropy_report(std::span<const EntropyPoint> points,
                                             const std::filesystem::path& dir);

/// One JSON object per trial: {"series", "trial", "fired", "broken", "record"}.
std::string trials_jsonl(const PerturbationReport& report);
/// Rebuilds a report (statistics included) from trials_jsonl output; series
/// keep their first-seen order. Throws ParseError or DataError.
PerturbationReport perturbation_report_from_jsonl(const PerturbationSpec& spec,
                                                  std::string_view text, int max_index = 50);
/// Inverse of CurriculumReport::to_json.
CurriculumReport curriculum_report_from_json(const nlohmann::json& j);

/// manifest.json: {"command", "config", "files"}; files are sorted.
void write_manifest(const std::filesystem::path& dir, std::string_view command,
                    const nlohmann::json& config, std::vector<std::string> files);

}  // namespace adr
