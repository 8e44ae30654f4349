#include "adr/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adr/errors.hpp"

namespace adr {

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
  if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad number: " + std::string(text), 0);
  }
  return x;
}

namespace {

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad integer: " + std::string(text), 0);
  }
  return x;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

}  // namespace

std::vector<EntropyPoint> entropy_timeline(std::span<const nlohmann::json> log_lines) {
  std::vector<EntropyPoint> out;
  for (const auto& line : log_lines) {
    if (!line.is_object() || line.value("type", "") != "phi") continue;
    out.push_back({line.at("t").get<std::uint64_t>(), line.at("version").get<std::uint64_t>(),
                   entropy_from_json(line.at("entropy_npd"))});
  }
  return out;
}

std::string entropy_csv(std::span<const EntropyPoint> points) {
  std::string out(kEntropyCsvHeader);
  out += '\n';
  for (const auto& p : points) {
    out += std::to_string(p.t) + ',' + std::to_string(p.version) + ',' + format_double(p.entropy) +
           '\n';
  }
  return out;
}

std::vector<EntropyPoint> parse_entropy_csv(std::string_view text) {
  std::vector<EntropyPoint> out;
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0] != kEntropyCsvHeader) throw ParseError("bad entropy CSV header", 0);
  std::size_t offset = lines[0].size() + 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) {
      offset += 1;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 3) throw ParseError("entropy CSV row needs 3 fields", offset);
    try {
      out.push_back({parse_u64(f[0]), parse_u64(f[1]), parse_double(f[2])});
    } catch (const ParseError&) {
      throw ParseError("bad entropy CSV row", offset);
    }
    offset += line.size() + 1;
  }
  return out;
}

std::string success_index_csv(std::span<const PerturbationSeries> series) {
  std::string out(kSuccessIndexCsvHeader);
  out += '\n';
  for (const auto& s : series) {
    const auto& st = s.stats;
    for (std::size_t i = 0; i < st.mean_time.size(); ++i) {
      out += s.name + ',' + std::to_string(i + 1) + ',' + std::to_string(st.completed) + ',' +
             format_double(st.mean_time[i]) + ',' + format_double(st.stderr_time[i]) + ',' +
             std::to_string(st.alive[i]) + ',' + std::to_string(st.failed[i]) + ',' +
             format_double(st.failure_prob[i]) + '\n';
    }
  }
  return out;
}

std::string curriculum_csv(std::span<const CurriculumRun> runs) {
  std::string out(kCurriculumCsvHeader);
  out += '\n';
  for (const auto& r : runs) {
    for (const auto& p : r.curve) {
      out += r.name + ',' + std::to_string(p.episodes) + ',' + format_double(p.eval) + ',' +
             format_double(p.entropy) + '\n';
    }
  }
  return out;
}

std::string svg_plot(std::string_view title, std::string_view x_label, std::string_view y_label,
                     std::span<const PlotSeries> series, std::span<const double> markers) {
  constexpr double W = 720, H = 420, L = 70, R = 170, T = 40, B = 55;
  static constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                                      "#ff7f0e", "#9467bd", "#8c564b"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  for (const double m : markers) {
    x0 = std::min(x0, m);
    x1 = std::max(x1, m);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << fixed(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fixed(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << escape_xml(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << (T + H - B) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  for (const double m : markers) {
    os << "<line class=\"marker\" x1=\"" << px(m) << "\" y1=\"" << T << "\" x2=\"" << px(m)
       << "\" y2=\"" << H - B << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto* color = kColors[s % kColors.size()];
    os << "<polyline class=\"series\" data-name=\"" << escape_xml(series[s].name)
       << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const auto& sr = series[s];
    for (std::size_t i = 0; i < std::min(sr.x.size(), sr.y.size()); ++i) {
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
      os << px(sr.x[i]) << ',' << py(sr.y[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\""
       << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << escape_xml(sr.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

std::vector<double> index_axis(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1);
  return x;
}

std::vector<double> trigger_markers(const PerturbationReport& report) {
  // The perturbation hits while the next goal is pursued.
  std::vector<double> m;
  for (const int t : report.spec.triggers) m.push_back(t + 0.5);
  return m;
}

}  // namespace

std::string perturbation_time_svg(const PerturbationReport& report) {
  std::vector<PlotSeries> series;
  for (const auto& s : report.series) {
    series.push_back({s.name, index_axis(s.stats.mean_time.size()), s.stats.mean_time});
  }
  const auto m = trigger_markers(report);
  return svg_plot("Time to completion: " + std::string(perturbation_name(report.spec.kind)),
                  "success index", "mean time (s)", series, m);
}

std::string perturbation_failure_svg(const PerturbationReport& report) {
  std::vector<PlotSeries> series;
  for (const auto& s : report.series) {
    series.push_back({s.name, index_axis(s.stats.failure_prob.size()), s.stats.failure_prob});
  }
  const auto m = trigger_markers(report);
  return svg_plot("Failure probability: " + std::string(perturbation_name(report.spec.kind)),
                  "success index", "failure probability", series, m);
}

namespace {

std::vector<PlotSeries> curve_series(const CurriculumReport& report, bool entropy_axis) {
  std::vector<PlotSeries> out;
  for (const auto& r : report.runs) {
    PlotSeries s{r.name, {}, {}};
    for (const auto& p : r.curve) {
      s.x.push_back(static_cast<double>(p.episodes));
      s.y.push_back(entropy_axis ? p.entropy : p.eval);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::string curriculum_eval_svg(const CurriculumReport& report) {
  return svg_plot("Held-out performance (seed " + std::to_string(report.seed) + ")", "episodes",
                  "mean successes", curve_series(report, false));
}

std::string curriculum_entropy_svg(const CurriculumReport& report) {
  return svg_plot("Training distribution entropy (seed " + std::to_string(report.seed) + ")",
                  "episodes", "entropy (nats per dimension)", curve_series(report, true));
}

std::string entropy_svg(std::span<const EntropyPoint> points) {
  PlotSeries s{"entropy", {}, {}};
  for (const auto& p : points) {
    s.x.push_back(static_cast<double>(p.t));
    s.y.push_back(p.entropy);
  }
  return svg_plot("ADR entropy", "episodes", "entropy (nats per dimension)", std::span(&s, 1));
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> emit_perturbation_report(const PerturbationReport& report,
                                                  const std::filesystem::path& dir) {
  const auto kind = std::string(perturbation_name(report.spec.kind));
  const std::vector<std::string> files{kind + "_success_index.csv", kind + "_time.svg",
                                       kind + "_failure.svg", kind + "_metadata.json"};
  write_text(dir / files[0], success_index_csv(report.series));
  write_text(dir / files[1], perturbation_time_svg(report));
  write_text(dir / files[2], perturbation_failure_svg(report));
  write_text(dir / files[3], report.metadata().dump(2) + "\n");
  return files;
}

std::vector<std::string> emit_curriculum_report(std::span<const CurriculumReport> reports,
                                                const std::filesystem::path& dir) {
  std::vector<std::string> files;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : reports) {
    const auto tag = "seed" + std::to_string(r.seed);
    files.push_back("curriculum_" + tag + ".csv");
    write_text(dir / files.back(), curriculum_csv(r.runs));
    files.push_back("curriculum_eval_" + tag + ".svg");
    write_text(dir / files.back(), curriculum_eval_svg(r));
    files.push_back("curriculum_entropy_" + tag + ".svg");
    write_text(dir / files.back(), curriculum_entropy_svg(r));
    summary.push_back(r.to_json());
  }
  files.push_back("curriculum.json");
  write_text(dir / files.back(), summary.dump(2) + "\n");
  return files;
}

std::vector<std::string> emit_entropy_report(std::span<const EntropyPoint> points,
                                             const std::filesystem::path& dir) {
  write_text(dir / "entropy.csv", entropy_csv(points));
  write_text(dir / "entropy.svg", entropy_svg(points));
  return {"entropy.csv", "entropy.svg"};
}

std::string trials_jsonl(const PerturbationReport& report) {
  std::string out;
  for (const auto& s : report.series) {
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
      const auto& t = s.trials[i];
      const nlohmann::json line{{"series", s.name},
                                {"trial", i},
                                {"fired", t.fired},
                                {"broken", t.broken},
                                {"record", to_json(t.record)}};
      out += line.dump() + '\n';
    }
  }
  return out;
}

PerturbationReport perturbation_report_from_jsonl(const PerturbationSpec& spec,
                                                  std::string_view text, int max_index) {
  PerturbationReport report;
  report.spec = spec;
  std::size_t offset = 0;
  for (const auto line : split(text, '\n')) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("bad trial line", offset + e.byte);
    }
    PerturbationTrial t;
    std::string name;
    try {
      name = j.at("series").get<std::string>();
      t.fired = j.at("fired").get<std::vector<int>>();
      t.broken = j.at("broken").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception&) {
      throw DataError("trial line is missing series, fired or broken");
    }
    t.record = trial_record_from_json(j.at("record"));
    auto it = std::find_if(report.series.begin(), report.series.end(),
                           [&](const PerturbationSeries& s) { return s.name == name; });
    if (it == report.series.end()) {
      report.series.push_back({name, {}, {}});
      it = report.series.end() - 1;
    }
    it->trials.push_back(std::move(t));
    offset += line.size() + 1;
  }
  for (auto& s : report.series) {
    const auto records = s.records();
    s.stats = success_index_stats(records, max_index);
  }
  return report;
}

CurriculumReport curriculum_report_from_json(const nlohmann::json& j) {
  CurriculumReport r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& rj : j.at("runs")) {
      CurriculumRun run;
      run.name = rj.at("name").get<std::string>();
      run.adr = rj.at("adr").get<bool>();
      const auto lo = rj.at("phi_low").get<std::vector<double>>();
      const auto hi = rj.at("phi_high").get<std::vector<double>>();
      const auto names = rj.at("dims").get<std::vector<std::string>>();
      const auto calib = rj.at("calib").get<std::vector<double>>();
      if (names.size() != lo.size() || calib.size() != lo.size()) {
        throw DataError("curriculum run dims, calib and bounds differ in length");
      }
      std::vector<RandomizationDimension> dims;
      for (std::size_t i = 0; i < lo.size(); ++i) dims.push_back({names[i], calib[i], ""});
      run.phi = AdrDistribution(dims, lo, hi);
      if (!rj.at("episodes_to_threshold").is_null()) {
        run.episodes_to_threshold = rj.at("episodes_to_threshold").get<std::uint64_t>();
      }
      for (const auto& p : rj.at("curve")) {
        run.curve.push_back({p.at(0).get<std::uint64_t>(), p.at(1).get<double>(),
                             entropy_from_json(p.at(2))});
      }
      r.runs.push_back(std::move(run));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad curriculum report: ") + e.what());
  }
  return r;
}

void write_manifest(const std::filesystem::path& dir, std::string_view command,
                    const nlohmann::json& config, std::vector<std::string> files) {
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  const nlohmann::json j{{"command", command}, {"config", config}, {"files", files}};
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace adr
