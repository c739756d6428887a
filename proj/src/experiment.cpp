// Copyright 2026 The DeepJSCC Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "djscc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "djscc/common.hpp"
#include "djscc/config.hpp"

namespace djscc {
namespace {

constexpr const char* kColumns = "scheme,model,snr_test_db,l,psnr_db,ms_ssim";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_snr_tag(double snr_db) {
  std::ostringstream s;
  s << snr_db;
  return s.str();
}

// -- SVG --------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
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

// Tick positions at a 1/2/5 step giving about six intervals.
std::vector<double> ticks(double lo, double hi) {
  const double span = std::max(hi - lo, 1e-9);
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

// XML comments may not contain "--".
std::string svg_comment(const ExperimentResult& result) {
  std::string body = "version = " + result.version + "\n" + result.config_snapshot;
  for (std::size_t at; (at = body.find("--")) != std::string::npos;) body.replace(at, 2, "- -");
  return "<!--\n" + body + "-->\n";
}

std::string render_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label,
                       const std::string& title, const std::string& comment) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  constexpr double kW = 760, kH = 480, kLeft = 70, kRight = 200, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << comment;
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape_xml(title) << "</text>\n";
  for (double t : ticks(x0, x1)) {
    o << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(px(t)) << "\" y2=\""
      << fmt(kTop + ph) << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(kTop + ph + 18) << "\" text-anchor=\"middle\">" << t
      << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    o << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(kLeft + pw) << "\" y2=\""
      << fmt(py(t)) << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">" << t
      << "</text>\n";
  }
  o << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kH - 18) << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n";
  o << "<text transform=\"translate(20," << fmt(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[i].points) o << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
    o << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      o << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << fmt(kLeft + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(kLeft + pw + 32)
      << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fmt(kLeft + pw + 38) << "\" y=\"" << fmt(ly + 4) << "\">" << escape_xml(series[i].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kDiskWriteFailure, "cannot write " + path.string());
}

}  // namespace

bool is_valid_scheme_tag(const std::string& tag) {
  if (tag == "adaptive" || tag == "layered" || tag == "baseline" || tag == "secure") return true;
  const std::string prefix = "classical@";
  if (tag.rfind(prefix, 0) != 0) return false;
  auto is_number = [](const std::string& t) {
    if (t.empty()) return false;
    char* end = nullptr;
    std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
  };
  const std::string rest = tag.substr(prefix.size());
  const auto colon = rest.find(':');
  if (colon == std::string::npos) return is_number(rest);
  return is_number(rest.substr(0, colon)) && is_number(rest.substr(colon + 1));
}

std::string scheme_tag(const ModelParams<float>& model) {
  if (model.config.conditioning == Conditioning::kSnr) return "adaptive";
  if (model.config.layers > 1) return "layered";
  const auto& m = model.metadata;
  if (m.snr_train_low_db == m.snr_train_high_db) return "classical@" + format_snr_tag(m.snr_train_low_db);
  return "classical@" + format_snr_tag(m.snr_train_low_db) + ":" + format_snr_tag(m.snr_train_high_db);
}

void ExperimentResult::validate() const {
  if (schema_version != kSchemaVersion) throw Error(ErrorCode::kBadParams, "unsupported schema_version");
  for (const auto& row : rows) {
    if (!is_valid_scheme_tag(row.scheme)) throw Error(ErrorCode::kBadParams, "bad scheme tag '" + row.scheme + "'");
    if (row.model.find(',') != std::string::npos) throw Error(ErrorCode::kBadParams, "model name contains ','");
  }
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
  result.validate();
  out << "# schema_version = " << result.schema_version << "\n";
  out << "# experiment = " << result.name << "\n";
  out << "# version = " << result.version << "\n";
  for (const auto& [name, seed] : result.seeds) out << "# seed." << name << " = " << seed << "\n";
  std::stringstream config(result.config_snapshot);
  std::string line;
  while (std::getline(config, line)) {
    if (!line.empty()) out << "# config: " << line << "\n";
  }
  out << kColumns << "\n";
  for (const auto& r : result.rows) {
    out << r.scheme << ',' << r.model << ',' << format_db(r.snr_test_db) << ',' << r.l << ',' << format_db(r.psnr_db)
        << ',' << format_db(r.ms_ssim) << "\n";
  }
}

void save_experiment_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  std::ostringstream s;
  write_experiment_csv(s, result);
  write_text(path, s.str());
}

ExperimentResult read_experiment_csv(std::istream& in) {
  ExperimentResult result;
  result.schema_version = 0;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      if (body.rfind("config: ", 0) == 0) {
        result.config_snapshot += body.substr(8) + "\n";
        continue;
      }
      const auto eq = body.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq), value = body.substr(eq + 3);
      if (key == "schema_version") result.schema_version = std::stoi(value);
      else if (key == "experiment") result.name = value;
      else if (key == "version") result.version = value;
      else if (key.rfind("seed.", 0) == 0) result.seeds.emplace_back(key.substr(5), std::stoull(value));
      continue;
    }
    if (!header_seen) {
      if (line != kColumns) throw Error(ErrorCode::kBadParams, "unexpected CSV header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw Error(ErrorCode::kBadParams, "bad CSV row '" + line + "'");
    ExperimentRow row;
    row.scheme = cells[0];
    row.model = cells[1];
    row.snr_test_db = parse_double(cells[2]);
    row.l = std::stoi(cells[3]);
    row.psnr_db = parse_double(cells[4]);
    row.ms_ssim = parse_double(cells[5]);
    result.rows.push_back(row);
  }
  if (!header_seen) throw Error(ErrorCode::kBadParams, "missing CSV header");
  result.validate();
  return result;
}

ExperimentResult load_experiment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingPath, "cannot read " + path.string());
  return read_experiment_csv(in);
}

std::vector<ExperimentRow> sweep_models(const std::vector<NamedModel>& models, const std::vector<ImageTensor>& images,
                                        const std::vector<double>& snr_grid_db, const std::vector<int>& layer_grid,
                                        const EvalOptions& options) {
  std::vector<ExperimentRow> rows;
  for (const auto& m : models) {
    const std::string tag = scheme_tag(m.params);
    for (double snr : snr_grid_db) {
      for (int l : layer_grid) {
        if (l < 1) throw Error(ErrorCode::kLayerOutOfRange, "layer grid entries must be >= 1");
        if (l > m.params.config.layers) continue;
        const QualityReport r = evaluate_model(m.params, images, snr, l, options);
        rows.push_back({tag, m.name, snr, l, r.psnr_db, r.ms_ssim});
      }
    }
  }
  return rows;
}

std::vector<ExperimentRow> sweep_baseline(const std::vector<ImageTensor>& images, const std::vector<double>& snr_grid_db,
                                          const SeparationConfig& config) {
  std::vector<ExperimentRow> rows;
  const std::string name = "separation@" + format_snr_tag(config.design_snr_db);
  for (double snr : snr_grid_db) {
    const auto r = separation_eval(images, snr, config);
    rows.push_back({"baseline", name, snr, 1, r.report.psnr_db, r.report.ms_ssim});
  }
  return rows;
}

bool plot_psnr_vs_snr(const ExperimentResult& result, const std::filesystem::path& path) {
  std::map<std::string, int> max_l;
  for (const auto& r : result.rows) {
    auto& v = max_l[r.scheme + " " + r.model];
    v = std::max(v, r.l);
  }
  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (const auto& r : result.rows) {
    const std::string key = r.scheme + " " + r.model;
    if (r.l != max_l[key] || !std::isfinite(r.snr_test_db) || !std::isfinite(r.psnr_db)) continue;
    auto [it, inserted] = index.emplace(key, series.size());
    if (inserted) series.push_back({key, {}});
    series[it->second].points.emplace_back(r.snr_test_db, r.psnr_db);
  }
  std::erase_if(series, [](const Series& s) { return s.points.size() < 2; });
  if (series.empty()) return false;
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());
  write_text(path, render_svg(series, "SNR_test (dB)", "PSNR (dB)", result.name + ": PSNR vs SNR", svg_comment(result)));
  return true;
}

bool plot_psnr_vs_layers(const ExperimentResult& result, const std::filesystem::path& path) {
  std::map<std::string, std::set<int>> layers;
  for (const auto& r : result.rows) layers[r.model].insert(r.l);
  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (const auto& r : result.rows) {
    if (layers[r.model].size() < 2 || !std::isfinite(r.psnr_db)) continue;
    const std::string key = r.model + " @" + format_db(r.snr_test_db) + " dB";
    auto [it, inserted] = index.emplace(key, series.size());
    if (inserted) series.push_back({key, {}});
    series[it->second].points.emplace_back(r.l, r.psnr_db);
  }
  if (series.empty()) return false;
  // Keep the legend readable: at most five evenly spaced SNR lines per model.
  if (series.size() > 10) {
    std::vector<Series> thinned;
    const std::size_t stride = (series.size() + 9) / 10;
    for (std::size_t i = 0; i < series.size(); i += stride) thinned.push_back(series[i]);
    series = std::move(thinned);
  }
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());
  write_text(path, render_svg(series, "layers received l", "PSNR (dB)", result.name + ": PSNR vs layers", svg_comment(result)));
  return true;
}

}  // namespace djscc
