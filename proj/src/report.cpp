#include "hiermix/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "hiermix/io.hpp"

namespace hiermix {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  return out + "\"";
}

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo <= 0) {
      const double pad = std::max(1e-12, std::abs(lo) * 0.05 + 1e-12);
      lo -= pad;
      hi += pad;
    }
  }
};

void axes(std::ostringstream& os, const std::string& title, const std::string& x_label,
          const Range& xr, const Range& yr) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<path d=\"M" << x0 << " " << y1 << " L" << x0 << " " << y0 << " L" << x1 << " " << y0
     << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0, fy = y0 - (y0 - y1) * t / 4.0;
    os << "<text x=\"" << fx << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
       << short_num(xr.lo + (xr.hi - xr.lo) * t / 4.0) << "</text>\n"
       << "<text x=\"" << x0 - 6 << "\" y=\"" << fy + 3 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << short_num(yr.lo + (yr.hi - yr.lo) * t / 4.0) << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
}

double px(double v, const Range& r) { return kLeft + (v - r.lo) / (r.hi - r.lo) * (kWidth - kLeft - kRight); }
double py(double v, const Range& r) {
  return kHeight - kBottom - (v - r.lo) / (r.hi - r.lo) * (kHeight - kBottom - kTop);
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<LineSeries>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
    }
  }
  xr.settle();
  yr.settle();
  std::ostringstream os;
  axes(os, title, x_label, xr, yr);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kColours[k % 4];
    std::ostringstream path;
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      path << (pen ? " L" : " M") << px(s.x[i], xr) << " " << py(s.y[i], yr);
      pen = true;
    }
    os << "<path d=\"" << path.str() << "\" stroke=\"" << colour << "\" fill=\"none\" stroke-width=\"1.5\""
       << (k % 2 ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
    os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << colour << "\">"
       << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_histogram(const std::string& title, const std::vector<double>& values,
                          std::size_t bins, double shade_lo, double shade_hi) {
  bins = std::max<std::size_t>(bins, 1);
  Range xr;
  for (double v : values) xr.add(v);
  xr.settle();
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto b = static_cast<std::size_t>((v - xr.lo) / (xr.hi - xr.lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  Range yr;
  yr.lo = 0;
  yr.hi = static_cast<double>(std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end())));
  std::ostringstream os;
  axes(os, title, "value", xr, yr);
  if (std::isfinite(shade_lo) && std::isfinite(shade_hi) && shade_hi >= shade_lo) {
    const double a = px(std::max(shade_lo, xr.lo), xr), b = px(std::min(shade_hi, xr.hi), xr);
    os << "<rect x=\"" << a << "\" y=\"" << kTop << "\" width=\"" << std::max(0.0, b - a) << "\" height=\""
       << kHeight - kTop - kBottom << "\" fill=\"#ffdd99\" opacity=\"0.5\"/>\n";
  }
  const double bw = (xr.hi - xr.lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double l = px(xr.lo + bw * b, xr), r = px(xr.lo + bw * (b + 1), xr);
    const double top = py(static_cast<double>(counts[b]), yr);
    os << "<rect x=\"" << l << "\" y=\"" << top << "\" width=\"" << std::max(0.0, r - l - 0.5) << "\" height=\""
       << kHeight - kBottom - top << "\" fill=\"" << kColours[0] << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string diagnostics_csv(const DiagnosticSeries& series) {
  std::ostringstream os;
  os << "iteration,draws,v_hat,w_c,w_m,w_mw_c,b_m,b_mw_c,sparse_cells\n";
  for (const auto& p : series.points) {
    os << p.iteration << "," << p.draws << "," << num(p.v_hat) << "," << num(p.w_c) << "," << num(p.w_m) << ","
       << num(p.w_mw_c) << "," << num(p.b_m) << "," << num(p.b_mw_c) << "," << (p.sparse_cells ? 1 : 0) << "\n";
  }
  return os.str();
}

std::vector<fs::path> write_diagnostics_report(const DiagnosticSeries& series, const fs::path& prefix) {
  std::vector<double> it, v, wc, wm, wmwc, bm, bmwc;
  for (const auto& p : series.points) {
    it.push_back(static_cast<double>(p.iteration));
    v.push_back(p.v_hat);
    wc.push_back(p.w_c);
    wm.push_back(p.w_m);
    wmwc.push_back(p.w_mw_c);
    bm.push_back(p.b_m);
    bmwc.push_back(p.b_mw_c);
  }
  const std::string base = prefix.string();
  const std::vector<fs::path> paths = {base + ".csv", base + "_chains.svg", base + "_models.svg", base + "_between.svg"};
  write_atomic(paths[0], diagnostics_csv(series));
  write_atomic(paths[1], svg_line_plot("Overall and within-chain variance", "iteration",
                                       {{"V", it, v}, {"Wc", it, wc}}));
  write_atomic(paths[2], svg_line_plot("Within-model and within-model-within-chain variance", "iteration",
                                       {{"Wm", it, wm}, {"WmWc", it, wmwc}}));
  write_atomic(paths[3], svg_line_plot("Between-model variance, pooled and within chains", "iteration",
                                       {{"Bm", it, bm}, {"BmWc", it, bmwc}}));
  return paths;
}

std::string prc_csv(const std::vector<PrcSummary>& rows, double threshold) {
  std::ostringstream os;
  os << "w,m,n,r0,mean,hpd_lo,hpd_hi,level,samples,clamped,below_threshold\n";
  for (const auto& r : rows) {
    os << r.query.w << "," << r.query.m << "," << r.query.n << "," << num(r.query.r0) << "," << num(r.mean) << ","
       << num(r.lo) << "," << num(r.hi) << "," << num(r.level) << "," << r.samples << "," << r.clamped << ","
       << (r.hi < threshold ? 1 : 0) << "\n";
  }
  return os.str();
}

std::vector<fs::path> write_prc_report(const std::vector<PrcSummary>& rows, double threshold,
                                       const fs::path& prefix) {
  std::vector<fs::path> paths = {prefix.string() + ".csv"};
  write_atomic(paths[0], prc_csv(rows, threshold));
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const auto& r = rows[q];
    fs::path svg = prefix.string() + "_hist_" + std::to_string(r.query.w) + "_" + std::to_string(r.query.m) + "_" +
                   std::to_string(r.query.n) + ".svg";
    if (std::find(paths.begin(), paths.end(), svg) != paths.end()) {
      svg = prefix.string() + "_hist_" + std::to_string(q + 1) + ".svg";
    }
    const std::string title = "Posterior PRC, w=" + std::to_string(r.query.w) + " m=" + std::to_string(r.query.m) +
                              " n=" + std::to_string(r.query.n);
    write_atomic(svg, svg_histogram(title, r.values, 40, r.lo, r.hi));
    paths.push_back(svg);
  }
  return paths;
}

std::string bic_objects_csv(const std::vector<ObjectSelection>& rows) {
  std::ostringstream os;
  os << "object_id,winner";
  for (CovStructure s : kAllStructures) os << ",bic_" << structure_name(s);
  for (CovStructure s : kAllStructures) os << ",k_" << structure_name(s);
  os << ",note\n";
  for (const auto& r : rows) {
    os << csv_field(r.id) << "," << (r.skipped ? "" : structure_name(r.ranking.winner()));
    for (std::size_t s = 0; s < 4; ++s) os << "," << (r.skipped ? "" : num(r.ranking.best_bic[s]));
    for (std::size_t s = 0; s < 4; ++s) os << "," << (r.skipped ? "" : std::to_string(r.ranking.best_k[s]));
    os << "," << csv_field(r.note) << "\n";
  }
  return os.str();
}

std::string bic_aggregate_csv(const std::vector<ObjectSelection>& rows) {
  std::array<std::array<std::size_t, 4>, 4> counts{};
  std::size_t used = 0;
  for (const auto& r : rows) {
    if (r.skipped) continue;
    ++used;
    for (std::size_t rank = 0; rank < 4; ++rank) counts[rank][static_cast<int>(r.ranking.order[rank])]++;
  }
  std::ostringstream os;
  os << "rank,structure,count,percent\n";
  for (std::size_t rank = 0; rank < 4; ++rank) {
    for (std::size_t s = 0; s < 4; ++s) {
      const double pct = used ? 100.0 * static_cast<double>(counts[rank][s]) / static_cast<double>(used) : 0.0;
      os << rank + 1 << "," << structure_name(kAllStructures[s]) << "," << counts[rank][s] << "," << num(pct) << "\n";
    }
  }
  return os.str();
}

std::vector<fs::path> write_bic_report(const std::vector<ObjectSelection>& rows, const fs::path& prefix) {
  const std::vector<fs::path> paths = {prefix.string() + "_objects.csv", prefix.string() + "_aggregate.csv"};
  write_atomic(paths[0], bic_objects_csv(rows));
  write_atomic(paths[1], bic_aggregate_csv(rows));
  return paths;
}

}  // namespace hiermix
