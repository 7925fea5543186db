#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hiermix/covselect.hpp"
#include "hiermix/diagnostics.hpp"
#include "hiermix/prc.hpp"

namespace hiermix {

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart; non-finite points are skipped.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<LineSeries>& series);
/// Equal-width histogram with `bins` bars; an optional interval is shaded.
std::string svg_histogram(const std::string& title, const std::vector<double>& values,
                          std::size_t bins, double shade_lo, double shade_hi);

std::string diagnostics_csv(const DiagnosticSeries& series);
/// Writes <prefix>.csv plus <prefix>_chains.svg, <prefix>_models.svg and
/// <prefix>_between.svg. Returns the written paths.
std::vector<std::filesystem::path> write_diagnostics_report(const DiagnosticSeries& series,
                                                            const std::filesystem::path& prefix);

/// Columns: w,m,n,r0,mean,hpd_lo,hpd_hi,level,samples,clamped,below_threshold.
std::string prc_csv(const std::vector<PrcSummary>& rows, double threshold);
std::vector<std::filesystem::path> write_prc_report(const std::vector<PrcSummary>& rows,
                                                    double threshold,
                                                    const std::filesystem::path& prefix);

/// Columns: object_id,winner,bic_<structure> x4,k_<structure> x4,note.
std::string bic_objects_csv(const std::vector<ObjectSelection>& rows);
/// Columns: rank,structure,count,percent over the non-skipped objects, one row
/// per (rank, structure) pair.
std::string bic_aggregate_csv(const std::vector<ObjectSelection>& rows);
std::vector<std::filesystem::path> write_bic_report(const std::vector<ObjectSelection>& rows,
                                                    const std::filesystem::path& prefix);

}  // namespace hiermix
