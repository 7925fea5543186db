#include "hiermix/diagnostics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hiermix {

namespace {

struct Cell {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
};

std::vector<int> model_key(const MonitorRecord& r, ModelGrouping grouping) {
  if (grouping == ModelGrouping::GroupsOnly) return {static_cast<int>(r.k.size())};
  return r.k;
}

double sum_m2(const std::map<std::vector<int>, Cell>& cells) {
  double acc = 0.0;
  for (const auto& [key, cell] : cells) acc += cell.m2;
  return acc;
}

}  // namespace

DiagnosticSeries compute_diagnostics(const std::vector<std::vector<MonitorRecord>>& chains,
                                     const DiagnosticOptions& opts) {
  if (chains.size() < 2) throw std::invalid_argument("compute_diagnostics: need at least two chains");
  if (opts.checkpoint_every == 0) throw std::invalid_argument("compute_diagnostics: checkpoint spacing must be positive");
  std::vector<std::vector<const MonitorRecord*>> use(chains.size());
  std::size_t shortest = SIZE_MAX;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (const auto& r : chains[c]) {
      if (r.iteration > opts.first_iteration) use[c].push_back(&r);
    }
    shortest = std::min(shortest, use[c].size());
  }
  for (auto& u : use) u.resize(shortest);
  DiagnosticSeries series;
  series.chains = chains.size();
  series.grouping = opts.grouping;
  if (shortest == 0) return series;

  std::size_t last_iteration = 0;
  for (const auto& u : use) last_iteration = std::max(last_iteration, u.back()->iteration);
  // Incremental cells: the pooled set only grows between checkpoints.
  Cell total;
  std::vector<Cell> by_chain(chains.size());
  std::map<std::vector<int>, Cell> by_model;
  std::vector<std::map<std::vector<int>, Cell>> by_chain_model(chains.size());
  std::vector<std::size_t> cursor(chains.size(), 0);
  for (std::size_t t = opts.first_iteration + opts.checkpoint_every; t <= last_iteration;
       t += opts.checkpoint_every) {
    for (std::size_t c = 0; c < use.size(); ++c) {
      while (cursor[c] < use[c].size() && use[c][cursor[c]]->iteration <= t) {
        const MonitorRecord& r = *use[c][cursor[c]++];
        const std::vector<int> key = model_key(r, opts.grouping);
        total.add(r.log_likelihood);
        by_chain[c].add(r.log_likelihood);
        by_model[key].add(r.log_likelihood);
        by_chain_model[c][key].add(r.log_likelihood);
      }
    }
    if (total.n == 0.0) continue;
    DiagnosticPoint p;
    p.iteration = t;
    p.draws = static_cast<std::size_t>(total.n);
    const double n = total.n;
    p.v_hat = total.m2 / n;
    double wc = 0.0, wmwc = 0.0;
    for (std::size_t c = 0; c < use.size(); ++c) {
      wc += by_chain[c].m2;
      wmwc += sum_m2(by_chain_model[c]);
      for (const auto& [key, cell] : by_chain_model[c]) p.sparse_cells = p.sparse_cells || cell.n < 2.0;
    }
    p.w_c = wc / n;
    p.w_m = sum_m2(by_model) / n;
    p.w_mw_c = wmwc / n;
    p.b_m = p.v_hat - p.w_m;
    p.b_mw_c = p.w_c - p.w_mw_c;
    series.points.push_back(p);
  }
  return series;
}

ConvergenceReport converged(const DiagnosticSeries& series, std::size_t window, double tol) {
  ConvergenceReport rep;
  if (window == 0) window = 1;
  if (series.points.size() < window) {
    std::ostringstream msg;
    msg << "only " << series.points.size() << " checkpoints; need " << window;
    rep.reason = msg.str();
    return rep;
  }
  auto ratio = [](double num, double den, double scale) {
    const double eps = 1e-10 * std::max(1.0, scale);
    if (std::abs(num) <= eps && std::abs(den) <= eps) return 1.0;
    if (std::abs(den) <= eps) return std::numeric_limits<double>::infinity();
    return num / den;
  };
  auto inside = [tol](double r) { return r >= 1.0 - tol && r <= 1.0 + tol; };
  rep.converged = true;
  for (std::size_t i = series.points.size() - window; i < series.points.size(); ++i) {
    const DiagnosticPoint& p = series.points[i];
    const double r1 = ratio(p.w_c, p.v_hat, p.v_hat);
    const double r2 = ratio(p.w_mw_c, p.w_m, p.v_hat);
    const double r3 = ratio(p.b_mw_c, p.b_m, p.v_hat);
    rep.ratio_chain = r1;
    rep.ratio_model = r2;
    rep.ratio_between = r3;
    if (!(inside(r1) && inside(r2) && inside(r3)) && rep.converged) {
      rep.converged = false;
      std::ostringstream msg;
      msg << "curves apart at iteration " << p.iteration << " (W_c/V=" << r1 << ", W_mW_c/W_m=" << r2
          << ", B_mW_c/B_m=" << r3 << ")";
      rep.reason = msg.str();
    }
  }
  if (rep.converged) rep.reason = "all three ratios within tolerance over the trailing window";
  return rep;
}

}  // namespace hiermix
