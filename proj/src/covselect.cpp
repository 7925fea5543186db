#include "hiermix/covselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hiermix/error.hpp"
#include "hiermix/kmeans.hpp"
#include "hiermix/special.hpp"

namespace hiermix {

const char* structure_name(CovStructure s) {
  switch (s) {
    case CovStructure::DiagTied: return "diagonal-tied";
    case CovStructure::DiagFree: return "diagonal-free";
    case CovStructure::FullTied: return "full-tied";
    case CovStructure::FullFree: return "full-free";
  }
  return "unknown";
}

int parameter_count(CovStructure s, int k, int d) {
  const int base = (k - 1) + k * d;
  switch (s) {
    case CovStructure::DiagTied: return base + d;
    case CovStructure::DiagFree: return base + k * d;
    case CovStructure::FullTied: return base + d * (d + 1) / 2;
    case CovStructure::FullFree: return base + k * d * (d + 1) / 2;
  }
  return base;
}

double bic(const MixtureFit& fit, std::size_t n) {
  return fit.log_likelihood - 0.5 * static_cast<double>(fit.parameters) * std::log(static_cast<double>(n));
}

namespace {

bool is_diagonal(CovStructure s) { return s == CovStructure::DiagTied || s == CovStructure::DiagFree; }
bool is_tied(CovStructure s) { return s == CovStructure::DiagTied || s == CovStructure::FullTied; }

// Raises eigenvalues (diagonal entries for diagonal structures) to `floor`.
bool apply_floor(Eigen::MatrixXd& cov, CovStructure s, double floor) {
  bool hit = false;
  if (is_diagonal(s)) {
    for (Eigen::Index b = 0; b < cov.rows(); ++b) {
      if (cov(b, b) < floor) {
        cov(b, b) = floor;
        hit = true;
      }
    }
    return hit;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd vals = eig.eigenvalues();
  for (Eigen::Index b = 0; b < vals.size(); ++b) {
    if (vals[b] < floor) {
      vals[b] = floor;
      hit = true;
    }
  }
  if (hit) cov = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  return hit;
}

struct EmRun {
  MixtureFit fit;
  bool degenerate = false;
};

// M-step from responsibilities (n x k); returns false on a vanishing component.
// Untied covariances need at least d + 1 effective points per component, else
// EM can chase the unbounded likelihood of a collapsing cluster.
bool m_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& resp, CovStructure s, double floor,
            MixtureFit& fit) {
  const Eigen::Index n = x.rows(), d = x.cols(), k = resp.cols();
  fit.weights.assign(static_cast<std::size_t>(k), 0.0);
  fit.means.assign(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(d));
  fit.covariances.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(d, d));
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double nk = resp.col(c).sum();
    const double need = is_tied(s) ? 1e-8 * static_cast<double>(n) : static_cast<double>(d + 1);
    if (!(nk > need)) return false;
    const auto ci = static_cast<std::size_t>(c);
    fit.weights[ci] = nk / static_cast<double>(n);
    fit.means[ci] = (x.transpose() * resp.col(c)) / nk;
    const Eigen::MatrixXd centered = x.rowwise() - fit.means[ci].transpose();
    Eigen::MatrixXd scatter = centered.transpose() * resp.col(c).asDiagonal() * centered;
    if (is_tied(s)) {
      pooled += scatter;
    } else {
      fit.covariances[ci] = scatter / nk;
    }
  }
  if (is_tied(s)) {
    pooled /= static_cast<double>(n);
    for (auto& cov : fit.covariances) cov = pooled;
  }
  for (auto& cov : fit.covariances) {
    if (is_diagonal(s)) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
    if (apply_floor(cov, s, floor)) fit.floored = true;
    cov = (0.5 * (cov + cov.transpose())).eval();
  }
  return true;
}

// E-step: fills responsibilities and returns the log-likelihood.
double e_step(const Eigen::MatrixXd& x, const MixtureFit& fit, Eigen::MatrixXd& resp) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const auto k = static_cast<Eigen::Index>(fit.weights.size());
  resp.resize(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const Eigen::LLT<Eigen::MatrixXd> llt(fit.covariances[ci]);
    if (llt.info() != Eigen::Success) throw NumericalError("EM: covariance not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const Eigen::MatrixXd centered = (x.rowwise() - fit.means[ci].transpose()).transpose();
    const Eigen::MatrixXd solved = llt.matrixL().solve(centered);
    const Eigen::VectorXd maha = solved.colwise().squaredNorm().transpose();
    resp.col(c) = (std::log(fit.weights[ci]) - 0.5 * (static_cast<double>(d) * kLogTwoPi + log_det) - 0.5 * maha.array()).matrix();
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = resp.row(i).maxCoeff();
    const double lse = top + std::log((resp.row(i).array() - top).exp().sum());
    resp.row(i) = (resp.row(i).array() - lse).exp();
    total += lse;
  }
  return total;
}

EmRun run_once(const Eigen::MatrixXd& x, int k, CovStructure s, double floor, Rng& rng,
               const EmOptions& opts) {
  const Eigen::Index n = x.rows(), d = x.cols();
  EmRun run;
  run.fit.structure = s;
  run.fit.k = k;
  std::vector<double> rows(static_cast<std::size_t>(n * d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index b = 0; b < d; ++b) rows[static_cast<std::size_t>(i * d + b)] = x(i, b);
  }
  const std::vector<double> seeds = kmeanspp_seeds(rows, static_cast<std::size_t>(d), static_cast<std::size_t>(k), rng);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      double dist = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) {
        const double r = x(i, b) - seeds[static_cast<std::size_t>(c * d + b)];
        dist += r * r;
      }
      if (dist < best) {
        best = dist;
        arg = c;
      }
    }
    resp(i, arg) = 1.0;
  }
  if (!m_step(x, resp, s, floor, run.fit)) {
    run.degenerate = true;
    return run;
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double ll = e_step(x, run.fit, resp);
    run.fit.history.push_back(ll);
    run.fit.iterations = it + 1;
    run.fit.log_likelihood = ll;
    if (std::isfinite(prev) && std::abs(ll - prev) <= opts.tolerance * std::abs(ll)) {
      run.fit.converged = true;
      break;
    }
    prev = ll;
    if (!m_step(x, resp, s, floor, run.fit)) {
      run.degenerate = true;
      return run;
    }
  }
  return run;
}

}  // namespace

MixtureFit fit_em(const Eigen::MatrixXd& points, int k, CovStructure s, Rng& rng,
                  const EmOptions& opts) {
  if (k < 1) throw std::invalid_argument("fit_em: K must be >= 1");
  if (points.rows() <= k) throw std::invalid_argument("fit_em: need more points than components");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const double data_var = (points.rowwise() - mean).array().square().mean();
  const double floor = opts.floor_factor * (data_var > 0.0 ? data_var : 1.0);
  MixtureFit best;
  bool have = false;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    EmRun run;
    try {
      run = run_once(points, k, s, floor, rng, opts);
    } catch (const NumericalError&) {
      continue;
    }
    if (run.degenerate) continue;
    if (!have || run.fit.log_likelihood > best.log_likelihood) {
      best = std::move(run.fit);
      have = true;
    }
  }
  if (!have) throw NumericalError("fit_em: every restart degenerated");
  best.parameters = parameter_count(s, k, static_cast<int>(points.cols()));
  best.bic = bic(best, static_cast<std::size_t>(points.rows()));
  return best;
}

StructureRanking select_structure(const Eigen::MatrixXd& points, int k_min, int k_max, Rng& rng,
                                  const EmOptions& opts) {
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("select_structure: bad K range");
  const int top = std::min(k_max, static_cast<int>(points.rows()) - 1);
  if (top < k_min) throw std::invalid_argument("select_structure: not enough points for the K range");
  StructureRanking out;
  for (std::size_t si = 0; si < kAllStructures.size(); ++si) {
    out.best_bic[si] = -std::numeric_limits<double>::infinity();
    out.best_k[si] = 0;
    for (int k = k_min; k <= top; ++k) {
      MixtureFit fit;
      try {
        fit = fit_em(points, k, kAllStructures[si], rng, opts);
      } catch (const NumericalError&) {
        continue;
      }
      if (fit.bic > out.best_bic[si]) {
        out.best_bic[si] = fit.bic;
        out.best_k[si] = k;
        out.floored[si] = fit.floored;
      }
    }
  }
  std::array<std::size_t, 4> idx{0, 1, 2, 3};
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return out.best_bic[a] > out.best_bic[b]; });
  for (std::size_t i = 0; i < 4; ++i) out.order[i] = kAllStructures[idx[i]];
  return out;
}

Eigen::MatrixXd object_matrix(const Dataset& data, std::size_t i) {
  const std::size_t d = data.dimension;
  const std::size_t n = data.num_points(i);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t b = 0; b < d; ++b) m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = data.point(i, j)[b];
  }
  return m;
}

std::vector<ObjectSelection> select_batch(const Dataset& data, int k_min, int k_max,
                                          std::uint64_t seed, const EmOptions& opts) {
  std::vector<ObjectSelection> out;
  out.reserve(data.num_objects());
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    ObjectSelection sel;
    sel.id = data.objects[i].id;
    if (data.num_points(i) <= static_cast<std::size_t>(k_min)) {
      sel.skipped = true;
      sel.note = "too few points (" + std::to_string(data.num_points(i)) + ") for K >= " + std::to_string(k_min);
      out.push_back(std::move(sel));
      continue;
    }
    Rng rng = make_rng(seed, i);
    try {
      sel.ranking = select_structure(object_matrix(data, i), k_min, k_max, rng, opts);
    } catch (const std::exception& e) {
      sel.skipped = true;
      sel.note = e.what();
    }
    out.push_back(std::move(sel));
  }
  return out;
}

}  // namespace hiermix
