#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "entromap/common.hpp"
#include "entromap/ingest.hpp"
#include "entromap/text.hpp"

namespace entromap {

struct LassoOptions {
  double tol_coef = 1e-9;
  double tol_obj = 1e-10;
  int max_sweeps = 10000;
  /// When set, receives the objective after every coordinate sweep.
  std::function<void(double)> on_sweep;
};

/// Settings for the per-stock penalty selection.
struct CvSettings {
  int folds = 10;
  std::uint64_t seed = 42;
  int grid_size = 100;
  double grid_ratio = 1e-3;
  LassoOptions lasso;
};

struct LassoFit {
  int target = -1;
  /// Nonzero coefficients as (regressor index, value), ascending by index.
  std::vector<std::pair<int, double>> coefficients;
  double lambda = 0.0;
  /// (lambda, mean out-of-fold squared error), in grid order.
  std::vector<std::pair<double, double>> cv_curve;
};

/// Directed binary network; (i, j) present means a link from i to j.
struct DirectedAdjacency {
  int n = 0;
  std::set<std::pair<int, int>> entries;

  bool has(int i, int j) const { return entries.count({i, j}) > 0; }
  std::size_t edge_count() const { return entries.size(); }

  void add(int i, int j) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error("edge endpoint out of range");
    if (i == j) throw Error("self-loops are not allowed");
    entries.emplace(i, j);
  }
};

// ---------------------------------------------------------------------------
// Solver

/// (1/2T) ||y - X b||^2 + lambda ||b||_1
inline double lasso_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                              double lambda) {
  const double T = static_cast<double>(y.size());
  return (y - X * beta).squaredNorm() / (2.0 * T) + lambda * beta.lpNorm<1>();
}

/// Smallest penalty with an all-zero solution: max_j |X_j' y| / T.
inline double lambda_max(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
  if (X.cols() == 0 || y.size() == 0) return 0.0;
  return (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(y.size());
}

/// Log-spaced descending grid from lambda_max down to ratio * lambda_max.
/// Collapses to {0} when lambda_max is zero.
inline std::vector<double> make_lambda_grid(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, int count = 100,
                                            double ratio = 1e-3) {
  const double top = lambda_max(y, X);
  if (!(top > 0.0) || count < 2) return {top > 0.0 ? top : 0.0};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = std::log(ratio) / (count - 1);
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = top * std::exp(step * k);
  grid.front() = top;
  return grid;
}

namespace detail {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline bool kkt_holds(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta, double lambda, double tol) {
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) {
      const double s = beta[j] > 0 ? 1.0 : -1.0;
      if (std::abs(grad[j] - lambda * s) > tol) return false;
    } else if (std::abs(grad[j]) > lambda + tol) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// Coordinate descent along a descending penalty grid with warm starts.
/// y and the columns of X are expected to be centered.
inline std::vector<Eigen::VectorXd> solve_lasso_path(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                                     std::span<const double> grid, const LassoOptions& opt = {}) {
  if (y.size() != X.rows()) throw Error("lasso: y and X row counts differ");
  if (y.size() < 2) throw Error("lasso: at least two observations required");
  if (!y.allFinite() || !X.allFinite()) throw Error("lasso: non-finite input");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k])) throw Error("lasso: penalties must be finite and >= 0");
    if (k > 0 && !(grid[k] < grid[k - 1])) throw Error("lasso: penalty grid must be strictly descending");
  }

  const auto p = X.cols();
  const double T = static_cast<double>(y.size());
  // Covariance updates: grad = X'(y - X b) / T is kept current, so a
  // coordinate visit costs O(1) and a coefficient change O(p).
  const Eigen::MatrixXd gram = X.transpose() * X / T;
  const Eigen::VectorXd xty = X.transpose() * y / T;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad = xty;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
  std::vector<Eigen::VectorXd> path;
  path.reserve(grid.size());

  for (double lambda : grid) {
    int sweeps = 0;

    // One pass over `coords`; returns the largest coefficient change.
    auto sweep = [&](const std::vector<Eigen::Index>& coords) {
      double max_delta = 0.0;
      for (Eigen::Index j : coords) {
        const double g = gram(j, j);
        if (g == 0.0) continue;
        const double old = beta[j];
        const double fresh = detail::soft_threshold(grad[j] + g * old, lambda) / g;
        if (fresh != old) {
          grad.noalias() -= gram.col(j) * (fresh - old);
          beta[j] = fresh;
          max_delta = std::max(max_delta, std::abs(fresh - old));
        }
      }
      ++sweeps;
      if (opt.on_sweep) opt.on_sweep(lasso_objective(y, X, beta, lambda));
      if (sweeps > opt.max_sweeps) throw Error("lasso: coordinate descent did not converge");
      return max_delta;
    };

    while (true) {
      if (sweep(all) <= opt.tol_coef) {
        grad = xty - gram * beta;
        if (detail::kkt_holds(grad, beta, lambda, 10.0 * opt.tol_obj)) break;
        continue;
      }
      // Iterate on the active set until it settles, then re-check all coordinates.
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (beta[j] != 0.0) active.push_back(j);
      }
      while (!active.empty() && sweep(active) > opt.tol_coef) {
      }
    }
    path.push_back(beta);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace detail {

struct Centered {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  double y_mean;
  Eigen::RowVectorXd x_mean;
};

inline Centered center(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
  Centered c;
  c.y_mean = y.mean();
  c.x_mean = X.colwise().mean();
  c.y = y.array() - c.y_mean;
  c.X = X.rowwise() - c.x_mean;
  return c;
}

template <typename Idx>
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const Idx& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(rows[r]);
  return out;
}

template <typename Idx>
Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const Idx& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[rows[r]];
  return out;
}

}  // namespace detail

/// K-fold selection of the penalty on raw (uncentered) y and X. Folds are
/// contiguous blocks of one seeded shuffle of the rows; each fold is centered
/// with its training means. The smallest mean out-of-fold squared error wins,
/// ties going to the larger penalty, and the final fit uses every row.
inline LassoFit cross_validate_lambda(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, int folds,
                                      std::span<const double> grid, std::uint64_t seed,
                                      const LassoOptions& opt = {}) {
  if (grid.empty()) throw Error("cv: empty penalty grid");
  if (folds < 2) throw Error("cv: at least two folds required");
  const auto T = y.size();
  if (T < folds) throw Error("cv: fold with < 1 row (T=" + std::to_string(T) + ", K=" + std::to_string(folds) + ")");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) perm[static_cast<std::size_t>(t)] = t;
  auto rng = make_rng(seed);
  shuffle(perm, rng);

  std::vector<double> sse(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const auto lo = static_cast<std::size_t>(f * T / folds), hi = static_cast<std::size_t>((f + 1) * T / folds);
    std::vector<Eigen::Index> test(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                   perm.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<Eigen::Index> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(lo));
    train.insert(train.end(), perm.begin() + static_cast<std::ptrdiff_t>(hi), perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());

    auto c = detail::center(detail::take_rows(y, train), detail::take_rows(X, train));
    auto path = solve_lasso_path(c.y, c.X, grid, opt);
    Eigen::MatrixXd Xt = detail::take_rows(X, test).rowwise() - c.x_mean;
    Eigen::VectorXd yt = detail::take_rows(y, test).array() - c.y_mean;
    for (std::size_t k = 0; k < grid.size(); ++k) sse[k] += (yt - Xt * path[k]).squaredNorm();
  }

  LassoFit fit;
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double loss = sse[k] / static_cast<double>(T);
    fit.cv_curve.emplace_back(grid[k], loss);
    if (loss < fit.cv_curve[best].second) best = k;
  }
  fit.lambda = grid[best];

  auto c = detail::center(y, X);
  auto path = solve_lasso_path(c.y, c.X, grid.first(best + 1), opt);
  const auto& beta = path.back();
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta[j]) > opt.tol_coef) fit.coefficients.emplace_back(static_cast<int>(j), beta[j]);
  }
  return fit;
}

/// Regresses stock `target` on every other stock of the panel. Coefficient
/// indices in the result refer to stock columns of the panel.
inline LassoFit fit_stock(const Eigen::MatrixXd& returns, int target, const CvSettings& cv = {}) {
  const auto N = returns.cols();
  if (target < 0 || target >= N) throw Error("fit_stock: target out of range");
  Eigen::VectorXd y = returns.col(target);
  Eigen::MatrixXd X(returns.rows(), N - 1);
  std::vector<int> col_to_stock;
  for (Eigen::Index j = 0, c = 0; j < N; ++j) {
    if (j == target) continue;
    X.col(c++) = returns.col(j);
    col_to_stock.push_back(static_cast<int>(j));
  }
  auto centered = detail::center(y, X);
  auto grid = make_lambda_grid(centered.y, centered.X, cv.grid_size, cv.grid_ratio);
  auto fit = cross_validate_lambda(y, X, cv.folds, grid, cv.seed, cv.lasso);
  fit.target = target;
  for (auto& [idx, value] : fit.coefficients) idx = col_to_stock[static_cast<std::size_t>(idx)];
  return fit;
}

/// Link i -> j whenever stock i carries a nonzero coefficient in the
/// regression of stock j.
inline DirectedAdjacency build_adjacency(std::span<const LassoFit> fits, int n, double tol_coef = 1e-9) {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  DirectedAdjacency adj;
  adj.n = n;
  for (const auto& fit : fits) {
    const int j = fit.target;
    if (j < 0 || j >= n) throw Error("build_adjacency: target out of range");
    if (seen[static_cast<std::size_t>(j)]) throw Error("build_adjacency: duplicate target " + std::to_string(j));
    seen[static_cast<std::size_t>(j)] = true;
    for (const auto& [i, beta] : fit.coefficients) {
      if (i == j) continue;
      if (std::abs(beta) > tol_coef) adj.add(i, j);
    }
  }
  for (int j = 0; j < n; ++j) {
    if (!seen[static_cast<std::size_t>(j)]) throw Error("build_adjacency: missing fit for target " + std::to_string(j));
  }
  return adj;
}

/// Runs one regression per stock and assembles the network.
inline std::pair<std::vector<LassoFit>, DirectedAdjacency> infer_network(const Eigen::MatrixXd& returns,
                                                                         const CvSettings& cv = {}) {
  const int n = static_cast<int>(returns.cols());
  if (n < 2) throw Error("infer_network: at least two stocks required");
  std::vector<LassoFit> fits;
  fits.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fits.push_back(fit_stock(returns, i, cv));
  auto adj = build_adjacency(fits, n, cv.lasso.tol_coef);
  return {std::move(fits), std::move(adj)};
}

// ---------------------------------------------------------------------------
// Edge list TSV

inline void write_edge_list(std::ostream& out, const DirectedAdjacency& adj, const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto [i, j] : adj.entries) edges.emplace_back(names.at(static_cast<std::size_t>(i)), names.at(static_cast<std::size_t>(j)));
  std::sort(edges.begin(), edges.end());
  for (const auto& [s, d] : edges) out << s << '\t' << d << '\n';
}

/// Parses an edge list against a known node naming.
inline DirectedAdjacency parse_edge_list(std::istream& in, const std::vector<std::string>& names) {
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < names.size(); ++k) index[names[k]] = static_cast<int>(k);
  DirectedAdjacency adj;
  adj.n = static_cast<int>(names.size());
  std::string line;
  std::size_t lineno = 0;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 2) throw Error(text::at_line(lineno) + "expected src<TAB>dst");
    auto s = index.find(f[0]), d = index.find(f[1]);
    if (s == index.end() || d == index.end()) throw Error(text::at_line(lineno) + "unknown node");
    adj.add(s->second, d->second);
  }
  return adj;
}

}  // namespace entromap
