#include "stortd/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stortd {

double median_bandwidth(const std::vector<Vec>& day_series) {
  std::vector<double> dists;
  const size_t n = day_series.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      dists.push_back((day_series[i] - day_series[j]).norm());
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const double med = dists[dists.size() / 2];
  return med > 0.0 ? med : 1.0;
}

SpatialGraph build_graph(const std::vector<Vec>& day_series, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("build_graph: sigma must be positive");
  const Index n = static_cast<Index>(day_series.size());
  for (const auto& y : day_series)
    if (y.size() != day_series.front().size())
      throw std::invalid_argument("build_graph: feature vectors differ in length");
  SpatialGraph g;
  g.n = n;
  g.sigma = sigma;
  g.weights = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (day_series[static_cast<size_t>(i)] -
                         day_series[static_cast<size_t>(j)]).squaredNorm();
      const double w = std::exp(-d2 / (sigma * sigma));
      g.weights(i, j) = w;
      g.weights(j, i) = w;
    }
  return g;
}

Laplacian build_laplacian(const SpatialGraph& g) {
  Laplacian lap;
  lap.degree = g.weights.rowwise().sum();
  lap.l = -g.weights;
  lap.l.diagonal() += lap.degree;
  return lap;
}

double spatial_penalty(const Laplacian& l, const Mat& u_s) {
  if (l.n() != u_s.rows())
    throw std::invalid_argument("spatial_penalty: dimension mismatch");
  return (u_s.transpose() * l.l * u_s).trace();
}

double temporal_penalty(const Mat& u_t) {
  const Index n = u_t.rows();
  if (n < 2) throw std::invalid_argument("temporal_penalty: need at least 2 rows");
  double p = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index next = (i + 1) % n;
    p += (u_t.row(next) - u_t.row(i)).squaredNorm();
  }
  return p;
}

Vec laplacian_row_combination(const Laplacian& l, const Mat& u_s, Index r) {
  if (r < 0 || r >= l.n())
    throw std::out_of_range("laplacian_row_combination: row out of range");
  return u_s.transpose() * l.l.col(r);
}

Vec toeplitz_row_combination(const Mat& u_t, Index r) {
  const Index n = u_t.rows();
  if (r < 0 || r >= n)
    throw std::out_of_range("toeplitz_row_combination: row out of range");
  const Index prev = (r + n - 1) % n;
  const Index next = (r + 1) % n;
  return (2.0 * u_t.row(r) - u_t.row(prev) - u_t.row(next)).transpose();
}

SpatialGraph load_adjacency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_adjacency_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const Index n = static_cast<Index>(rows.size());
  SpatialGraph g;
  g.n = n;
  g.sigma = 0.0;  // externally provided weights, no bandwidth
  g.weights = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[static_cast<size_t>(i)].size()) != n)
      throw std::runtime_error("load_adjacency_csv: matrix is not square");
    for (Index j = 0; j < n; ++j)
      g.weights(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  if (!g.weights.isApprox(g.weights.transpose(), 1e-12))
    throw std::runtime_error("load_adjacency_csv: matrix is not symmetric");
  if (g.weights.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw std::runtime_error("load_adjacency_csv: diagonal must be zero");
  return g;
}

}  // namespace stortd
