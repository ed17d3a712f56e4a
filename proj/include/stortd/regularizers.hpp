#pragma once

#include <string>
#include <vector>

#include "stortd/tensor.hpp"

namespace stortd {

/// Gaussian-weighted similarity graph over the spatial locations.
/// weights(i,j) = exp(-||y_i - y_j||^2 / sigma^2) for i != j, zero diagonal.
struct SpatialGraph {
  Index n = 0;
  Mat weights;
  double sigma = 0.0;

  bool empty() const { return n == 0; }
};

/// Combinatorial Laplacian L = D - W with D = diag(row sums of W).
struct Laplacian {
  Mat l;
  Vec degree;

  Index n() const { return l.rows(); }
  bool empty() const { return l.rows() == 0; }

  static Laplacian zero(Index n) {
    return Laplacian{Mat::Zero(n, n), Vec::Zero(n)};
  }
};

/// Median of pairwise feature distances; the default bandwidth when none is
/// given.
double median_bandwidth(const std::vector<Vec>& day_series);

SpatialGraph build_graph(const std::vector<Vec>& day_series, double sigma);

Laplacian build_laplacian(const SpatialGraph& g);

/// tr(U_S^T L U_S). The pairwise form sum_{i,j} W(i,j) ||U_S[i,:]-U_S[j,:]||^2
/// over ordered pairs equals exactly twice this value.
double spatial_penalty(const Laplacian& l, const Mat& u_s);

/// Sum over rows of ||U_T[i+1,:]-U_T[i,:]||^2 with cyclic wrap, i.e.
/// ||Toeplitz(-1,1,0) U_T||_F^2 including the cyclic corner entry.
double temporal_penalty(const Mat& u_t);

/// Row r of L * U_S (L is symmetric).
Vec laplacian_row_combination(const Laplacian& l, const Mat& u_s, Index r);

/// 2*U_T[r,:] - U_T[r-1,:] - U_T[r+1,:] with cyclic wrap at both ends.
Vec toeplitz_row_combination(const Mat& u_t, Index r);

/// Loads a precomputed square symmetric adjacency matrix from CSV.
/// Validates symmetry and the zero diagonal.
SpatialGraph load_adjacency_csv(const std::string& path);

}  // namespace stortd
