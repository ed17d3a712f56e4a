#pragma once

#include <vector>

#include "stortd/regularizers.hpp"
#include "stortd/tensor.hpp"

namespace stortd::oracle {

/// Brute-force references for tests and the speedup benchmark. The row
/// solvers share no code with the engine's recursions: every contraction
/// below is an explicit summation loop.

/// Direct (non-recursive) solve for row r of the spatial factor: builds the
/// normal-equation matrix and right-hand side by explicit summation over
/// the whole slice history, then solves.
Vec direct_row_solve_spatial(const std::vector<Mat>& slices,
                             const std::vector<Mat>& masks,
                             const Tensor3& core, const Mat& u_temporal,
                             const Mat& u_spatial_prev,
                             const std::vector<Vec>& weights, Index r,
                             double lambda, double alpha, const Laplacian& lap);

/// Temporal analogue with 2*beta*(1-lambda)*I and cyclic neighbors.
Vec direct_row_solve_temporal(const std::vector<Mat>& slices,
                              const std::vector<Mat>& masks,
                              const Tensor3& core, const Mat& u_spatial,
                              const Mat& u_temporal_prev,
                              const std::vector<Vec>& weights, Index r,
                              double lambda, double beta);

struct BatchTuckerResult {
  Tensor3 completed;
  std::vector<double> objective;  // masked squared error per sweep
};

/// Naive batch reference: EM-style masked Tucker ALS (impute, then one
/// HOOI sweep per iteration). Desk scale only.
BatchTuckerResult batch_tucker_als(const Tensor3& data, const Tensor3& mask,
                                   const std::array<Index, 3>& ranks,
                                   int iters, uint64_t seed = 1);

}  // namespace stortd::oracle
