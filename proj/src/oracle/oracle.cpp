#include "oracle.hpp"

#include <cmath>

#include "stortd/rng.hpp"

namespace stortd::oracle {

namespace {

// D_k(i1, j2) = sum_{j1,j3} U_T(i1,j1) G(j1,j2,j3) u_Dk(j3), by definition.
Mat build_d(const Tensor3& core, const Mat& u_temporal, const Vec& weight) {
  const Index n1 = u_temporal.rows();
  const Index r1 = core.dim(1), r2 = core.dim(2), r3 = core.dim(3);
  Mat d = Mat::Zero(n1, r2);
  for (Index i1 = 0; i1 < n1; ++i1)
    for (Index j2 = 0; j2 < r2; ++j2)
      for (Index j1 = 0; j1 < r1; ++j1)
        for (Index j3 = 0; j3 < r3; ++j3)
          d(i1, j2) += u_temporal(i1, j1) * core(j1, j2, j3) * weight(j3);
  return d;
}

// H_k(j1, i2) = sum_{j2,j3} G(j1,j2,j3) U_S(i2,j2) u_Dk(j3).
Mat build_h(const Tensor3& core, const Mat& u_spatial, const Vec& weight) {
  const Index n2 = u_spatial.rows();
  const Index r1 = core.dim(1), r2 = core.dim(2), r3 = core.dim(3);
  Mat h = Mat::Zero(r1, n2);
  for (Index j1 = 0; j1 < r1; ++j1)
    for (Index i2 = 0; i2 < n2; ++i2)
      for (Index j2 = 0; j2 < r2; ++j2)
        for (Index j3 = 0; j3 < r3; ++j3)
          h(j1, i2) += core(j1, j2, j3) * u_spatial(i2, j2) * weight(j3);
  return h;
}

Vec solve_system(const Mat& a, const Vec& b) {
  const Vec x = a.colPivHouseholderQr().solve(b);
  if (x.allFinite()) return x;
  return a.completeOrthogonalDecomposition().pseudoInverse() * b;
}

}  // namespace

Vec direct_row_solve_spatial(const std::vector<Mat>& slices,
                             const std::vector<Mat>& masks,
                             const Tensor3& core, const Mat& u_temporal,
                             const Mat& u_spatial_prev,
                             const std::vector<Vec>& weights, Index r,
                             double lambda, double alpha,
                             const Laplacian& lap) {
  const Index r2 = core.dim(2);
  const size_t t = slices.size();
  Mat normal = Mat::Zero(r2, r2);
  Vec rhs = Vec::Zero(r2);
  for (size_t k = 0; k < t; ++k) {
    const double w = std::pow(lambda, static_cast<double>(t - 1 - k));
    const Mat d = build_d(core, u_temporal, weights[k]);
    const Mat& slice = slices[k];
    const Mat& mask = masks[k];
    for (Index i1 = 0; i1 < d.rows(); ++i1) {
      if (mask(i1, r) == 0.0) continue;
      normal += w * d.row(i1).transpose() * d.row(i1);
      rhs += w * slice(i1, r) * d.row(i1).transpose();
    }
  }
  if (alpha != 0.0) {
    normal += alpha * lap.l(r, r) * Mat::Identity(r2, r2);
    for (Index c = 0; c < u_spatial_prev.rows(); ++c)
      if (c != r) rhs -= alpha * lap.l(c, r) * u_spatial_prev.row(c).transpose();
  }
  return solve_system(normal, rhs);
}

Vec direct_row_solve_temporal(const std::vector<Mat>& slices,
                              const std::vector<Mat>& masks,
                              const Tensor3& core, const Mat& u_spatial,
                              const Mat& u_temporal_prev,
                              const std::vector<Vec>& weights, Index r,
                              double lambda, double beta) {
  const Index r1 = core.dim(1);
  const size_t t = slices.size();
  Mat normal = Mat::Zero(r1, r1);
  Vec rhs = Vec::Zero(r1);
  for (size_t k = 0; k < t; ++k) {
    const double w = std::pow(lambda, static_cast<double>(t - 1 - k));
    const Mat h = build_h(core, u_spatial, weights[k]);
    const Mat& slice = slices[k];
    const Mat& mask = masks[k];
    for (Index i2 = 0; i2 < h.cols(); ++i2) {
      if (mask(r, i2) == 0.0) continue;
      normal += w * h.col(i2) * h.col(i2).transpose();
      rhs += w * slice(r, i2) * h.col(i2);
    }
  }
  if (beta != 0.0) {
    const Index n1 = u_temporal_prev.rows();
    const Index prev = (r + n1 - 1) % n1;
    const Index next = (r + 1) % n1;
    normal += 2.0 * beta * (1.0 - lambda) * Mat::Identity(r1, r1);
    rhs += beta * (1.0 - lambda) *
           (u_temporal_prev.row(prev) + u_temporal_prev.row(next)).transpose();
  }
  return solve_system(normal, rhs);
}

namespace {

Mat leading_eigvecs(const Mat& gram, Index r) {
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  const Index n = gram.rows();
  Mat u(n, r);
  for (Index j = 0; j < r; ++j) u.col(j) = es.eigenvectors().col(n - 1 - j);
  return u;
}

}  // namespace

BatchTuckerResult batch_tucker_als(const Tensor3& data, const Tensor3& mask,
                                   const std::array<Index, 3>& ranks,
                                   int iters, uint64_t seed) {
  const Dims3 dims = data.dims();
  Tensor3 x = data;
  // Unobserved entries start at the observed mean.
  double obs_sum = 0.0, obs_count = 0.0;
  for (Index i = 0; i < data.size(); ++i)
    if (mask.values()(i) != 0.0) {
      obs_sum += data.values()(i);
      obs_count += 1.0;
    }
  const double fill = obs_count > 0.0 ? obs_sum / obs_count : 0.0;
  for (Index i = 0; i < x.size(); ++i)
    if (mask.values()(i) == 0.0) x.values()(i) = fill;

  std::array<Mat, 3> factors;
  Rng rng(seed);
  for (int k = 0; k < 3; ++k) {
    const Mat unf = unfold(x, k + 1);
    factors[static_cast<size_t>(k)] =
        leading_eigvecs(unf * unf.transpose(), ranks[static_cast<size_t>(k)]);
  }

  BatchTuckerResult result;
  Tensor3 recon;
  for (int it = 0; it < iters; ++it) {
    // One HOOI sweep.
    for (int k = 0; k < 3; ++k) {
      Tensor3 y = x;
      for (int j = 0; j < 3; ++j)
        if (j != k)
          y = mode_product(y, Mat(factors[static_cast<size_t>(j)].transpose()),
                           j + 1);
      const Mat unf = unfold(y, k + 1);
      factors[static_cast<size_t>(k)] = leading_eigvecs(
          unf * unf.transpose(), ranks[static_cast<size_t>(k)]);
    }
    Tensor3 core = x;
    for (int k = 0; k < 3; ++k)
      core = mode_product(core, Mat(factors[static_cast<size_t>(k)].transpose()),
                          k + 1);
    recon = core;
    for (int k = 0; k < 3; ++k)
      recon = mode_product(recon, factors[static_cast<size_t>(k)], k + 1);

    double obj = 0.0;
    for (Index i = 0; i < data.size(); ++i)
      if (mask.values()(i) != 0.0) {
        const double d = data.values()(i) - recon.values()(i);
        obj += d * d;
      }
    result.objective.push_back(obj);

    // EM imputation step.
    for (Index i = 0; i < x.size(); ++i)
      x.values()(i) = mask.values()(i) != 0.0 ? data.values()(i)
                                              : recon.values()(i);
  }
  result.completed = Tensor3(dims[0], dims[1], dims[2]);
  result.completed.values() = x.values();
  return result;
}

}  // namespace stortd::oracle
