#include "stortd/tensor.hpp"

#include <cmath>

namespace stortd {

void Tensor3::set_slice(Index i3, const Mat& s) {
  if (s.rows() != dims_[0] || s.cols() != dims_[1])
    throw std::invalid_argument("Tensor3::set_slice: shape mismatch");
  Eigen::Map<Mat>(values_.data() + dims_[0] * dims_[1] * i3, dims_[0],
                  dims_[1]) = s;
}

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw std::invalid_argument("mode must be 1, 2 or 3");
}

}  // namespace

Mat unfold(const Tensor3& t, int mode) {
  check_mode(mode);
  const Index n1 = t.dim(1), n2 = t.dim(2), n3 = t.dim(3);
  switch (mode) {
    case 1:
      // Storage order is already column-major n1 x (n2*n3).
      return Eigen::Map<const Mat>(t.values().data(), n1, n2 * n3);
    case 2: {
      Mat m(n2, n1 * n3);
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1)
            m(i2, i1 + n1 * i3) = t(i1, i2, i3);
      return m;
    }
    default: {
      Mat m(n3, n1 * n2);
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1)
            m(i3, i1 + n1 * i2) = t(i1, i2, i3);
      return m;
    }
  }
}

Tensor3 fold(const Mat& m, int mode, const Dims3& dims) {
  check_mode(mode);
  const Index n1 = dims[0], n2 = dims[1], n3 = dims[2];
  const Index other = n1 * n2 * n3 / dims[static_cast<size_t>(mode - 1)];
  if (m.rows() != dims[static_cast<size_t>(mode - 1)] || m.cols() != other)
    throw std::invalid_argument("fold: matrix shape does not match dims");
  Tensor3 t(n1, n2, n3);
  switch (mode) {
    case 1:
      Eigen::Map<Mat>(t.values().data(), n1, n2 * n3) = m;
      break;
    case 2:
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1)
            t(i1, i2, i3) = m(i2, i1 + n1 * i3);
      break;
    default:
      for (Index i3 = 0; i3 < n3; ++i3)
        for (Index i2 = 0; i2 < n2; ++i2)
          for (Index i1 = 0; i1 < n1; ++i1)
            t(i1, i2, i3) = m(i3, i1 + n1 * i2);
      break;
  }
  return t;
}

Tensor3 mode_product(const Tensor3& t, const Mat& m, int mode) {
  check_mode(mode);
  if (m.cols() != t.dim(mode))
    throw std::invalid_argument("mode_product: dimension mismatch");
  Dims3 dims = t.dims();
  dims[static_cast<size_t>(mode - 1)] = m.rows();
  return fold(m * unfold(t, mode), mode, dims);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

Mat pinv(const Mat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
  Vec inv = Vec::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double soft_threshold(double x, double gamma) {
  const double mag = std::abs(x) - gamma;
  if (mag <= 0.0) return 0.0;
  return x > 0.0 ? mag : -mag;
}

Mat soft_threshold(const Mat& x, double gamma) {
  return x.unaryExpr([gamma](double v) { return soft_threshold(v, gamma); });
}

Vec soft_threshold(const Vec& x, double gamma) {
  return x.unaryExpr([gamma](double v) { return soft_threshold(v, gamma); });
}

Vec solve_spd(const Mat& a, const Vec& b, double ridge) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("solve_spd: matrix must be square");
  if (a.rows() != b.size())
    throw std::invalid_argument("solve_spd: rhs size mismatch");
  const double eff_ridge =
      ridge >= 0.0 ? ridge : 1e-10 * a.trace() / static_cast<double>(a.rows());
  Mat reg = a;
  reg.diagonal().array() += eff_ridge;
  Eigen::LDLT<Mat> ldlt(reg);
  if (ldlt.info() == Eigen::Success) {
    Vec x = ldlt.solve(b);
    if (x.allFinite()) return x;
  }
  return pinv(reg) * b;
}

}  // namespace stortd
