#pragma once

#include <array>
#include <stdexcept>

#include <Eigen/Dense>

namespace stortd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using Dims3 = std::array<Index, 3>;

/// Dense third-order tensor of doubles.
///
/// Canonical layout: entry (i1, i2, i3) is stored at linear offset
/// i1 + n1*(i2 + n2*i3), i.e. the first index varies fastest. A frontal
/// slice (fixed i3) is therefore a contiguous column-major n1 x n2 block.
class Tensor3 {
 public:
  Tensor3() : dims_{0, 0, 0} {}
  Tensor3(Index n1, Index n2, Index n3) : dims_{n1, n2, n3} {
    if (n1 <= 0 || n2 <= 0 || n3 <= 0)
      throw std::invalid_argument("Tensor3: dimensions must be positive");
    values_ = Vec::Zero(n1 * n2 * n3);
  }

  const Dims3& dims() const { return dims_; }
  Index dim(int k) const { return dims_[static_cast<size_t>(k - 1)]; }
  Index size() const { return values_.size(); }

  double& operator()(Index i1, Index i2, Index i3) {
    return values_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }
  double operator()(Index i1, Index i2, Index i3) const {
    return values_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }

  Vec& values() { return values_; }
  const Vec& values() const { return values_; }

  /// Frontal slice i3 as an n1 x n2 matrix view.
  Eigen::Map<const Mat> slice(Index i3) const {
    return Eigen::Map<const Mat>(values_.data() + dims_[0] * dims_[1] * i3,
                                 dims_[0], dims_[1]);
  }
  void set_slice(Index i3, const Mat& s);

  bool all_finite() const { return values_.allFinite(); }

 private:
  Dims3 dims_;
  Vec values_;
};

/// Mode-k unfolding, shape n_k x (product of the other two dims).
/// Column ordering: the two non-mode indices vary with the lower-numbered
/// mode fastest, i.e.
///   mode 1: column = i2 + n2*i3
///   mode 2: column = i1 + n1*i3
///   mode 3: column = i1 + n1*i2
Mat unfold(const Tensor3& t, int mode);

/// Inverse of unfold for the given mode and target dims.
Tensor3 fold(const Mat& m, int mode, const Dims3& dims);

/// Mode-k product: fold(m * unfold(t, mode), mode) with dims[mode] replaced
/// by m.rows().
Tensor3 mode_product(const Tensor3& t, const Mat& m, int mode);

/// Kronecker product; block (i,j) of the result equals a(i,j)*b.
Mat kron(const Mat& a, const Mat& b);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// tol * sigma_max are treated as zero.
Mat pinv(const Mat& m, double tol = 1e-12);

/// Elementwise sign(x) * max(|x| - gamma, 0).
double soft_threshold(double x, double gamma);
Mat soft_threshold(const Mat& x, double gamma);
Vec soft_threshold(const Vec& x, double gamma);

/// Solves (a + ridge*I) x = b for symmetric a via LDLT, falling back to the
/// pseudoinverse if the factorization fails. ridge < 0 selects the default
/// 1e-10 * trace(a) / dim.
Vec solve_spd(const Mat& a, const Vec& b, double ridge = -1.0);

}  // namespace stortd
