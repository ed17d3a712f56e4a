#include "stortd/engine.hpp"

#include <algorithm>
#include <cmath>

#include "stortd/rng.hpp"

namespace stortd {

Variant variant_from_string(const std::string& s) {
  if (s == "STORTD") return Variant::STORTD;
  if (s == "SORTD") return Variant::SORTD;
  if (s == "TORTD") return Variant::TORTD;
  if (s == "ORTD") return Variant::ORTD;
  throw std::invalid_argument("unknown variant: " + s);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::STORTD: return "STORTD";
    case Variant::SORTD: return "SORTD";
    case Variant::TORTD: return "TORTD";
    default: return "ORTD";
  }
}

Hyperparams apply_variant(Hyperparams h, Variant v) {
  if (v == Variant::SORTD || v == Variant::ORTD) h.alpha = 0.0;
  if (v == Variant::TORTD || v == Variant::ORTD) h.beta = 0.0;
  return h;
}

size_t EngineState::element_count() const {
  size_t n = static_cast<size_t>(core.size());
  n += static_cast<size_t>(u_temporal.size() + u_spatial.size());
  for (const auto& g : gains_spatial) n += static_cast<size_t>(g.size());
  for (const auto& g : gains_temporal) n += static_cast<size_t>(g.size());
  n += static_cast<size_t>(laplacian.l.size() + laplacian.degree.size());
  n += static_cast<size_t>(prev_weight.size());
  return n;
}

namespace {

Mat orthonormal_columns(Rng& rng, Index rows, Index cols) {
  Mat a = random_gaussian(rng, rows, cols);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(rows, cols);
}

double median_abs(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  return v[mid];
}

}  // namespace

Engine::Engine(Index n1, Index n2, const Hyperparams& hyper,
               const Laplacian& laplacian, uint64_t seed) {
  const auto [r1, r2, r3] = hyper.ranks;
  if (r1 <= 0 || r2 <= 0 || r3 <= 0 || r1 > n1 || r2 > n2)
    throw std::invalid_argument("Engine: ranks incompatible with dimensions");
  if (hyper.lambda < 0.0 || hyper.lambda > 1.0)
    throw std::invalid_argument("Engine: lambda must be in [0,1]");
  if (!laplacian.empty() && laplacian.n() != n2)
    throw std::invalid_argument("Engine: Laplacian size must equal n2");

  Rng rng(seed);
  state_.hyper = hyper;
  state_.u_temporal = orthonormal_columns(rng, n1, r1);
  state_.u_spatial = orthonormal_columns(rng, n2, r2);
  Mat core_flat = random_gaussian(rng, r1, r2 * r3) /
                  std::sqrt(static_cast<double>(r1 * r2 * r3));
  state_.core = fold(core_flat, 1, {r1, r2, r3});
  state_.gains_spatial.assign(static_cast<size_t>(n2),
                              hyper.init_gain * Mat::Identity(r2, r2));
  state_.gains_temporal.assign(static_cast<size_t>(n1),
                               hyper.init_gain * Mat::Identity(r1, r1));
  state_.laplacian = laplacian.empty() ? Laplacian::zero(n2) : laplacian;
  state_.prev_weight = Vec::Zero(r3);
  state_.t = 0;
}

EstimateResult Engine::estimate_slice(const Mat& observed, const Mat& mask) {
  const Index n1 = state_.n1(), n2 = state_.n2();
  if (observed.rows() != n1 || observed.cols() != n2 ||
      mask.rows() != n1 || mask.cols() != n2)
    throw std::invalid_argument("estimate_slice: shape mismatch");
  const Index r3 = state_.hyper.ranks[2];

  const double observed_count = mask.sum();
  if (observed_count < static_cast<double>(r3))
    throw DegenerateSliceError("fewer observed entries than r3");

  // W_t = G x1 U_T x2 U_S; its mode-3 unfolding maps u_D to a vectorized
  // slice reconstruction.
  const Tensor3 w = mode_product(
      mode_product(state_.core, state_.u_temporal, 1), state_.u_spatial, 2);
  const Mat w3 = unfold(w, 3);  // r3 x (n1*n2)

  const Vec m = Eigen::Map<const Vec>(observed.data(), n1 * n2);
  const Vec p = Eigen::Map<const Vec>(mask.data(), n1 * n2);

  const Mat w3_masked = w3 * p.asDiagonal();
  const Mat normal = w3_masked * w3.transpose();  // r3 x r3

  auto solve_weight = [&](const Vec& s) {
    return solve_spd(normal, w3_masked * (m - s));
  };

  Vec u = state_.hyper.warm_start_weights && state_.t > 0
              ? state_.prev_weight
              : solve_weight(Vec::Zero(n1 * n2));
  Vec s = Vec::Zero(n1 * n2);

  // Adaptive threshold: running MAD-based scale of the masked residual.
  double gamma = state_.hyper.gamma;
  if (gamma < 0.0) {
    std::vector<double> abs_resid;
    const Vec r0 = p.cwiseProduct(m - w3.transpose() * u);
    abs_resid.reserve(static_cast<size_t>(observed_count));
    for (Index i = 0; i < r0.size(); ++i)
      if (p[i] != 0.0) abs_resid.push_back(std::abs(r0[i]));
    const double sigma_hat = 1.4826 * median_abs(abs_resid);
    const double lam = state_.hyper.lambda;
    state_.robust_scale = state_.t == 0
                              ? sigma_hat
                              : lam * state_.robust_scale +
                                    (1.0 - lam) * sigma_hat;
    gamma = state_.hyper.gamma_scale * state_.robust_scale;
  }

  const double eps = state_.hyper.eps >= 0.0
                         ? state_.hyper.eps
                         : 1e-6 * p.cwiseProduct(m).norm();

  EstimateResult res;
  int iter = 0;
  for (; iter < state_.hyper.max_inner_iters; ++iter) {
    const Vec u_new = solve_weight(s);
    const Vec s_new = soft_threshold(
        Vec(p.cwiseProduct(m - w3.transpose() * u_new)), gamma);
    const double delta =
        std::max((s_new - s).norm(), (u_new - u).norm());
    u = u_new;
    s = s_new;
    if (delta <= eps) {
      res.converged = true;
      ++iter;
      break;
    }
  }
  res.weight = u;
  res.outliers = Eigen::Map<const Mat>(s.data(), n1, n2);
  res.inner_iters = iter;
  return res;
}

Mat Engine::remove_outliers(const Mat& observed, const Mat& mask,
                            const Mat& outliers) {
  if (observed.rows() != mask.rows() || observed.cols() != mask.cols() ||
      outliers.rows() != mask.rows() || outliers.cols() != mask.cols())
    throw std::invalid_argument("remove_outliers: shape mismatch");
  return mask.cwiseProduct(observed - outliers);
}

void Engine::update_spatial_factor(const Mat& n_obs, const Mat& mask,
                                   const Vec& weight) {
  const Index n1 = state_.n1(), n2 = state_.n2();
  const Index r2 = state_.hyper.ranks[1];
  const double lam = state_.hyper.lambda;
  const double alpha = state_.hyper.alpha;

  // D_t = G x1 U_T x3 u_D^T; its single frontal slice is n1 x r2.
  const Tensor3 d = mode_product(
      mode_product(state_.core, state_.u_temporal, 1),
      Mat(weight.transpose()), 3);
  const Mat d_slice = d.slice(0);              // n1 x r2
  const Mat d2 = d_slice.transpose();          // mode-2 unfolding, r2 x n1

  const Mat u_prev = state_.u_spatial;  // parallel-snapshot semantics
  const Mat residual = mask.cwiseProduct(n_obs - d_slice * u_prev.transpose());

  Mat e_s;
  if (alpha != 0.0) e_s = state_.laplacian.l * u_prev;  // n2 x r2

  for (Index r = 0; r < n2; ++r) {
    auto& gain = state_.gains_spatial[static_cast<size_t>(r)];
    const Vec mask_col = mask.col(r);
    gain = lam * gain + d2 * mask_col.asDiagonal() * d2.transpose();
    if (alpha != 0.0)
      gain += alpha * (1.0 - lam) * state_.laplacian.l(r, r) *
              Mat::Identity(r2, r2);

    Vec rhs = d2 * residual.col(r);
    if (alpha != 0.0)
      rhs -= alpha * (1.0 - lam) * e_s.row(r).transpose();
    state_.u_spatial.row(r) =
        u_prev.row(r) + solve_spd(gain, rhs).transpose();
  }
}

void Engine::update_temporal_factor(const Mat& n_obs, const Mat& mask,
                                    const Vec& weight) {
  const Index n1 = state_.n1();
  const Index r1 = state_.hyper.ranks[0];
  const double lam = state_.hyper.lambda;
  const double beta = state_.hyper.beta;

  // H_t = G x2 U_S x3 u_D^T using the state's current spatial factor;
  // step() substitutes the pre-slice snapshot unless use_updated_spatial
  // is set.
  const Tensor3 h = mode_product(
      mode_product(state_.core, state_.u_spatial, 2),
      Mat(weight.transpose()), 3);
  const Mat h1 = unfold(h, 1);  // r1 x n2

  const Mat u_prev = state_.u_temporal;
  const Mat residual = mask.cwiseProduct(n_obs - u_prev * h1);

  for (Index r = 0; r < n1; ++r) {
    auto& gain = state_.gains_temporal[static_cast<size_t>(r)];
    const Vec mask_row = mask.row(r).transpose();
    gain = lam * gain + h1 * mask_row.asDiagonal() * h1.transpose();
    if (beta != 0.0)
      gain += 2.0 * beta * (1.0 - lam) * Mat::Identity(r1, r1);

    Vec rhs = h1 * residual.row(r).transpose();
    if (beta != 0.0)
      rhs -= beta * (1.0 - lam) * toeplitz_row_combination(u_prev, r);
    state_.u_temporal.row(r) =
        u_prev.row(r) + solve_spd(gain, rhs).transpose();
  }
}

void Engine::update_core(const Mat& n_obs, const Mat& mask,
                         const Vec& weight) {
  const Mat residual = mask.cwiseProduct(n_obs - reconstruct(weight));
  // Z_t = u_D kron U_S in the mode-1 unfolding convention (n2 x r2*r3).
  const Mat z = kron(Mat(weight.transpose()), state_.u_spatial);
  const Mat delta_core =
      pinv(state_.u_temporal) * residual * pinv(z.transpose());
  state_.core.values() +=
      fold(delta_core, 1, state_.core.dims()).values();
}

SliceResult Engine::step(const Mat& observed, const Mat& mask) {
  SliceResult result;
  const Index r3 = state_.hyper.ranks[2];
  if (mask.sum() < static_cast<double>(r3)) {
    // Skip-and-hold: reconstruct from the prior state, leave it untouched.
    result.recovered = reconstruct(state_.prev_weight);
    result.outliers = Mat::Zero(state_.n1(), state_.n2());
    result.weight = state_.prev_weight;
    result.converged = false;
    result.skipped = true;
    ++state_.t;
    return result;
  }

  const EstimateResult est = estimate_slice(observed, mask);
  const Mat n_obs = remove_outliers(observed, mask, est.outliers);
  const Mat u_spatial_before = state_.u_spatial;
  update_spatial_factor(n_obs, mask, est.weight);
  if (state_.hyper.use_updated_spatial) {
    update_temporal_factor(n_obs, mask, est.weight);
  } else {
    // H_t is formed with the pre-slice spatial snapshot.
    const Mat u_spatial_after = state_.u_spatial;
    state_.u_spatial = u_spatial_before;
    update_temporal_factor(n_obs, mask, est.weight);
    state_.u_spatial = u_spatial_after;
  }
  update_core(n_obs, mask, est.weight);

  result.recovered = reconstruct(est.weight);
  result.outliers = est.outliers;
  result.weight = est.weight;
  result.inner_iters = est.inner_iters;
  result.converged = est.converged;
  state_.prev_weight = est.weight;
  ++state_.t;
  return result;
}

Mat Engine::reconstruct(const Vec& weight) const {
  const Tensor3 n = mode_product(
      mode_product(mode_product(state_.core, state_.u_temporal, 1),
                   state_.u_spatial, 2),
      Mat(weight.transpose()), 3);
  return n.slice(0);
}

}  // namespace stortd
