#include "stortd/synth.hpp"

#include <cmath>

#include "stortd/rng.hpp"

namespace stortd {

namespace {

// Cyclic moving average of each column, window 2*half + 1.
Mat smooth_columns_cyclic(const Mat& m, Index half) {
  if (half <= 0) return m;
  const Index n = m.rows();
  Mat out = Mat::Zero(n, m.cols());
  const double w = 1.0 / static_cast<double>(2 * half + 1);
  for (Index i = 0; i < n; ++i)
    for (Index k = -half; k <= half; ++k)
      out.row(i) += w * m.row(((i + k) % n + n) % n);
  return out;
}

Mat orthonormalize(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

}  // namespace

double laplacian_spectral_radius(const Laplacian& lap) {
  const Index n = lap.n();
  Vec v = Vec::Ones(n);
  v(0) = 2.0;  // avoid the constant null vector
  v.normalize();
  double eig = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = lap.l * v;
    const double norm = w.norm();
    if (norm < 1e-300) return 0.0;
    const double rayleigh = v.dot(w);
    v = w / norm;
    if (std::abs(rayleigh - eig) <= 1e-12 * std::max(1.0, std::abs(rayleigh)))
      return rayleigh;
    eig = rayleigh;
  }
  return eig;
}

SpatialGraph make_ring_graph(Index n) {
  std::vector<Vec> pos;
  pos.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Vec p(2);
    const double theta = 2.0 * M_PI * static_cast<double>(i) /
                         static_cast<double>(n);
    p << std::cos(theta), std::sin(theta);
    pos.push_back(p);
  }
  return build_graph(pos, median_bandwidth(pos));
}

SynthStream gen_stream(const SynthSpec& spec) {
  const auto [r1, r2, r3] = spec.ranks;
  if (r1 <= 0 || r2 <= 0 || r3 <= 0 || r1 > spec.n1 || r2 > spec.n2)
    throw std::invalid_argument("gen_stream: ranks must be positive and fit the dimensions");

  Rng rng(spec.seed);
  SynthStream s;

  Mat ut = random_gaussian(rng, spec.n1, r1);
  const Index half = static_cast<Index>(std::lround(spec.temporal_smoothness));
  ut = smooth_columns_cyclic(ut, half);
  s.u_temporal = orthonormalize(ut);

  Mat us = random_gaussian(rng, spec.n2, r2);
  const int diffusion_steps =
      static_cast<int>(std::lround(spec.spatial_smoothness));
  if (diffusion_steps > 0 && !spec.graph.empty()) {
    const Laplacian lap = build_laplacian(spec.graph);
    const double radius = laplacian_spectral_radius(lap);
    const double eta = radius > 0.0 ? 0.5 / radius : 0.0;
    for (int k = 0; k < diffusion_steps; ++k) us -= eta * (lap.l * us);
  }
  s.u_spatial = orthonormalize(us);

  Mat core_flat = random_gaussian(rng, r1, r2 * r3);
  s.core = fold(core_flat, 1, {r1, r2, r3});

  // Day weights: a slowly varying deterministic base (low-frequency
  // sinusoids) plus an optional random-walk drift.
  s.weights = Mat::Zero(spec.days, r3);
  Vec phase(r3);
  for (Index j = 0; j < r3; ++j) phase(j) = 2.0 * M_PI * rng.uniform();
  Vec walk = Vec::Zero(r3);
  for (long t = 0; t < spec.days; ++t) {
    for (Index j = 0; j < r3; ++j) {
      const double freq = 2.0 * M_PI * static_cast<double>(j + 1) /
                          static_cast<double>(spec.days);
      const double base = j == 0 ? 1.0 : 0.0;
      s.weights(t, j) = base + 0.5 * std::cos(freq * static_cast<double>(t) +
                                              phase(j));
    }
    if (spec.drift > 0.0) {
      for (Index j = 0; j < r3; ++j) walk(j) += spec.drift * rng.normal();
      s.weights.row(t) += walk.transpose();
    }
  }

  // Compose slices, then rescale the core so the clean stream has unit std.
  auto compose = [&](Tensor3& out) {
    for (long t = 0; t < spec.days; ++t) {
      const Tensor3 slice = mode_product(
          mode_product(mode_product(s.core, s.u_temporal, 1), s.u_spatial, 2),
          Mat(s.weights.row(t)), 3);
      out.set_slice(t, slice.slice(0));
    }
  };
  s.clean = Tensor3(spec.n1, spec.n2, spec.days);
  compose(s.clean);
  const double mean = s.clean.values().mean();
  const double var =
      (s.clean.values().array() - mean).square().mean();
  if (var > 0.0) {
    const double scale = 1.0 / std::sqrt(var);
    s.core.values() *= scale;
    s.clean.values() *= scale;
  }

  if (spec.noise_sigma > 0.0)
    for (Index i = 0; i < s.clean.size(); ++i)
      s.clean.values()(i) += spec.noise_sigma * rng.normal();

  return s;
}

}  // namespace stortd
