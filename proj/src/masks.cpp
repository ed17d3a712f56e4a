#include "stortd/masks.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "stortd/rng.hpp"

namespace stortd {

MaskPattern mask_pattern_from_string(const std::string& s) {
  if (s == "RM") return MaskPattern::RM;
  if (s == "TM") return MaskPattern::TM;
  if (s == "SM") return MaskPattern::SM;
  if (s == "MM") return MaskPattern::MM;
  throw std::invalid_argument("unknown mask pattern: " + s);
}

std::string to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::RM: return "RM";
    case MaskPattern::TM: return "TM";
    case MaskPattern::SM: return "SM";
    default: return "MM";
  }
}

namespace {

// First k elements of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<Index> pick_k(Rng& rng, Index n, Index k) {
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k && i < n; ++i) {
    const Index j = i + rng.uniform_index(n - i);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(std::min(k, n)));
  return idx;
}

Mat gen_pattern(Rng& rng, MaskPattern pattern, double rate, Index n1,
                Index n2) {
  Mat mask = Mat::Ones(n1, n2);
  switch (pattern) {
    case MaskPattern::RM:
      for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i)
          if (rng.uniform() < rate) mask(i, j) = 0.0;
      break;
    case MaskPattern::TM: {
      const Index k = static_cast<Index>(
          std::ceil(rate * static_cast<double>(n1)));
      for (Index r : pick_k(rng, n1, k)) mask.row(r).setZero();
      break;
    }
    case MaskPattern::SM: {
      const Index k = static_cast<Index>(
          std::ceil(rate * static_cast<double>(n2)));
      for (Index c : pick_k(rng, n2, k)) mask.col(c).setZero();
      break;
    }
    case MaskPattern::MM: {
      const MaskPattern sub[] = {MaskPattern::RM, MaskPattern::TM,
                                 MaskPattern::SM};
      mask = gen_pattern(rng, sub[rng.uniform_index(3)], rate, n1, n2);
      break;
    }
  }
  return mask;
}

}  // namespace

Mat gen_mask(const MaskSpec& spec, Index n1, Index n2, long day) {
  if (spec.rate < 0.0 || spec.rate > 1.0)
    throw std::invalid_argument("gen_mask: rate must be in [0,1]");
  Rng rng(Rng::mix(spec.seed, static_cast<uint64_t>(day)));
  return gen_pattern(rng, spec.pattern, spec.rate, n1, n2);
}

std::pair<Mat, Mat> inject_outliers(const Mat& clean, const Mat& mask,
                                    const OutlierSpec& spec,
                                    double stream_sigma, long day) {
  if (clean.rows() != mask.rows() || clean.cols() != mask.cols())
    throw std::invalid_argument("inject_outliers: shape mismatch");
  if (spec.density < 0.0 || spec.density >= 1.0)
    throw std::invalid_argument("inject_outliers: density must be in [0,1)");

  std::vector<Index> observed;
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j) != 0.0) observed.push_back(i + mask.rows() * j);

  Mat corrupted = clean;
  Mat truth = Mat::Zero(clean.rows(), clean.cols());
  const Index k = static_cast<Index>(
      std::ceil(spec.density * static_cast<double>(observed.size())));
  if (k == 0 || observed.empty()) return {corrupted, truth};

  Rng rng(Rng::mix(spec.seed ^ 0x5a5a5a5a5a5a5a5aULL,
                   static_cast<uint64_t>(day)));
  const Index n = static_cast<Index>(observed.size());
  for (Index i = 0; i < std::min(k, n); ++i) {
    const Index j = i + rng.uniform_index(n - i);
    std::swap(observed[static_cast<size_t>(i)],
              observed[static_cast<size_t>(j)]);
  }
  for (Index i = 0; i < std::min(k, n); ++i) {
    const Index lin = observed[static_cast<size_t>(i)];
    const Index row = lin % mask.rows();
    const Index col = lin / mask.rows();
    double spike = spec.magnitude * stream_sigma;
    if (spec.symmetric && rng.uniform() < 0.5) spike = -spike;
    corrupted(row, col) += spike;
    truth(row, col) = spike;
  }
  return {corrupted, truth};
}

void write_mask_csv(const Mat& mask, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mask_csv: cannot open " + path);
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      if (j) out << ',';
      out << (mask(i, j) != 0.0 ? 1 : 0);
    }
    out << '\n';
  }
}

}  // namespace stortd
