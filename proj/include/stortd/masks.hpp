#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "stortd/tensor.hpp"

namespace stortd {

/// The four per-day missing patterns: random entries, whole timestamp rows,
/// whole location columns, or a per-day mix of the three.
enum class MaskPattern { RM, TM, SM, MM };

MaskPattern mask_pattern_from_string(const std::string& s);
std::string to_string(MaskPattern p);

struct MaskSpec {
  MaskPattern pattern = MaskPattern::RM;
  double rate = 0.0;  // in [0, 1]
  uint64_t seed = 0;
};

/// Binary n1 x n2 mask for the given day; 1 = observed, 0 = missing.
/// Deterministic in (spec.seed, day). TM zeroes ceil(rate*n1) rows, SM
/// zeroes ceil(rate*n2) columns, MM picks one of {RM, TM, SM} uniformly
/// per day.
Mat gen_mask(const MaskSpec& spec, Index n1, Index n2, long day);

struct OutlierSpec {
  double density = 0.0;    // fraction of observed entries in [0, 1)
  double magnitude = 0.0;  // spike size as a multiple of the stream std
  bool symmetric = true;   // +/- spikes; false = positive only
  uint64_t seed = 0;
};

/// Spikes ceil(density * #observed) observed entries of the clean slice.
/// stream_sigma is the per-stream standard deviation the magnitude is
/// relative to. Returns (corrupted slice, ground-truth outlier slice).
std::pair<Mat, Mat> inject_outliers(const Mat& clean, const Mat& mask,
                                    const OutlierSpec& spec,
                                    double stream_sigma, long day);

/// Writes a mask to CSV (one row per line, 0/1 entries).
void write_mask_csv(const Mat& mask, const std::string& path);

}  // namespace stortd
