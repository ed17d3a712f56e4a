#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "stortd/tensor.hpp"

namespace stortd {

/// Relative squared error sqrt(sum (x - xhat)^2 / sum x^2).
double rse(const Vec& truth, const Vec& estimate);

/// Truth/estimate values at the entries selected by the mask predicate
/// (mask != 0 when observed_entries, mask == 0 otherwise).
std::pair<Vec, Vec> select_entries(const Mat& truth, const Mat& estimate,
                                   const Mat& mask, bool observed_entries);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Support-recovery quality: detected = entries with |detected| > threshold.
/// Empty detection or empty truth reports zeros by convention.
F1Result outlier_f1(const Mat& truth, const Mat& detected,
                    double threshold = 1e-8);

struct SliceRecord {
  long t = 0;
  double rse = 0.0;
  double wall_ms = 0.0;
  size_t state_elements = 0;
  int inner_iters = 0;
  double f1 = 0.0;
};

/// Single-writer accumulator over test entries and per-slice records.
/// Merging is associative.
struct EvalAccumulator {
  double sum_sq_err = 0.0;
  double sum_sq_truth = 0.0;
  std::vector<SliceRecord> records;

  void add_entries(const Vec& truth, const Vec& estimate);
  void add_record(const SliceRecord& r) { records.push_back(r); }
  double total_rse() const;
  void merge(const EvalAccumulator& other);
};

struct StreamProfile {
  double time_slope_ms = 0.0;  // least-squares slope of wall time vs t
  size_t max_state_elements = 0;
  double mean_time_ms = 0.0;
};

/// Requires at least 10 records.
StreamProfile streaming_profile(const std::vector<SliceRecord>& records);

/// Plot-ready CSV: t,rse,time_ms,inner_iters,f1.
void write_records_csv(std::ostream& out,
                       const std::vector<SliceRecord>& records);

}  // namespace stortd
