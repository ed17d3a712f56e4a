#include "stortd/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace stortd {

double rse(const Vec& truth, const Vec& estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("rse: length mismatch");
  const double energy = truth.squaredNorm();
  if (energy <= 0.0)
    throw std::invalid_argument("rse: truth has zero energy");
  return std::sqrt((truth - estimate).squaredNorm() / energy);
}

std::pair<Vec, Vec> select_entries(const Mat& truth, const Mat& estimate,
                                   const Mat& mask, bool observed_entries) {
  if (truth.rows() != mask.rows() || truth.cols() != mask.cols() ||
      estimate.rows() != mask.rows() || estimate.cols() != mask.cols())
    throw std::invalid_argument("select_entries: shape mismatch");
  std::vector<double> tv, ev;
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i) {
      const bool observed = mask(i, j) != 0.0;
      if (observed == observed_entries) {
        tv.push_back(truth(i, j));
        ev.push_back(estimate(i, j));
      }
    }
  Vec t = Eigen::Map<const Vec>(tv.data(), static_cast<Index>(tv.size()));
  Vec e = Eigen::Map<const Vec>(ev.data(), static_cast<Index>(ev.size()));
  return {t, e};
}

F1Result outlier_f1(const Mat& truth, const Mat& detected, double threshold) {
  if (truth.rows() != detected.rows() || truth.cols() != detected.cols())
    throw std::invalid_argument("outlier_f1: shape mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Index j = 0; j < truth.cols(); ++j)
    for (Index i = 0; i < truth.rows(); ++i) {
      const bool is_truth = truth(i, j) != 0.0;
      const bool is_detected = std::abs(detected(i, j)) > threshold;
      if (is_truth && is_detected) ++tp;
      else if (!is_truth && is_detected) ++fp;
      else if (is_truth && !is_detected) ++fn;
    }
  F1Result r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / (tp + fn);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

void EvalAccumulator::add_entries(const Vec& truth, const Vec& estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("EvalAccumulator: length mismatch");
  sum_sq_err += (truth - estimate).squaredNorm();
  sum_sq_truth += truth.squaredNorm();
}

double EvalAccumulator::total_rse() const {
  if (sum_sq_truth <= 0.0)
    throw std::invalid_argument("EvalAccumulator: no truth energy");
  return std::sqrt(sum_sq_err / sum_sq_truth);
}

void EvalAccumulator::merge(const EvalAccumulator& other) {
  sum_sq_err += other.sum_sq_err;
  sum_sq_truth += other.sum_sq_truth;
  records.insert(records.end(), other.records.begin(), other.records.end());
}

StreamProfile streaming_profile(const std::vector<SliceRecord>& records) {
  if (records.size() < 10)
    throw std::invalid_argument("streaming_profile: need at least 10 records");
  const double n = static_cast<double>(records.size());
  double sum_t = 0.0, sum_y = 0.0;
  StreamProfile p;
  for (const auto& r : records) {
    sum_t += static_cast<double>(r.t);
    sum_y += r.wall_ms;
    p.max_state_elements = std::max(p.max_state_elements, r.state_elements);
  }
  const double mean_t = sum_t / n, mean_y = sum_y / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& r : records) {
    const double dt = static_cast<double>(r.t) - mean_t;
    sxx += dt * dt;
    sxy += dt * (r.wall_ms - mean_y);
  }
  p.time_slope_ms = sxx > 0.0 ? sxy / sxx : 0.0;
  p.mean_time_ms = mean_y;
  return p;
}

void write_records_csv(std::ostream& out,
                       const std::vector<SliceRecord>& records) {
  out << "t,rse,time_ms,inner_iters,f1\n";
  for (const auto& r : records)
    out << r.t << ',' << r.rse << ',' << r.wall_ms << ',' << r.inner_iters
        << ',' << r.f1 << '\n';
}

}  // namespace stortd
