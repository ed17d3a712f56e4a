#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stortd/metrics.hpp"
#include "stortd/tensor.hpp"

namespace stortd {

/// Slice-stream file layout (version 1):
///   line 1: "STORTD-STREAM 1"
///   line 2: "n1,n2,T,units"
///   then T blocks of n1 CSV lines with n2 values each.
/// A parallel mask file uses the same layout with 0/1 entries.
struct StreamHeader {
  Index n1 = 0, n2 = 0;
  long days = 0;
  std::string units = "unitless";
  int version = 1;
};

struct StreamParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Streaming reader: slices are parsed one day at a time; memory stays
/// O(n1*n2) regardless of T.
class StreamReader {
 public:
  explicit StreamReader(const std::string& path);

  const StreamHeader& header() const { return header_; }

  /// Reads the next slice; returns false at a clean end of stream.
  /// Throws StreamParseError (with line number and day index) on malformed
  /// or truncated input.
  bool next(Mat& slice);

  long days_read() const { return days_read_; }

 private:
  std::ifstream in_;
  std::string path_;
  StreamHeader header_;
  long days_read_ = 0;
  long line_ = 0;
};

void write_stream(const std::string& path, const Tensor3& t,
                  const std::string& units = "unitless");

/// Reads a whole stream file into a tensor (convenience, desk scale only).
Tensor3 read_stream_full(const std::string& path, StreamHeader* header = nullptr);

struct RunReport {
  std::vector<SliceRecord> records;
  double final_rse = 0.0;
  double mean_time_ms = 0.0;
  double time_slope_ms = 0.0;
  size_t max_state_elements = 0;
  std::optional<Tensor3> recovered;  // optional slice dumps
  std::optional<Tensor3> outliers;
};

/// Writes slices.csv, summary.txt and optional recovered/outlier stream
/// dumps under dir.
void write_report(const RunReport& report, const std::string& dir);

}  // namespace stortd
