#include "stortd/stream_io.hpp"

#include <filesystem>
#include <sstream>

namespace stortd {

namespace {

constexpr const char* kMagic = "STORTD-STREAM";

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) parts.push_back(item);
  return parts;
}

}  // namespace

StreamReader::StreamReader(const std::string& path)
    : in_(path), path_(path) {
  if (!in_) throw StreamParseError("cannot open stream file: " + path);
  std::string line;
  if (!std::getline(in_, line)) throw StreamParseError(path + ":1: empty file");
  ++line_;
  const auto magic = split(line, ' ');
  if (magic.size() != 2 || magic[0] != kMagic)
    throw StreamParseError(path + ":1: bad magic token");
  header_.version = std::stoi(magic[1]);
  if (header_.version != 1)
    throw StreamParseError(path + ":1: unsupported version " + magic[1]);

  if (!std::getline(in_, line))
    throw StreamParseError(path + ":2: missing header line");
  ++line_;
  const auto fields = split(line, ',');
  if (fields.size() < 3)
    throw StreamParseError(path + ":2: header needs n1,n2,T[,units]");
  header_.n1 = std::stol(fields[0]);
  header_.n2 = std::stol(fields[1]);
  header_.days = std::stol(fields[2]);
  if (fields.size() > 3) header_.units = fields[3];
  if (header_.n1 <= 0 || header_.n2 <= 0 || header_.days <= 0)
    throw StreamParseError(path + ":2: dimensions must be positive");
}

bool StreamReader::next(Mat& slice) {
  if (days_read_ >= header_.days) return false;
  slice.resize(header_.n1, header_.n2);
  std::string line;
  for (Index i = 0; i < header_.n1; ++i) {
    if (!std::getline(in_, line))
      throw StreamParseError(path_ + ": truncated at day " +
                             std::to_string(days_read_) + ", line " +
                             std::to_string(line_ + 1));
    ++line_;
    const auto cells = split(line, ',');
    if (static_cast<Index>(cells.size()) != header_.n2)
      throw StreamParseError(path_ + ":" + std::to_string(line_) +
                             ": expected " + std::to_string(header_.n2) +
                             " values, got " + std::to_string(cells.size()));
    for (Index j = 0; j < header_.n2; ++j) {
      try {
        slice(i, j) = std::stod(cells[static_cast<size_t>(j)]);
      } catch (const std::exception&) {
        throw StreamParseError(path_ + ":" + std::to_string(line_) +
                               ": bad numeric value '" +
                               cells[static_cast<size_t>(j)] + "'");
      }
    }
  }
  ++days_read_;
  return true;
}

void write_stream(const std::string& path, const Tensor3& t,
                  const std::string& units) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_stream: cannot open " + path);
  out.precision(17);
  out << kMagic << " 1\n";
  out << t.dim(1) << ',' << t.dim(2) << ',' << t.dim(3) << ',' << units
      << '\n';
  for (Index day = 0; day < t.dim(3); ++day) {
    const auto slice = t.slice(day);
    for (Index i = 0; i < t.dim(1); ++i) {
      for (Index j = 0; j < t.dim(2); ++j) {
        if (j) out << ',';
        out << slice(i, j);
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_stream: write failed: " + path);
}

Tensor3 read_stream_full(const std::string& path, StreamHeader* header) {
  StreamReader reader(path);
  const StreamHeader& h = reader.header();
  if (header) *header = h;
  Tensor3 t(h.n1, h.n2, h.days);
  Mat slice;
  long day = 0;
  while (reader.next(slice)) t.set_slice(day++, slice);
  if (day != h.days)
    throw StreamParseError(path + ": expected " + std::to_string(h.days) +
                           " days, got " + std::to_string(day));
  return t;
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  {
    std::ofstream out(dir + "/slices.csv");
    if (!out) throw std::runtime_error("write_report: cannot open " + dir +
                                       "/slices.csv");
    out.precision(17);
    write_records_csv(out, report.records);
  }
  {
    std::ofstream out(dir + "/summary.txt");
    if (!out) throw std::runtime_error("write_report: cannot open " + dir +
                                       "/summary.txt");
    out.precision(17);
    out << "final_rse = " << report.final_rse << '\n'
        << "mean_time_ms = " << report.mean_time_ms << '\n'
        << "time_slope_ms = " << report.time_slope_ms << '\n'
        << "max_state_elements = " << report.max_state_elements << '\n';
  }
  if (report.recovered)
    write_stream(dir + "/recovered.stream", *report.recovered);
  if (report.outliers)
    write_stream(dir + "/outliers.stream", *report.outliers);
}

}  // namespace stortd
