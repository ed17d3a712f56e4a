#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stortd/experiment.hpp"
#include "stortd/rng.hpp"
#include "stortd/stream_io.hpp"

using namespace stortd;

namespace {

Tensor3 random_tensor(Index n1, Index n2, Index n3, uint64_t seed) {
  Tensor3 t(n1, n2, n3);
  Rng rng(seed);
  for (Index i = 0; i < t.size(); ++i) t.values()(i) = rng.normal();
  return t;
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE_BEGIN("stream_io");

TEST_CASE("tiny golden stream file parses to the stated slices") {
  StreamReader reader(std::string(STORTD_TEST_DATA_DIR) + "/tiny.stream");
  CHECK(reader.header().n1 == 2);
  CHECK(reader.header().n2 == 2);
  CHECK(reader.header().days == 2);
  CHECK(reader.header().units == "veh/h");
  Mat s;
  REQUIRE(reader.next(s));
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 2.0);
  CHECK(s(1, 0) == 3.0);
  REQUIRE(reader.next(s));
  CHECK(s(1, 1) == 8.0);
  CHECK_FALSE(reader.next(s));
  CHECK(reader.days_read() == 2);
}

TEST_CASE("write_stream / read_stream_full round trip is exact") {
  const Tensor3 t = random_tensor(4, 3, 5, 99);
  TempFile f("roundtrip.stream");
  write_stream(f.path, t, "unitless");
  StreamHeader h;
  const Tensor3 back = read_stream_full(f.path, &h);
  CHECK(h.days == 5);
  CHECK(back.values().cwiseEqual(t.values()).all());
}

TEST_CASE("large header shapes are accepted") {
  TempFile f("bigheader.stream");
  {
    std::ofstream out(f.path);
    out << "STORTD-STREAM 1\n108,80,25,veh/h\n";
    for (int d = 0; d < 25; ++d)
      for (int i = 0; i < 108; ++i) {
        for (int j = 0; j < 80; ++j) out << (j ? ",0" : "0");
        out << '\n';
      }
  }
  StreamReader reader(f.path);
  CHECK(reader.header().n1 == 108);
  CHECK(reader.header().n2 == 80);
  CHECK(reader.header().days == 25);
  Mat s;
  long count = 0;
  while (reader.next(s)) ++count;
  CHECK(count == 25);
}

TEST_CASE("truncated and malformed files report the offending location") {
  TempFile f("bad.stream");
  {
    std::ofstream out(f.path);
    out << "STORTD-STREAM 1\n2,2,3,u\n1,2\n3,4\n5,6\n";  // day 1 truncated
  }
  StreamReader reader(f.path);
  Mat s;
  REQUIRE(reader.next(s));
  CHECK_THROWS_AS(reader.next(s), StreamParseError);

  {
    std::ofstream out(f.path);
    out << "NOT-A-STREAM\n2,2,1,u\n1,2\n3,4\n";
  }
  CHECK_THROWS_AS(StreamReader{f.path}, StreamParseError);

  {
    std::ofstream out(f.path);
    out << "STORTD-STREAM 1\n2,2,1,u\n1,2,9\n3,4\n";  // ragged row
  }
  StreamReader ragged(f.path);
  CHECK_THROWS_AS(ragged.next(s), StreamParseError);
}

TEST_CASE("write_report emits slices.csv and summary.txt") {
  RunReport rep;
  rep.records = {{0, 0.5, 1.0, 7, 2, 0.0}, {1, 0.4, 1.1, 7, 2, 0.0},
                 {2, 0.3, 0.9, 7, 1, 0.0}};
  rep.final_rse = 0.4;
  rep.mean_time_ms = 1.0;
  const std::string dir = "test_report_out";
  write_report(rep, dir);
  std::ifstream csv(dir + "/slices.csv");
  REQUIRE(csv.good());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,rse,time_ms,inner_iters,f1");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  std::ifstream summary(dir + "/summary.txt");
  REQUIRE(summary.good());
  bool saw_final = false;
  while (std::getline(summary, line))
    if (line.find("final_rse") != std::string::npos) saw_final = true;
  CHECK(saw_final);
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty run writes a header-only CSV") {
  RunReport rep;
  const std::string dir = "test_report_empty";
  write_report(rep, dir);
  std::ifstream csv(dir + "/slices.csv");
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "t,rse,time_ms,inner_iters,f1");
  CHECK_FALSE(std::getline(csv, line));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parse -> serialize -> parse is idempotent") {
  std::stringstream src;
  src << "variant = TORTD\npattern = SM\nrate = 0.6\nalpha = 12.5\n"
      << "ranks = 4,3,2\nnoise_sigma = 0.05\nseed = 9\nnum_seeds = 3\n"
      << "outlier_density = 0.05\noutlier_magnitude = 10\n";
  const ExperimentConfig a = parse_config(src);
  std::stringstream ser1, ser2;
  serialize_config(a, ser1);
  ExperimentConfig b = parse_config(ser1);
  serialize_config(b, ser2);
  ser1.clear();
  ser1.seekg(0);
  CHECK(ser1.str() == ser2.str());
  CHECK(b.variant == Variant::TORTD);
  CHECK(b.pattern == MaskPattern::SM);
  CHECK(b.rate == 0.6);
  CHECK(b.hyper.alpha == 12.5);
  CHECK(b.hyper.ranks[0] == 4);
  CHECK(b.synth.noise_sigma == 0.05);
  CHECK(b.num_seeds == 3);
}

TEST_CASE("config errors carry line numbers and reject unknown keys") {
  std::stringstream bad1("variant = STORTD\nthis is not a pair\n");
  CHECK_THROWS_WITH_AS(parse_config(bad1),
                       doctest::Contains("line 2"), std::invalid_argument);
  std::stringstream bad2("frobnicate = 3\n");
  CHECK_THROWS_AS(parse_config(bad2), std::invalid_argument);
  std::stringstream comments("# comment only\nrate = 0.2 # trailing\n");
  CHECK(parse_config(comments).rate == 0.2);
}

TEST_SUITE_END();
