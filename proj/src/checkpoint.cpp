#include <cstdint>
#include <cstring>
#include <fstream>

#include "stortd/engine.hpp"

namespace stortd {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'O', 'R', 'T', 'D', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_raw(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}

void write_i64(std::ostream& out, int64_t v) { write_raw(out, &v, 8); }
void write_f64(std::ostream& out, double v) { write_raw(out, &v, 8); }

int64_t read_i64(std::istream& in) {
  int64_t v;
  read_raw(in, &v, 8);
  return v;
}
double read_f64(std::istream& in) {
  double v;
  read_raw(in, &v, 8);
  return v;
}

void write_mat(std::ostream& out, const Mat& m) {
  write_i64(out, m.rows());
  write_i64(out, m.cols());
  write_raw(out, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

Mat read_mat(std::istream& in) {
  const int64_t rows = read_i64(in), cols = read_i64(in);
  if (rows < 0 || cols < 0) throw std::runtime_error("checkpoint: bad shape");
  Mat m(rows, cols);
  read_raw(in, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
  return m;
}

void write_vec(std::ostream& out, const Vec& v) {
  write_i64(out, v.size());
  write_raw(out, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
}

Vec read_vec(std::istream& in) {
  const int64_t n = read_i64(in);
  if (n < 0) throw std::runtime_error("checkpoint: bad vector size");
  Vec v(n);
  read_raw(in, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
  return v;
}

}  // namespace

void save_checkpoint(const EngineState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  write_raw(out, kMagic, sizeof(kMagic));
  write_raw(out, &kVersion, sizeof(kVersion));

  const Hyperparams& h = state.hyper;
  write_f64(out, h.lambda);
  write_f64(out, h.alpha);
  write_f64(out, h.beta);
  write_f64(out, h.gamma);
  write_f64(out, h.gamma_scale);
  write_i64(out, h.ranks[0]);
  write_i64(out, h.ranks[1]);
  write_i64(out, h.ranks[2]);
  write_f64(out, h.eps);
  write_i64(out, h.max_inner_iters);
  write_f64(out, h.init_gain);
  write_i64(out, h.use_updated_spatial ? 1 : 0);
  write_i64(out, h.warm_start_weights ? 1 : 0);

  write_i64(out, state.core.dim(1));
  write_i64(out, state.core.dim(2));
  write_i64(out, state.core.dim(3));
  write_vec(out, state.core.values());
  write_mat(out, state.u_temporal);
  write_mat(out, state.u_spatial);
  write_i64(out, static_cast<int64_t>(state.gains_spatial.size()));
  for (const auto& g : state.gains_spatial) write_mat(out, g);
  write_i64(out, static_cast<int64_t>(state.gains_temporal.size()));
  for (const auto& g : state.gains_temporal) write_mat(out, g);
  write_mat(out, state.laplacian.l);
  write_vec(out, state.laplacian.degree);
  write_i64(out, state.t);
  write_vec(out, state.prev_weight);
  write_f64(out, state.robust_scale);
  if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

EngineState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  read_raw(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic token");
  uint32_t version;
  read_raw(in, &version, sizeof(version));
  if (version != kVersion)
    throw std::runtime_error("load_checkpoint: unsupported version");

  EngineState state;
  Hyperparams& h = state.hyper;
  h.lambda = read_f64(in);
  h.alpha = read_f64(in);
  h.beta = read_f64(in);
  h.gamma = read_f64(in);
  h.gamma_scale = read_f64(in);
  h.ranks[0] = read_i64(in);
  h.ranks[1] = read_i64(in);
  h.ranks[2] = read_i64(in);
  h.eps = read_f64(in);
  h.max_inner_iters = static_cast<int>(read_i64(in));
  h.init_gain = read_f64(in);
  h.use_updated_spatial = read_i64(in) != 0;
  h.warm_start_weights = read_i64(in) != 0;

  const Index r1 = read_i64(in), r2 = read_i64(in), r3 = read_i64(in);
  state.core = Tensor3(r1, r2, r3);
  state.core.values() = read_vec(in);
  if (state.core.values().size() != r1 * r2 * r3)
    throw std::runtime_error("load_checkpoint: core size mismatch");
  state.u_temporal = read_mat(in);
  state.u_spatial = read_mat(in);
  const int64_t ns = read_i64(in);
  state.gains_spatial.reserve(static_cast<size_t>(ns));
  for (int64_t i = 0; i < ns; ++i) state.gains_spatial.push_back(read_mat(in));
  const int64_t nt = read_i64(in);
  state.gains_temporal.reserve(static_cast<size_t>(nt));
  for (int64_t i = 0; i < nt; ++i)
    state.gains_temporal.push_back(read_mat(in));
  state.laplacian.l = read_mat(in);
  state.laplacian.degree = read_vec(in);
  state.t = read_i64(in);
  state.prev_weight = read_vec(in);
  state.robust_scale = read_f64(in);
  return state;
}

}  // namespace stortd
