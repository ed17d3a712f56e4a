#include "stortd/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "stortd/metrics.hpp"
#include "stortd/rng.hpp"

namespace stortd {

namespace {

// Sub-seed salts so the generator, masks, outliers and engine init draw
// from independent streams of one experiment seed.
constexpr uint64_t kSaltSynth = 0xA1;
constexpr uint64_t kSaltMask = 0xB2;
constexpr uint64_t kSaltOutlier = 0xC3;
constexpr uint64_t kSaltEngine = 0xD4;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::array<Index, 3> parse_ranks(const std::string& v) {
  std::array<Index, 3> r{};
  std::stringstream ss(v);
  std::string cell;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, cell, ','))
      throw std::invalid_argument("config: ranks needs r1,r2,r3");
    r[static_cast<size_t>(i)] = std::stol(trim(cell));
  }
  return r;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  bool saw_input = false, saw_synth = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "variant") cfg.variant = variant_from_string(val);
    else if (key == "pattern") cfg.pattern = mask_pattern_from_string(val);
    else if (key == "rate") cfg.rate = std::stod(val);
    else if (key == "lambda") cfg.hyper.lambda = std::stod(val);
    else if (key == "alpha") cfg.hyper.alpha = std::stod(val);
    else if (key == "beta") cfg.hyper.beta = std::stod(val);
    else if (key == "gamma") cfg.hyper.gamma = std::stod(val);
    else if (key == "gamma_scale") cfg.hyper.gamma_scale = std::stod(val);
    else if (key == "ranks") {
      cfg.hyper.ranks = parse_ranks(val);
      cfg.synth.ranks = cfg.hyper.ranks;
    } else if (key == "true_ranks") cfg.synth.ranks = parse_ranks(val);
    else if (key == "eps") cfg.hyper.eps = std::stod(val);
    else if (key == "max_inner_iters") cfg.hyper.max_inner_iters = std::stoi(val);
    else if (key == "init_gain") cfg.hyper.init_gain = std::stod(val);
    else if (key == "use_updated_spatial")
      cfg.hyper.use_updated_spatial = parse_bool(val);
    else if (key == "warm_start_weights")
      cfg.hyper.warm_start_weights = parse_bool(val);
    else if (key == "synth") { cfg.use_synth = parse_bool(val); saw_synth = true; }
    else if (key == "input") { cfg.input_path = val; cfg.use_synth = false; saw_input = true; }
    else if (key == "mask_input") cfg.mask_path = val;
    else if (key == "n1") cfg.synth.n1 = std::stol(val);
    else if (key == "n2") cfg.synth.n2 = std::stol(val);
    else if (key == "days") cfg.synth.days = std::stol(val);
    else if (key == "temporal_smoothness") cfg.synth.temporal_smoothness = std::stod(val);
    else if (key == "spatial_smoothness") cfg.synth.spatial_smoothness = std::stod(val);
    else if (key == "noise_sigma") cfg.synth.noise_sigma = std::stod(val);
    else if (key == "drift") cfg.synth.drift = std::stod(val);
    else if (key == "outlier_density") cfg.outliers.density = std::stod(val);
    else if (key == "outlier_magnitude") cfg.outliers.magnitude = std::stod(val);
    else if (key == "outlier_sign") cfg.outliers.symmetric = (val == "symmetric");
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "num_seeds") cfg.num_seeds = std::stoi(val);
    else if (key == "out") cfg.out_dir = val;
    else if (key == "dump_slices") cfg.dump_slices = parse_bool(val);
    else if (key == "graph_sigma") cfg.graph_sigma = std::stod(val);
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
  }
  if (saw_input && saw_synth && cfg.use_synth)
    throw std::invalid_argument("config: both input and synth=true given");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

void serialize_config(const ExperimentConfig& cfg, std::ostream& out) {
  out.precision(17);
  out << "variant = " << to_string(cfg.variant) << '\n'
      << "pattern = " << to_string(cfg.pattern) << '\n'
      << "rate = " << cfg.rate << '\n'
      << "lambda = " << cfg.hyper.lambda << '\n'
      << "alpha = " << cfg.hyper.alpha << '\n'
      << "beta = " << cfg.hyper.beta << '\n'
      << "gamma = " << cfg.hyper.gamma << '\n'
      << "gamma_scale = " << cfg.hyper.gamma_scale << '\n'
      << "ranks = " << cfg.hyper.ranks[0] << ',' << cfg.hyper.ranks[1] << ','
      << cfg.hyper.ranks[2] << '\n'
      << "true_ranks = " << cfg.synth.ranks[0] << ',' << cfg.synth.ranks[1]
      << ',' << cfg.synth.ranks[2] << '\n'
      << "eps = " << cfg.hyper.eps << '\n'
      << "max_inner_iters = " << cfg.hyper.max_inner_iters << '\n'
      << "init_gain = " << cfg.hyper.init_gain << '\n'
      << "use_updated_spatial = " << (cfg.hyper.use_updated_spatial ? "true" : "false") << '\n'
      << "warm_start_weights = " << (cfg.hyper.warm_start_weights ? "true" : "false") << '\n';
  if (cfg.use_synth) {
    out << "synth = true\n"
        << "n1 = " << cfg.synth.n1 << '\n'
        << "n2 = " << cfg.synth.n2 << '\n'
        << "days = " << cfg.synth.days << '\n'
        << "temporal_smoothness = " << cfg.synth.temporal_smoothness << '\n'
        << "spatial_smoothness = " << cfg.synth.spatial_smoothness << '\n'
        << "noise_sigma = " << cfg.synth.noise_sigma << '\n'
        << "drift = " << cfg.synth.drift << '\n';
  } else {
    out << "input = " << cfg.input_path << '\n';
    if (!cfg.mask_path.empty()) out << "mask_input = " << cfg.mask_path << '\n';
  }
  out << "outlier_density = " << cfg.outliers.density << '\n'
      << "outlier_magnitude = " << cfg.outliers.magnitude << '\n'
      << "outlier_sign = " << (cfg.outliers.symmetric ? "symmetric" : "positive") << '\n'
      << "seed = " << cfg.seed << '\n'
      << "num_seeds = " << cfg.num_seeds << '\n'
      << "out = " << cfg.out_dir << '\n'
      << "dump_slices = " << (cfg.dump_slices ? "true" : "false") << '\n'
      << "graph_sigma = " << cfg.graph_sigma << '\n';
}

double ExperimentResult::window_rse(size_t first, size_t last) const {
  double err = 0.0, energy = 0.0;
  last = std::min(last, slice_sq_err.size());
  for (size_t i = first; i < last; ++i) {
    err += slice_sq_err[i];
    energy += slice_sq_truth[i];
  }
  if (energy <= 0.0) return 0.0;
  return std::sqrt(err / energy);
}

double ExperimentResult::window_mean_f1(size_t first, size_t last) const {
  double sum = 0.0;
  size_t count = 0;
  last = std::min(last, report.records.size());
  for (size_t i = first; i < last; ++i) {
    sum += report.records[i].f1;
    ++count;
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

namespace {

Laplacian engine_laplacian_from_slice(const Mat& day0, double sigma) {
  std::vector<Vec> features;
  features.reserve(static_cast<size_t>(day0.cols()));
  for (Index j = 0; j < day0.cols(); ++j) features.push_back(day0.col(j));
  const double bw = sigma > 0.0 ? sigma : median_bandwidth(features);
  return build_laplacian(build_graph(features, bw));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, uint64_t seed) {
  using clock = std::chrono::steady_clock;
  ExperimentResult result;
  const Hyperparams hyper = apply_variant(cfg.hyper, cfg.variant);

  Tensor3 clean;       // synth mode only
  bool have_truth = false;
  Index n1, n2;
  long days;

  std::optional<StreamReader> reader;
  std::optional<StreamReader> mask_reader;
  if (cfg.use_synth) {
    SynthSpec sp = cfg.synth;
    sp.seed = Rng::mix(seed, kSaltSynth);
    if (sp.spatial_smoothness > 0.0 && sp.graph.empty())
      sp.graph = make_ring_graph(sp.n2);
    clean = gen_stream(sp).clean;
    have_truth = true;
    n1 = clean.dim(1);
    n2 = clean.dim(2);
    days = clean.dim(3);
  } else {
    reader.emplace(cfg.input_path);
    n1 = reader->header().n1;
    n2 = reader->header().n2;
    days = reader->header().days;
    if (!cfg.mask_path.empty()) {
      mask_reader.emplace(cfg.mask_path);
      if (mask_reader->header().n1 != n1 || mask_reader->header().n2 != n2)
        throw StreamParseError("mask stream dims differ from data stream");
    }
  }

  const MaskSpec mask_spec{cfg.pattern, cfg.rate, Rng::mix(seed, kSaltMask)};
  OutlierSpec out_spec = cfg.outliers;
  out_spec.seed = Rng::mix(seed, kSaltOutlier);

  // Per-stream scale for outlier magnitudes.
  double stream_sigma = 1.0;
  if (have_truth) {
    const double mean = clean.values().mean();
    stream_sigma =
        std::sqrt((clean.values().array() - mean).square().mean());
  }

  // Engine Laplacian from the day-0 reference slice (ground truth in synth
  // mode, first slice otherwise).
  Mat day0;
  if (have_truth) {
    day0 = clean.slice(0);
  } else {
    StreamReader peek(cfg.input_path);
    peek.next(day0);
  }
  Laplacian lap = Laplacian::zero(n2);
  if (hyper.alpha != 0.0)
    lap = engine_laplacian_from_slice(day0, cfg.graph_sigma);

  Engine engine(n1, n2, hyper, lap, Rng::mix(seed, kSaltEngine));

  if (cfg.dump_slices) {
    result.report.recovered = Tensor3(n1, n2, days);
    result.report.outliers = Tensor3(n1, n2, days);
  }

  EvalAccumulator acc;
  const auto run_start = clock::now();
  Mat file_slice;
  for (long day = 0; day < days; ++day) {
    Mat truth_slice;
    if (have_truth) {
      truth_slice = clean.slice(day);
    } else {
      if (!reader->next(file_slice))
        throw StreamParseError(cfg.input_path + ": stream ended early");
      truth_slice = file_slice;
    }

    Mat mask;
    if (mask_reader) {
      if (!mask_reader->next(mask))
        throw StreamParseError(cfg.mask_path + ": mask stream ended early");
    } else {
      mask = gen_mask(mask_spec, n1, n2, day);
    }

    Mat corrupted = truth_slice;
    Mat truth_outliers = Mat::Zero(n1, n2);
    if (out_spec.density > 0.0) {
      auto [c, t] =
          inject_outliers(truth_slice, mask, out_spec, stream_sigma, day);
      corrupted = std::move(c);
      truth_outliers = std::move(t);
    }
    const Mat observed = mask.cwiseProduct(corrupted);

    const auto t0 = clock::now();
    const SliceResult res = engine.step(observed, mask);
    const auto t1 = clock::now();

    SliceRecord rec;
    rec.t = day;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.state_elements = engine.state().element_count();
    rec.inner_iters = res.inner_iters;

    // Held-out imputation error when entries are missing and truth is
    // known; full-slice error otherwise (fit error in file mode).
    const bool any_missing = mask.sum() < static_cast<double>(n1 * n2);
    auto [tv, ev] = select_entries(truth_slice, res.recovered, mask,
                                   /*observed_entries=*/!have_truth ||
                                       !any_missing);
    if (tv.size() > 0 && tv.squaredNorm() > 0.0) {
      rec.rse = rse(tv, ev);
      acc.add_entries(tv, ev);
      result.slice_sq_err.push_back((tv - ev).squaredNorm());
      result.slice_sq_truth.push_back(tv.squaredNorm());
    } else {
      result.slice_sq_err.push_back(0.0);
      result.slice_sq_truth.push_back(0.0);
    }
    if (out_spec.density > 0.0)
      rec.f1 = outlier_f1(truth_outliers, res.outliers).f1;
    acc.add_record(rec);

    if (cfg.dump_slices) {
      result.report.recovered->set_slice(day, res.recovered);
      result.report.outliers->set_slice(day, res.outliers);
    }
  }
  result.total_wall_s =
      std::chrono::duration<double>(clock::now() - run_start).count();

  result.report.records = acc.records;
  result.report.final_rse = acc.sum_sq_truth > 0.0 ? acc.total_rse() : 0.0;
  if (acc.records.size() >= 10) {
    const StreamProfile prof = streaming_profile(acc.records);
    result.report.mean_time_ms = prof.mean_time_ms;
    result.report.time_slope_ms = prof.time_slope_ms;
    result.report.max_state_elements = prof.max_state_elements;
  }
  return result;
}

unsigned worker_count() {
  if (const char* env = std::getenv("STORTD_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

namespace {

// Runs one job per cell index on a bounded worker pool.
void parallel_cells(size_t count, const std::function<void(size_t)>& job) {
  const unsigned workers = std::min<size_t>(worker_count(), count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        job(i);
    });
  for (auto& th : pool) th.join();
}

double mean_rse_over_seeds(const ExperimentConfig& cfg) {
  double sum = 0.0;
  for (int i = 0; i < cfg.num_seeds; ++i)
    sum += run_experiment(cfg, Rng::mix(cfg.seed, static_cast<uint64_t>(i)))
               .report.final_rse;
  return sum / static_cast<double>(cfg.num_seeds);
}

}  // namespace

std::vector<SweepRow> sweep_experiment(const ExperimentConfig& cfg,
                                       const std::vector<double>& alpha_grid,
                                       const std::vector<double>& beta_grid,
                                       const std::vector<MaskPattern>& patterns) {
  if (alpha_grid.empty() || beta_grid.empty() || patterns.empty())
    throw std::invalid_argument("sweep_experiment: empty grid");
  std::vector<SweepRow> rows;
  for (MaskPattern p : patterns)
    for (double a : alpha_grid)
      for (double b : beta_grid) rows.push_back({p, a, b, 0.0});

  parallel_cells(rows.size(), [&](size_t i) {
    ExperimentConfig cell = cfg;
    cell.pattern = rows[i].pattern;
    cell.hyper.alpha = rows[i].alpha;
    cell.hyper.beta = rows[i].beta;
    rows[i].mean_rse = mean_rse_over_seeds(cell);
  });
  return rows;
}

std::vector<AblateRow> ablate_experiment(const ExperimentConfig& cfg,
                                         const std::vector<MaskPattern>& patterns,
                                         const std::vector<double>& rates) {
  const Variant variants[] = {Variant::ORTD, Variant::SORTD, Variant::TORTD,
                              Variant::STORTD};
  std::vector<AblateRow> rows;
  for (Variant v : variants)
    for (MaskPattern p : patterns)
      for (double r : rates) rows.push_back({v, p, r, 0.0});

  parallel_cells(rows.size(), [&](size_t i) {
    ExperimentConfig cell = cfg;
    cell.variant = rows[i].variant;
    cell.pattern = rows[i].pattern;
    cell.rate = rows[i].rate;
    rows[i].mean_rse = mean_rse_over_seeds(cell);
  });
  return rows;
}

std::vector<ProfileRow> profile_experiment(const ExperimentConfig& cfg,
                                           const std::vector<long>& day_counts) {
  std::vector<ProfileRow> rows;
  for (long days : day_counts) {
    ExperimentConfig cell = cfg;
    cell.synth.days = days;
    const ExperimentResult res = run_experiment(cell, cfg.seed);
    ProfileRow row;
    row.days = days;
    row.mean_time_ms = res.report.mean_time_ms;
    row.time_slope_ms = res.report.time_slope_ms;
    row.max_state_elements = res.report.max_state_elements;
    row.state_constant = true;
    for (const auto& rec : res.report.records)
      if (rec.state_elements != res.report.max_state_elements)
        row.state_constant = false;
    row.online_cum_s = res.total_wall_s;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stortd
