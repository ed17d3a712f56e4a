#pragma once

#include <istream>
#include <string>
#include <vector>

#include "stortd/engine.hpp"
#include "stortd/masks.hpp"
#include "stortd/stream_io.hpp"
#include "stortd/synth.hpp"

namespace stortd {

/// Flat key-value experiment description. Exactly one of {synthetic
/// generator, input stream path} is active.
struct ExperimentConfig {
  Variant variant = Variant::STORTD;
  MaskPattern pattern = MaskPattern::RM;
  double rate = 0.4;
  Hyperparams hyper;

  bool use_synth = true;
  SynthSpec synth;
  std::string input_path;
  std::string mask_path;  // optional parallel mask stream

  OutlierSpec outliers;  // density 0 disables injection

  uint64_t seed = 0;
  int num_seeds = 1;  // averaging count for sweep/ablate cells
  std::string out_dir = "out";
  bool dump_slices = false;
  double graph_sigma = -1.0;  // engine graph bandwidth; < 0 = median heuristic
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void serialize_config(const ExperimentConfig& cfg, std::ostream& out);

/// RunReport plus per-slice error energies, so callers can form exact
/// windowed RSE values.
struct ExperimentResult {
  RunReport report;
  std::vector<double> slice_sq_err;    // held-out (or full-slice) energies
  std::vector<double> slice_sq_truth;
  double total_wall_s = 0.0;

  double window_rse(size_t first, size_t last) const;  // [first, last)
  double window_mean_f1(size_t first, size_t last) const;
};

/// Runs one stream end to end with the given seed (masks, outliers, engine
/// init and the generator all derive sub-seeds from it).
ExperimentResult run_experiment(const ExperimentConfig& cfg, uint64_t seed);

struct SweepRow {
  MaskPattern pattern;
  double alpha, beta;
  double mean_rse;
};

/// Cross product of the grids, each cell averaged over cfg.num_seeds runs.
/// Cells are independent and executed by a worker pool capped by the
/// STORTD_THREADS environment variable.
std::vector<SweepRow> sweep_experiment(const ExperimentConfig& cfg,
                                       const std::vector<double>& alpha_grid,
                                       const std::vector<double>& beta_grid,
                                       const std::vector<MaskPattern>& patterns);

struct AblateRow {
  Variant variant;
  MaskPattern pattern;
  double rate;
  double mean_rse;
};

/// All four variants on identical streams/masks/seeds.
std::vector<AblateRow> ablate_experiment(const ExperimentConfig& cfg,
                                         const std::vector<MaskPattern>& patterns,
                                         const std::vector<double>& rates);

struct ProfileRow {
  long days;
  double mean_time_ms;
  double time_slope_ms;
  size_t max_state_elements;
  bool state_constant;
  double online_cum_s;
};

std::vector<ProfileRow> profile_experiment(const ExperimentConfig& cfg,
                                           const std::vector<long>& day_counts);

/// Worker count: STORTD_THREADS if set, otherwise hardware concurrency.
unsigned worker_count();

}  // namespace stortd
