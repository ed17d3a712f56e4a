#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stortd/regularizers.hpp"
#include "stortd/tensor.hpp"

namespace stortd {

struct Hyperparams {
  double lambda = 0.98;  // forgetting factor in [0,1]
  double alpha = 0.0;    // spatial regularization weight
  double beta = 0.0;     // temporal regularization weight

  // Sparsity threshold. gamma < 0 selects the adaptive default
  // gamma_scale * sigma_hat, where sigma_hat is a running MAD-based scale
  // of the masked residuals.
  double gamma = -1.0;
  double gamma_scale = 3.0;

  std::array<Index, 3> ranks{3, 3, 2};

  // Inner-loop tolerance; eps < 0 selects 1e-6 * ||masked slice||_F.
  double eps = -1.0;
  int max_inner_iters = 50;

  double init_gain = 1.0;  // seeds the per-row gain matrices R = init_gain*I

  // Gauss-Seidel option: form the temporal update's H with the spatial
  // factor already updated for this slice instead of the pre-slice snapshot.
  bool use_updated_spatial = false;
  // Warm-start the inner loop's weight vector from the previous day.
  bool warm_start_weights = false;
};

/// Ablation variants. SORTD drops the spatial term, TORTD drops the
/// temporal term, ORTD drops both.
enum class Variant { STORTD, SORTD, TORTD, ORTD };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
Hyperparams apply_variant(Hyperparams h, Variant v);

struct EngineState {
  Tensor3 core;                      // r1 x r2 x r3
  Mat u_temporal;                    // n1 x r1
  Mat u_spatial;                     // n2 x r2
  std::vector<Mat> gains_spatial;    // n2 matrices, each r2 x r2
  std::vector<Mat> gains_temporal;   // n1 matrices, each r1 x r1
  Laplacian laplacian;               // n2 x n2
  Hyperparams hyper;
  long t = 0;

  Vec prev_weight;           // last day's u_D (skip-and-hold / warm start)
  double robust_scale = 0.0; // running MAD-based residual scale

  Index n1() const { return u_temporal.rows(); }
  Index n2() const { return u_spatial.rows(); }

  /// Total number of stored scalars; must be independent of t.
  size_t element_count() const;
};

struct SliceResult {
  Mat recovered;   // n1 x n2 low-rank reconstruction
  Mat outliers;    // n1 x n2 sparse component, zero off-mask
  Vec weight;      // u_D, length r3
  int inner_iters = 0;
  bool converged = false;
  bool skipped = false;  // degenerate slice, state held
};

struct EstimateResult {
  Vec weight;
  Mat outliers;
  int inner_iters = 0;
  bool converged = false;
};

/// Thrown when a slice has fewer observed entries than r3.
struct DegenerateSliceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Online robust Tucker tracker. One engine serves one stream; step() is
/// the per-day driver. The individual update stages are public so they can
/// be exercised and cross-checked in isolation.
class Engine {
 public:
  Engine(Index n1, Index n2, const Hyperparams& hyper,
         const Laplacian& laplacian, uint64_t seed);
  explicit Engine(EngineState state) : state_(std::move(state)) {}

  EngineState& state() { return state_; }
  const EngineState& state() const { return state_; }

  /// Alternates the weight solve and the soft-threshold outlier step on the
  /// observed entries until the iterates stabilize. Throws
  /// DegenerateSliceError when fewer than r3 entries are observed.
  EstimateResult estimate_slice(const Mat& observed, const Mat& mask);

  /// mask .* (observed - outliers); unobserved entries are zero.
  static Mat remove_outliers(const Mat& observed, const Mat& mask,
                             const Mat& outliers);

  /// Recursive per-row update of the spatial factor and its gain matrices.
  /// All rows are updated from the pre-call snapshot of the factor.
  void update_spatial_factor(const Mat& n_obs, const Mat& mask,
                             const Vec& weight);

  /// Recursive per-row update of the temporal factor, with cyclic
  /// neighbor coupling.
  void update_temporal_factor(const Mat& n_obs, const Mat& mask,
                              const Vec& weight);

  /// Stochastic core correction from the masked residual of the current
  /// slice, using the factors already updated for this slice.
  void update_core(const Mat& n_obs, const Mat& mask, const Vec& weight);

  /// Full per-slice driver: estimate, remove outliers, update both factors
  /// and the core, then reconstruct. Degenerate slices are skip-and-hold:
  /// the result is reconstructed from the prior state and the numeric state
  /// is left untouched.
  SliceResult step(const Mat& observed, const Mat& mask);

  /// Core x1 U_T x2 U_S x3 u_D^T as an n1 x n2 slice.
  Mat reconstruct(const Vec& weight) const;

 private:
  EngineState state_;
};

/// Versioned binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const EngineState& state, const std::string& path);
EngineState load_checkpoint(const std::string& path);

}  // namespace stortd
