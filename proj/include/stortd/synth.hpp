#pragma once

#include <array>
#include <cstdint>

#include "stortd/regularizers.hpp"
#include "stortd/tensor.hpp"

namespace stortd {

/// Generator spec for ground-truth streams with controllable Tucker rank
/// and spatio-temporal smoothness.
struct SynthSpec {
  Index n1 = 30, n2 = 20;
  long days = 200;
  std::array<Index, 3> ranks{3, 3, 2};

  // Cyclic moving-average half-width applied to the temporal factor's
  // columns; 0 disables smoothing.
  double temporal_smoothness = 0.0;
  // Number of graph-diffusion steps (I - eta*L) applied to the spatial
  // factor's columns; requires a graph.
  double spatial_smoothness = 0.0;
  SpatialGraph graph;  // may be empty

  double noise_sigma = 0.0;
  double drift = 0.0;  // per-day random-walk scale on the day weights
  uint64_t seed = 0;
};

struct SynthStream {
  Tensor3 clean;   // n1 x n2 x days, unit std before noise
  Tensor3 core;    // generating core
  Mat u_temporal;  // n1 x r1
  Mat u_spatial;   // n2 x r2
  Mat weights;     // days x r3, one day-weight row per slice
};

SynthStream gen_stream(const SynthSpec& spec);

/// Gaussian-weighted graph over n nodes placed evenly on the unit circle;
/// a convenient smooth geometry for synthetic experiments.
SpatialGraph make_ring_graph(Index n);

/// Largest Laplacian eigenvalue estimated by power iteration.
double laplacian_spectral_radius(const Laplacian& lap);

}  // namespace stortd
