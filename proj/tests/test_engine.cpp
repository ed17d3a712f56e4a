#include <doctest.h>

#include <cstdio>

#include "stortd/engine.hpp"
#include "stortd/rng.hpp"
#include "stortd/synth.hpp"
#include "oracle/oracle.hpp"

using namespace stortd;

namespace {

Hyperparams base_hyper(std::array<Index, 3> ranks) {
  Hyperparams h;
  h.ranks = ranks;
  return h;
}

bool states_identical(const EngineState& a, const EngineState& b) {
  if (a.t != b.t || a.robust_scale != b.robust_scale) return false;
  if (!a.core.values().cwiseEqual(b.core.values()).all()) return false;
  if (!a.u_temporal.cwiseEqual(b.u_temporal).all()) return false;
  if (!a.u_spatial.cwiseEqual(b.u_spatial).all()) return false;
  if (a.prev_weight.size() != b.prev_weight.size() ||
      !a.prev_weight.cwiseEqual(b.prev_weight).all())
    return false;
  for (size_t i = 0; i < a.gains_spatial.size(); ++i)
    if (!a.gains_spatial[i].cwiseEqual(b.gains_spatial[i]).all()) return false;
  for (size_t i = 0; i < a.gains_temporal.size(); ++i)
    if (!a.gains_temporal[i].cwiseEqual(b.gains_temporal[i]).all())
      return false;
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("engine");

TEST_CASE("init is deterministic and orthonormal") {
  const Laplacian lap = Laplacian::zero(5);
  Engine a(6, 5, base_hyper({2, 2, 1}), lap, 42);
  Engine b(6, 5, base_hyper({2, 2, 1}), lap, 42);
  CHECK(states_identical(a.state(), b.state()));
  Engine c(6, 5, base_hyper({2, 2, 1}), lap, 43);
  CHECK_FALSE(states_identical(a.state(), c.state()));

  const Mat& ut = a.state().u_temporal;
  const Mat& us = a.state().u_spatial;
  CHECK((ut.transpose() * ut - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK((us.transpose() * us - Mat::Identity(2, 2)).norm() < 1e-10);

  // Full ranks give square orthogonal factors.
  Engine sq(4, 3, base_hyper({4, 3, 1}), Laplacian::zero(3), 1);
  const Mat& utf = sq.state().u_temporal;
  CHECK((utf * utf.transpose() - Mat::Identity(4, 4)).norm() < 1e-10);

  CHECK_THROWS_AS(Engine(3, 3, base_hyper({4, 3, 1}), Laplacian::zero(3), 1),
                  std::invalid_argument);
}

TEST_CASE("estimate_slice recovers the weight of an exact-model slice") {
  Engine e(8, 6, base_hyper({3, 3, 2}), Laplacian::zero(6), 7);
  Hyperparams& h = e.state().hyper;
  h.gamma = 100.0;  // no outliers
  Vec w_true(2);
  w_true << 1.3, -0.4;
  const Mat slice = e.reconstruct(w_true);
  const Mat mask = Mat::Ones(8, 6);
  const EstimateResult res = e.estimate_slice(slice, mask);
  CHECK((res.weight - w_true).norm() < 1e-8);
  CHECK(res.outliers.isZero(1e-12));
  CHECK(res.converged);
}

TEST_CASE("1-D alternation fixed point: m=5, gamma=1 gives u=5, s=0") {
  // With a unit reconstruction basis the alternation is u = m - s,
  // s = soft(m - u, 1). From s=0: u=5, then s=soft(0,1)=0 - a fixed point.
  Hyperparams h = base_hyper({1, 1, 1});
  h.gamma = 1.0;
  h.init_gain = 1e-12;
  h.eps = 1e-12;
  Engine e(1, 1, h, Laplacian::zero(1), 3);
  // Force the unit basis.
  e.state().core.values()(0) = 1.0;
  e.state().u_temporal(0, 0) = 1.0;
  e.state().u_spatial(0, 0) = 1.0;
  Mat m(1, 1), p(1, 1);
  m << 5.0;
  p << 1.0;
  const EstimateResult res = e.estimate_slice(m, p);
  CHECK(res.weight(0) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(res.outliers(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("estimate_slice rejects degenerate slices") {
  Engine e(4, 4, base_hyper({2, 2, 2}), Laplacian::zero(4), 5);
  const Mat m = Mat::Ones(4, 4);
  CHECK_THROWS_AS(e.estimate_slice(m, Mat::Zero(4, 4)), DegenerateSliceError);
  Mat one_entry = Mat::Zero(4, 4);
  one_entry(0, 0) = 1.0;  // fewer than r3=2 observed
  CHECK_THROWS_AS(e.estimate_slice(m, one_entry), DegenerateSliceError);
}

TEST_CASE("remove_outliers masks and subtracts") {
  Rng rng(11);
  const Mat m = random_gaussian(rng, 3, 4);
  const Mat s = random_gaussian(rng, 3, 4);
  Mat p = Mat::Ones(3, 4);
  p(1, 2) = 0.0;
  const Mat out = Engine::remove_outliers(m, p, Mat::Zero(3, 4));
  CHECK((out - p.cwiseProduct(m)).norm() == 0.0);
  CHECK(Engine::remove_outliers(m, Mat::Ones(3, 4), m).isZero(0.0));
  const Mat full = Engine::remove_outliers(m, p, s);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j)
      CHECK(full(i, j) == doctest::Approx(p(i, j) * (m(i, j) - s(i, j))));
}

TEST_CASE("fully unobserved rows and columns stay unchanged") {
  Hyperparams h = base_hyper({2, 2, 1});
  Engine e(6, 5, h, Laplacian::zero(5), 13);
  Vec w(1);
  w << 1.0;
  Rng rng(17);
  const Mat slice = random_gaussian(rng, 6, 5);
  Mat mask = Mat::Ones(6, 5);
  mask.col(2).setZero();  // location 2 unobserved
  mask.row(4).setZero();  // timestamp 4 unobserved

  const Mat us_before = e.state().u_spatial;
  const Mat ut_before = e.state().u_temporal;
  e.update_spatial_factor(mask.cwiseProduct(slice), mask, w);
  CHECK((e.state().u_spatial.row(2) - us_before.row(2)).norm() == 0.0);
  e.update_temporal_factor(mask.cwiseProduct(slice), mask, w);
  CHECK((e.state().u_temporal.row(4) - ut_before.row(4)).norm() == 0.0);
}

TEST_CASE("one-shot row updates match the direct normal-equation oracle") {
  // t=1, lambda=1, alpha=beta=0, full mask, vanishing init_gain.
  Hyperparams h = base_hyper({2, 2, 1});
  h.lambda = 1.0;
  h.alpha = 0.0;
  h.beta = 0.0;
  h.init_gain = 1e-10;
  Engine e(6, 5, h, Laplacian::zero(5), 19);

  Rng rng(23);
  const Mat slice = random_gaussian(rng, 6, 5);
  const Mat mask = Mat::Ones(6, 5);
  Vec w(1);
  w << 0.8;

  const EngineState snap = e.state();
  const std::vector<Mat> slices = {slice};
  const std::vector<Mat> masks = {mask};
  const std::vector<Vec> weights = {w};

  e.update_spatial_factor(slice, mask, w);
  for (Index r = 0; r < 5; ++r) {
    const Vec direct = oracle::direct_row_solve_spatial(
        slices, masks, snap.core, snap.u_temporal, snap.u_spatial, weights, r,
        1.0, 0.0, snap.laplacian);
    CHECK((e.state().u_spatial.row(r).transpose() - direct).norm() <=
          1e-6 * direct.norm());
  }

  Engine e2{snap};
  e2.update_temporal_factor(slice, mask, w);
  for (Index r = 0; r < 6; ++r) {
    const Vec direct = oracle::direct_row_solve_temporal(
        slices, masks, snap.core, snap.u_spatial, snap.u_temporal, weights, r,
        1.0, 0.0);
    CHECK((e2.state().u_temporal.row(r).transpose() - direct).norm() <=
          1e-6 * direct.norm());
  }
}

TEST_CASE("spatial update with alpha does not increase the penalty on a zero-residual slice") {
  SpatialGraph g;
  g.n = 2;
  g.weights = Mat::Zero(2, 2);
  g.weights(0, 1) = g.weights(1, 0) = 1.0;
  const Laplacian lap = build_laplacian(g);
  Hyperparams h = base_hyper({2, 2, 1});
  h.alpha = 50.0;
  h.lambda = 0.5;
  Engine e(4, 2, h, lap, 29);
  Vec w(1);
  w << 1.0;
  const Mat slice = e.reconstruct(w);  // zero residual
  const double before = spatial_penalty(lap, e.state().u_spatial);
  e.update_spatial_factor(slice, Mat::Ones(4, 2), w);
  CHECK(spatial_penalty(lap, e.state().u_spatial) <= before + 1e-12);
}

TEST_CASE("temporal update leaves constant rows fixed when the residual is zero") {
  Hyperparams h = base_hyper({2, 2, 1});
  h.beta = 10.0;
  h.lambda = 0.5;
  Engine e(5, 4, h, Laplacian::zero(4), 31);
  e.state().u_temporal = Mat::Ones(5, 2);  // E_T == 0
  Vec w(1);
  w << 1.0;
  const Mat slice = e.reconstruct(w);
  e.update_temporal_factor(slice, Mat::Ones(5, 4), w);
  CHECK((e.state().u_temporal - Mat::Ones(5, 2)).norm() < 1e-12);
}

TEST_CASE("core update annihilates the residual with orthogonal factors") {
  Hyperparams h = base_hyper({4, 3, 1});
  Engine e(4, 3, h, Laplacian::zero(3), 37);
  Vec w(1);
  w << 1.0;
  Rng rng(41);
  const Mat target = random_gaussian(rng, 4, 3);
  const Mat mask = Mat::Ones(4, 3);
  e.update_core(target, mask, w);
  CHECK((e.reconstruct(w) - target).norm() < 1e-8);

  // Zero residual leaves the core unchanged.
  const Vec core_before = e.state().core.values();
  e.update_core(e.reconstruct(w), mask, w);
  CHECK((e.state().core.values() - core_before).norm() < 1e-10);
}

TEST_CASE("masked-out entries contribute nothing to the core update") {
  Hyperparams h = base_hyper({2, 2, 1});
  Engine e(4, 3, h, Laplacian::zero(3), 43);
  Vec w(1);
  w << 1.0;
  Mat n_obs = e.reconstruct(w);
  Mat mask = Mat::Ones(4, 3);
  mask(2, 1) = 0.0;
  n_obs(2, 1) = 1e6;  // garbage on an unobserved entry
  n_obs = mask.cwiseProduct(n_obs);
  const Vec before = e.state().core.values();
  e.update_core(n_obs, mask, w);
  CHECK((e.state().core.values() - before).norm() < 1e-9);
}

TEST_CASE("step tracks a repeated exactly-low-rank slice") {
  SynthSpec spec;
  spec.n1 = 20;
  spec.n2 = 15;
  spec.days = 1;
  spec.ranks = {3, 3, 2};
  spec.seed = 47;
  const Mat target = gen_stream(spec).clean.slice(0);
  Hyperparams h = base_hyper({3, 3, 2});
  Engine e(20, 15, h, Laplacian::zero(15), 53);
  const Mat mask = Mat::Ones(20, 15);
  double last_win = 1e300;
  double err50 = 0.0;
  for (int t = 0; t < 50; ++t) {
    const SliceResult res = e.step(target, mask);
    const double err = (res.recovered - target).norm() / target.norm();
    if (t < 20 && t % 5 == 4) {
      CHECK(err < last_win);  // decreasing over the first 20 steps
      last_win = err;
    }
    err50 = err;
  }
  CHECK(err50 < 1e-3);
}

TEST_CASE("outlier slices are exactly zero off the mask") {
  Engine e(6, 5, base_hyper({2, 2, 1}), Laplacian::zero(5), 59);
  Rng rng(61);
  const Mat slice = random_gaussian(rng, 6, 5);
  Mat mask = Mat::Ones(6, 5);
  mask.row(0).setZero();
  mask(3, 3) = 0.0;
  const SliceResult res = e.step(mask.cwiseProduct(slice), mask);
  CHECK((res.outliers.array() * (1.0 - mask.array())).matrix().isZero(0.0));
}

TEST_CASE("gamma=0 absorbs the whole masked residual into the outlier slice") {
  Hyperparams h = base_hyper({2, 2, 1});
  h.gamma = 0.0;
  Engine e(5, 4, h, Laplacian::zero(4), 67);
  Rng rng(71);
  const Mat slice = random_gaussian(rng, 5, 4);
  const Mat mask = Mat::Ones(5, 4);
  const EstimateResult res = e.estimate_slice(slice, mask);
  const Mat recon = e.reconstruct(res.weight);
  CHECK((slice - recon - res.outliers).norm() < 1e-6);
}

TEST_CASE("large gamma forces a zero outlier slice") {
  Hyperparams h = base_hyper({2, 2, 1});
  h.gamma = 1e9;
  Engine e(5, 4, h, Laplacian::zero(4), 73);
  Rng rng(79);
  const Mat slice = random_gaussian(rng, 5, 4);
  const EstimateResult res = e.estimate_slice(slice, Mat::Ones(5, 4));
  CHECK(res.outliers.isZero(0.0));
}

TEST_CASE("degenerate slices are skip-and-hold") {
  Engine e(5, 4, base_hyper({2, 2, 2}), Laplacian::zero(4), 83);
  Rng rng(89);
  const Mat warm = random_gaussian(rng, 5, 4);
  e.step(warm, Mat::Ones(5, 4));
  const EngineState before = e.state();
  const SliceResult res = e.step(Mat::Zero(5, 4), Mat::Zero(5, 4));
  CHECK(res.skipped);
  CHECK_FALSE(res.converged);
  CHECK(res.outliers.isZero(0.0));
  CHECK(e.state().t == before.t + 1);
  CHECK(e.state().core.values().cwiseEqual(before.core.values()).all());
  CHECK(e.state().u_temporal.cwiseEqual(before.u_temporal).all());
  CHECK(e.state().u_spatial.cwiseEqual(before.u_spatial).all());
  // Reconstruction comes from the prior state's weight.
  CHECK((res.recovered - e.reconstruct(before.prev_weight)).norm() == 0.0);
}

TEST_CASE("state size is constant across steps") {
  Engine e(10, 8, base_hyper({3, 3, 2}), Laplacian::zero(8), 97);
  Rng rng(101);
  const size_t expect = e.state().element_count();
  for (int t = 0; t < 30; ++t) {
    const Mat slice = random_gaussian(rng, 10, 8);
    e.step(slice, Mat::Ones(10, 8));
    CHECK(e.state().element_count() == expect);
  }
}

TEST_CASE("gain matrices stay positive definite") {
  Hyperparams h = base_hyper({2, 2, 1});
  h.lambda = 0.9;
  h.init_gain = 1.0;
  Engine e(6, 5, h, Laplacian::zero(5), 103);
  Rng rng(107);
  for (int t = 0; t < 25; ++t) {
    const Mat slice = random_gaussian(rng, 6, 5);
    Mat mask = Mat::Ones(6, 5);
    if (t % 3 == 0) mask.row(t % 6).setZero();
    e.step(mask.cwiseProduct(slice), mask);
  }
  const double floor = std::pow(0.9, 25) * 1.0;
  for (const Mat& r : e.state().gains_spatial) {
    Eigen::SelfAdjointEigenSolver<Mat> es(r);
    CHECK(es.eigenvalues().minCoeff() >= floor - 1e-12);
  }
  for (const Mat& r : e.state().gains_temporal) {
    Eigen::SelfAdjointEigenSolver<Mat> es(r);
    CHECK(es.eigenvalues().minCoeff() >= floor - 1e-12);
  }
}

TEST_CASE("variants: ORTD is bit-identical to STORTD at alpha=beta=0") {
  Hyperparams h = base_hyper({2, 2, 1});
  h.alpha = 0.0;
  h.beta = 0.0;
  Engine a(6, 5, apply_variant(h, Variant::STORTD), Laplacian::zero(5), 109);
  Engine b(6, 5, apply_variant(h, Variant::ORTD), Laplacian::zero(5), 109);
  Rng rng(113);
  for (int t = 0; t < 10; ++t) {
    const Mat slice = random_gaussian(rng, 6, 5);
    const SliceResult ra = a.step(slice, Mat::Ones(6, 5));
    const SliceResult rb = b.step(slice, Mat::Ones(6, 5));
    CHECK(ra.recovered.cwiseEqual(rb.recovered).all());
    CHECK(ra.outliers.cwiseEqual(rb.outliers).all());
  }
  CHECK(states_identical(a.state(), b.state()));
}

TEST_CASE("apply_variant zeroes the right weights") {
  Hyperparams h;
  h.alpha = 2.0;
  h.beta = 3.0;
  const Hyperparams ortd = apply_variant(h, Variant::ORTD);
  CHECK(ortd.alpha == 0.0);
  CHECK(ortd.beta == 0.0);
  const Hyperparams sortd = apply_variant(h, Variant::SORTD);
  CHECK(sortd.alpha == 0.0);
  CHECK(sortd.beta == 3.0);
  const Hyperparams tortd = apply_variant(h, Variant::TORTD);
  CHECK(tortd.alpha == 2.0);
  CHECK(tortd.beta == 0.0);
  for (auto v : {Variant::STORTD, Variant::SORTD, Variant::TORTD,
                 Variant::ORTD})
    CHECK(variant_from_string(to_string(v)) == v);
}

TEST_CASE("determinism: same seed and stream give identical results") {
  SynthSpec spec;
  spec.n1 = 10;
  spec.n2 = 8;
  spec.days = 15;
  spec.seed = 5;
  const Tensor3 stream = gen_stream(spec).clean;
  auto run = [&] {
    Engine e(10, 8, base_hyper({3, 3, 2}), Laplacian::zero(8), 777);
    std::vector<Mat> outs;
    for (long t = 0; t < 15; ++t)
      outs.push_back(e.step(stream.slice(t), Mat::Ones(10, 8)).recovered);
    return outs;
  };
  const auto a = run();
  const auto b = run();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].cwiseEqual(b[i]).all());
}

TEST_CASE("checkpoint round trip is bit-exact and resumable") {
  SynthSpec spec;
  spec.n1 = 8;
  spec.n2 = 6;
  spec.days = 20;
  spec.seed = 15;
  const Tensor3 stream = gen_stream(spec).clean;
  const Mat mask = Mat::Ones(8, 6);

  Engine full(8, 6, base_hyper({2, 2, 2}), Laplacian::zero(6), 555);
  Engine half(8, 6, base_hyper({2, 2, 2}), Laplacian::zero(6), 555);
  const std::string path = "test_ck.bin";
  for (long t = 0; t < 10; ++t) {
    full.step(stream.slice(t), mask);
    half.step(stream.slice(t), mask);
  }
  save_checkpoint(half.state(), path);
  Engine resumed(load_checkpoint(path));
  CHECK(states_identical(resumed.state(), half.state()));
  for (long t = 10; t < 20; ++t) {
    const SliceResult a = full.step(stream.slice(t), mask);
    const SliceResult b = resumed.step(stream.slice(t), mask);
    CHECK(a.recovered.cwiseEqual(b.recovered).all());
  }
  CHECK(states_identical(full.state(), resumed.state()));
  std::remove(path.c_str());
}

TEST_SUITE_END();
