#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gsfield/loss/losses.hpp"
#include "gsfield/loss/ssim.hpp"
#include "gsfield/raster/rasterizer.hpp"
#include "gsfield/verify/gradcheck.hpp"
#include "test_utils.hpp"

using namespace gsf;
using namespace gsf::testutil;

namespace {
constexpr double kC0 = 0.28209479177387814;

CameraIntrinsics one_pixel_camera() {
  CameraIntrinsics k;
  k.fx = k.fy = 1.0;
  k.cx = k.cy = 0.5;
  k.width = k.height = 1;
  k.near_plane = 0.1;
  k.far_plane = 10.0;
  return k;
}

GaussianPrimitive axis_primitive(double z, double opacity, const Vec3& color) {
  GaussianPrimitive p;
  p.mean = Vec3(0, 0, z);
  // Compact enough that the support ball stays in front of the camera; the
  // hand-computed values below only depend on the opacity at the pixel center.
  p.log_scale = Vec3::Constant(std::log(0.05));
  p.opacity_logit = logit(opacity);
  p.sh.assign(1, (color - Vec3::Constant(0.5)) / kC0);
  return p;
}

ImageRGB random_rgb(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageRGB img(w, h);
  for (auto& px : img.data()) px = Vec3(u(rng), u(rng), u(rng));
  return img;
}

GaussianPrimitive unit_sphere_at(double z) {
  GaussianPrimitive p;
  p.mean = Vec3(0, 0, z);
  p.log_scale = Vec3::Zero();
  p.opacity_logit = logit(0.5);
  p.sh.assign(1, Vec3::Zero());
  return p;
}
}  // namespace

TEST_CASE("color loss hand cases") {
  ImageRGB a(2, 1, Vec3(1, 1, 1)), b(2, 1, Vec3::Zero());
  CHECK(color_loss(a, a, nullptr, true) == 0.0);
  CHECK(color_loss(a, b, nullptr, true) == doctest::Approx(1.0));

  // One pixel off by one in every channel, the other by a half: (3 + 1.5) / 6.
  b(1, 0) = Vec3(0.5, 0.5, 0.5);
  CHECK(color_loss(a, b, nullptr, true) == doctest::Approx(0.75));

  // Masking out the first pixel leaves only the half-step error.
  ImageMask mask(2, 1, 1);
  mask(0, 0) = 0;
  CHECK(color_loss(a, b, &mask, true) == doctest::Approx(0.5));
  CHECK(color_loss(a, b, &mask, false) == doctest::Approx(0.25));

  mask.fill(0);
  bool warned = false;
  CHECK(color_loss(a, b, &mask, true, &warned) == 0.0);
  CHECK(warned);
}

TEST_CASE("depth loss normalization modes") {
  ImageD rendered(2, 2, 2.25), observed(2, 2, 0.0);
  observed(1, 1) = 2.0;  // the only usable sensor sample, error 0.25
  const CameraIntrinsics k = make_intrinsics(2, 2, 1.0);
  const ImageMask mask = sensor_valid_mask(observed, k);
  CHECK(mask(1, 1) == 1);
  CHECK(mask(0, 0) == 0);
  CHECK(geo_loss(rendered, observed, mask, true) == doctest::Approx(0.25));
  CHECK(geo_loss(rendered, observed, mask, false) == doctest::Approx(0.0625));
}

TEST_CASE("sensor validity follows the depth range") {
  const CameraIntrinsics k = make_intrinsics(3, 1, 1.0);  // near 0.1, far 50
  ImageD obs(3, 1, 1.0);
  obs(0, 0) = 0.05;                                       // closer than the near plane
  obs(1, 0) = std::numeric_limits<double>::quiet_NaN();
  const ImageMask m = sensor_valid_mask(obs, k);
  CHECK(m(0, 0) == 0);
  CHECK(m(1, 0) == 0);
  CHECK(m(2, 0) == 1);
}

TEST_CASE("ssim hand cases") {
  std::mt19937 rng(11);
  const ImageRGB x = random_rgb(20, 16, rng);
  CHECK(ssim_loss(x, x) == doctest::Approx(0.0).epsilon(1e-14));

  // Two constant images: variances vanish, so only the luminance factor acts.
  ImageRGB zeros(16, 16, Vec3::Zero()), ones(16, 16, Vec3::Ones());
  const double c1 = 0.01 * 0.01;
  CHECK(ssim_loss(zeros, ones) == doctest::Approx(1.0 - c1 / (1.0 + c1)).epsilon(1e-12));

  for (uint32_t seed = 0; seed < 5; ++seed) {
    std::mt19937 r2(100 + seed);
    const ImageRGB a = random_rgb(24, 18, r2), b = random_rgb(24, 18, r2);
    const double l = ssim_loss(a, b);
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
    CHECK(ssim_loss(b, a) == doctest::Approx(l).epsilon(1e-12));
  }

  // Tiny images use global statistics instead of the sliding window.
  ImageRGB sm0(4, 3, Vec3::Zero()), sm1(4, 3, Vec3::Ones());
  CHECK(ssim_loss(sm0, sm1) == doctest::Approx(1.0 - c1 / (1.0 + c1)).epsilon(1e-12));
}

TEST_CASE("ssim gradient matches finite differences") {
  std::mt19937 rng(21);
  for (int wh = 0; wh < 2; ++wh) {
    const int w = wh == 0 ? 16 : 7, h = wh == 0 ? 13 : 5;  // windowed and fallback paths
    ImageRGB x = random_rgb(w, h, rng);
    const ImageRGB y = random_rgb(w, h, rng);
    ImageRGB grad;
    ssim_with_gradient(x, y, grad);

    std::uniform_int_distribution<size_t> upix(0, x.size() - 1);
    std::uniform_int_distribution<int> uch(0, 2);
    const double step = 1e-5;
    for (int probe = 0; probe < 40; ++probe) {
      const size_t i = upix(rng);
      const int c = uch(rng);
      const double save = x[i](c);
      x[i](c) = save + step;
      const double hi = ssim(x, y);
      x[i](c) = save - step;
      const double lo = ssim(x, y);
      x[i](c) = save;
      const double fd = (hi - lo) / (2.0 * step);
      CHECK(grad[i](c) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("anisotropy penalty hand cases") {
  std::vector<GaussianPrimitive> prims(3, unit_sphere_at(2.0));
  CHECK(iso_loss(prims, nullptr, 1.0) == 0.0);

  prims[1].log_scale = Vec3(std::log(2.0), 0.0, 0.0);  // ratio 2
  CHECK(iso_loss(prims, nullptr, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(iso_loss({prims[1]}, nullptr, 1.0) == doctest::Approx(1.0));
  CHECK(iso_loss({prims[1]}, nullptr, 2.0) == 0.0);  // inside the tolerance band

  GaussianPrimitive mild = unit_sphere_at(2.0);
  mild.log_scale = Vec3(std::log(1.5), 0.0, 0.0);
  CHECK(iso_loss({mild}, nullptr, 2.0) == 0.0);
  CHECK(iso_loss({mild}, nullptr, 1.0) == doctest::Approx(0.5));

  const std::vector<uint8_t> visible = {1, 0, 1};  // drop the elongated one
  CHECK(iso_loss(prims, &visible, 1.0) == 0.0);
}

TEST_CASE("mapping loss reproduces the hand-computed single-pixel example") {
  const CameraIntrinsics k = one_pixel_camera();
  std::vector<GaussianPrimitive> prims = {axis_primitive(1.0, 0.6, Vec3(1, 0, 0)),
                                          axis_primitive(2.0, 0.8, Vec3(0, 1, 0))};
  ImageD obs(1, 1, 1.0);
  const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});

  ImageRGB target(1, 1, rr.out.color(0, 0));  // perfect color target
  const LossWeights w = LossWeights::indoor_synthetic();
  const MappingLossResult r =
      evaluate_mapping_loss(prims, rr, target, obs, k, w, /*want_gradients=*/true);

  CHECK(r.color == doctest::Approx(0.0));
  CHECK(r.ssim == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.geo == doctest::Approx(0.24).epsilon(1e-12));    // |1.24 - 1.0|
  CHECK(r.align == doctest::Approx(0.24).epsilon(1e-12));  // |1.24 - 1.0|
  CHECK(r.iso == doctest::Approx(0.0));
  CHECK(r.var == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(0.25 * 0.24 + 0.25 * 0.24 + 0.15 * 0.32).epsilon(1e-12));
  CHECK_FALSE(r.any_empty_mask);

  // Adjoint seeds: both depth terms push the blended depth down, the
  // alignment term pushes the median depth up, and |U| has unit slope.
  CHECK(r.upstream.d_alpha_depth(0, 0) == doctest::Approx(0.25 + 0.25));
  CHECK(r.upstream.d_median_depth(0, 0) == doctest::Approx(-0.25));
  CHECK(r.upstream.d_uncertainty(0, 0) == doctest::Approx(0.15));
  CHECK(r.upstream.d_color(0, 0).norm() == doctest::Approx(0.0).epsilon(1e-12));
  for (const Vec3& g : r.d_log_scale_direct)  // spheres sit at the penalty floor
    CHECK(g.norm() == 0.0);
}

TEST_CASE("zero weights yield zero loss and no adjoint seeds") {
  const CameraIntrinsics k = make_intrinsics(24, 18, 25.0);
  std::mt19937 rng(31);
  const auto prims = random_scene(rng, 8);
  const ImageD obs = wavy_depth(24, 18, 2.5);
  const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
  const ImageRGB target = random_rgb(24, 18, rng);

  LossWeights w;
  w.w_color = w.w_ssim = w.w_geo = w.w_align = w.w_iso = w.w_var = 0.0;
  const MappingLossResult r = evaluate_mapping_loss(prims, rr, target, obs, k, w, true);
  CHECK(r.total == 0.0);
  CHECK(r.upstream.d_color.empty());
  CHECK(r.upstream.d_alpha_depth.empty());
  CHECK(r.upstream.d_median_depth.empty());
  CHECK(r.upstream.d_uncertainty.empty());
  CHECK(r.d_log_scale_direct.empty());
}

TEST_CASE("mapping terms scale linearly with their weights") {
  const CameraIntrinsics k = make_intrinsics(24, 18, 25.0);
  std::mt19937 rng(37);
  const auto prims = random_scene(rng, 10);
  const ImageD obs = wavy_depth(24, 18, 2.5);
  const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
  const ImageRGB target = random_rgb(24, 18, rng);

  LossWeights w = LossWeights::indoor_synthetic();
  const MappingLossResult r1 = evaluate_mapping_loss(prims, rr, target, obs, k, w, false);
  w.w_geo *= 2.0;
  const MappingLossResult r2 = evaluate_mapping_loss(prims, rr, target, obs, k, w, false);
  CHECK(r2.geo == doctest::Approx(r1.geo).epsilon(1e-14));
  CHECK(r2.total - r1.total == doctest::Approx(0.25 * r1.geo).epsilon(1e-10));
}

TEST_CASE("tracking loss vanishes on a perfectly explained frame") {
  const CameraIntrinsics k = make_intrinsics(32, 24, 30.0);
  std::mt19937 rng(41);
  const auto prims = random_scene(rng, 25, 1, 0.98);
  const RenderResult rr = render(prims, CameraPose::identity(), k, nullptr, RasterConfig{});

  ImageRGB target(32, 24);
  ImageD obs(32, 24, 0.0);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      target(x, y) = rr.out.color(x, y);
      obs(x, y) = rr.out.alpha_depth(x, y);  // background stays 0 = invalid
    }

  const LossWeights w = LossWeights::indoor_synthetic();
  const TrackingLossResult r = evaluate_tracking_loss(rr, target, obs, k, w, true);
  CHECK(r.color == 0.0);
  CHECK(r.geo == 0.0);
  CHECK(r.total == 0.0);
  CHECK(r.valid_color > 0);
  for (size_t i = 0; i < r.upstream.d_color.size(); ++i)
    CHECK(r.upstream.d_color[i].norm() == 0.0);
  for (size_t i = 0; i < r.upstream.d_alpha_depth.size(); ++i)
    CHECK(r.upstream.d_alpha_depth[i] == 0.0);
}

TEST_CASE("tracking ignores pixels the model never covered") {
  const CameraIntrinsics k = make_intrinsics(48, 36, 40.0);
  GaussianPrimitive p = unit_sphere_at(2.0);
  p.log_scale = Vec3::Constant(std::log(0.08));
  p.opacity_logit = logit(0.9);
  const RenderResult rr = render({p}, CameraPose::identity(), k, nullptr, RasterConfig{});

  const ImageRGB target(48, 36, Vec3(0.9, 0.1, 0.4));  // wrong everywhere
  const ImageD obs(48, 36, 2.0);
  const LossWeights w = LossWeights::indoor_synthetic();
  const TrackingLossResult r = evaluate_tracking_loss(rr, target, obs, k, w, true);

  CHECK(r.valid_color > 0);
  CHECK(r.valid_color < 48 * 36);
  int uncovered = 0;
  for (int y = 0; y < 36; ++y)
    for (int x = 0; x < 48; ++x)
      if (rr.out.opacity(x, y) < 0.1) {
        ++uncovered;
        CHECK(r.upstream.d_color(x, y).norm() == 0.0);
        CHECK(r.upstream.d_alpha_depth(x, y) == 0.0);
      }
  CHECK(uncovered > 0);
}

TEST_CASE("empty masks warn instead of contributing") {
  const CameraIntrinsics k = make_intrinsics(16, 12, 18.0);
  std::mt19937 rng(47);
  const auto prims = random_scene(rng, 6);
  const ImageRGB target = random_rgb(16, 12, rng);

  SUBCASE("sensor depth entirely invalid") {
    ImageD obs(16, 12, 0.0);
    const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
    const MappingLossResult r = evaluate_mapping_loss(
        prims, rr, target, obs, k, LossWeights::indoor_synthetic(), true);
    CHECK(r.geo == 0.0);
    CHECK(r.var == 0.0);
    CHECK(r.any_empty_mask);
    CHECK(r.upstream.d_uncertainty.empty());
  }

  SUBCASE("render carried no uncertainty map") {
    ImageD obs = wavy_depth(16, 12, 2.5);
    const RenderResult rr = render(prims, CameraPose::identity(), k, nullptr, RasterConfig{});
    const MappingLossResult r = evaluate_mapping_loss(
        prims, rr, target, obs, k, LossWeights::indoor_synthetic(), true);
    CHECK(r.var == 0.0);
    CHECK(r.any_empty_mask);
    CHECK(r.upstream.d_uncertainty.empty());
    CHECK(r.geo > 0.0);  // depth supervision still works off the sensor image
  }
}

TEST_CASE("mismatched image dimensions are rejected") {
  const CameraIntrinsics k = make_intrinsics(8, 8, 10.0);
  std::mt19937 rng(53);
  const auto prims = random_scene(rng, 3);
  ImageD obs(8, 8, 2.0);
  const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
  const ImageRGB bad_target(4, 4, Vec3::Zero());
  const ImageD bad_obs(4, 4, 2.0);
  const ImageRGB target(8, 8, Vec3::Zero());
  CHECK_THROWS_AS(evaluate_mapping_loss(prims, rr, bad_target, obs, k, LossWeights{}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_mapping_loss(prims, rr, target, bad_obs, k, LossWeights{}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_tracking_loss(rr, bad_target, obs, k, LossWeights{}, false),
                  std::invalid_argument);
}

TEST_CASE("negative weights are rejected") {
  LossWeights w;
  w.w_geo = -0.1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  LossWeights w2;
  w2.iso_epsilon = 0.5;
  CHECK_THROWS_AS(w2.validate(), std::invalid_argument);
}

TEST_CASE("mapping gradients match finite differences") {
  int total_probes = 0, total_skipped = 0;
  for (uint32_t seed = 0; seed < 4; ++seed) {
    std::mt19937 rng(600 + seed);
    GradCheckProblem prob;
    prob.primitives = random_scene(rng, 10, seed % 2 == 0 ? 1 : 4);
    prob.pose = CameraPose::identity();
    prob.intrinsics = make_intrinsics(24, 24, 25.0);
    prob.config = smooth_raster_config();
    const ImageD obs = wavy_depth(24, 24, 2.5);
    prob.observed_depth = &obs;
    const ImageRGB target = random_rgb(24, 24, rng);
    const CameraIntrinsics k = prob.intrinsics;
    const LossWeights w = LossWeights::indoor_synthetic();

    prob.objective = [&](const std::vector<GaussianPrimitive>& prims, const RenderResult& rr,
                         uint64_t& fp) {
      return evaluate_mapping_loss(prims, rr, target, obs, k, w, false, &fp).total;
    };
    prob.upstream = [&](const RenderResult& rr) {
      return evaluate_mapping_loss(prob.primitives, rr, target, obs, k, w, true).upstream;
    };
    prob.direct_gradient = [&](const std::vector<GaussianPrimitive>& prims,
                               const RenderResult& rr, GradientBundle& bundle) {
      const MappingLossResult r = evaluate_mapping_loss(prims, rr, target, obs, k, w, true);
      for (size_t i = 0; i < r.d_log_scale_direct.size(); ++i)
        bundle.d_log_scale[i] += r.d_log_scale_direct[i];
    };

    const GradCheckReport rep = run_gradcheck(prob);
    INFO("seed ", seed, " worst ", rep.worst_param, " analytic ", rep.worst_analytic, " fd ",
         rep.worst_fd);
    CHECK(rep.max_rel_err < 1e-5);
    CHECK(rep.checked > 100);
    total_probes += rep.total;
    total_skipped += rep.skipped;
  }
  CHECK(double(total_skipped) / total_probes < 0.05);
}

TEST_CASE("tracking gradients match finite differences") {
  int total_probes = 0, total_skipped = 0;
  for (uint32_t seed = 0; seed < 3; ++seed) {
    std::mt19937 rng(700 + seed);
    GradCheckProblem prob;
    prob.primitives = random_scene(rng, 12);
    prob.pose = CameraPose::identity();
    prob.intrinsics = make_intrinsics(24, 24, 25.0);
    prob.config = smooth_raster_config();
    const ImageD obs = wavy_depth(24, 24, 2.5);
    prob.observed_depth = &obs;
    const ImageRGB target = random_rgb(24, 24, rng);
    const CameraIntrinsics k = prob.intrinsics;
    const LossWeights w = LossWeights::handheld_real();

    prob.objective = [&](const std::vector<GaussianPrimitive>&, const RenderResult& rr,
                         uint64_t& fp) {
      return evaluate_tracking_loss(rr, target, obs, k, w, false, &fp).total;
    };
    prob.upstream = [&](const RenderResult& rr) {
      return evaluate_tracking_loss(rr, target, obs, k, w, true).upstream;
    };

    const GradCheckReport rep = run_gradcheck(prob);
    INFO("seed ", seed, " worst ", rep.worst_param, " analytic ", rep.worst_analytic, " fd ",
         rep.worst_fd);
    CHECK(rep.max_rel_err < 1e-5);
    CHECK(rep.checked > 100);
    total_probes += rep.total;
    total_skipped += rep.skipped;
  }
  CHECK(double(total_skipped) / total_probes < 0.05);
}
