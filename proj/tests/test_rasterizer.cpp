#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gsfield/raster/rasterizer.hpp"
#include "test_utils.hpp"

using namespace gsf;
using namespace gsf::testutil;

namespace {
constexpr double kC0 = 0.28209479177387814;

/// One-pixel camera whose only pixel center sits exactly on the optical axis.
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
  // Compact so the whole support ball sits in front of the camera; the pixel
  // center lands exactly on the mean, so the blend weight is the opacity alone
  // and none of the hand-computed values below depend on this scale.
  p.log_scale = Vec3::Constant(std::log(0.05));
  p.opacity_logit = logit(opacity);
  p.sh.assign(1, (color - Vec3::Constant(0.5)) / kC0);
  return p;
}
}  // namespace

TEST_CASE("two-primitive blend produces the hand-computed maps") {
  const CameraIntrinsics k = one_pixel_camera();
  std::vector<GaussianPrimitive> prims = {axis_primitive(1.0, 0.6, Vec3(1, 0, 0)),
                                          axis_primitive(2.0, 0.8, Vec3(0, 1, 0))};
  ImageD obs(1, 1, 1.0);
  const RenderResult rr = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
  const RenderOutput& out = rr.out;

  CHECK(out.color(0, 0).x() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out.color(0, 0).y() == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(out.color(0, 0).z() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.opacity(0, 0) == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(out.alpha_depth(0, 0) == doctest::Approx(1.24).epsilon(1e-12));
  CHECK(out.median_valid(0, 0) == 1);
  CHECK(out.median_depth(0, 0) == doctest::Approx(1.0));
  CHECK(out.uncertainty(0, 0) == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(out.has_uncertainty);
  CHECK(out.final_transmittance(0, 0) == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(out.per_pixel_count(0, 0) == 2);
  CHECK(rr.record.dominant(0, 0) == 0);   // weight 0.6 beats 0.32
  CHECK(rr.record.median_prim(0, 0) == 0);
  CHECK(rr.record.prim.size() == 2);
  CHECK(rr.record.transmittance[0] == doctest::Approx(1.0));
  CHECK(rr.record.transmittance[1] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("empty primitive list renders a valid empty frame") {
  const CameraIntrinsics k = make_intrinsics(16, 12, 20.0);
  const RenderResult rr = render({}, CameraPose::identity(), k, nullptr, RasterConfig{});
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) {
      CHECK(rr.out.opacity(x, y) == 0.0);
      CHECK(rr.out.per_pixel_count(x, y) == 0);
      CHECK(rr.out.median_valid(x, y) == 0);
      CHECK(rr.out.final_transmittance(x, y) == 1.0);
    }
  CHECK_FALSE(rr.out.has_uncertainty);
  CHECK(rr.record.prim.empty());
}

TEST_CASE("non-finite primitive parameters are rejected with the index") {
  const CameraIntrinsics k = make_intrinsics(8, 8, 10.0);
  std::mt19937 rng(3);
  auto prims = random_scene(rng, 5);
  prims[3].mean.y() = std::numeric_limits<double>::quiet_NaN();
  try {
    render(prims, CameraPose::identity(), k, nullptr, RasterConfig{});
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("observed depth with wrong dimensions is rejected") {
  const CameraIntrinsics k = make_intrinsics(8, 8, 10.0);
  std::mt19937 rng(4);
  auto prims = random_scene(rng, 3);
  ImageD obs(4, 4, 1.0);
  CHECK_THROWS_AS(render(prims, CameraPose::identity(), k, &obs, RasterConfig{}),
                  std::invalid_argument);
}

TEST_CASE("single primitive: tiled and reference renders are bit-identical") {
  const CameraIntrinsics k = make_intrinsics(32, 24, 30.0);
  std::mt19937 rng(5);
  auto prims = random_scene(rng, 1);
  ImageD obs = wavy_depth(32, 24, 2.5);
  const RasterConfig cfg;
  const RenderOutput a = render(prims, CameraPose::identity(), k, &obs, cfg).out;
  const RenderOutput b = render_reference(prims, CameraPose::identity(), k, &obs, cfg);
  for (size_t i = 0; i < a.color.size(); ++i) {
    CHECK(a.color[i] == b.color[i]);
    CHECK(a.alpha_depth[i] == b.alpha_depth[i]);
    CHECK(a.opacity[i] == b.opacity[i]);
    CHECK(a.uncertainty[i] == b.uncertainty[i]);
    CHECK(a.median_depth[i] == b.median_depth[i]);
    CHECK(a.final_transmittance[i] == b.final_transmittance[i]);
  }
}

TEST_CASE("tiled renderer matches the brute-force oracle on random scenes") {
  for (uint32_t seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(100 + seed);
    const auto prims = random_scene(rng, 200, seed % 3 == 0 ? 4 : 1);
    const CameraIntrinsics k = make_intrinsics(64, 64, 60.0);
    ImageD obs = wavy_depth(64, 64, 2.5);
    CameraPose pose;
    std::normal_distribution<double> n(0.0, 1.0);
    pose.rotation_tangent = 0.03 * Vec3(n(rng), n(rng), n(rng));
    pose.translation = 0.05 * Vec3(n(rng), n(rng), n(rng));
    const RasterConfig cfg;
    const RenderOutput a = render(prims, pose, k, &obs, cfg).out;
    const RenderOutput b = render_reference(prims, pose, k, &obs, cfg);
    CHECK(max_output_diff(a, b) < 1e-5);
  }
}

TEST_CASE("renders are identical across thread counts and repeated runs") {
  std::mt19937 rng(42);
  const auto prims = random_scene(rng, 150);
  const CameraIntrinsics k = make_intrinsics(50, 34, 40.0);  // not a tile multiple
  ImageD obs = wavy_depth(50, 34, 2.5);
  RasterConfig c1;
  c1.threads = 1;
  RasterConfig c8 = c1;
  c8.threads = 8;
  const RenderResult a = render(prims, CameraPose::identity(), k, &obs, c1);
  const RenderResult b = render(prims, CameraPose::identity(), k, &obs, c8);
  const RenderResult c = render(prims, CameraPose::identity(), k, &obs, c8);
  CHECK(max_output_diff(a.out, b.out) == 0.0);
  CHECK(max_output_diff(b.out, c.out) == 0.0);
  REQUIRE(a.record.prim == b.record.prim);
  CHECK(a.record.alpha == b.record.alpha);
  CHECK(a.record.transmittance == b.record.transmittance);
  CHECK(a.record.row_start == b.record.row_start);
}

TEST_CASE("blend invariants hold on random scenes") {
  for (uint32_t seed = 0; seed < 6; ++seed) {
    std::mt19937 rng(300 + seed);
    const auto prims = random_scene(rng, 120, 1, 0.99);
    const CameraIntrinsics k = make_intrinsics(48, 40, 45.0);
    RasterConfig cfg;
    cfg.termination_threshold = 0.0;  // exact conservation check
    const RenderResult rr = render(prims, CameraPose::identity(), k, nullptr, cfg);

    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        const double o = rr.out.opacity(x, y);
        CHECK(o >= 0.0);
        CHECK(o <= 1.0 + 1e-12);
        CHECK(std::abs(o + rr.out.final_transmittance(x, y) - 1.0) < 1e-6);
        if (rr.out.per_pixel_count(x, y) == 0) {
          CHECK(o == 0.0);
          CHECK(rr.out.median_valid(x, y) == 0);
        }

        // walk the record: transmittance non-increasing, and the median pick
        // is exactly the contributor that drags T below one half.
        double prev_t = 1.0;
        int32_t expected_median = -1;
        for (uint32_t e = rr.record.begin(x, y); e < rr.record.end(x, y); ++e) {
          const double t = rr.record.transmittance[e];
          CHECK(t <= prev_t + 1e-15);
          const double t_next = t * (1.0 - rr.record.alpha[e]);
          if (expected_median < 0 && t >= 0.5 && t_next < 0.5)
            expected_median = rr.record.prim[e];
          prev_t = t;
        }
        CHECK(rr.record.median_prim(x, y) == expected_median);
        CHECK((rr.out.median_valid(x, y) == 1) == (expected_median >= 0));
      }
    }
  }
}

TEST_CASE("early termination stays within the oracle tolerance") {
  std::mt19937 rng(77);
  // dense opaque wall of primitives to force deep stacks
  auto prims = random_scene(rng, 400, 1, 0.99, 0.05, 0.3);
  const CameraIntrinsics k = make_intrinsics(40, 40, 40.0);
  RasterConfig with_term;  // default 1e-8
  RasterConfig no_term = with_term;
  no_term.termination_threshold = 0.0;
  const RenderOutput a = render(prims, CameraPose::identity(), k, nullptr, with_term).out;
  const RenderOutput b = render(prims, CameraPose::identity(), k, nullptr, no_term).out;
  CHECK(max_output_diff(a, b) < 1e-5);
}

TEST_CASE("uncertainty is absent without sensor depth and zero at holes") {
  std::mt19937 rng(88);
  const auto prims = random_scene(rng, 60);
  const CameraIntrinsics k = make_intrinsics(32, 32, 30.0);

  const RenderResult no_obs = render(prims, CameraPose::identity(), k, nullptr, RasterConfig{});
  CHECK_FALSE(no_obs.out.has_uncertainty);
  for (size_t i = 0; i < no_obs.out.uncertainty.size(); ++i)
    CHECK(no_obs.out.uncertainty[i] == 0.0);

  ImageD obs(32, 32, 2.0);
  obs(5, 7) = 0.0;    // hole
  obs(9, 3) = 100.0;  // out of range
  const RenderResult with_obs = render(prims, CameraPose::identity(), k, &obs, RasterConfig{});
  CHECK(with_obs.out.has_uncertainty);
  CHECK(with_obs.out.uncertainty(5, 7) == 0.0);
  CHECK(with_obs.out.uncertainty(9, 3) == 0.0);
}

TEST_CASE("a grazing off-axis primitive cannot splash over the image") {
  // A primitive far off the optical axis whose center sits just in front of
  // the camera used to produce a degenerate screen ellipse that covered every
  // pixel with near-full alpha. It must contribute nothing at all.
  const CameraIntrinsics k = make_intrinsics(32, 24, 30.0);
  GaussianPrimitive wall;
  wall.mean = Vec3(0, 0, 3.0);
  wall.log_scale = Vec3::Constant(std::log(0.4));
  wall.opacity_logit = logit(0.9);
  wall.sh.assign(1, Vec3::Zero());

  GaussianPrimitive grazer;
  grazer.mean = Vec3(1.8, -0.4, 0.12);
  grazer.log_scale = Vec3::Constant(std::log(0.22));
  grazer.opacity_logit = logit(0.95);
  grazer.sh.assign(1, (Vec3(1, 0, 0) - Vec3::Constant(0.5)) / kC0);

  const RenderResult clean = render({wall}, CameraPose::identity(), k, nullptr, RasterConfig{});
  const RenderResult mixed =
      render({wall, grazer}, CameraPose::identity(), k, nullptr, RasterConfig{});
  CHECK(mixed.record.visible[0] == 1);
  CHECK(mixed.record.visible[1] == 0);
  for (size_t i = 0; i < clean.out.color.size(); ++i) {
    CHECK(clean.out.color[i] == mixed.out.color[i]);
    CHECK(clean.out.alpha_depth[i] == mixed.out.alpha_depth[i]);
    CHECK(clean.out.opacity[i] == mixed.out.opacity[i]);
  }
  CHECK(clean.out.alpha_depth(16, 12) > 2.5);  // the wall itself did render
}

TEST_CASE("visible flags mark exactly the primitives that survived culling") {
  std::mt19937 rng(99);
  auto prims = random_scene(rng, 20);
  prims[4].mean = Vec3(0, 0, -3);   // behind camera
  prims[11].mean = Vec3(40, 0, 2);  // far outside the frustum
  const CameraIntrinsics k = make_intrinsics(32, 32, 30.0);
  const RenderResult rr = render(prims, CameraPose::identity(), k, nullptr, RasterConfig{});
  CHECK(rr.record.visible[4] == 0);
  CHECK(rr.record.visible[11] == 0);
  int visible_count = 0;
  for (uint8_t v : rr.record.visible) visible_count += v;
  CHECK(visible_count >= 15);
}
