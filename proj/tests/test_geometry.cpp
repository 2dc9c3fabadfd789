#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/lie.hpp"
#include "gsfield/geometry/pose.hpp"
#include "gsfield/geometry/primitive.hpp"
#include "gsfield/geometry/projection.hpp"

using namespace gsf;

namespace {
CameraIntrinsics test_intrinsics() {
  CameraIntrinsics k;
  k.fx = 100.0;
  k.fy = 100.0;
  k.cx = 60.0;
  k.cy = 40.0;
  k.width = 120;
  k.height = 80;
  k.near_plane = 0.1;
  k.far_plane = 50.0;
  return k;
}
}  // namespace

TEST_CASE("skew matrix reproduces the cross product") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    CHECK((skew(a) * b - a.cross(b)).norm() == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("exp/log round trips across magnitudes") {
  std::mt19937 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double mag : {1e-10, 1e-6, 1e-3, 0.5, 1.5, 3.0, 3.14, M_PI - 1e-7}) {
    for (int i = 0; i < 20; ++i) {
      Vec3 axis(n(rng), n(rng), n(rng));
      axis.normalize();
      const Vec3 w = mag * axis;
      const Mat3 r = exp_map(w);
      CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
      CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
      const Vec3 w2 = log_map(r);
      // log may land on the antipodal representative near pi; compare rotations.
      CHECK((exp_map(w2) - r).norm() < 1e-8);
      if (mag < 3.0) CHECK((w2 - w).norm() < 1e-9 * std::max(1.0, mag));
    }
  }
}

TEST_CASE("exp of zero is identity") {
  CHECK((exp_map(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
  CHECK(log_map(Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("pose compose, inverse and transform agree with matrix algebra") {
  std::mt19937 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    CameraPose a{Vec3(n(rng), n(rng), n(rng)) * 0.6, Vec3(n(rng), n(rng), n(rng))};
    CameraPose b{Vec3(n(rng), n(rng), n(rng)) * 0.6, Vec3(n(rng), n(rng), n(rng))};
    const Vec3 p(n(rng), n(rng), n(rng));

    const Vec3 via_compose = a.compose(b).transform(p);
    const Vec3 via_seq = a.transform(b.transform(p));
    CHECK((via_compose - via_seq).norm() < 1e-10);

    const CameraPose ident = a.compose(a.inverse());
    CHECK(ident.rotation_tangent.norm() < 1e-10);
    CHECK(ident.translation.norm() < 1e-10);

    CHECK((a.inverse().transform(a.transform(p)) - p).norm() < 1e-10);
    CHECK(a.transform(a.center()).norm() < 1e-10);
  }
}

TEST_CASE("camera-frame perturbation matches its definition") {
  std::mt19937 rng(29);
  std::normal_distribution<double> n(0.0, 1.0);
  CameraPose pose{Vec3(0.3, -0.2, 0.9), Vec3(0.5, 1.0, -2.0)};
  for (int i = 0; i < 20; ++i) {
    Vec6 d;
    for (int k = 0; k < 6; ++k) d(k) = 0.1 * n(rng);
    const CameraPose moved = pose.perturbed(d);
    const Vec3 p(n(rng), n(rng), n(rng));
    const Vec3 expected = exp_map(d.head<3>()) * pose.transform(p) + d.tail<3>();
    CHECK((moved.transform(p) - expected).norm() < 1e-10);
  }
  const CameraPose same = pose.perturbed(Vec6::Zero());
  CHECK((same.rotation() - pose.rotation()).norm() < 1e-12);
  CHECK((same.translation - pose.translation).norm() == 0.0);
}

TEST_CASE("world covariance for axis-aligned scales") {
  const Vec3 log_s(std::log(1.0), std::log(2.0), std::log(3.0));
  const Mat3 cov = build_covariance(log_s, Vec4(1, 0, 0, 0));
  Mat3 expected = Mat3::Zero();
  expected.diagonal() << 1.0, 4.0, 9.0;
  CHECK((cov - expected).norm() < 1e-12);
}

TEST_CASE("quarter turn about z swaps the x and y variances") {
  const Vec3 log_s(std::log(1.0), std::log(2.0), std::log(3.0));
  const double h = std::sqrt(0.5);
  const Mat3 cov = build_covariance(log_s, Vec4(h, 0, 0, h));
  Mat3 expected = Mat3::Zero();
  expected.diagonal() << 4.0, 1.0, 9.0;
  CHECK((cov - expected).norm() < 1e-12);
}

TEST_CASE("covariance construction rejects bad input") {
  CHECK_THROWS_AS(build_covariance(Vec3(0, 0, std::nan("")), Vec4(1, 0, 0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_covariance(Vec3::Zero(), Vec4(0, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("covariance is symmetric positive semi-definite for random parameters") {
  std::mt19937 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> us(-3.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 log_s(us(rng), us(rng), us(rng));
    Vec4 q(n(rng), n(rng), n(rng), n(rng));
    if (q.norm() < 1e-6) q = Vec4(1, 0, 0, 0);
    const Mat3 cov = build_covariance(log_s, q);
    CHECK((cov - cov.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("quaternion scaling leaves the covariance unchanged") {
  const Vec3 log_s(0.1, -0.4, 0.7);
  const Vec4 q(0.2, -0.5, 0.8, 0.1);
  const Mat3 a = build_covariance(log_s, q);
  const Mat3 b = build_covariance(log_s, 3.7 * q);
  CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("point on the optical axis projects to the principal point") {
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.1)), Vec4(1, 0, 0, 0));
  const ProjectedGaussian g =
      project_gaussian(Vec3(0, 0, 2), cov, CameraPose::identity(), k, 0.3, 3.0);
  REQUIRE(g.visible);
  CHECK(g.mean2d.x() == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(g.mean2d.y() == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(g.depth == doctest::Approx(2.0));
}

TEST_CASE("isotropic gaussian at known depth has the expected screen covariance") {
  // world sigma 0.1 at z=2 with f=100: (f/z)^2 * sigma^2 = 25, plus 0.3 dilation.
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.1)), Vec4(1, 0, 0, 0));
  const ProjectedGaussian g =
      project_gaussian(Vec3(0, 0, 2), cov, CameraPose::identity(), k, 0.3, 3.0);
  REQUIRE(g.visible);
  CHECK(g.cov2d(0, 0) == doctest::Approx(25.3).epsilon(1e-9));
  CHECK(g.cov2d(1, 1) == doctest::Approx(25.3).epsilon(1e-9));
  CHECK(std::abs(g.cov2d(0, 1)) < 1e-9);
  CHECK((g.conic * g.cov2d - Mat2::Identity()).norm() < 1e-12);
  CHECK(g.radius == doctest::Approx(3.0 * std::sqrt(25.3)).epsilon(1e-9));
}

TEST_CASE("screen jacobian matches finite differences of the projection") {
  const CameraIntrinsics k = test_intrinsics();
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 30; ++i) {
    const Vec3 p(u(rng), u(rng), 1.5 + u(rng));
    const Mat23 j = projection_jacobian(p, k);
    const double h = 1e-6;
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 dp = Vec3::Zero();
      dp(axis) = h;
      const Vec2 fd = (k.project(p + dp) - k.project(p - dp)) / (2 * h);
      CHECK((fd - j.col(axis)).norm() < 1e-6);
    }
  }
}

TEST_CASE("primitives outside the depth range are culled") {
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.05)), Vec4(1, 0, 0, 0));
  CHECK_FALSE(project_gaussian(Vec3(0, 0, -2), cov, CameraPose::identity(), k, 0.3, 3.0).visible);
  CHECK_FALSE(project_gaussian(Vec3(0, 0, 0.05), cov, CameraPose::identity(), k, 0.3, 3.0).visible);
  CHECK_FALSE(project_gaussian(Vec3(0, 0, 60.0), cov, CameraPose::identity(), k, 0.3, 3.0).visible);
}

TEST_CASE("primitives whose footprint misses the image are culled") {
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.01)), Vec4(1, 0, 0, 0));
  // Far off to the side: x=5 at z=1 lands at pixel 560, footprint ~ a few px.
  CHECK_FALSE(project_gaussian(Vec3(5, 0, 1), cov, CameraPose::identity(), k, 0.3, 3.0).visible);
  // Slightly past the border but with a footprint that reaches in: kept.
  const Mat3 big = build_covariance(Vec3::Constant(std::log(0.5)), Vec4(1, 0, 0, 0));
  CHECK(project_gaussian(Vec3(0.7, 0, 1), big, CameraPose::identity(), k, 0.3, 3.0).visible);
}

TEST_CASE("support culling drops primitives whose mass reaches the camera plane") {
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.2)), Vec4(1, 0, 0, 0));
  const double support = 3.0 * 0.2;

  // Mean inside the depth range but the support ball pokes through z=0, where
  // the local affine model of the projection has no meaning.
  CHECK(project_gaussian(Vec3(0, 0, 0.5), cov, CameraPose::identity(), k, 0.3, 3.0).visible);
  CHECK_FALSE(project_gaussian(Vec3(0, 0, 0.5), cov, CameraPose::identity(), k, 0.3, 3.0, support)
                  .visible);
  // Exactly touching counts as through.
  CHECK_FALSE(project_gaussian(Vec3(0, 0, support), cov, CameraPose::identity(), k, 0.3, 3.0,
                               support)
                  .visible);
  // Deep enough that the ball clears the plane: kept.
  CHECK(project_gaussian(Vec3(0, 0, 1.0), cov, CameraPose::identity(), k, 0.3, 3.0, support)
            .visible);
}

TEST_CASE("support culling rejects a grazing primitive whose ellipse is degenerate") {
  const CameraIntrinsics k = test_intrinsics();
  const Mat3 cov = build_covariance(Vec3::Constant(std::log(0.2)), Vec4(1, 0, 0, 0));
  const double support = 3.0 * 0.2;

  // Far off axis and barely past its own support depth: the linearized screen
  // ellipse is stretched enough to reach back into the image, but every
  // direction through the actual support ball exits the view. The footprint
  // disc test alone keeps it; the projected support box correctly does not.
  const Vec3 grazing(3.0, 0, support + 0.03);
  const ProjectedGaussian disc_only =
      project_gaussian(grazing, cov, CameraPose::identity(), k, 0.3, 3.0);
  CHECK(disc_only.visible);
  CHECK(disc_only.mean2d.x() - disc_only.radius < k.width);  // ellipse overreach
  CHECK_FALSE(
      project_gaussian(grazing, cov, CameraPose::identity(), k, 0.3, 3.0, support).visible);

  // A primitive straddling the image border stays visible under the box test.
  CHECK(project_gaussian(Vec3(0.75, 0, 1.5), cov, CameraPose::identity(), k, 0.3, 3.0, support)
            .visible);
}

TEST_CASE("projection is invariant to a rigid change of world frame") {
  const CameraIntrinsics k = test_intrinsics();
  std::mt19937 rng(67);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    CameraPose pose{Vec3(n(rng), n(rng), n(rng)) * 0.3, Vec3(0.1 * n(rng), 0.1 * n(rng), 0.0)};
    const Vec3 mean(0.4 * n(rng), 0.4 * n(rng), 2.0 + 0.3 * n(rng));
    Vec4 q(n(rng), n(rng), n(rng), n(rng));
    const Vec3 log_s = Vec3(n(rng), n(rng), n(rng)) * 0.3 + Vec3::Constant(std::log(0.08));
    const Mat3 cov = build_covariance(log_s, q);

    CameraPose g{Vec3(n(rng), n(rng), n(rng)) * 0.8, Vec3(n(rng), n(rng), n(rng))};
    const Mat3 rg = g.rotation();
    const Vec3 mean_g = g.transform(mean);
    const Mat3 cov_g = rg * cov * rg.transpose();
    const CameraPose pose_g = pose.compose(g.inverse());

    const ProjectedGaussian a = project_gaussian(mean, cov, pose, k, 0.3, 3.0);
    const ProjectedGaussian b = project_gaussian(mean_g, cov_g, pose_g, k, 0.3, 3.0);
    REQUIRE(a.visible == b.visible);
    if (!a.visible) continue;
    CHECK((a.mean2d - b.mean2d).norm() < 1e-8);
    CHECK((a.cov2d - b.cov2d).norm() < 1e-8);
    CHECK(a.depth == doctest::Approx(b.depth).epsilon(1e-10));
  }
}

TEST_CASE("backprojection inverts projection at a given depth") {
  const CameraIntrinsics k = test_intrinsics();
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> ux(0.0, 120.0), uy(0.0, 80.0), uz(0.3, 8.0);
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), y = uy(rng), z = uz(rng);
    const Vec3 p = k.backproject(x, y, z);
    CHECK(p.z() == doctest::Approx(z));
    const Vec2 back = k.project(p);
    CHECK(back.x() == doctest::Approx(x).epsilon(1e-12));
    CHECK(back.y() == doctest::Approx(y).epsilon(1e-12));
  }
}

TEST_CASE("intrinsics validation rejects unusable values") {
  CameraIntrinsics k = test_intrinsics();
  CHECK_NOTHROW(k.validate());
  CameraIntrinsics bad = k;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = k;
  bad.width = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = k;
  bad.depth_scale = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = k;
  bad.far_plane = bad.near_plane;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("primitive parameter decoding") {
  GaussianPrimitive p;
  p.log_scale = Vec3(std::log(0.2), std::log(0.3), std::log(0.4));
  p.opacity_logit = logit(0.8);
  p.sh.assign(1, Vec3(0.5, -0.2, 0.0));
  CHECK(p.scale().x() == doctest::Approx(0.2));
  CHECK(p.opacity() == doctest::Approx(0.8));
  const Mat3 cov = p.covariance();
  CHECK(cov(0, 0) == doctest::Approx(0.04));
  const Vec3 c = p.base_color();
  CHECK(c.x() == doctest::Approx(0.5 + 0.28209479177387814 * 0.5));
  CHECK(c.y() == doctest::Approx(0.5 - 0.28209479177387814 * 0.2));
  CHECK(c.z() == doctest::Approx(0.5));
  // rotation from a normalized vs unnormalized quaternion agrees
  GaussianPrimitive q1 = p, q2 = p;
  q1.quat = Vec4(0.3, 0.1, -0.2, 0.9);
  q2.quat = 2.5 * q1.quat;
  CHECK((q1.rotation() - q2.rotation()).norm() < 1e-12);
}
