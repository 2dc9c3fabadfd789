#include "gsfield/verify/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace gsf {

uint64_t fingerprint_record(const BlendRecord& rec, double alpha_clamp) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const uint32_t v : rec.row_start) fingerprint_fold(h, v);
  for (size_t i = 0; i < rec.prim.size(); ++i) {
    fingerprint_fold(h, static_cast<uint64_t>(rec.prim[i]));
    fingerprint_fold(h, rec.alpha[i] >= alpha_clamp ? 1 : 0);
  }
  for (const int32_t m : rec.median_prim.data())
    fingerprint_fold(h, static_cast<uint64_t>(static_cast<int64_t>(m)));
  for (const uint8_t v : rec.visible) fingerprint_fold(h, v);
  return h;
}

RasterConfig smooth_raster_config() {
  RasterConfig cfg;
  cfg.alpha_skip = 0.0;
  cfg.termination_threshold = 0.0;
  cfg.footprint_sigma = 8.0;
  return cfg;
}

namespace {

struct Evaluation {
  double value = 0.0;
  uint64_t fingerprint = 0;
};

Evaluation evaluate(const GradCheckProblem& p, const std::vector<GaussianPrimitive>& prims,
                    const CameraPose& pose) {
  Evaluation ev;
  const RenderResult rr = render(prims, pose, p.intrinsics, p.observed_depth, p.config);
  ev.fingerprint = fingerprint_record(rr.record, p.config.alpha_clamp);
  ev.value = p.objective(prims, rr, ev.fingerprint);
  return ev;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckProblem& p, double step, double denom_floor) {
  if (!p.objective || !p.upstream) throw std::invalid_argument("run_gradcheck: hooks not set");
  GradCheckReport rep;

  const RenderResult base = render(p.primitives, p.pose, p.intrinsics, p.observed_depth, p.config);
  const UpstreamGradients up = p.upstream(base);
  GradientBundle analytic = render_backward(p.primitives, p.pose, p.intrinsics, base.record, up,
                                            p.observed_depth, p.config);
  if (p.direct_gradient) p.direct_gradient(p.primitives, base, analytic);

  auto probe = [&](double analytic_value, const std::string& desc,
                   const std::function<void(std::vector<GaussianPrimitive>&, CameraPose&, double)>&
                       apply) {
    ++rep.total;
    // Richardson-extrapolated central difference: evaluations at +/-step and
    // +/-step/2 cancel the quadratic truncation term.
    const double offsets[4] = {step, -step, 0.5 * step, -0.5 * step};
    Evaluation ev[4];
    for (int s = 0; s < 4; ++s) {
      std::vector<GaussianPrimitive> prims = p.primitives;
      CameraPose pose = p.pose;
      apply(prims, pose, offsets[s]);
      ev[s] = evaluate(p, prims, pose);
    }
    if (ev[0].fingerprint != ev[1].fingerprint || ev[0].fingerprint != ev[2].fingerprint ||
        ev[0].fingerprint != ev[3].fingerprint) {
      ++rep.skipped;
      return;
    }
    ++rep.checked;
    const double fd =
        (8.0 * (ev[2].value - ev[3].value) - (ev[0].value - ev[1].value)) / (6.0 * step);
    const double denom = std::max({std::abs(analytic_value), std::abs(fd), denom_floor});
    const double rel = std::abs(analytic_value - fd) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_analytic = analytic_value;
      rep.worst_fd = fd;
      rep.worst_param = desc;
    }
  };

  const size_t n = p.primitives.size();
  for (size_t i = 0; i < n; ++i) {
    const std::string tag = "prim" + std::to_string(i);
    for (int a = 0; a < 3; ++a)
      probe(analytic.d_mean[i](a), tag + ".mean" + std::to_string(a),
            [i, a](std::vector<GaussianPrimitive>& g, CameraPose&, double h) {
              g[i].mean(a) += h;
            });
    for (int a = 0; a < 3; ++a)
      probe(analytic.d_log_scale[i](a), tag + ".log_scale" + std::to_string(a),
            [i, a](std::vector<GaussianPrimitive>& g, CameraPose&, double h) {
              g[i].log_scale(a) += h;
            });
    for (int a = 0; a < 4; ++a)
      probe(analytic.d_quat[i](a), tag + ".quat" + std::to_string(a),
            [i, a](std::vector<GaussianPrimitive>& g, CameraPose&, double h) {
              g[i].quat(a) += h;
            });
    probe(analytic.d_opacity_logit[i], tag + ".opacity_logit",
          [i](std::vector<GaussianPrimitive>& g, CameraPose&, double h) {
            g[i].opacity_logit += h;
          });
    for (size_t b = 0; b < p.primitives[i].sh.size(); ++b)
      for (int c = 0; c < 3; ++c)
        probe(analytic.d_sh[i][b](c),
              tag + ".sh" + std::to_string(b) + "c" + std::to_string(c),
              [i, b, c](std::vector<GaussianPrimitive>& g, CameraPose&, double h) {
                g[i].sh[b](c) += h;
              });
  }
  for (int a = 0; a < 6; ++a)
    probe(analytic.d_pose(a), "pose.t" + std::to_string(a),
          [a](std::vector<GaussianPrimitive>&, CameraPose& pose, double h) {
            Vec6 d = Vec6::Zero();
            d(a) = h;
            pose = pose.perturbed(d);
          });

  return rep;
}

}  // namespace gsf
