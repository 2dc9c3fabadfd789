#include "gsfield/track/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gsfield/map/adam.hpp"
#include "gsfield/track/descriptor.hpp"

namespace gsf {

void TrackerConfig::validate() const {
  if (!(lr_rotation > 0.0) || !(lr_translation > 0.0))
    throw std::invalid_argument("pose learning rates must be positive");
  if (iterations <= 0) throw std::invalid_argument("tracking iterations must be positive");
  if (ba_window < 2) throw std::invalid_argument("adjustment window needs at least 2 keyframes");
  if (ba_iterations < 0) throw std::invalid_argument("adjustment iterations must be non-negative");
  if (keyframe_interval < 1) throw std::invalid_argument("keyframe interval must be at least 1");
  if (recent_keyframes < 0) throw std::invalid_argument("recent keyframe count must be non-negative");
  if (!(degraded_loss_ratio > 1.0))
    throw std::invalid_argument("degraded-tracking ratio must exceed 1");
}

CameraPose predict_pose(const CameraPose& previous, const CameraPose& before_previous) {
  return previous.compose(before_previous.inverse().compose(previous));
}

TrackResult track_frame(const std::vector<GaussianPrimitive>& prims, const ImageRGB& rgb,
                        const ImageD& depth, const CameraPose& initial_pose,
                        const CameraIntrinsics& k, const TrackerConfig& cfg,
                        const LossWeights& weights, const RasterConfig& raster) {
  TrackResult result;
  result.pose = initial_pose;

  AdamState rot_opt(cfg.lr_rotation, 3), trans_opt(cfg.lr_translation, 3);
  rot_opt.append(1);
  trans_opt.append(1);

  double initial_loss = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const RenderResult rr = render(prims, result.pose, k, nullptr, raster);
    const TrackingLossResult loss =
        evaluate_tracking_loss(rr, rgb, depth, k, weights, /*want_gradients=*/true);
    if (it == 0) {
      initial_loss = loss.total;
      if (loss.valid_color == 0 && loss.valid_geo == 0) {
        // Nothing in this frame constrains the pose; hold the prediction.
        result.degraded = true;
        result.final_loss = loss.total;
        return result;
      }
    }
    if (!std::isfinite(loss.total)) {
      std::ostringstream msg;
      msg << "tracking diverged at iteration " << it << ": total=" << loss.total
          << " color=" << loss.color << " geo=" << loss.geo;
      throw std::runtime_error(msg.str());
    }

    const GradientBundle grads =
        render_backward(prims, result.pose, k, rr.record, loss.upstream, nullptr, raster);
    double step_rot[3] = {0, 0, 0}, step_trans[3] = {0, 0, 0};
    const Vec3 g_rot = grads.d_pose.head<3>(), g_trans = grads.d_pose.tail<3>();
    rot_opt.step(step_rot, g_rot.data());
    trans_opt.step(step_trans, g_trans.data());
    Vec6 delta;
    delta << step_rot[0], step_rot[1], step_rot[2], step_trans[0], step_trans[1], step_trans[2];
    result.pose = result.pose.perturbed(delta);
    ++result.iterations_run;
  }

  const RenderResult rr = render(prims, result.pose, k, nullptr, raster);
  const TrackingLossResult final_loss =
      evaluate_tracking_loss(rr, rgb, depth, k, weights, /*want_gradients=*/false);
  result.final_loss = final_loss.total;
  if (cfg.iterations == 0) {
    result.degraded = final_loss.valid_color == 0 && final_loss.valid_geo == 0;
  } else if (final_loss.total > cfg.degraded_loss_ratio * initial_loss) {
    result.degraded = true;
  }
  return result;
}

std::vector<int> select_window(const std::vector<KeyframeRecord>& pool,
                               const TrackerConfig& cfg) {
  if (pool.empty()) throw std::invalid_argument("keyframe pool is empty");
  const int n = static_cast<int>(pool.size());
  const int current = n - 1;
  std::vector<int> window = {current};
  std::vector<uint8_t> taken(n, 0);
  taken[current] = 1;

  for (int i = current - 1; i >= 0 && static_cast<int>(window.size()) < cfg.ba_window &&
                            current - i <= cfg.recent_keyframes;
       --i) {
    window.push_back(i);
    taken[i] = 1;
  }

  // Remaining slots go to the highest-similarity keyframes; equal scores
  // favour the newer frame.
  std::vector<std::pair<double, int>> rest;
  for (int i = 0; i < n; ++i)
    if (!taken[i])
      rest.emplace_back(cosine_similarity(pool[i].descriptor, pool[current].descriptor), i);
  std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;  // recency breaks the tie
  });
  for (const auto& [score, idx] : rest) {
    if (static_cast<int>(window.size()) >= cfg.ba_window) break;
    window.push_back(idx);
  }
  return window;
}

std::vector<double> sliding_ba(MapState& map, const std::vector<KeyframeRecord*>& window,
                               const CameraIntrinsics& k, const TrackerConfig& tcfg,
                               const MapperConfig& mcfg, int iterations) {
  if (window.empty()) throw std::invalid_argument("adjustment window is empty");
  for (const KeyframeRecord* kf : window)
    if (!kf) throw std::invalid_argument("adjustment window holds a null keyframe");
  map.check_consistent();

  int anchor = -1;
  if (tcfg.freeze_oldest_pose) {
    anchor = 0;
    for (size_t i = 1; i < window.size(); ++i)
      if (window[i]->frame_id < window[anchor]->frame_id) anchor = static_cast<int>(i);
  }

  std::vector<AdamState> rot_opts, trans_opts;
  for (size_t i = 0; i < window.size(); ++i) {
    rot_opts.emplace_back(tcfg.lr_rotation, 3).append(1);
    trans_opts.emplace_back(tcfg.lr_translation, 3).append(1);
  }

  std::vector<double> trace;
  trace.reserve(iterations);
  for (int it = 0; it < iterations; ++it) {
    GradientBundle total;
    total.init(map.primitives);
    std::vector<Vec6> pose_grads(window.size(), Vec6::Zero());
    double loss_sum = 0.0;

    for (size_t wi = 0; wi < window.size(); ++wi) {
      KeyframeRecord& kf = *window[wi];
      const RenderResult rr = render(map.primitives, kf.pose, k, &kf.depth, mcfg.raster);
      const MappingLossResult loss = evaluate_mapping_loss(
          map.primitives, rr, kf.rgb, kf.depth, k, mcfg.weights, /*want_gradients=*/true);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "bundle adjustment diverged at iteration " << it << " keyframe " << kf.frame_id
            << ": total=" << loss.total;
        throw std::runtime_error(msg.str());
      }
      GradientBundle b = render_backward(map.primitives, kf.pose, k, rr.record, loss.upstream,
                                         &kf.depth, mcfg.raster);
      for (size_t i = 0; i < loss.d_log_scale_direct.size(); ++i)
        b.d_log_scale[i] += loss.d_log_scale_direct[i];
      pose_grads[wi] = b.d_pose;
      total.add(b);
      loss_sum += loss.total;
    }

    map.optimizer.step(map.primitives, total);
    for (size_t wi = 0; wi < window.size(); ++wi) {
      if (static_cast<int>(wi) == anchor) continue;
      double step_rot[3] = {0, 0, 0}, step_trans[3] = {0, 0, 0};
      const Vec3 g_rot = pose_grads[wi].head<3>(), g_trans = pose_grads[wi].tail<3>();
      rot_opts[wi].step(step_rot, g_rot.data());
      trans_opts[wi].step(step_trans, g_trans.data());
      Vec6 delta;
      delta << step_rot[0], step_rot[1], step_rot[2], step_trans[0], step_trans[1],
          step_trans[2];
      window[wi]->pose = window[wi]->pose.perturbed(delta);
    }
    trace.push_back(loss_sum);
  }
  return trace;
}

}  // namespace gsf
