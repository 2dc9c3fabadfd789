#include "gsfield/slam/system.hpp"

#include <chrono>
#include <stdexcept>

#include "gsfield/track/descriptor.hpp"

namespace gsf {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

SlamSystem::SlamSystem(const RunConfig& config) : cfg_(config) {
  cfg_.validate();
  // The run seed drives every stochastic choice, including split sampling.
  cfg_.mapper.seed = uint64_t(cfg_.seed);
}

const MapState& SlamSystem::map() const {
  if (!map_) throw std::logic_error("slam: no frame processed yet");
  return *map_;
}

void SlamSystem::process(const Frame& frame) {
  FrameLog log;
  log.frame = frame.index;
  log.timestamp = frame.timestamp;

  if (!map_) {
    bootstrap(frame, log);
  } else {
    const auto track_start = Clock::now();
    const CameraPose predicted = trajectory_.size() < 2
                                     ? prev_pose_
                                     : predict_pose(prev_pose_, prev_prev_pose_);
    const TrackResult result =
        track_frame(map_->primitives, frame.rgb, frame.depth, predicted, cfg_.intrinsics,
                    cfg_.tracker, cfg_.mapper.weights, cfg_.mapper.raster);
    log.track_ms = ms_since(track_start);
    log.track_loss = result.final_loss;
    log.track_iterations = result.iterations_run;
    log.track_degraded = result.degraded;
    if (result.degraded) ++degraded_frames_;

    prev_prev_pose_ = prev_pose_;
    prev_pose_ = result.pose;
    trajectory_.push_back({frame.timestamp, result.pose});

    if (frame.index % cfg_.tracker.keyframe_interval == 0) keyframe_cycle(frame, log);
  }

  log.primitives = int(map_->primitives.size());
  logs_.push_back(log);
}

void SlamSystem::bootstrap(const Frame& frame, FrameLog& log) {
  const auto start = Clock::now();
  const CameraPose origin;  // the first camera anchors the world frame
  map_.emplace(initialize_map(frame.rgb, frame.depth, origin, cfg_.intrinsics, cfg_.mapper));

  KeyframeRecord kf;
  kf.frame_id = frame.index;
  kf.timestamp = frame.timestamp;
  kf.rgb = frame.rgb;
  kf.depth = frame.depth;
  kf.pose = origin;
  kf.descriptor = compute_descriptor(frame.rgb);
  keyframes_.push_back(std::move(kf));

  const std::vector<MapObservation> window = {
      {&keyframes_[0].rgb, &keyframes_[0].depth, origin}};
  map_step(*map_, window, cfg_.intrinsics, cfg_.mapper, cfg_.mapper.init_iterations);
  log.map_ms = ms_since(start);
  log.keyframe = true;

  prev_pose_ = prev_prev_pose_ = origin;
  trajectory_.push_back({frame.timestamp, origin});

  const RenderOutput view = render(map_->primitives, origin, cfg_.intrinsics,
                                   &keyframes_[0].depth, cfg_.mapper.raster)
                                .out;
  log.kf_psnr_db = psnr_db(view.color, keyframes_[0].rgb);
  log.kf_depth_l1_cm = depth_l1_cm(view.alpha_depth, keyframes_[0].depth, cfg_.intrinsics);
}

void SlamSystem::keyframe_cycle(const Frame& frame, FrameLog& log) {
  log.keyframe = true;

  KeyframeRecord kf;
  kf.frame_id = frame.index;
  kf.timestamp = frame.timestamp;
  kf.rgb = frame.rgb;
  kf.depth = frame.depth;
  kf.pose = trajectory_.back().pose;
  kf.descriptor = compute_descriptor(frame.rgb);
  keyframes_.push_back(std::move(kf));

  const std::vector<int> window_idx = select_window(keyframes_, cfg_.tracker);

  const auto map_start = Clock::now();
  std::vector<MapObservation> observations;
  observations.reserve(window_idx.size());
  for (int idx : window_idx) {
    const KeyframeRecord& rec = keyframes_[idx];
    observations.push_back({&rec.rgb, &rec.depth, rec.pose});
  }
  map_step(*map_, observations, cfg_.intrinsics, cfg_.mapper, cfg_.mapper.iterations);
  log.map_ms = ms_since(map_start);

  const auto ba_start = Clock::now();
  std::vector<KeyframeRecord*> window;
  window.reserve(window_idx.size());
  for (int idx : window_idx) window.push_back(&keyframes_[idx]);
  sliding_ba(*map_, window, cfg_.intrinsics, cfg_.tracker, cfg_.mapper,
             cfg_.tracker.ba_iterations);
  log.ba_ms = ms_since(ba_start);

  // Adjustment may have moved the incoming keyframe's pose; the trajectory
  // and the velocity model both follow the refined estimate.
  trajectory_.back().pose = keyframes_.back().pose;
  prev_pose_ = keyframes_.back().pose;

  const auto unc_start = Clock::now();
  std::vector<RenderResult> renders;
  renders.reserve(window.size());
  std::vector<UncertaintyView> views;
  views.reserve(window.size());
  for (const KeyframeRecord* rec : window)
    renders.push_back(render(map_->primitives, rec->pose, cfg_.intrinsics, &rec->depth,
                             cfg_.mapper.raster));
  for (size_t i = 0; i < window.size(); ++i)
    views.push_back({&renders[i].record, &window[i]->depth, window[i]->pose, cfg_.intrinsics});
  accumulate_uncertainty(map_->primitives, views, cfg_.mapper.raster.threads);
  prune_unreliable(map_->primitives, cfg_.mapper.uncertainty);
  log.uncertainty_ms = ms_since(unc_start);

  const auto spawn_start = Clock::now();
  const KeyframeRecord& current = keyframes_.back();
  const RenderOutput now = render(map_->primitives, current.pose, cfg_.intrinsics,
                                  &current.depth, cfg_.mapper.raster)
                               .out;
  log.kf_psnr_db = psnr_db(now.color, current.rgb);
  log.kf_depth_l1_cm = depth_l1_cm(now.alpha_depth, current.depth, cfg_.intrinsics);
  spawn_gaussians(*map_, now, current.rgb, current.depth, current.pose, cfg_.intrinsics,
                  cfg_.mapper);
  log.spawn_ms = ms_since(spawn_start);
}

}  // namespace gsf
