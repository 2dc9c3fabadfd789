#include "gsfield/map/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

#include "gsfield/core/parallel.hpp"
#include "gsfield/geometry/primitive.hpp"

namespace gsf {

void UncertaintyConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("uncertainty threshold must be positive");
  if (!(reduced_opacity > 0.0 && reduced_opacity < 0.1))
    throw std::invalid_argument("reduced opacity must lie in (0, 0.1)");
}

int accumulate_uncertainty(std::vector<GaussianPrimitive>& primitives,
                           const std::vector<UncertaintyView>& window, int threads) {
  if (window.empty()) return 0;
  const size_t n = primitives.size();
  for (const UncertaintyView& view : window) {
    if (!view.record || !view.observed_depth)
      throw std::invalid_argument("uncertainty view missing record or depth");
    if (view.record->num_primitives != static_cast<int>(n))
      throw std::invalid_argument("uncertainty view was rendered from a different primitive set");
    if (view.observed_depth->width() != view.record->width ||
        view.observed_depth->height() != view.record->height)
      throw std::invalid_argument("uncertainty view depth dimensions mismatch");
  }

  // Per-view partial sums, filled in parallel and reduced in window order so
  // the result never depends on the thread count.
  std::vector<std::vector<double>> view_sum(window.size());
  std::vector<std::vector<int>> view_count(window.size());
  parallel_for(window.size(), threads, [&](size_t begin, size_t end) {
    for (size_t v = begin; v < end; ++v) {
      const UncertaintyView& view = window[v];
      const BlendRecord& rec = *view.record;
      const ImageD& obs = *view.observed_depth;
      const Mat3 rot = view.pose.rotation();
      std::vector<double> depth_in_view(n);
      for (size_t i = 0; i < n; ++i)
        depth_in_view[i] = (rot * primitives[i].mean + view.pose.translation).z();

      std::vector<double>& sum = view_sum[v];
      std::vector<int>& count = view_count[v];
      sum.assign(n, 0.0);
      count.assign(n, 0);
      for (int y = 0; y < rec.height; ++y)
        for (int x = 0; x < rec.width; ++x) {
          const int32_t owner = rec.dominant(x, y);
          if (owner < 0) continue;
          const double d_obs = obs(x, y);
          if (!std::isfinite(d_obs) || d_obs <= view.intrinsics.near_plane ||
              d_obs >= view.intrinsics.far_plane)
            continue;
          for (uint32_t e = rec.begin(x, y); e < rec.end(x, y); ++e) {
            if (rec.prim[e] != owner) continue;
            const double resid = d_obs - depth_in_view[owner];
            sum[owner] += rec.alpha[e] * rec.transmittance[e] * resid * resid;
            ++count[owner];
            break;
          }
        }
    }
  });

  std::vector<double> total(n, 0.0);
  std::vector<int> pixels(n, 0);
  for (size_t v = 0; v < window.size(); ++v)
    for (size_t i = 0; i < n; ++i) {
      total[i] += view_sum[v][i];
      pixels[i] += view_count[v][i];
    }

  int observed = 0;
  for (size_t i = 0; i < n; ++i) {
    if (pixels[i] > 0) {
      primitives[i].uncertainty = total[i] / pixels[i];
      primitives[i].observed = true;
      ++observed;
    } else {
      primitives[i].observed = false;
    }
  }
  return observed;
}

int prune_unreliable(std::vector<GaussianPrimitive>& primitives, const UncertaintyConfig& cfg) {
  cfg.validate();
  const double target = logit(cfg.reduced_opacity);
  int reduced = 0;
  for (GaussianPrimitive& p : primitives) {
    if (p.uncertainty > cfg.tau && p.opacity_logit != target) {
      p.opacity_logit = target;
      ++reduced;
    }
  }
  return reduced;
}

}  // namespace gsf
