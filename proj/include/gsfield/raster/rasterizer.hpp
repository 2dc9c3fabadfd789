#pragma once

#include <optional>
#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/pose.hpp"
#include "gsfield/geometry/primitive.hpp"
#include "gsfield/raster/config.hpp"
#include "gsfield/raster/output.hpp"

namespace gsf {

/// Tiled forward render of all output maps. Primitives are depth-sorted
/// globally (ties by id) and blended front to back per pixel; the uncertainty
/// map needs observed_depth and is marked absent without it. Throws
/// std::invalid_argument naming the first primitive with non-finite parameters.
RenderResult render(const std::vector<GaussianPrimitive>& primitives, const CameraPose& pose,
                    const CameraIntrinsics& intrinsics, const ImageD* observed_depth,
                    const RasterConfig& config);

/// Brute-force oracle: every pixel walks the full sorted primitive list, no
/// tiling, no early termination. Same contract as render.
RenderOutput render_reference(const std::vector<GaussianPrimitive>& primitives,
                              const CameraPose& pose, const CameraIntrinsics& intrinsics,
                              const ImageD* observed_depth, const RasterConfig& config);

/// Analytic backward pass over a BlendRecord produced by render on identical
/// inputs. observed_depth is required when upstream.d_uncertainty is present
/// (and the config keeps the full uncertainty gradient).
GradientBundle render_backward(const std::vector<GaussianPrimitive>& primitives,
                               const CameraPose& pose, const CameraIntrinsics& intrinsics,
                               const BlendRecord& record, const UpstreamGradients& upstream,
                               const ImageD* observed_depth, const RasterConfig& config);

}  // namespace gsf
