#pragma once

#include <vector>

#include "gsfield/core/types.hpp"

namespace gsf {

/// Degree for a per-channel coefficient count; throws std::invalid_argument
/// for counts that are not (L+1)^2 with L in 0..3.
int sh_degree_from_count(int count);

/// RGB from spherical harmonics: 0.5 + sum_b basis_b(dir) * sh[b], floored at 0
/// channel-wise. dir must be unit length.
Vec3 eval_sh_color(const std::vector<Vec3>& sh, const Vec3& dir);

/// Adjoint of eval_sh_color. Accumulates into d_sh (same length as sh) and
/// d_dir. The floor at zero blocks gradients channel-wise, matching forward.
void eval_sh_color_backward(const std::vector<Vec3>& sh, const Vec3& dir, const Vec3& d_color,
                            std::vector<Vec3>& d_sh, Vec3& d_dir);

}  // namespace gsf
