#pragma once

#include <cstdint>

namespace gsf {

/// Fold a value into a running order-sensitive hash (splitmix-style mixing).
inline void fingerprint_fold(uint64_t& h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
}

}  // namespace gsf
