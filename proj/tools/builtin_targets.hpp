#pragma once

#include <cstdint>

#include "cdpr/image.hpp"

namespace cdpr::targets {

// Frozen uint16 rasters behind the built-in test target (photographic
// amplitude, textured phase); regenerate with gen_targets.py.
extern const std::uint16_t kAmp64[64 * 64];
extern const std::uint16_t kPhase64[64 * 64];
extern const std::uint16_t kAmp200[200 * 200];
extern const std::uint16_t kPhase200[200 * 200];

// Complex test target: amplitude in [0, 1], phase in [-pi/2, pi/2].
// Supported sizes: 64 and 200; anything else throws InvalidInput.
ComplexImage builtin_target(int size);

}  // namespace cdpr::targets
