#include "builtin_targets.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "cdpr/errors.hpp"

namespace cdpr::targets {

ComplexImage builtin_target(int size) {
  const std::uint16_t* amp = nullptr;
  const std::uint16_t* phase = nullptr;
  if (size == 64) {
    amp = kAmp64;
    phase = kPhase64;
  } else if (size == 200) {
    amp = kAmp200;
    phase = kPhase200;
  } else {
    throw InvalidInput("builtin_target: supported sizes are 64 and 200, got " +
                       std::to_string(size));
  }
  ComplexImage u(size, size);
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    const double a = amp[i] / 65535.0;
    const double p = (phase[i] / 65535.0 - 0.5) * M_PI;
    u.data[i] = std::polar(a, p);
  }
  return u;
}

}  // namespace cdpr::targets
