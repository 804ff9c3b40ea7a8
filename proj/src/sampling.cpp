#include "aigw/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "aigw/error.hpp"

namespace aigw {

double next_interarrival_ms(Rng& rng, double lambda_per_s) {
  if (!(lambda_per_s > 0.0)) {
    fail(Errc::invalid_argument, "arrival rate must be positive");
  }
  double u = rng.next_unit_open_low();
  return -std::log(u) / lambda_per_s * 1000.0;
}

int64_t natural_length_sample(const LengthDist& dist, Rng& rng) {
  double raw = std::exp(dist.mu + dist.sigma * rng.next_normal());
  int64_t n = std::llround(raw);
  return std::clamp<int64_t>(n, 1, dist.cap);
}

double jittered_sample(Rng& rng, double base, double jitter, double floor) {
  if (jitter <= 0.0) return std::max(base, floor);
  return std::max(rng.next_range(base - jitter, base + jitter), floor);
}

}  // namespace aigw
