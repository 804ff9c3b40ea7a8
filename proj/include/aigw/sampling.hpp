#pragma once

#include <cstdint>

#include "aigw/rng.hpp"

namespace aigw {

// Truncated log-normal over token counts. Samples above `cap` collapse onto
// the cap itself, so the histogram accumulates mass in the final bin.
struct LengthDist {
  double mu = 0.0;
  double sigma = 1.0;
  int64_t cap = 4096;
};

// Exponential interarrival gap in milliseconds for a Poisson process with
// rate `lambda_per_s` (inverse transform, U on (0,1]; U == 1 yields 0).
double next_interarrival_ms(Rng& rng, double lambda_per_s);

// Integer token count in [1, dist.cap]; raw draws above the cap return the
// cap exactly.
int64_t natural_length_sample(const LengthDist& dist, Rng& rng);

// Uniform on [base - jitter, base + jitter], clamped to `floor`.
double jittered_sample(Rng& rng, double base, double jitter, double floor);

}  // namespace aigw
