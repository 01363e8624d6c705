#pragma once

#include <cstdint>
#include <string>

#include "evs/error.hpp"
#include "evs/random.hpp"

namespace evs {

/// Beta distribution described by its mode m and concentration kappa:
///   alpha = m (kappa - 2) + 1,  beta = (1 - m)(kappa - 2) + 1.
/// kappa > 2 keeps both parameters above 1, so the mode is interior.
class BetaRateSpec {
 public:
  BetaRateSpec(double mode_target, double concentration = 20.0)
      : mode_(mode_target), concentration_(concentration) {
    require(mode_target > 0.0 && mode_target < 1.0, "mode target must lie in (0, 1)");
    require(concentration > 2.0, "concentration must exceed 2, got " +
                                     std::to_string(concentration));
  }

  double mode_target() const { return mode_; }
  double concentration() const { return concentration_; }
  double alpha() const { return mode_ * (concentration_ - 2.0) + 1.0; }
  double beta() const { return (1.0 - mode_) * (concentration_ - 2.0) + 1.0; }
  double mean() const { return alpha() / (alpha() + beta()); }

 private:
  double mode_;
  double concentration_;
};

/// Draws pruning rates q in (0, 1). Owns its random stream; one instance per
/// thread.
class RateSampler {
 public:
  explicit RateSampler(BetaRateSpec spec, std::uint64_t seed = 0)
      : spec_(spec), engine_(seed) {}

  // Beta(alpha, beta) as X / (X + Y) with X ~ Gamma(alpha), Y ~ Gamma(beta).
  double operator()() {
    for (;;) {
      const double x = gamma_variate(engine_, spec_.alpha());
      const double y = gamma_variate(engine_, spec_.beta());
      const double q = x / (x + y);
      if (q > 0.0 && q < 1.0) return q;
    }
  }

  const BetaRateSpec& spec() const { return spec_; }

 private:
  BetaRateSpec spec_;
  Engine engine_;
};

inline double sample_rate(const BetaRateSpec& spec, std::uint64_t seed) {
  return RateSampler(spec, seed)();
}

}  // namespace evs
