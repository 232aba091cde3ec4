#pragma once

#include <limits>

#include "sissa/util/errors.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::failure {

struct WeibullParams {
    double alpha = 1.0;  // scale, > 0
    double beta = 1.0;   // shape, > 0
};

enum class Regime { InfantMortality, Random, WearOut };

class DomainError : public RuntimeError {
public:
    explicit DomainError(const std::string& what) : RuntimeError(what) {}
};

// f(t) = (beta/alpha) (t/alpha)^(beta-1) exp(-(t/alpha)^beta).
// For beta < 1 the density diverges at t = 0; +infinity is returned there.
double weibull_pdf(double t, const WeibullParams& p);

// F(t) = 1 - exp(-(t/alpha)^beta)
double weibull_cdf(double t, const WeibullParams& p);

// h(t) = f(t) / (1 - F(t)) = (beta/alpha) (t/alpha)^(beta-1)
double hazard_rate(double t, const WeibullParams& p);

// Inverse-CDF draw: alpha * (-ln u)^(1/beta).
double sample_failure_time(const WeibullParams& p, Rng& rng);

// Draw conditioned on the failure landing inside [0, horizon].
double sample_failure_time_truncated(const WeibullParams& p, double horizon,
                                     Rng& rng);

// beta < 1 -> decreasing hazard, beta == 1 (within 1e-9) -> constant,
// beta > 1 -> increasing; the three bathtub stages.
Regime classify_regime(double beta);

const char* regime_name(Regime r);

}  // namespace sissa::failure
