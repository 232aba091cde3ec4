#include "sissa/failure/weibull.hpp"

#include <cmath>

namespace sissa::failure {

namespace {

void check(double t, const WeibullParams& p) {
    if (!(p.alpha > 0.0) || !(p.beta > 0.0))
        throw DomainError("Weibull parameters must be positive");
    if (t < 0.0) throw DomainError("Weibull domain is t >= 0");
}

}  // namespace

double weibull_pdf(double t, const WeibullParams& p) {
    check(t, p);
    const double x = t / p.alpha;
    if (t == 0.0) {
        if (p.beta < 1.0) return std::numeric_limits<double>::infinity();
        if (p.beta == 1.0) return 1.0 / p.alpha;
        return 0.0;
    }
    return (p.beta / p.alpha) * std::pow(x, p.beta - 1.0) *
           std::exp(-std::pow(x, p.beta));
}

double weibull_cdf(double t, const WeibullParams& p) {
    check(t, p);
    if (t == 0.0) return 0.0;
    return -std::expm1(-std::pow(t / p.alpha, p.beta));
}

double hazard_rate(double t, const WeibullParams& p) {
    check(t, p);
    if (t == 0.0) {
        if (p.beta < 1.0) return std::numeric_limits<double>::infinity();
        if (p.beta == 1.0) return 1.0 / p.alpha;
        return 0.0;
    }
    return (p.beta / p.alpha) * std::pow(t / p.alpha, p.beta - 1.0);
}

double sample_failure_time(const WeibullParams& p, Rng& rng) {
    if (!(p.alpha > 0.0) || !(p.beta > 0.0))
        throw DomainError("Weibull parameters must be positive");
    // uniform() is in [0,1); 1-u is in (0,1], so the log is finite.
    const double u = 1.0 - rng.uniform();
    return p.alpha * std::pow(-std::log(u), 1.0 / p.beta);
}

double sample_failure_time_truncated(const WeibullParams& p, double horizon,
                                     Rng& rng) {
    if (horizon <= 0.0) throw DomainError("horizon must be > 0");
    const double mass = weibull_cdf(horizon, p);
    const double u = rng.uniform() * mass;
    // Invert F(t) = u on [0, horizon].
    const double t = p.alpha * std::pow(-std::log1p(-u), 1.0 / p.beta);
    return t < horizon ? t : horizon;
}

Regime classify_regime(double beta) {
    if (!(beta > 0.0)) throw DomainError("beta must be > 0");
    if (std::fabs(beta - 1.0) <= 1e-9) return Regime::Random;
    return beta < 1.0 ? Regime::InfantMortality : Regime::WearOut;
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::InfantMortality: return "INFANT_MORTALITY";
        case Regime::Random: return "RANDOM";
        case Regime::WearOut: return "WEAR_OUT";
    }
    return "?";
}

}  // namespace sissa::failure
