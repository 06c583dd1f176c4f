#ifndef CLICKGRAD_LOGSPACE_HPP
#define CLICKGRAD_LOGSPACE_HPP

#include <cmath>
#include <span>
#include <stdexcept>

// Stable primitives for probability arithmetic on natural-log scale.
// Probabilities live in (-inf, 0]; logits are mapped in via log_sigmoid.

namespace clickgrad::logspace {

/// max(a) + log(sum exp(a_i - max(a))). Handles inputs of any magnitude,
/// including -inf terms. Throws on an empty span or NaN input.
double log_sum_exp(std::span<const double> values);

inline double log_sum_exp2(double a, double b) {
    const double m = a > b ? a : b;
    if (std::isinf(m) && m < 0.0) return m;  // both -inf
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log(1 - exp(a)) for a <= 0, switching between the expm1 expression
/// (a > -ln 2) and the log1p expression (a <= -ln 2). a = 0 yields -inf.
inline double log1mexp(double a) {
    if (std::isnan(a) || a > 0.0)
        throw std::invalid_argument("log1mexp: input must be <= 0");
    if (a == 0.0) return -std::numeric_limits<double>::infinity();
    static const double kNegLn2 = -0.6931471805599453;
    if (a > kNegLn2) return std::log(-std::expm1(a));
    return std::log1p(-std::exp(a));
}

/// log sigma(x) = -log_sum_exp([0, -x]). Accepts +/-inf (limits 0 and x).
inline double log_sigmoid(double x) {
    if (std::isnan(x)) throw std::invalid_argument("log_sigmoid: NaN input");
    if (x < 0.0) return x - std::log1p(std::exp(x));
    return -std::log1p(std::exp(-x));
}

/// log(1 - sigma(x)) = log_sigmoid(-x).
inline double log1m_sigmoid(double x) { return log_sigmoid(-x); }

/// Inverse of the sigmoid; p in [0, 1] (endpoints map to -/+inf).
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace clickgrad::logspace

#endif
