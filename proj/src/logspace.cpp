#include "clickgrad/logspace.hpp"

#include <limits>

namespace clickgrad::logspace {

double log_sum_exp(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("log_sum_exp: empty input");
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v)) throw std::invalid_argument("log_sum_exp: NaN input");
        if (v > m) m = v;
    }
    if (std::isinf(m) && m < 0.0) return m;  // all terms are log(0)
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - m);
    return m + std::log(sum);
}

}  // namespace clickgrad::logspace
