#include "migflow/privacy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "migflow/rng.hpp"

namespace migflow {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

/// Standard normal CDF via the complementary error function, which stays
/// accurate deep in the lower tail where naive 1 - Phi(-x) would cancel.
double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

}  // namespace

void PrivacyParams::validate() const {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
    if (sensitivity <= 0.0) throw std::invalid_argument("sensitivity must be > 0");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
    if (dp_condition_value(epsilon, delta, sensitivity, sigma) > 0.0) {
        throw std::invalid_argument("sigma does not satisfy the mechanism condition");
    }
}

double sensitivity_from_release_plan(int years, int aggregates_per_year) {
    if (years < 1 || aggregates_per_year < 1) {
        throw std::invalid_argument("release plan counts must be >= 1");
    }
    return std::sqrt(static_cast<double>(years) * aggregates_per_year);
}

double dp_condition_value(double epsilon, double delta, double sensitivity, double sigma) {
    if (epsilon <= 0.0 || delta <= 0.0 || sensitivity <= 0.0 || sigma <= 0.0) {
        throw std::invalid_argument("dp_condition_value: arguments must be positive");
    }
    const double a = sensitivity / (2.0 * sigma) - epsilon * sigma / sensitivity;
    const double b = -sensitivity / (2.0 * sigma) - epsilon * sigma / sensitivity;
    const double lhs = normal_cdf(a) - std::exp(epsilon) * normal_cdf(b);
    return lhs - delta;
}

double solve_sigma(double epsilon, double delta, double sensitivity) {
    const double classical =
        sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;

    double hi = classical;
    int expansions = 0;
    while (dp_condition_value(epsilon, delta, sensitivity, hi) > 0.0) {
        hi *= 2.0;
        if (++expansions > 60) {
            throw std::runtime_error("solve_sigma: failed to bracket above sigma");
        }
    }
    double lo = 1e-3 * classical;
    if (dp_condition_value(epsilon, delta, sensitivity, lo) <= 0.0) {
        std::ostringstream msg;
        msg << "solve_sigma: bracket failure, condition already satisfied at sigma=" << lo;
        throw std::runtime_error(msg.str());
    }

    // lhs(sigma) must decrease over the bracket for bisection to be valid.
    double previous = dp_condition_value(epsilon, delta, sensitivity, lo);
    for (int i = 1; i <= 8; ++i) {
        const double s = lo + (hi - lo) * i / 8.0;
        const double value = dp_condition_value(epsilon, delta, sensitivity, s);
        if (value > previous + 1e-15) {
            throw std::runtime_error("solve_sigma: condition not monotone on bracket");
        }
        previous = value;
    }

    while ((hi - lo) / hi > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (dp_condition_value(epsilon, delta, sensitivity, mid) <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

FlowTable privatize(const FlowTable& table, double sigma, std::uint64_t seed) {
    if (table.stage() != Stage::weighted) {
        throw std::invalid_argument("privatize: table must be at weighted stage");
    }
    if (sigma < 0.0) throw std::invalid_argument("privatize: sigma must be >= 0");

    const std::uint64_t base = rng::mix(seed, "privatize");
    FlowTable out(Stage::privatized, table.months(), table.universe());
    for (const auto& [key, value] : table.entries()) {
        double noisy = value;
        if (sigma > 0.0) {
            std::uint64_t cell_key = rng::mix(base, key.origin.str());
            cell_key = rng::mix(cell_key, key.destination.str());
            cell_key = rng::mix(cell_key, static_cast<std::uint64_t>(key.month.year));
            cell_key = rng::mix(cell_key, static_cast<std::uint64_t>(key.month.month));
            rng::Substream stream(cell_key);
            noisy += sigma * stream.next_gaussian();
        }
        noisy = std::round(noisy);
        if (noisy < 0.0) noisy = 0.0;  // censor at 0
        out.set(key, noisy);
    }
    for (const auto& key : table.missing()) out.mark_missing(key);
    return out;
}

}  // namespace migflow
