#pragma once

#include <cstdint>

#include "migflow/core.hpp"

namespace migflow {

struct PrivacyParams {
    double epsilon = 10.0;
    double delta = 1e-9;
    double sensitivity = 0.0;  // L2 norm over all released aggregates
    double sigma = 0.0;        // derived via solve_sigma

    void validate() const;
};

/// L2 sensitivity for a release plan of `years` yearly releases of
/// `aggregates_per_year` +/-1-sensitive aggregates per individual.
double sensitivity_from_release_plan(int years, int aggregates_per_year);

/// Gaussian-mechanism feasibility margin: lhs - delta, where
/// lhs = Phi(D/2s - es/D) - e^eps * Phi(-D/2s - es/D). Negative or zero means
/// the (epsilon, delta) guarantee holds at this sigma. Tails are evaluated via
/// erfc to keep absolute accuracy near delta = 1e-9.
double dp_condition_value(double epsilon, double delta, double sensitivity, double sigma);

/// Minimal sigma satisfying the mechanism condition, by bisection to relative
/// tolerance 1e-6 on a bracket seeded at the classical bound
/// sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
double solve_sigma(double epsilon, double delta, double sensitivity);

/// Adds independent N(0, sigma^2) noise per cell from a counter-based
/// substream keyed by (seed, origin, destination, year, month), rounds to the
/// nearest integer, and censors negatives at 0. Requires the weighted stage.
FlowTable privatize(const FlowTable& table, double sigma, std::uint64_t seed);

}  // namespace migflow
