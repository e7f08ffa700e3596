#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "migflow/core.hpp"

namespace migflow {

struct CountryYearStats {
    double population = 0.0;
    double fb_users = 0.0;

    double penetration() const { return fb_users / population; }
};

using CountryYear = std::pair<CountryCode, int>;
using StatsMap = std::map<CountryYear, CountryYearStats>;
using GniMap = std::map<CountryCode, double>;
using IncomeIndex = std::map<CountryCode, double>;

/// Per-capita income scaled so the highest-income country gets exactly 1.
IncomeIndex income_index(const GniMap& gni);

enum class WeightScheme { raw, penetration, raking, coefficient, selection };

std::string weight_scheme_name(WeightScheme s);
WeightScheme parse_weight_scheme(std::string_view s);

struct WeightModel {
    WeightScheme scheme = WeightScheme::raw;
    std::map<CountryYear, double> multipliers;  // per origin-year, > 0 and finite
    std::map<int, double> r_by_year;            // selection scheme
    double beta = 0.0;                          // coefficient scheme
    std::vector<CountryYear> unweightable;      // origins with no platform users
};

WeightModel raw_weights();
WeightModel penetration_weights(const StatsMap& stats);
WeightModel selection_weights(const StatsMap& stats, const IncomeIndex& income,
                              const std::map<int, double>& r_by_year);
WeightModel coefficient_weights(double beta);

/// Single per-origin-year selection weight (the denominator interpolates
/// between the origin's penetration rate and the fitted constant r).
double selection_weight(double income, double penetration, double r);

struct SelectionGrid {
    double min = 0.0;
    double max = 3.0;
    double step = 0.01;
};

struct CalibrationResult {
    double r = 0.0;
    std::vector<std::pair<double, double>> error_curve;  // (r, sum abs error)
};

/// Grid search for the r that minimizes the sum of absolute errors between
/// selection-weighted raw flows and the reference, over origins present in
/// all inputs. Ties break toward the smallest r.
CalibrationResult calibrate_selection_rate(const std::map<CountryCode, double>& raw_by_origin,
                                           const std::map<CountryCode, double>& ref_by_origin,
                                           const std::map<CountryCode, double>& penetration,
                                           const IncomeIndex& income,
                                           const SelectionGrid& grid = {});

/// Through-origin least squares slope Sum(xy) / Sum(x^2).
double fit_coefficient(const std::vector<double>& x, const std::vector<double>& y);

using RakingCell = std::array<std::string, 3>;  // (age_group, sex, region)

struct RakingProblem {
    std::map<RakingCell, double> seeds;              // platform users per cell
    std::array<std::map<std::string, double>, 3> targets;  // per-dimension totals
    double tolerance = 1e-8;
    double consistency_tolerance = 1e-6;
    int max_iterations = 1000;
};

struct RakingResult {
    std::map<RakingCell, double> fitted;
    std::map<RakingCell, double> weights;  // fitted / seed; 0 for zero-seed cells
    bool converged = false;
    int iterations = 0;
    double max_relative_deviation = 0.0;
};

/// Iterative proportional fitting over (age x sex x region).
RakingResult rake(const RakingProblem& problem);

/// Aggregates per-cell raking weights to one origin multiplier:
/// Sum(weight * seed) / Sum(seed).
double raking_origin_multiplier(const RakingProblem& problem, const RakingResult& result);

/// Multiplies each cell by its origin-year weight; stage becomes weighted.
/// Throws listing every origin-year the model does not cover.
FlowTable apply_weights(const FlowTable& table, const WeightModel& model);

}  // namespace migflow
