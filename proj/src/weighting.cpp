#include "migflow/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace migflow {

IncomeIndex income_index(const GniMap& gni) {
    if (gni.empty()) {
        throw std::invalid_argument("income_index: no countries");
    }
    double max_gni = 0.0;
    for (const auto& [country, value] : gni) {
        if (value <= 0.0) {
            throw std::invalid_argument("income_index: non-positive gni_pc for " +
                                        country.str());
        }
        max_gni = std::max(max_gni, value);
    }
    IncomeIndex out;
    for (const auto& [country, value] : gni) out[country] = value / max_gni;
    return out;
}

std::string weight_scheme_name(WeightScheme s) {
    switch (s) {
        case WeightScheme::raw: return "raw";
        case WeightScheme::penetration: return "penetration";
        case WeightScheme::raking: return "raking";
        case WeightScheme::coefficient: return "coefficient";
        case WeightScheme::selection: return "selection";
    }
    throw std::logic_error("bad weight scheme");
}

WeightScheme parse_weight_scheme(std::string_view s) {
    if (s == "raw") return WeightScheme::raw;
    if (s == "penetration") return WeightScheme::penetration;
    if (s == "raking") return WeightScheme::raking;
    if (s == "coefficient") return WeightScheme::coefficient;
    if (s == "selection") return WeightScheme::selection;
    throw std::invalid_argument("unknown weight scheme: '" + std::string(s) + "'");
}

WeightModel raw_weights() {
    WeightModel model;
    model.scheme = WeightScheme::raw;
    return model;
}

WeightModel penetration_weights(const StatsMap& stats) {
    WeightModel model;
    model.scheme = WeightScheme::penetration;
    for (const auto& [key, stat] : stats) {
        if (stat.fb_users <= 0.0) {
            model.unweightable.push_back(key);
            continue;
        }
        model.multipliers[key] = stat.population / stat.fb_users;
    }
    return model;
}

double selection_weight(double income, double penetration, double r) {
    if (!(income > 0.0 && income <= 1.0)) {
        throw std::invalid_argument("selection_weight: income index must be in (0, 1]");
    }
    if (r <= 0.0) {
        throw std::invalid_argument("selection_weight: r must be > 0");
    }
    return 1.0 / (income * penetration + (1.0 - income) * r);
}

WeightModel selection_weights(const StatsMap& stats, const IncomeIndex& income,
                              const std::map<int, double>& r_by_year) {
    WeightModel model;
    model.scheme = WeightScheme::selection;
    model.r_by_year = r_by_year;
    for (const auto& [key, stat] : stats) {
        const auto& [country, year] = key;
        auto r_it = r_by_year.find(year);
        if (r_it == r_by_year.end()) continue;
        auto inc_it = income.find(country);
        if (inc_it == income.end()) {
            throw std::invalid_argument("selection_weights: no income index for " +
                                        country.str());
        }
        if (stat.fb_users <= 0.0) {
            model.unweightable.push_back(key);
            continue;
        }
        model.multipliers[key] =
            selection_weight(inc_it->second, stat.penetration(), r_it->second);
    }
    return model;
}

WeightModel coefficient_weights(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("coefficient_weights: beta must be positive finite");
    }
    WeightModel model;
    model.scheme = WeightScheme::coefficient;
    model.beta = beta;
    return model;
}

CalibrationResult calibrate_selection_rate(const std::map<CountryCode, double>& raw_by_origin,
                                           const std::map<CountryCode, double>& ref_by_origin,
                                           const std::map<CountryCode, double>& penetration,
                                           const IncomeIndex& income,
                                           const SelectionGrid& grid) {
    std::vector<CountryCode> origins;
    for (const auto& [origin, raw] : raw_by_origin) {
        if (ref_by_origin.count(origin) > 0 && penetration.count(origin) > 0 &&
            income.count(origin) > 0) {
            origins.push_back(origin);
        }
    }
    if (origins.empty()) {
        throw std::invalid_argument(
            "calibrate_selection_rate: no origin has raw, reference, penetration and "
            "income data");
    }

    CalibrationResult result;
    const int n_steps = static_cast<int>(std::llround((grid.max - grid.min) / grid.step));
    double best_error = 0.0;
    bool first = true;
    for (int i = 0; i <= n_steps; ++i) {
        const double r = grid.min + i * grid.step;
        double error = 0.0;
        for (const CountryCode origin : origins) {
            const double denom = income.at(origin) * penetration.at(origin) +
                                 (1.0 - income.at(origin)) * r;
            if (denom <= 0.0) {
                error = std::numeric_limits<double>::infinity();
                break;
            }
            error += std::abs(raw_by_origin.at(origin) / denom - ref_by_origin.at(origin));
        }
        result.error_curve.emplace_back(r, error);
        if (first || error < best_error) {
            first = false;
            best_error = error;
            result.r = r;
        }
    }
    return result;
}

double fit_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("fit_coefficient: series must be non-empty, same size");
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (sxx <= 0.0) {
        throw std::invalid_argument("fit_coefficient: sum of squares of x is zero");
    }
    return sxy / sxx;
}

RakingResult rake(const RakingProblem& problem) {
    // Marginal totals must agree across the three dimensions.
    double reference_total = -1.0;
    for (const auto& targets : problem.targets) {
        double total = 0.0;
        for (const auto& [category, value] : targets) {
            if (value < 0.0) throw std::invalid_argument("rake: negative target marginal");
            total += value;
        }
        if (reference_total < 0.0) {
            reference_total = total;
        } else if (std::abs(total - reference_total) >
                   problem.consistency_tolerance * std::max(1.0, reference_total)) {
            throw std::invalid_argument("rake: inconsistent marginal totals");
        }
    }
    for (const auto& [cell, seed] : problem.seeds) {
        if (seed < 0.0) throw std::invalid_argument("rake: negative seed count");
    }

    // Every nonzero target must be reachable from a nonzero seed.
    for (int dim = 0; dim < 3; ++dim) {
        for (const auto& [category, target] : problem.targets[dim]) {
            if (target <= 0.0) continue;
            bool touched = false;
            for (const auto& [cell, seed] : problem.seeds) {
                if (cell[dim] == category && seed > 0.0) {
                    touched = true;
                    break;
                }
            }
            if (!touched) {
                throw std::invalid_argument("rake: nonzero target '" + category +
                                            "' has no nonzero seed cell");
            }
        }
    }

    RakingResult result;
    result.fitted = problem.seeds;

    auto max_deviation = [&] {
        double worst = 0.0;
        for (int dim = 0; dim < 3; ++dim) {
            std::map<std::string, double> current;
            for (const auto& [cell, value] : result.fitted) current[cell[dim]] += value;
            for (const auto& [category, target] : problem.targets[dim]) {
                const double actual = current.count(category) ? current.at(category) : 0.0;
                worst = std::max(worst,
                                 std::abs(actual - target) / std::max(1.0, target));
            }
        }
        return worst;
    };

    for (result.iterations = 0; result.iterations < problem.max_iterations;
         ++result.iterations) {
        for (int dim = 0; dim < 3; ++dim) {
            std::map<std::string, double> current;
            for (const auto& [cell, value] : result.fitted) current[cell[dim]] += value;
            for (auto& [cell, value] : result.fitted) {
                const double target = problem.targets[dim].count(cell[dim])
                                          ? problem.targets[dim].at(cell[dim])
                                          : 0.0;
                const double actual = current.at(cell[dim]);
                if (actual > 0.0) {
                    value *= target / actual;
                } else {
                    value = 0.0;
                }
            }
        }
        result.max_relative_deviation = max_deviation();
        if (result.max_relative_deviation < problem.tolerance) {
            result.converged = true;
            ++result.iterations;
            break;
        }
    }

    for (const auto& [cell, seed] : problem.seeds) {
        result.weights[cell] = seed > 0.0 ? result.fitted.at(cell) / seed : 0.0;
    }
    return result;
}

double raking_origin_multiplier(const RakingProblem& problem, const RakingResult& result) {
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& [cell, seed] : problem.seeds) {
        weighted += result.weights.at(cell) * seed;
        total += seed;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("raking_origin_multiplier: no platform users in seeds");
    }
    return weighted / total;
}

FlowTable apply_weights(const FlowTable& table, const WeightModel& model) {
    for (const auto& [key, value] : model.multipliers) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw std::invalid_argument("apply_weights: non-positive or non-finite weight");
        }
    }

    std::set<CountryYear> gaps;
    FlowTable out(Stage::weighted, table.months(), table.universe());
    for (const auto& [key, value] : table.entries()) {
        double multiplier = 1.0;
        switch (model.scheme) {
            case WeightScheme::raw:
                break;
            case WeightScheme::coefficient:
                multiplier = model.beta;
                break;
            default: {
                const CountryYear origin_year{key.origin, key.month.year};
                auto it = model.multipliers.find(origin_year);
                if (it == model.multipliers.end()) {
                    gaps.insert(origin_year);
                    continue;
                }
                multiplier = it->second;
            }
        }
        out.set(key, value * multiplier);
    }
    if (!gaps.empty()) {
        std::ostringstream msg;
        msg << "apply_weights: model does not cover:";
        for (const auto& [country, year] : gaps) msg << ' ' << country.str() << '/' << year;
        throw std::invalid_argument(msg.str());
    }
    for (const auto& key : table.missing()) out.mark_missing(key);
    return out;
}

}  // namespace migflow
