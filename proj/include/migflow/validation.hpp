#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "migflow/core.hpp"
#include "migflow/weighting.hpp"

namespace migflow {

/// Product-moment correlation; nullopt when either series has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct AnnualKey {
    CountryCode origin;
    CountryCode destination;
    int year = 0;

    auto operator<=>(const AnnualKey&) const = default;
};

struct ReferenceFlows {
    std::map<AnnualKey, double> entries;
    std::string provenance;
};

struct AnnualFlows {
    std::map<AnnualKey, double> values;
    std::set<AnnualKey> missing;  // pair-years with at least one excluded month
};

/// Sums the 12 monthly cells per pair-year; only calendar years fully inside
/// the table's month range are produced. A missing month makes the pair-year
/// missing.
AnnualFlows annualize(const FlowTable& table);

struct MetricResult {
    std::size_t n = 0;
    std::optional<double> r;
};

struct ValidationReport {
    MetricResult levels;
    MetricResult log_levels;
    MetricResult proportion;      // normalized by destination population
    MetricResult total_outbound;  // per-country totals over shared pairs
    MetricResult total_inbound;
    MetricResult net;             // inbound - outbound
    double abs_error_thousands = 0.0;
    double abs_error_high_hdi_thousands = 0.0;
    double abs_error_low_hdi_thousands = 0.0;
    std::size_t excluded_missing_population = 0;
    std::size_t excluded_missing_hdi = 0;
};

using PopulationMap = std::map<CountryYear, double>;
using HdiMap = std::map<CountryCode, double>;

/// Table S5-style metric battery over the pair-years shared between the
/// estimate and the reference. The HDI split is relative to the median over
/// the configured universe.
ValidationReport validation_report(const AnnualFlows& est, const ReferenceFlows& ref,
                                   const PopulationMap& population, const HdiMap& hdi,
                                   const CountryUniverse& universe);

std::string render_validation_report(const ValidationReport& report);

using CountryPair = std::pair<CountryCode, CountryCode>;  // unordered, first < second

/// Symmetric bilateral intensity (M_ab + M_ba) / (Pop_a * Pop_b) for one
/// year; pairs with fewer than min_migrants combined migrants are excluded.
std::map<CountryPair, double> migration_intensity(const AnnualFlows& flows, int year,
                                                  const PopulationMap& population,
                                                  double min_migrants = 20.0);

/// Pearson correlation of log10 intensity against log10 SCI over shared
/// pairs; optional restriction to a country subset. Non-positive values are
/// excluded.
std::optional<double> sci_correlation(const std::map<CountryPair, double>& intensity,
                                      const std::map<CountryPair, double>& sci,
                                      const std::set<CountryCode>* subset = nullptr);

}  // namespace migflow
