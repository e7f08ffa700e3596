#include "migflow/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace migflow {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: series lengths differ");
    }
    if (x.size() < 2) {
        throw std::invalid_argument("pearson: need at least 2 observations");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

AnnualFlows annualize(const FlowTable& table) {
    AnnualFlows out;
    const MonthRange& range = table.months();
    const int first_full_year =
        range.first.month == 1 ? range.first.year : range.first.year + 1;
    const int last_full_year = range.last.month == 12 ? range.last.year : range.last.year - 1;

    for (const auto& [key, value] : table.entries()) {
        if (key.month.year < first_full_year || key.month.year > last_full_year) continue;
        out.values[{key.origin, key.destination, key.month.year}] += value;
    }
    for (const auto& key : table.missing()) {
        if (key.month.year < first_full_year || key.month.year > last_full_year) continue;
        const AnnualKey annual{key.origin, key.destination, key.month.year};
        out.missing.insert(annual);
        out.values.erase(annual);
    }
    return out;
}

namespace {

MetricResult correlate(const std::vector<double>& x, const std::vector<double>& y) {
    MetricResult result;
    result.n = x.size();
    if (x.size() >= 2) result.r = pearson(x, y);
    return result;
}

std::string format_metric(const MetricResult& m) {
    std::ostringstream out;
    out << "N=" << m.n << " r=";
    if (m.r.has_value()) {
        out << *m.r;
    } else {
        out << "NA";
    }
    return out.str();
}

}  // namespace

ValidationReport validation_report(const AnnualFlows& est, const ReferenceFlows& ref,
                                   const PopulationMap& population, const HdiMap& hdi,
                                   const CountryUniverse& universe) {
    // Shared pair-years: present in the estimate (not missing) and the reference.
    std::vector<AnnualKey> shared;
    for (const auto& [key, value] : est.values) {
        if (ref.entries.count(key) > 0) shared.push_back(key);
    }
    if (shared.empty()) {
        throw std::invalid_argument("validation_report: no shared pair-years");
    }

    ValidationReport report;

    std::vector<double> ex;
    std::vector<double> rx;
    for (const auto& key : shared) {
        ex.push_back(est.values.at(key));
        rx.push_back(ref.entries.at(key));
    }
    report.levels = correlate(ex, rx);

    std::vector<double> elog;
    std::vector<double> rlog;
    for (const auto& key : shared) {
        const double e = est.values.at(key);
        const double r = ref.entries.at(key);
        if (e > 0.0 && r > 0.0) {
            elog.push_back(std::log(e));
            rlog.push_back(std::log(r));
        }
    }
    report.log_levels = correlate(elog, rlog);

    std::vector<double> eprop;
    std::vector<double> rprop;
    for (const auto& key : shared) {
        auto pop = population.find({key.destination, key.year});
        if (pop == population.end() || pop->second <= 0.0) {
            ++report.excluded_missing_population;
            continue;
        }
        eprop.push_back(est.values.at(key) / pop->second);
        rprop.push_back(ref.entries.at(key) / pop->second);
    }
    report.proportion = correlate(eprop, rprop);

    // Country-level totals restricted to the shared pair set.
    std::map<CountryYear, double> out_est, out_ref, in_est, in_ref;
    for (const auto& key : shared) {
        out_est[{key.origin, key.year}] += est.values.at(key);
        out_ref[{key.origin, key.year}] += ref.entries.at(key);
        in_est[{key.destination, key.year}] += est.values.at(key);
        in_ref[{key.destination, key.year}] += ref.entries.at(key);
    }
    {
        std::vector<double> a, b;
        for (const auto& [unit, value] : out_est) {
            a.push_back(value);
            b.push_back(out_ref.at(unit));
        }
        report.total_outbound = correlate(a, b);
    }
    {
        std::vector<double> a, b;
        for (const auto& [unit, value] : in_est) {
            a.push_back(value);
            b.push_back(in_ref.at(unit));
        }
        report.total_inbound = correlate(a, b);
    }
    {
        std::set<CountryYear> units;
        for (const auto& [unit, value] : out_est) units.insert(unit);
        for (const auto& [unit, value] : in_est) units.insert(unit);
        std::vector<double> a, b;
        for (const auto& unit : units) {
            auto get = [&](const std::map<CountryYear, double>& m) {
                auto it = m.find(unit);
                return it == m.end() ? 0.0 : it->second;
            };
            a.push_back(get(in_est) - get(out_est));
            b.push_back(get(in_ref) - get(out_ref));
        }
        report.net = correlate(a, b);
    }

    // HDI split relative to the global median over the configured universe.
    std::vector<double> hdi_values;
    for (const CountryCode country : universe.codes()) {
        auto it = hdi.find(country);
        if (it != hdi.end()) hdi_values.push_back(it->second);
    }
    std::optional<double> hdi_median;
    if (!hdi_values.empty()) {
        std::sort(hdi_values.begin(), hdi_values.end());
        const std::size_t n = hdi_values.size();
        hdi_median = n % 2 == 1 ? hdi_values[n / 2]
                                : 0.5 * (hdi_values[n / 2 - 1] + hdi_values[n / 2]);
    }
    for (const auto& key : shared) {
        const double err = std::abs(est.values.at(key) - ref.entries.at(key)) / 1000.0;
        report.abs_error_thousands += err;
        auto it = hdi.find(key.origin);
        if (!hdi_median.has_value() || it == hdi.end()) {
            ++report.excluded_missing_hdi;
            continue;
        }
        if (it->second >= *hdi_median) {
            report.abs_error_high_hdi_thousands += err;
        } else {
            report.abs_error_low_hdi_thousands += err;
        }
    }
    return report;
}

std::string render_validation_report(const ValidationReport& report) {
    std::ostringstream out;
    out << "Migrants:                " << format_metric(report.levels) << '\n'
        << "Log(Migrants):           " << format_metric(report.log_levels) << '\n'
        << "Proportion of Migrants:  " << format_metric(report.proportion) << '\n'
        << "Total Outbound:          " << format_metric(report.total_outbound) << '\n'
        << "Total Inbound:           " << format_metric(report.total_inbound) << '\n'
        << "Net Migration:           " << format_metric(report.net) << '\n'
        << "Sum Abs Error (000s):    " << report.abs_error_thousands << '\n'
        << "  High HDI origins:      " << report.abs_error_high_hdi_thousands << '\n'
        << "  Low HDI origins:       " << report.abs_error_low_hdi_thousands << '\n';
    if (report.excluded_missing_population > 0) {
        out << "Excluded (no population): " << report.excluded_missing_population << '\n';
    }
    if (report.excluded_missing_hdi > 0) {
        out << "Excluded (no HDI):        " << report.excluded_missing_hdi << '\n';
    }
    return out.str();
}

std::map<CountryPair, double> migration_intensity(const AnnualFlows& flows, int year,
                                                  const PopulationMap& population,
                                                  double min_migrants) {
    std::map<CountryPair, double> sums;
    for (const auto& [key, value] : flows.values) {
        if (key.year != year) continue;
        CountryPair pair{key.origin, key.destination};
        if (pair.second < pair.first) std::swap(pair.first, pair.second);
        sums[pair] += value;
    }

    std::map<CountryPair, double> out;
    for (const auto& [pair, migrants] : sums) {
        if (migrants < min_migrants) continue;
        auto pa = population.find({pair.first, year});
        auto pb = population.find({pair.second, year});
        if (pa == population.end() || pb == population.end()) continue;
        if (pa->second <= 0.0 || pb->second <= 0.0) {
            throw std::invalid_argument("migration_intensity: non-positive population");
        }
        out[pair] = migrants / (pa->second * pb->second);
    }
    return out;
}

std::optional<double> sci_correlation(const std::map<CountryPair, double>& intensity,
                                      const std::map<CountryPair, double>& sci,
                                      const std::set<CountryCode>* subset) {
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [pair, value] : intensity) {
        auto it = sci.find(pair);
        if (it == sci.end()) continue;
        if (value <= 0.0 || it->second <= 0.0) continue;
        if (subset != nullptr &&
            (subset->count(pair.first) == 0 || subset->count(pair.second) == 0)) {
            continue;
        }
        a.push_back(std::log10(value));
        b.push_back(std::log10(it->second));
    }
    if (a.size() < 2) {
        throw std::invalid_argument("sci_correlation: fewer than 2 overlapping pairs");
    }
    return pearson(a, b);
}

}  // namespace migflow
