#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "migflow/rng.hpp"
#include "migflow/validation.hpp"

using namespace migflow;

namespace {

const CountryCode kUS{"US"};
const CountryCode kMX{"MX"};
const CountryCode kDE{"DE"};
const CountryCode kIN{"IN"};

// Independent correlation oracle: moment form E[xy] - E[x]E[y], deliberately
// different from the library's centered-sum implementation.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("pearson basics") {
    CHECK(*pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0).epsilon(1e-12));
    // Hand value: {(1,2),(2,2),(3,4)} -> r = sqrt(3)/2 = 0.8660...
    CHECK(*pearson({1, 2, 3}, {2, 2, 4}) == doctest::Approx(0.8660254).epsilon(1e-3));
    CHECK_FALSE(pearson({1, 1, 1}, {2, 4, 6}).has_value());  // zero variance
    CHECK_THROWS_AS(pearson({1}, {2}), std::invalid_argument);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("pearson is invariant under affine maps with positive slope") {
    rng::Substream stream(3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x, y, y2;
        for (int i = 0; i < 30; ++i) {
            x.push_back(stream.next_unit() * 10);
            y.push_back(stream.next_unit() * 10);
        }
        for (double v : y) y2.push_back(2.5 * v + 7.0);
        CHECK(*pearson(x, y) == doctest::Approx(*pearson(x, y2)).epsilon(1e-10));
        CHECK(*pearson(x, y) == doctest::Approx(oracle_pearson(x, y)).epsilon(1e-9));
    }
}

TEST_CASE("annualize sums full calendar years and drops partial ones") {
    const auto& universe = CountryUniverse::default_universe();
    // Range 2019-07 .. 2021-06: only 2020 is a full calendar year.
    FlowTable table(Stage::weighted, {{2019, 7}, {2021, 6}}, universe);
    for (int m = 1; m <= 12; ++m) table.add({kMX, kUS, {2020, m}}, static_cast<double>(m));
    table.set({kMX, kUS, {2019, 8}}, 99.0);   // partial year, ignored
    table.set({kMX, kUS, {2021, 2}}, 99.0);   // partial year, ignored
    table.set({kDE, kUS, {2020, 3}}, 5.0);
    table.mark_missing({kIN, kUS, {2020, 6}});
    table.set({kIN, kUS, {2020, 7}}, 10.0);

    const AnnualFlows annual = annualize(table);
    CHECK(annual.values.at({kMX, kUS, 2020}) == 78.0);  // 1 + 2 + ... + 12
    CHECK(annual.values.at({kDE, kUS, 2020}) == 5.0);
    // One excluded month poisons the whole pair-year.
    CHECK(annual.missing.count({kIN, kUS, 2020}) == 1);
    CHECK(annual.values.count({kIN, kUS, 2020}) == 0);
    CHECK(annual.values.count({kMX, kUS, 2019}) == 0);
    CHECK(annual.values.count({kMX, kUS, 2021}) == 0);
}

TEST_CASE("validation battery on a hand-built 4-country fixture") {
    AnnualFlows est;
    est.values[{kMX, kUS, 2020}] = 1000.0;
    est.values[{kIN, kUS, 2020}] = 800.0;
    est.values[{kDE, kUS, 2020}] = 200.0;
    est.values[{kUS, kMX, 2020}] = 150.0;
    est.values[{kMX, kDE, 2020}] = 0.0;   // zero estimate: excluded from logs
    est.values[{kIN, kDE, 2020}] = 75.0;  // estimate-only, not shared

    ReferenceFlows ref;
    ref.provenance = "hand fixture";
    ref.entries[{kMX, kUS, 2020}] = 900.0;
    ref.entries[{kIN, kUS, 2020}] = 1000.0;
    ref.entries[{kDE, kUS, 2020}] = 250.0;
    ref.entries[{kUS, kMX, 2020}] = 100.0;
    ref.entries[{kMX, kDE, 2020}] = 50.0;
    ref.entries[{kDE, kIN, 2020}] = 60.0;  // reference-only, not shared

    const PopulationMap population = {
        {{kUS, 2020}, 100.0}, {{kMX, 2020}, 50.0}, {{kDE, 2020}, 40.0}, {{kIN, 2020}, 200.0}};
    const HdiMap hdi = {{kUS, 0.92}, {kDE, 0.94}, {kMX, 0.78}, {kIN, 0.64}};

    const ValidationReport report = validation_report(
        est, ref, population, hdi, CountryUniverse::default_universe());

    // Shared pair-years, in AnnualKey (origin, destination, year) map order:
    // DE->US, IN->US, MX->DE, MX->US, US->MX.
    const std::vector<double> e = {200, 800, 0, 1000, 150};
    const std::vector<double> r = {250, 1000, 50, 900, 100};
    CHECK(report.levels.n == 5);
    CHECK(*report.levels.r == doctest::Approx(oracle_pearson(e, r)).epsilon(1e-9));

    // Log metric excludes the zero cell: N = 4.
    const std::vector<double> elog = {std::log(200.0), std::log(800.0), std::log(1000.0),
                                      std::log(150.0)};
    const std::vector<double> rlog = {std::log(250.0), std::log(1000.0), std::log(900.0),
                                      std::log(100.0)};
    CHECK(report.log_levels.n == 4);
    CHECK(*report.log_levels.r == doctest::Approx(oracle_pearson(elog, rlog)).epsilon(1e-9));

    // Proportion of destination population.
    const std::vector<double> eprop = {200 / 100.0, 800 / 100.0, 0 / 40.0, 1000 / 100.0,
                                       150 / 50.0};
    const std::vector<double> rprop = {250 / 100.0, 1000 / 100.0, 50 / 40.0, 900 / 100.0,
                                       100 / 50.0};
    CHECK(report.proportion.n == 5);
    CHECK(*report.proportion.r == doctest::Approx(oracle_pearson(eprop, rprop)).epsilon(1e-9));

    // Country totals over shared pairs only (the IN->DE estimate and DE->IN
    // reference rows never enter). Outbound units sorted: DE, IN, MX, US.
    const std::vector<double> eout = {200, 800, 1000, 150};
    const std::vector<double> rout = {250, 1000, 950, 100};
    CHECK(report.total_outbound.n == 4);
    CHECK(*report.total_outbound.r == doctest::Approx(oracle_pearson(eout, rout)).epsilon(1e-9));

    // Inbound units sorted: DE, MX, US.
    const std::vector<double> ein = {0, 150, 2000};
    const std::vector<double> rin = {50, 100, 2150};
    CHECK(report.total_inbound.n == 3);
    CHECK(*report.total_inbound.r == doctest::Approx(oracle_pearson(ein, rin)).epsilon(1e-9));

    // Net = inbound - outbound over the union of units: DE, IN, MX, US.
    const std::vector<double> enet = {0 - 200, 0 - 800, 150 - 1000, 2000 - 150};
    const std::vector<double> rnet = {50 - 250, 0 - 1000, 100 - 950, 2150 - 100};
    CHECK(report.net.n == 4);
    CHECK(*report.net.r == doctest::Approx(oracle_pearson(enet, rnet)).epsilon(1e-9));

    // Absolute errors in thousands, split at the HDI median (0.85 over the
    // four configured countries): high = {US, DE}, low = {MX, IN}.
    CHECK(report.abs_error_thousands == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(report.abs_error_high_hdi_thousands == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(report.abs_error_low_hdi_thousands == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(report.excluded_missing_population == 0);
    CHECK(report.excluded_missing_hdi == 0);

    const std::string text = render_validation_report(report);
    CHECK(text.find("Migrants:") != std::string::npos);
    CHECK(text.find("Net Migration:") != std::string::npos);
    CHECK(text.find("N=5") != std::string::npos);
}

TEST_CASE("validation report counts rows without population or hdi") {
    AnnualFlows est;
    est.values[{kMX, kUS, 2020}] = 10.0;
    est.values[{kDE, kUS, 2020}] = 20.0;
    ReferenceFlows ref;
    ref.entries[{kMX, kUS, 2020}] = 12.0;
    ref.entries[{kDE, kUS, 2020}] = 18.0;

    const PopulationMap population;  // empty: proportion metric starves
    const HdiMap hdi = {{kDE, 0.9}};
    const ValidationReport report = validation_report(
        est, ref, population, hdi, CountryUniverse::default_universe());
    CHECK(report.excluded_missing_population == 2);
    CHECK(report.proportion.n == 0);
    CHECK(report.excluded_missing_hdi == 1);  // MX has no HDI entry
}

TEST_CASE("migration intensity: worked example and exclusion boundary") {
    AnnualFlows flows;
    flows.values[{kMX, kUS, 2020}] = 30.0;
    flows.values[{kUS, kMX, 2020}] = 20.0;  // pair total 50
    flows.values[{kDE, kUS, 2020}] = 19.0;  // below the 20-migrant floor
    const PopulationMap population = {
        {{kUS, 2020}, 1000.0}, {{kMX, 2020}, 5000.0}, {{kDE, 2020}, 100.0}};

    const auto intensity = migration_intensity(flows, 2020, population);
    REQUIRE(intensity.size() == 1);
    // 50 / (1000 * 5000) = 1e-5, independent of flow direction.
    CHECK(intensity.at({kMX, kUS}) == doctest::Approx(1e-5).epsilon(1e-12));

    // Moving one migrant across the directions changes nothing.
    AnnualFlows shifted;
    shifted.values[{kMX, kUS, 2020}] = 49.0;
    shifted.values[{kUS, kMX, 2020}] = 1.0;
    CHECK(migration_intensity(shifted, 2020, population).at({kMX, kUS}) ==
          doctest::Approx(1e-5).epsilon(1e-12));

    // Exactly 20 combined migrants survives the floor.
    AnnualFlows boundary;
    boundary.values[{kDE, kUS, 2020}] = 20.0;
    CHECK(migration_intensity(boundary, 2020, population).size() == 1);
}

TEST_CASE("sci correlation is 1 for a log-linear relation and near 0 for noise") {
    const auto& codes = CountryUniverse::default_universe().codes();
    std::map<CountryPair, double> intensity, sci;
    rng::Substream stream(41);
    for (std::size_t i = 0; i + 1 < 60; i += 2) {
        CountryPair pair{codes[i], codes[i + 1]};
        const double v = std::pow(10.0, -8.0 + 4.0 * stream.next_unit());
        intensity[pair] = v;
        sci[pair] = 3.0 * std::pow(v, 1.7);  // exactly linear in log10 space
    }
    CHECK(*sci_correlation(intensity, sci) == doctest::Approx(1.0).epsilon(1e-9));

    std::map<CountryPair, double> noise_sci;
    for (const auto& [pair, value] : intensity) {
        noise_sci[pair] = std::pow(10.0, 4.0 * stream.next_unit());
    }
    CHECK(std::abs(*sci_correlation(intensity, noise_sci)) < 0.5);

    // Subset restriction drops pairs with either member outside the subset.
    std::set<CountryCode> subset;
    for (std::size_t i = 0; i < 10; ++i) subset.insert(codes[i]);
    const auto restricted = sci_correlation(intensity, sci, &subset);
    CHECK(*restricted == doctest::Approx(1.0).epsilon(1e-9));

    std::set<CountryCode> tiny = {codes[0]};
    CHECK_THROWS_AS(sci_correlation(intensity, sci, &tiny), std::invalid_argument);
}

TEST_CASE("sci correlation on independent random pairs stays small") {
    const auto& codes = CountryUniverse::default_universe().codes();
    rng::Substream stream(123);
    std::map<CountryPair, double> intensity, sci;
    for (std::size_t i = 0; i + 1 < codes.size(); i += 2) {
        CountryPair pair{codes[i], codes[i + 1]};
        intensity[pair] = std::pow(10.0, -8.0 + 4.0 * stream.next_unit());
        sci[pair] = std::pow(10.0, 4.0 * stream.next_unit());
    }
    REQUIRE(intensity.size() == 90);
    CHECK(std::abs(*sci_correlation(intensity, sci)) < 0.25);
}
