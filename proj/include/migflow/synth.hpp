#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "migflow/core.hpp"
#include "migflow/validation.hpp"
#include "migflow/weighting.hpp"

namespace migflow {

/// Synthetic world configuration. Platform membership is income-biased so a
/// known selection rate governs migrant over-representation: a true migrant
/// from origin o joins the platform with probability
/// Income_o * penetration_o + (1 - Income_o) * true_r, which makes the
/// selection weight at r = true_r unbiased in expectation.
struct SynthConfig {
    int n_countries = 12;
    int n_users = 10000;  // platform trace users (migrants + stay-at-home)
    Day start_day = parse_iso_date("2019-01-01");
    Day end_day = parse_iso_date("2021-12-31");
    int migration_year = 2020;  // moves scheduled within this calendar year

    double activity = 1.0;       // daily observation probability
    double trip_prob = 0.0;      // per-day probability of starting an abroad stint
    double trip_mean_days = 10;  // geometric stint mean, capped below epsilon
    int trip_max_days = 45;

    double total_monthly_migrants = 1500.0;  // expected true migrants per month
    double true_r = 0.4;
    int calibration_destination_index = 0;  // attracts extra flow for calibration
    std::uint64_t seed = 1;

    void validate() const;
};

struct SynthWorld {
    CountryUniverse universe;
    MonthRange flow_months;  // months of the migration year
    std::vector<LocationTrace> traces;              // platform users only
    std::vector<MigrationEvent> ground_truth_events;  // platform and non-platform
    std::map<std::pair<CountryCode, CountryCode>, int> scheduled_counts;  // per corridor
    StatsMap stats;
    GniMap gni;
    HdiMap hdi;
    PopulationMap population;
    CountryCode calibration_destination;
};

/// Deterministic given the seed; per-user and per-corridor substreams make the
/// result independent of generation order.
SynthWorld generate_world(const SynthConfig& config);

/// Exact population-level flow table from the embedded ground truth.
FlowTable ground_truth_flows(const SynthWorld& world);

}  // namespace migflow
