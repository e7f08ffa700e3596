#include "migflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "migflow/rng.hpp"

namespace migflow {

namespace {

struct SynthCountry {
    CountryCode code;
    double population;
    double gni_pc;
    double penetration;
    double income;  // gni / max gni
};

std::vector<SynthCountry> build_countries(const SynthConfig& config) {
    const auto& pool = CountryUniverse::default_universe().codes();
    std::vector<SynthCountry> countries;
    countries.reserve(config.n_countries);
    for (int i = 0; i < config.n_countries; ++i) {
        const double t = config.n_countries > 1
                             ? static_cast<double>(i) / (config.n_countries - 1)
                             : 1.0;
        SynthCountry c;
        c.code = pool[static_cast<std::size_t>(i)];
        c.gni_pc = 1000.0 * std::pow(60.0, t);  // 1k .. 60k, geometric ladder
        c.population = 5e6 * (1.0 + (i * 37) % 11);
        countries.push_back(c);
    }
    double max_gni = 0.0;
    for (const auto& c : countries) max_gni = std::max(max_gni, c.gni_pc);
    for (auto& c : countries) {
        c.income = c.gni_pc / max_gni;
        c.penetration = 0.10 + 0.65 * c.income;  // usage rises with income
    }
    return countries;
}

/// Builds one user's observation sequence. Home is `origin` before move_day
/// and `destination` from move_day on (move_day past the range means no
/// move). Trip stints go to third countries only so they can never merge
/// with a residence run.
LocationTrace make_trace(const std::string& user_id, const SynthConfig& config,
                         const std::vector<SynthCountry>& countries, int origin_idx,
                         int destination_idx, Day move_day, rng::Substream& stream) {
    LocationTrace trace;
    trace.user_id = user_id;
    const double daily_trip_prob = config.trip_prob / 30.0;

    int trip_days_left = 0;
    int trip_country = -1;
    for (Day day = config.start_day; day <= config.end_day; ++day) {
        const int home = day < move_day ? origin_idx : destination_idx;
        int today = home;
        if (trip_days_left > 0) {
            today = trip_country;
            --trip_days_left;
        } else if (countries.size() > 2 && daily_trip_prob > 0.0 &&
                   stream.next_bool(daily_trip_prob)) {
            int pick;
            do {
                pick = static_cast<int>(stream.next_below(countries.size()));
            } while (pick == origin_idx || pick == destination_idx);
            trip_country = pick;
            trip_days_left = std::min(
                stream.next_geometric(1.0 / std::max(1.0, config.trip_mean_days)),
                config.trip_max_days);
            today = trip_country;
            --trip_days_left;
        }
        if (stream.next_bool(config.activity)) {
            trace.observations.push_back({day, countries[today].code});
        }
    }
    return trace;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_countries < 2) throw std::invalid_argument("need at least 2 countries");
    if (n_countries > 181) throw std::invalid_argument("at most 181 countries");
    if (n_users < 0) throw std::invalid_argument("n_users must be >= 0");
    if (end_day <= start_day) throw std::invalid_argument("empty date range");
    if (!(activity > 0.0 && activity <= 1.0)) {
        throw std::invalid_argument("activity must be in (0, 1]");
    }
    if (trip_prob < 0.0 || trip_prob > 1.0) {
        throw std::invalid_argument("trip_prob must be in [0, 1]");
    }
    if (total_monthly_migrants < 0.0) {
        throw std::invalid_argument("total_monthly_migrants must be >= 0");
    }
    if (!(true_r > 0.0)) throw std::invalid_argument("true_r must be > 0");
    if (calibration_destination_index < 0 || calibration_destination_index >= n_countries) {
        throw std::invalid_argument("calibration destination index out of range");
    }
    const Day first_move = day_from_date({migration_year, 1, 1});
    const Day last_move = day_from_date({migration_year, 12, 31});
    if (first_move - start_day < 365 || end_day - last_move < 364) {
        throw std::invalid_argument(
            "date range leaves less than 12 months on a side of the migration year");
    }
}

SynthWorld generate_world(const SynthConfig& config) {
    config.validate();
    const auto countries = build_countries(config);
    const int n = config.n_countries;

    SynthWorld world;
    {
        std::vector<CountryCode> codes;
        for (const auto& c : countries) codes.push_back(c.code);
        world.universe = CountryUniverse(std::move(codes));
    }
    world.flow_months = {{config.migration_year, 1}, {config.migration_year, 12}};
    world.calibration_destination = countries[config.calibration_destination_index].code;

    const int first_year = date_from_day(config.start_day).year;
    const int last_year = date_from_day(config.end_day).year;
    for (const auto& c : countries) {
        world.gni[c.code] = c.gni_pc;
        world.hdi[c.code] = 0.40 + 0.55 * std::sqrt(c.income);
        for (int year = first_year; year <= last_year; ++year) {
            world.stats[{c.code, year}] = {c.population, c.penetration * c.population};
            world.population[{c.code, year}] = c.population;
        }
    }

    // Corridor rates: origin mass times destination attractiveness, with the
    // calibration destination boosted so r recovery has enough signal.
    double pop_total = 0.0;
    for (const auto& c : countries) pop_total += c.population;
    std::vector<std::vector<double>> rate(n, std::vector<double>(n, 0.0));
    double weight_sum = 0.0;
    for (int o = 0; o < n; ++o) {
        for (int d = 0; d < n; ++d) {
            if (o == d) continue;
            double w = (countries[o].population / pop_total) * (0.2 + countries[d].income);
            if (d == config.calibration_destination_index) w *= 4.0;
            rate[o][d] = w;
            weight_sum += w;
        }
    }
    for (int o = 0; o < n; ++o) {
        for (int d = 0; d < n; ++d) {
            rate[o][d] *= config.total_monthly_migrants / weight_sum;
            if (rate[o][d] * 12.0 > 0.1 * countries[o].population) {
                throw std::invalid_argument("infeasible config: corridor rate vs population");
            }
        }
    }

    std::size_t platform_migrants = 0;
    for (int o = 0; o < n; ++o) {
        const double p_platform = countries[o].income * countries[o].penetration +
                                  (1.0 - countries[o].income) * config.true_r;
        if (p_platform > 1.0) {
            throw std::invalid_argument("infeasible config: platform probability > 1");
        }
        for (int d = 0; d < n; ++d) {
            if (o == d) continue;
            for (int month = 1; month <= 12; ++month) {
                std::uint64_t key = rng::mix(config.seed, "corridor");
                key = rng::mix(key, countries[o].code.str());
                key = rng::mix(key, countries[d].code.str());
                key = rng::mix(key, static_cast<std::uint64_t>(month));
                rng::Substream corridor_stream(key);
                const int count = corridor_stream.next_poisson(rate[o][d]);
                world.scheduled_counts[{countries[o].code, countries[d].code}] += count;

                const Day month_start = day_from_date({config.migration_year, month, 1});
                const YearMonth ym{config.migration_year, month};
                const Day next_month_start =
                    day_from_date({ym.next().year, ym.next().month, 1});
                for (int j = 0; j < count; ++j) {
                    std::uint64_t user_key = rng::mix(key, "migrant");
                    user_key = rng::mix(user_key, static_cast<std::uint64_t>(j));
                    rng::Substream user_stream(user_key);
                    const Day move_day =
                        month_start + static_cast<Day>(user_stream.next_below(
                                          static_cast<std::uint64_t>(next_month_start -
                                                                     month_start)));
                    const std::string user_id = "m_" + countries[o].code.str() +
                                                countries[d].code.str() + "_" +
                                                format_year_month(ym) + "_" +
                                                std::to_string(j);
                    world.ground_truth_events.push_back({user_id, countries[o].code,
                                                         countries[d].code, ym,
                                                         move_day - 1, move_day});
                    if (user_stream.next_bool(p_platform)) {
                        world.traces.push_back(make_trace(user_id, config, countries, o, d,
                                                          move_day, user_stream));
                        ++platform_migrants;
                    }
                }
            }
        }
    }

    // Stay-at-home platform users fill the remaining trace budget, allocated
    // by each country's share of platform users.
    const std::size_t n_fill = static_cast<std::size_t>(config.n_users) > platform_migrants
                                   ? config.n_users - platform_migrants
                                   : 0;
    double fb_total = 0.0;
    for (const auto& c : countries) fb_total += c.penetration * c.population;
    std::size_t assigned = 0;
    for (int i = 0; i < n; ++i) {
        const std::size_t quota =
            i == n - 1 ? n_fill - assigned
                       : static_cast<std::size_t>(std::floor(
                             n_fill * countries[i].penetration * countries[i].population /
                             fb_total));
        for (std::size_t j = 0; j < quota; ++j) {
            std::uint64_t user_key = rng::mix(config.seed, "filler");
            user_key = rng::mix(user_key, countries[i].code.str());
            user_key = rng::mix(user_key, static_cast<std::uint64_t>(j));
            rng::Substream user_stream(user_key);
            const std::string user_id =
                "s_" + countries[i].code.str() + "_" + std::to_string(j);
            world.traces.push_back(make_trace(user_id, config, countries, i, i,
                                              config.end_day + 1, user_stream));
        }
        assigned += quota;
    }

    std::sort(world.traces.begin(), world.traces.end(),
              [](const LocationTrace& a, const LocationTrace& b) {
                  return a.user_id < b.user_id;
              });
    std::sort(world.ground_truth_events.begin(), world.ground_truth_events.end());
    return world;
}

FlowTable ground_truth_flows(const SynthWorld& world) {
    FlowTable table(Stage::raw, world.flow_months, world.universe);
    for (const auto& event : world.ground_truth_events) {
        table.add({event.origin, event.destination, event.event_year_month}, 1.0);
    }
    return table;
}

}  // namespace migflow
