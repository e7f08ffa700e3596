#include "migflow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace migflow {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            break;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return fields;
}

/// Line-by-line CSV driver with header verification. The row callback gets
/// (line number, fields); it must not retain the views past the call.
template <typename RowFn>
void read_csv(const std::string& path, const std::vector<std::string>& header, RowFn&& row) {
    std::ifstream in(path);
    if (!in) throw IngestError(path, "cannot open file");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) return;  // empty file: no rows
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw IngestError(path, line_no, "header column count mismatch");
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (fields[i] != header[i]) {
                throw IngestError(path, line_no,
                                  "expected header column '" + header[i] + "', got '" +
                                      std::string(fields[i]) + "'");
            }
        }
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw IngestError(path, line_no, "wrong number of columns");
        }
        try {
            row(line_no, fields);
        } catch (const IngestError&) {
            throw;
        } catch (const std::exception& e) {
            throw IngestError(path, line_no, e.what());
        }
    }
}

double parse_double(std::string_view s) {
    // std::from_chars<double> is available but strtod keeps us off the
    // libstdc++ floating-point from_chars edge cases; input is validated.
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw std::invalid_argument("not a number: '" + buf + "'");
    }
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite number: '" + buf + "'");
    return v;
}

int parse_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestError(path, "cannot open file for writing");
    return out;
}

}  // namespace

IngestError::IngestError(const std::string& path, std::size_t line,
                         const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + message), line_(line) {}

IngestError::IngestError(const std::string& path, const std::string& message)
    : std::runtime_error(path + ": " + message) {}

std::string format_double(double value) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

std::vector<LocationTrace> load_traces(const std::string& path,
                                       const CountryUniverse& universe,
                                       bool assume_sorted) {
    struct Row {
        Day day;
        CountryCode country;
        std::uint32_t line;
    };
    std::vector<LocationTrace> traces;
    std::vector<std::vector<Row>> rows;  // parallel to traces, freed after checks
    std::unordered_map<std::string, std::size_t> index;

    read_csv(path, {"user_id", "date", "country"}, [&](std::size_t line_no, const auto& f) {
        const CountryCode country{f[2]};
        if (!universe.contains(country)) {
            throw std::invalid_argument("country '" + country.str() +
                                        "' outside the configured universe");
        }
        const Day day = parse_iso_date(f[1]);
        const std::string user(f[0]);
        if (user.empty()) throw std::invalid_argument("empty user_id");
        auto [it, inserted] = index.try_emplace(user, traces.size());
        if (inserted) {
            traces.push_back({user, {}});
            rows.emplace_back();
        }
        rows[it->second].push_back({day, country, static_cast<std::uint32_t>(line_no)});
    });

    for (std::size_t i = 0; i < traces.size(); ++i) {
        auto& r = rows[i];
        if (assume_sorted) {
            for (std::size_t j = 1; j < r.size(); ++j) {
                if (r[j].day < r[j - 1].day) {
                    throw IngestError(path, r[j].line,
                                      "rows for user '" + traces[i].user_id +
                                          "' are not sorted despite --assume-sorted");
                }
            }
        } else {
            std::stable_sort(r.begin(), r.end(),
                             [](const Row& a, const Row& b) { return a.day < b.day; });
        }
        for (std::size_t j = 1; j < r.size(); ++j) {
            if (r[j].day == r[j - 1].day) {
                throw IngestError(path, r[j].line,
                                  "duplicate day " + format_iso_date(r[j].day) +
                                      " for user '" + traces[i].user_id + "'");
            }
        }
        traces[i].observations.reserve(r.size());
        for (const Row& row : r) traces[i].observations.push_back({row.day, row.country});
        r.clear();
        r.shrink_to_fit();
    }
    return traces;
}

void save_traces(const std::string& path, const std::vector<LocationTrace>& traces) {
    auto out = open_out(path);
    out << "user_id,date,country\n";
    for (const auto& trace : traces) {
        for (const auto& obs : trace.observations) {
            out << trace.user_id << ',' << format_iso_date(obs.day) << ','
                << obs.country.str() << '\n';
        }
    }
}

std::vector<MigrationEvent> load_events(const std::string& path,
                                        const CountryUniverse& universe) {
    std::vector<MigrationEvent> events;
    read_csv(path,
             {"user_id", "origin", "destination", "year", "month", "origin_segment_end",
              "destination_segment_start"},
             [&](std::size_t, const auto& f) {
                 MigrationEvent event;
                 event.user_id = std::string(f[0]);
                 event.origin = CountryCode{f[1]};
                 event.destination = CountryCode{f[2]};
                 event.event_year_month = {parse_int(f[3]), parse_int(f[4])};
                 event.origin_segment_end = parse_iso_date(f[5]);
                 event.destination_segment_start = parse_iso_date(f[6]);
                 if (!universe.contains(event.origin) ||
                     !universe.contains(event.destination)) {
                     throw std::invalid_argument("country outside the configured universe");
                 }
                 if (event.origin == event.destination) {
                     throw std::invalid_argument("event with origin == destination");
                 }
                 events.push_back(std::move(event));
             });
    return events;
}

void save_events(const std::string& path, const std::vector<MigrationEvent>& events) {
    auto out = open_out(path);
    out << "user_id,origin,destination,year,month,origin_segment_end,"
           "destination_segment_start\n";
    for (const auto& e : events) {
        out << e.user_id << ',' << e.origin.str() << ',' << e.destination.str() << ','
            << e.event_year_month.year << ',' << e.event_year_month.month << ','
            << format_iso_date(e.origin_segment_end) << ','
            << format_iso_date(e.destination_segment_start) << '\n';
    }
}

FlowTable load_flow_table(const std::string& path, const CountryUniverse& universe,
                          std::optional<MonthRange> months) {
    struct Row {
        FlowKey key;
        double value;
        Stage stage;
    };
    std::vector<Row> parsed;
    read_csv(path, {"origin", "destination", "year", "month", "value", "stage"},
             [&](std::size_t, const auto& f) {
                 Row row;
                 row.key = {CountryCode{f[0]}, CountryCode{f[1]},
                            {parse_int(f[2]), parse_int(f[3])}};
                 row.value = parse_double(f[4]);
                 row.stage = parse_stage(f[5]);
                 if (row.key.month.month < 1 || row.key.month.month > 12) {
                     throw std::invalid_argument("month out of range");
                 }
                 if (row.value < 0.0) throw std::invalid_argument("negative value");
                 parsed.push_back(row);
             });
    if (parsed.empty() && !months.has_value()) {
        throw IngestError(path, "empty flow table and no month range given");
    }

    Stage stage = parsed.empty() ? Stage::raw : parsed.front().stage;
    MonthRange range;
    if (months.has_value()) {
        range = *months;
    } else {
        range = {parsed.front().key.month, parsed.front().key.month};
        for (const Row& row : parsed) {
            range.first = std::min(range.first, row.key.month);
            range.last = std::max(range.last, row.key.month);
        }
    }

    FlowTable table(stage, range, universe);
    for (const Row& row : parsed) {
        if (row.stage != stage) {
            throw IngestError(path, "mixed stage tags in one flow table");
        }
        if (stage == Stage::raw && row.value != std::floor(row.value)) {
            throw IngestError(path, "non-integer value at raw stage");
        }
        table.add(row.key, row.value);
    }
    return table;
}

void save_flow_table(const std::string& path, const FlowTable& table) {
    auto out = open_out(path);
    out << "origin,destination,year,month,value,stage\n";
    const std::string stage = stage_name(table.stage());
    for (const auto& [key, value] : table.entries()) {
        out << key.origin.str() << ',' << key.destination.str() << ',' << key.month.year
            << ',' << key.month.month << ',' << format_double(value) << ',' << stage
            << '\n';
    }
}

ReferenceFlows load_reference(const std::string& path, const CountryUniverse& universe) {
    ReferenceFlows reference;
    read_csv(path, {"origin", "destination", "year", "migrants", "source"},
             [&](std::size_t, const auto& f) {
                 const AnnualKey key{CountryCode{f[0]}, CountryCode{f[1]}, parse_int(f[2])};
                 if (!universe.contains(key.origin) || !universe.contains(key.destination)) {
                     throw std::invalid_argument("country outside the configured universe");
                 }
                 const double migrants = parse_double(f[3]);
                 if (migrants < 0.0) throw std::invalid_argument("negative migrant count");
                 reference.entries[key] = migrants;
                 reference.provenance = std::string(f[4]);
             });
    return reference;
}

void save_reference(const std::string& path, const ReferenceFlows& reference) {
    auto out = open_out(path);
    out << "origin,destination,year,migrants,source\n";
    const std::string source =
        reference.provenance.empty() ? "synthetic" : reference.provenance;
    for (const auto& [key, migrants] : reference.entries) {
        out << key.origin.str() << ',' << key.destination.str() << ',' << key.year << ','
            << format_double(migrants) << ',' << source << '\n';
    }
}

StatsMap load_stats(const std::string& path, std::size_t* capped_rows) {
    StatsMap stats;
    std::size_t capped = 0;
    read_csv(path, {"country", "year", "population", "fb_users"},
             [&](std::size_t, const auto& f) {
                 const CountryCode country{f[0]};
                 const int year = parse_int(f[1]);
                 CountryYearStats s{parse_double(f[2]), parse_double(f[3])};
                 if (s.population <= 0.0) {
                     throw std::invalid_argument("population must be > 0");
                 }
                 if (s.fb_users < 0.0) throw std::invalid_argument("negative fb_users");
                 if (s.fb_users > s.population) {
                     s.fb_users = s.population;  // cap penetration at 1
                     ++capped;
                 }
                 stats[{country, year}] = s;
             });
    if (capped_rows != nullptr) *capped_rows = capped;
    return stats;
}

void save_stats(const std::string& path, const StatsMap& stats) {
    auto out = open_out(path);
    out << "country,year,population,fb_users\n";
    for (const auto& [key, s] : stats) {
        out << key.first.str() << ',' << key.second << ',' << format_double(s.population)
            << ',' << format_double(s.fb_users) << '\n';
    }
}

GniMap load_gni(const std::string& path) {
    GniMap gni;
    read_csv(path, {"country", "gni_pc"}, [&](std::size_t, const auto& f) {
        const double value = parse_double(f[1]);
        if (value <= 0.0) throw std::invalid_argument("gni_pc must be > 0");
        gni[CountryCode{f[0]}] = value;
    });
    return gni;
}

void save_gni(const std::string& path, const GniMap& gni) {
    auto out = open_out(path);
    out << "country,gni_pc\n";
    for (const auto& [country, value] : gni) {
        out << country.str() << ',' << format_double(value) << '\n';
    }
}

HdiMap load_hdi(const std::string& path) {
    HdiMap hdi;
    read_csv(path, {"country", "hdi"}, [&](std::size_t, const auto& f) {
        const double value = parse_double(f[1]);
        if (value < 0.0 || value > 1.0) throw std::invalid_argument("hdi must be in [0, 1]");
        hdi[CountryCode{f[0]}] = value;
    });
    return hdi;
}

void save_hdi(const std::string& path, const HdiMap& hdi) {
    auto out = open_out(path);
    out << "country,hdi\n";
    for (const auto& [country, value] : hdi) {
        out << country.str() << ',' << format_double(value) << '\n';
    }
}

std::map<CountryPair, double> load_sci(const std::string& path) {
    std::map<CountryPair, double> sci;
    read_csv(path, {"country_a", "country_b", "sci"}, [&](std::size_t, const auto& f) {
        CountryPair pair{CountryCode{f[0]}, CountryCode{f[1]}};
        if (pair.first == pair.second) {
            throw std::invalid_argument("sci pair with identical countries");
        }
        if (pair.second < pair.first) std::swap(pair.first, pair.second);
        sci[pair] = parse_double(f[2]);
    });
    return sci;
}

std::vector<Exclusion> load_exclusions(const std::string& path) {
    std::vector<Exclusion> exclusions;
    read_csv(path, {"origin", "destination", "start_year_month", "end_year_month"},
             [&](std::size_t, const auto& f) {
                 Exclusion e{CountryCode{f[0]}, CountryCode{f[1]}, parse_year_month(f[2]),
                             parse_year_month(f[3])};
                 if (e.first > e.last) {
                     throw std::invalid_argument("inverted exclusion interval");
                 }
                 exclusions.push_back(e);
             });
    return exclusions;
}

std::map<CountryCode, RakingProblem> load_raking(const std::string& targets_path,
                                                 const std::string& seeds_path) {
    std::map<CountryCode, RakingProblem> problems;
    read_csv(targets_path, {"country", "dimension", "category", "target"},
             [&](std::size_t, const auto& f) {
                 const CountryCode country{f[0]};
                 int dim;
                 if (f[1] == "age_group") {
                     dim = 0;
                 } else if (f[1] == "sex") {
                     dim = 1;
                 } else if (f[1] == "region") {
                     dim = 2;
                 } else {
                     throw std::invalid_argument("unknown dimension '" + std::string(f[1]) +
                                                 "'");
                 }
                 const double target = parse_double(f[3]);
                 if (target < 0.0) throw std::invalid_argument("negative target");
                 problems[country].targets[dim][std::string(f[2])] = target;
             });
    read_csv(seeds_path, {"country", "age_group", "sex", "region", "fb_users"},
             [&](std::size_t, const auto& f) {
                 const CountryCode country{f[0]};
                 const double seed = parse_double(f[4]);
                 if (seed < 0.0) throw std::invalid_argument("negative seed count");
                 problems[country]
                     .seeds[{std::string(f[1]), std::string(f[2]), std::string(f[3])}] =
                     seed;
             });
    return problems;
}

}  // namespace migflow
