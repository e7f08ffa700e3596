#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migflow/aggregator.hpp"
#include "migflow/core.hpp"
#include "migflow/validation.hpp"
#include "migflow/weighting.hpp"

namespace migflow {

/// Structured loader failure; carries the 1-based line number when the
/// offending row is known.
class IngestError : public std::runtime_error {
  public:
    IngestError(const std::string& path, std::size_t line, const std::string& message);
    IngestError(const std::string& path, const std::string& message);

    std::size_t line() const { return line_; }

  private:
    std::size_t line_ = 0;
};

/// `user_id,date,country`; rows may arrive unsorted unless assume_sorted, in
/// which case per-user ordering is still verified. Duplicate (user, day) rows
/// and countries outside the universe are rejected with line numbers.
std::vector<LocationTrace> load_traces(const std::string& path,
                                       const CountryUniverse& universe,
                                       bool assume_sorted = false);
void save_traces(const std::string& path, const std::vector<LocationTrace>& traces);

/// `user_id,origin,destination,year,month,origin_segment_end,destination_segment_start`
std::vector<MigrationEvent> load_events(const std::string& path,
                                        const CountryUniverse& universe);
void save_events(const std::string& path, const std::vector<MigrationEvent>& events);

/// `origin,destination,year,month,value,stage`; the stage must be uniform.
/// The month range is inferred from the data unless given.
FlowTable load_flow_table(const std::string& path, const CountryUniverse& universe,
                          std::optional<MonthRange> months = std::nullopt);
void save_flow_table(const std::string& path, const FlowTable& table);

/// `origin,destination,year,migrants,source`
ReferenceFlows load_reference(const std::string& path, const CountryUniverse& universe);
void save_reference(const std::string& path, const ReferenceFlows& reference);

/// `country,year,population,fb_users`; penetration above 1 is capped at the
/// population, counted in capped_rows.
StatsMap load_stats(const std::string& path, std::size_t* capped_rows = nullptr);
void save_stats(const std::string& path, const StatsMap& stats);

/// `country,gni_pc`
GniMap load_gni(const std::string& path);
void save_gni(const std::string& path, const GniMap& gni);

/// `country,hdi`
HdiMap load_hdi(const std::string& path);
void save_hdi(const std::string& path, const HdiMap& hdi);

/// `country_a,country_b,sci` (unordered pairs)
std::map<CountryPair, double> load_sci(const std::string& path);

/// `origin,destination,start_year_month,end_year_month`
std::vector<Exclusion> load_exclusions(const std::string& path);

/// Raking inputs: targets `country,dimension,category,target` with dimension
/// in {age_group, sex, region}; seeds `country,age_group,sex,region,fb_users`.
std::map<CountryCode, RakingProblem> load_raking(const std::string& targets_path,
                                                 const std::string& seeds_path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace migflow
