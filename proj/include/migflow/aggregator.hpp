#pragma once

#include <cstddef>
#include <vector>

#include "migflow/core.hpp"

namespace migflow {

/// Exact integer counts per (origin, destination, month); absent cells are
/// implicit zeros. Throws identifying the first event outside the month range
/// or country universe.
FlowTable build_flow_table(const std::vector<MigrationEvent>& events, MonthRange months,
                           CountryUniverse universe);

struct Exclusion {
    CountryCode origin;
    CountryCode destination;
    YearMonth first;
    YearMonth last;
};

struct ExclusionReport {
    std::size_t cells_excluded = 0;      // cells marked missing
    std::size_t cells_without_value = 0; // excluded cells that held no entry
    std::size_t cells_out_of_range = 0;  // listed months outside the table range
};

/// Listed cells become missing (distinct from zero); other cells unchanged.
FlowTable apply_exclusions(FlowTable table, const std::vector<Exclusion>& exclusions,
                           ExclusionReport* report = nullptr);

struct ImputeReport {
    std::size_t cells_imputed = 0;
    std::vector<FlowKey> cells_left_missing;
};

/// Replaces each cell in an affected month by the mean of the same cell in
/// the two adjacent months. A missing adjacent cell leaves the cell missing.
FlowTable impute_months(FlowTable table, const std::vector<YearMonth>& affected_months,
                        ImputeReport* report = nullptr);

/// Cell-wise sum of shard tables with identical metadata. A key missing in
/// one shard but valued in another takes the value; the conflict is counted.
FlowTable merge_partials(const std::vector<FlowTable>& tables,
                         std::size_t* missing_value_conflicts = nullptr);

}  // namespace migflow
