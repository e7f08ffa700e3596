#include "migflow/aggregator.hpp"

#include <set>
#include <stdexcept>

namespace migflow {

FlowTable build_flow_table(const std::vector<MigrationEvent>& events, MonthRange months,
                           CountryUniverse universe) {
    FlowTable table(Stage::raw, months, std::move(universe));
    for (const auto& event : events) {
        const FlowKey key{event.origin, event.destination, event.event_year_month};
        if (!months.contains(event.event_year_month) ||
            !table.universe().contains(event.origin) ||
            !table.universe().contains(event.destination)) {
            throw std::invalid_argument(
                "event outside table scope: user '" + event.user_id + "' " +
                event.origin.str() + "->" + event.destination.str() + " " +
                format_year_month(event.event_year_month));
        }
        table.add(key, 1.0);
    }
    return table;
}

FlowTable apply_exclusions(FlowTable table, const std::vector<Exclusion>& exclusions,
                           ExclusionReport* report) {
    ExclusionReport local;
    for (const auto& exclusion : exclusions) {
        if (exclusion.first > exclusion.last) {
            throw std::invalid_argument("exclusion with inverted month interval: " +
                                        format_year_month(exclusion.first) + ".." +
                                        format_year_month(exclusion.last));
        }
        for (int idx = exclusion.first.index(); idx <= exclusion.last.index(); ++idx) {
            const FlowKey key{exclusion.origin, exclusion.destination,
                              YearMonth::from_index(idx)};
            if (!table.months().contains(key.month)) {
                ++local.cells_out_of_range;
                continue;
            }
            if (table.entries().count(key) == 0) ++local.cells_without_value;
            table.mark_missing(key);
            ++local.cells_excluded;
        }
    }
    if (report != nullptr) *report = local;
    return table;
}

FlowTable impute_months(FlowTable table, const std::vector<YearMonth>& affected_months,
                        ImputeReport* report) {
    ImputeReport local;
    for (const YearMonth affected : affected_months) {
        const YearMonth before = affected.prev();
        const YearMonth after = affected.next();
        if (!table.months().contains(before) || !table.months().contains(after)) {
            throw std::invalid_argument("cannot impute " + format_year_month(affected) +
                                        ": adjacent month outside table range");
        }

        // Pairs with any signal in the affected month or either neighbor.
        std::set<std::pair<CountryCode, CountryCode>> pairs;
        auto collect = [&](YearMonth ym) {
            for (const auto& [key, value] : table.entries()) {
                if (key.month == ym) pairs.insert({key.origin, key.destination});
            }
            for (const auto& key : table.missing()) {
                if (key.month == ym) pairs.insert({key.origin, key.destination});
            }
        };
        collect(before);
        collect(affected);
        collect(after);

        for (const auto& [origin, destination] : pairs) {
            const FlowKey target{origin, destination, affected};
            const FlowKey prev_key{origin, destination, before};
            const FlowKey next_key{origin, destination, after};
            if (table.is_missing(prev_key) || table.is_missing(next_key)) {
                table.mark_missing(target);
                local.cells_left_missing.push_back(target);
                continue;
            }
            table.set(target, 0.5 * (table.value(prev_key) + table.value(next_key)));
            ++local.cells_imputed;
        }
    }
    if (report != nullptr) *report = local;
    return table;
}

FlowTable merge_partials(const std::vector<FlowTable>& tables,
                         std::size_t* missing_value_conflicts) {
    if (tables.empty()) {
        throw std::invalid_argument("merge_partials: no tables");
    }
    const FlowTable& first = tables.front();
    for (const FlowTable& t : tables) {
        if (t.stage() != first.stage() || t.months() != first.months() ||
            !(t.universe() == first.universe())) {
            throw std::invalid_argument("merge_partials: mismatched table metadata");
        }
    }

    FlowTable out(first.stage(), first.months(), first.universe());
    std::set<FlowKey> valued;
    std::set<FlowKey> missing_somewhere;
    for (const FlowTable& t : tables) {
        for (const auto& [key, value] : t.entries()) {
            out.add(key, value);
            valued.insert(key);
        }
        for (const auto& key : t.missing()) missing_somewhere.insert(key);
    }

    std::size_t conflicts = 0;
    for (const auto& key : missing_somewhere) {
        if (valued.count(key) > 0) {
            ++conflicts;  // missing + value = value
        } else {
            out.mark_missing(key);
        }
    }
    if (missing_value_conflicts != nullptr) *missing_value_conflicts = conflicts;
    return out;
}

}  // namespace migflow
