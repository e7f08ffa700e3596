#include "doctest.h"

#include <map>
#include <string>
#include <vector>

#include "migflow/aggregator.hpp"
#include "migflow/rng.hpp"

using namespace migflow;

namespace {

const CountryCode kUS{"US"};
const CountryCode kMX{"MX"};
const CountryCode kDE{"DE"};
const CountryCode kMM{"MM"};
const CountryCode kKH{"KH"};

MigrationEvent event(const std::string& user, CountryCode o, CountryCode d, int year,
                     int month) {
    return {user, o, d, {year, month}, 0, 0};
}

}  // namespace

TEST_CASE("build_flow_table counts events per corridor month") {
    const std::vector<MigrationEvent> events = {
        event("a", kMX, kUS, 2020, 3),
        event("b", kMX, kUS, 2020, 3),
        event("c", kMX, kUS, 2020, 4),
        event("d", kUS, kMX, 2020, 3),
    };
    const MonthRange months{{2020, 1}, {2020, 12}};
    const FlowTable table =
        build_flow_table(events, months, CountryUniverse::default_universe());
    CHECK(table.stage() == Stage::raw);
    CHECK(table.value({kMX, kUS, {2020, 3}}) == 2.0);
    CHECK(table.value({kMX, kUS, {2020, 4}}) == 1.0);
    CHECK(table.value({kUS, kMX, {2020, 3}}) == 1.0);
    CHECK(table.value({kDE, kUS, {2020, 3}}) == 0.0);  // implicit zero
    CHECK(table.total() == 4.0);
}

TEST_CASE("build_flow_table rejects out-of-scope events with the user named") {
    const MonthRange months{{2020, 1}, {2020, 12}};
    const auto& universe = CountryUniverse::default_universe();
    CHECK_THROWS_WITH_AS(
        build_flow_table({event("late", kMX, kUS, 2021, 1)}, months, universe),
        doctest::Contains("late"), std::invalid_argument);
}

TEST_CASE("aggregation matches an independent recount on 100k random events") {
    rng::Substream stream(2024);
    const auto& universe = CountryUniverse::default_universe();
    const auto& codes = universe.codes();
    const MonthRange months{{2019, 1}, {2021, 12}};

    std::vector<MigrationEvent> events;
    std::map<std::tuple<std::string, std::string, int>, long> recount;
    for (int i = 0; i < 100000; ++i) {
        const CountryCode o = codes[stream.next_below(codes.size())];
        const CountryCode d = codes[stream.next_below(codes.size())];
        if (o == d) continue;
        const int idx = static_cast<int>(stream.next_below(36));
        const YearMonth ym = YearMonth::from_index(months.first.index() + idx);
        events.push_back(event("u" + std::to_string(i), o, d, ym.year, ym.month));
        ++recount[{o.str(), d.str(), ym.index()}];
    }

    const FlowTable table = build_flow_table(events, months, universe);
    CHECK(table.total() == static_cast<double>(events.size()));
    CHECK(table.entries().size() == recount.size());
    for (const auto& [key, count] : recount) {
        const FlowKey fk{CountryCode{std::get<0>(key)}, CountryCode{std::get<1>(key)},
                         YearMonth::from_index(std::get<2>(key))};
        CHECK(table.value(fk) == static_cast<double>(count));
    }
}

TEST_CASE("exclusions mark corridor months missing without touching others") {
    const MonthRange months{{2020, 1}, {2022, 12}};
    const auto& universe = CountryUniverse::default_universe();
    FlowTable table(Stage::raw, months, universe);
    table.set({kMM, kKH, {2020, 10}}, 5.0);
    table.set({kMM, kKH, {2021, 2}}, 7.0);
    table.set({kMM, kUS, {2021, 2}}, 3.0);

    // A 2020-11 .. 2022-12 block covers 26 calendar months.
    const std::vector<Exclusion> exclusions = {{kMM, kKH, {2020, 11}, {2022, 12}}};
    ExclusionReport report;
    const FlowTable out = apply_exclusions(table, exclusions, &report);

    CHECK(report.cells_excluded == 26);
    CHECK(report.cells_without_value == 25);  // only 2021-02 held an entry
    CHECK(report.cells_out_of_range == 0);
    CHECK(out.value({kMM, kKH, {2020, 10}}) == 5.0);
    CHECK(out.value({kMM, kUS, {2021, 2}}) == 3.0);
    CHECK(out.is_missing({kMM, kKH, {2021, 2}}));
    CHECK(out.is_missing({kMM, kKH, {2022, 12}}));
    CHECK_FALSE(out.is_missing({kMM, kKH, {2020, 10}}));
    CHECK_THROWS_AS(out.value({kMM, kKH, {2021, 2}}), std::out_of_range);
}

TEST_CASE("exclusion months outside the table range are reported, not applied") {
    const MonthRange months{{2021, 1}, {2021, 12}};
    FlowTable table(Stage::raw, months, CountryUniverse::default_universe());
    const std::vector<Exclusion> exclusions = {{kMM, kKH, {2020, 11}, {2021, 2}}};
    ExclusionReport report;
    const FlowTable out = apply_exclusions(table, exclusions, &report);
    CHECK(report.cells_excluded == 2);       // 2021-01, 2021-02
    CHECK(report.cells_out_of_range == 2);   // 2020-11, 2020-12
    CHECK(out.missing().size() == 2);
}

TEST_CASE("imputation replaces a month by the mean of its neighbors") {
    const MonthRange months{{2021, 1}, {2021, 12}};
    const auto& universe = CountryUniverse::default_universe();
    FlowTable table(Stage::raw, months, universe);
    table.set({kMX, kUS, {2021, 9}}, 100.0);
    table.set({kMX, kUS, {2021, 11}}, 200.0);
    table.set({kDE, kUS, {2021, 9}}, 7.0);
    table.set({kDE, kUS, {2021, 11}}, 8.0);
    table.set({kUS, kMX, {2021, 10}}, 42.0);  // signal only in the affected month

    ImputeReport report;
    const FlowTable out = impute_months(table, {{2021, 10}}, &report);
    CHECK(out.value({kMX, kUS, {2021, 10}}) == 150.0);
    CHECK(out.value({kDE, kUS, {2021, 10}}) == 7.5);
    // The affected-month-only pair averages its two zero neighbors.
    CHECK(out.value({kUS, kMX, {2021, 10}}) == 0.0);
    CHECK(report.cells_imputed == 3);
    CHECK(report.cells_left_missing.empty());
    // Other months are untouched.
    CHECK(out.value({kMX, kUS, {2021, 9}}) == 100.0);
    CHECK(out.value({kMX, kUS, {2021, 11}}) == 200.0);
}

TEST_CASE("imputation with a missing neighbor leaves the cell missing") {
    const MonthRange months{{2021, 1}, {2021, 12}};
    FlowTable table(Stage::raw, months, CountryUniverse::default_universe());
    table.set({kMX, kUS, {2021, 11}}, 200.0);
    table.mark_missing({kMX, kUS, {2021, 9}});

    ImputeReport report;
    const FlowTable out = impute_months(table, {{2021, 10}}, &report);
    CHECK(out.is_missing({kMX, kUS, {2021, 10}}));
    CHECK(report.cells_imputed == 0);
    REQUIRE(report.cells_left_missing.size() == 1);
    CHECK(report.cells_left_missing[0] == FlowKey{kMX, kUS, {2021, 10}});
}

TEST_CASE("imputation requires both neighbors inside the range") {
    const MonthRange months{{2021, 1}, {2021, 12}};
    FlowTable table(Stage::raw, months, CountryUniverse::default_universe());
    CHECK_THROWS_AS(impute_months(table, {{2021, 1}}, nullptr), std::invalid_argument);
    CHECK_THROWS_AS(impute_months(table, {{2021, 12}}, nullptr), std::invalid_argument);
}

TEST_CASE("merging shards equals aggregating everything at once") {
    rng::Substream stream(7);
    const auto& universe = CountryUniverse::default_universe();
    const auto& codes = universe.codes();
    const MonthRange months{{2020, 1}, {2020, 12}};

    std::vector<MigrationEvent> events;
    for (int i = 0; i < 20000; ++i) {
        const CountryCode o = codes[stream.next_below(codes.size())];
        const CountryCode d = codes[stream.next_below(codes.size())];
        if (o == d) continue;
        const YearMonth ym{2020, 1 + static_cast<int>(stream.next_below(12))};
        events.push_back(event("u" + std::to_string(i), o, d, ym.year, ym.month));
    }
    const FlowTable whole = build_flow_table(events, months, universe);

    std::vector<FlowTable> shards;
    for (int s = 0; s < 8; ++s) {
        std::vector<MigrationEvent> part;
        for (std::size_t i = s; i < events.size(); i += 8) part.push_back(events[i]);
        shards.push_back(build_flow_table(part, months, universe));
    }
    CHECK(merge_partials(shards) == whole);
}

TEST_CASE("merge is commutative and associative over shard order") {
    const MonthRange months{{2020, 1}, {2020, 12}};
    const auto& universe = CountryUniverse::default_universe();
    FlowTable a(Stage::raw, months, universe);
    a.set({kMX, kUS, {2020, 3}}, 2.0);
    FlowTable b(Stage::raw, months, universe);
    b.set({kMX, kUS, {2020, 3}}, 5.0);
    b.set({kDE, kUS, {2020, 6}}, 1.0);
    FlowTable c(Stage::raw, months, universe);
    c.set({kUS, kDE, {2020, 1}}, 4.0);

    const FlowTable abc = merge_partials({a, b, c});
    CHECK(merge_partials({c, a, b}) == abc);
    CHECK(merge_partials({merge_partials({a, b}), c}) == abc);
    CHECK(merge_partials({a, merge_partials({b, c})}) == abc);
    CHECK(abc.value({kMX, kUS, {2020, 3}}) == 7.0);
}

TEST_CASE("merge resolves missing-vs-value conflicts toward the value") {
    const MonthRange months{{2020, 1}, {2020, 12}};
    const auto& universe = CountryUniverse::default_universe();
    FlowTable a(Stage::raw, months, universe);
    a.mark_missing({kMX, kUS, {2020, 3}});
    a.mark_missing({kDE, kUS, {2020, 4}});
    FlowTable b(Stage::raw, months, universe);
    b.set({kMX, kUS, {2020, 3}}, 9.0);

    std::size_t conflicts = 0;
    const FlowTable merged = merge_partials({a, b}, &conflicts);
    CHECK(conflicts == 1);
    CHECK(merged.value({kMX, kUS, {2020, 3}}) == 9.0);
    CHECK(merged.is_missing({kDE, kUS, {2020, 4}}));  // missing everywhere stays missing
}

TEST_CASE("merge rejects mismatched metadata") {
    const auto& universe = CountryUniverse::default_universe();
    FlowTable a(Stage::raw, {{2020, 1}, {2020, 12}}, universe);
    FlowTable b(Stage::weighted, {{2020, 1}, {2020, 12}}, universe);
    FlowTable c(Stage::raw, {{2019, 1}, {2020, 12}}, universe);
    CHECK_THROWS_AS(merge_partials({a, b}), std::invalid_argument);
    CHECK_THROWS_AS(merge_partials({a, c}), std::invalid_argument);
    CHECK_THROWS_AS(merge_partials({}), std::invalid_argument);
}
