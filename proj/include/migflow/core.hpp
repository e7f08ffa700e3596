#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace migflow {

/// Days since 1970-01-01 (can be negative).
using Day = std::int32_t;

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;
};

/// Proleptic Gregorian civil-day conversions, exact for all representable dates.
Day day_from_date(const Date& d);
Date date_from_day(Day day);
bool is_valid_date(const Date& d);

/// Parses strict ISO-8601 "YYYY-MM-DD"; throws std::invalid_argument otherwise.
Day parse_iso_date(std::string_view s);
std::string format_iso_date(Day day);

struct YearMonth {
    int year = 1970;
    int month = 1;

    auto operator<=>(const YearMonth&) const = default;

    int index() const { return year * 12 + (month - 1); }
    static YearMonth from_index(int idx) {
        int y = idx / 12;
        int m = idx % 12;
        if (m < 0) {
            m += 12;
            --y;
        }
        return {y, m + 1};
    }
    YearMonth next() const { return from_index(index() + 1); }
    YearMonth prev() const { return from_index(index() - 1); }
};

YearMonth year_month_of(Day day);
YearMonth parse_year_month(std::string_view s);  // "YYYY-MM"
std::string format_year_month(YearMonth ym);

struct MonthRange {
    YearMonth first;
    YearMonth last;

    bool contains(YearMonth ym) const { return first <= ym && ym <= last; }
    int n_months() const { return last.index() - first.index() + 1; }

    auto operator<=>(const MonthRange&) const = default;
};

/// ISO-3166-1 alpha-2 code, uppercase.
struct CountryCode {
    char code[2] = {'?', '?'};

    CountryCode() = default;
    explicit CountryCode(std::string_view s);

    std::string str() const { return std::string(code, 2); }

    friend auto operator<=>(const CountryCode& a, const CountryCode& b) {
        if (auto c = a.code[0] <=> b.code[0]; c != 0) return c;
        return a.code[1] <=> b.code[1];
    }
    friend bool operator==(const CountryCode& a, const CountryCode& b) {
        return a.code[0] == b.code[0] && a.code[1] == b.code[1];
    }
};

/// The fixed country set of size K. Complexity normalization and table
/// shapes depend on K, so membership is validated at ingestion.
class CountryUniverse {
  public:
    CountryUniverse() = default;
    explicit CountryUniverse(std::vector<CountryCode> codes);

    /// Packaged 181-code default list.
    static const CountryUniverse& default_universe();

    bool contains(CountryCode c) const {
        return std::binary_search(codes_.begin(), codes_.end(), c);
    }
    std::size_t size() const { return codes_.size(); }
    const std::vector<CountryCode>& codes() const { return codes_; }

    bool operator==(const CountryUniverse&) const = default;

  private:
    std::vector<CountryCode> codes_;  // sorted, unique
};

struct Observation {
    Day day = 0;
    CountryCode country;

    auto operator<=>(const Observation&) const = default;
};

struct LocationTrace {
    std::string user_id;
    std::vector<Observation> observations;  // strictly increasing days

    /// Throws std::invalid_argument if days are not strictly increasing.
    void validate() const;
};

struct DetectionParams {
    int epsilon_days = 60;
    int min_days = 365;
    double prop_days = 0.5;
    int max_intersegment_gap_days = 60;

    void validate() const;

    static DetectionParams un() { return {60, 365, 0.5, 60}; }
    static DetectionParams nz() { return {60, 487, 0.75, 60}; }
    static DetectionParams short_term() { return {60, 182, 0.5, 60}; }
    static DetectionParams preset(std::string_view name);
};

struct ResidenceSegment {
    CountryCode country;
    Day start = 0;
    Day end = 0;
    int observed_days = 0;

    int span_days() const { return end - start + 1; }

    auto operator<=>(const ResidenceSegment&) const = default;
};

struct MigrationEvent {
    std::string user_id;
    CountryCode origin;
    CountryCode destination;
    YearMonth event_year_month;
    Day origin_segment_end = 0;
    Day destination_segment_start = 0;

    auto operator<=>(const MigrationEvent&) const = default;
};

enum class Stage { raw, weighted, privatized };

std::string stage_name(Stage s);
Stage parse_stage(std::string_view s);

struct FlowKey {
    CountryCode origin;
    CountryCode destination;
    YearMonth month;

    auto operator<=>(const FlowKey&) const = default;
};

/// Counts (raw stage) or nonnegative reals keyed by origin/destination/month.
/// Absent cells are implicit zeros; cells removed by exclusion lists are
/// tracked separately as missing, which is distinct from zero.
class FlowTable {
  public:
    FlowTable() = default;
    FlowTable(Stage stage, MonthRange months, CountryUniverse universe)
        : stage_(stage), months_(months), universe_(std::move(universe)) {}

    Stage stage() const { return stage_; }
    void set_stage(Stage s) { stage_ = s; }
    const MonthRange& months() const { return months_; }
    const CountryUniverse& universe() const { return universe_; }

    const std::map<FlowKey, double>& entries() const { return entries_; }
    const std::set<FlowKey>& missing() const { return missing_; }

    /// Throws if the key violates table invariants (same-country pair,
    /// month out of range, country outside the universe, negative value).
    void set(const FlowKey& key, double value);
    void add(const FlowKey& key, double value);

    bool is_missing(const FlowKey& key) const { return missing_.count(key) > 0; }
    void mark_missing(const FlowKey& key);

    /// Value with implicit zero for absent cells; throws if the cell is missing.
    double value(const FlowKey& key) const;

    double total() const;

    bool operator==(const FlowTable&) const = default;

  private:
    void check_key(const FlowKey& key) const;

    Stage stage_ = Stage::raw;
    MonthRange months_;
    CountryUniverse universe_;
    std::map<FlowKey, double> entries_;
    std::set<FlowKey> missing_;
};

}  // namespace migflow
