#include "migflow/core.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace migflow {

namespace {

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
    static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

int parse_int_strict(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

bool is_valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

Day day_from_date(const Date& d) {
    if (!is_valid_date(d)) {
        throw std::invalid_argument("invalid calendar date");
    }
    return static_cast<Day>(days_from_civil(d.year, static_cast<unsigned>(d.month),
                                            static_cast<unsigned>(d.day)));
}

Date date_from_day(Day day) {
    Date d;
    civil_from_days(day, d.year, d.month, d.day);
    return d;
}

Day parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(s) + "'");
    }
    Date d{parse_int_strict(s.substr(0, 4)), parse_int_strict(s.substr(5, 2)),
           parse_int_strict(s.substr(8, 2))};
    return day_from_date(d);
}

std::string format_iso_date(Day day) {
    Date d = date_from_day(day);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

YearMonth year_month_of(Day day) {
    Date d = date_from_day(day);
    return {d.year, d.month};
}

YearMonth parse_year_month(std::string_view s) {
    if (s.size() != 7 || s[4] != '-') {
        throw std::invalid_argument("expected YYYY-MM, got '" + std::string(s) + "'");
    }
    YearMonth ym{parse_int_strict(s.substr(0, 4)), parse_int_strict(s.substr(5, 2))};
    if (ym.month < 1 || ym.month > 12) {
        throw std::invalid_argument("month out of range in '" + std::string(s) + "'");
    }
    return ym;
}

std::string format_year_month(YearMonth ym) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", ym.year, ym.month);
    return buf;
}

CountryCode::CountryCode(std::string_view s) {
    if (s.size() != 2 || s[0] < 'A' || s[0] > 'Z' || s[1] < 'A' || s[1] > 'Z') {
        throw std::invalid_argument("invalid country code: '" + std::string(s) + "'");
    }
    code[0] = s[0];
    code[1] = s[1];
}

CountryUniverse::CountryUniverse(std::vector<CountryCode> codes) : codes_(std::move(codes)) {
    std::sort(codes_.begin(), codes_.end());
    codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
    if (codes_.empty()) {
        throw std::invalid_argument("country universe must be non-empty");
    }
}

const CountryUniverse& CountryUniverse::default_universe() {
    static const CountryUniverse instance = [] {
        static const char* kCodes =
            "AF AL DZ AO AG AR AM AU AT AZ BS BH BD BB BY BE BZ BJ BT BO BA BW BR BN BG "
            "BF BI CV KH CM CA CF TD CL CO KM CG CD CR CI HR CY CZ DK DJ DO EC EG SV GQ "
            "ER EE SZ ET FJ FI FR GA GM GE DE GH GR GD GT GN GW GY HT HN HK HU IS IN ID "
            "IQ IE IL IT JM JP JO KZ KE KR KW KG LA LV LB LS LR LY LT LU MG MW MY MV ML "
            "MT MR MU MX FM MD MN ME MA MZ MM NA NP NL NZ NI NE NG MK NO OM PK PA PG PY "
            "PE PH PL PR PS PT QA RO RU RW LC VC WS ST SA SN RS SL SG SK SI SB SO ZA SS "
            "ES LK SD SR SE CH SY TW TJ TZ TH TL TG TO TT TN TR TM UG UA AE GB US UY UZ "
            "VU VE VN YE ZM ZW";
        std::vector<CountryCode> codes;
        std::istringstream in(kCodes);
        std::string tok;
        while (in >> tok) codes.emplace_back(tok);
        return CountryUniverse(std::move(codes));
    }();
    return instance;
}

void LocationTrace::validate() const {
    for (std::size_t i = 1; i < observations.size(); ++i) {
        if (observations[i].day <= observations[i - 1].day) {
            throw std::invalid_argument("trace for user '" + user_id +
                                        "' has non-increasing days");
        }
    }
}

void DetectionParams::validate() const {
    if (epsilon_days < 1) throw std::invalid_argument("epsilon_days must be >= 1");
    if (min_days < 1) throw std::invalid_argument("min_days must be >= 1");
    if (!(prop_days > 0.0 && prop_days <= 1.0)) {
        throw std::invalid_argument("prop_days must be in (0, 1]");
    }
    if (max_intersegment_gap_days < 0) {
        throw std::invalid_argument("max_intersegment_gap_days must be >= 0");
    }
}

DetectionParams DetectionParams::preset(std::string_view name) {
    if (name == "un") return un();
    if (name == "nz") return nz();
    if (name == "short") return short_term();
    throw std::invalid_argument("unknown detection preset: '" + std::string(name) + "'");
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::raw: return "raw";
        case Stage::weighted: return "weighted";
        case Stage::privatized: return "privatized";
    }
    throw std::logic_error("bad stage");
}

Stage parse_stage(std::string_view s) {
    if (s == "raw") return Stage::raw;
    if (s == "weighted") return Stage::weighted;
    if (s == "privatized") return Stage::privatized;
    throw std::invalid_argument("unknown stage: '" + std::string(s) + "'");
}

void FlowTable::check_key(const FlowKey& key) const {
    if (key.origin == key.destination) {
        throw std::invalid_argument("flow key with origin == destination: " +
                                    key.origin.str());
    }
    if (!months_.contains(key.month)) {
        throw std::invalid_argument("flow month " + format_year_month(key.month) +
                                    " outside table range");
    }
    if (!universe_.contains(key.origin) || !universe_.contains(key.destination)) {
        throw std::invalid_argument("country outside universe in flow key " +
                                    key.origin.str() + "->" + key.destination.str());
    }
}

void FlowTable::set(const FlowKey& key, double value) {
    check_key(key);
    if (value < 0.0) throw std::invalid_argument("negative flow value");
    missing_.erase(key);
    entries_[key] = value;
}

void FlowTable::add(const FlowKey& key, double value) {
    check_key(key);
    missing_.erase(key);
    entries_[key] += value;
}

void FlowTable::mark_missing(const FlowKey& key) {
    check_key(key);
    entries_.erase(key);
    missing_.insert(key);
}

double FlowTable::value(const FlowKey& key) const {
    if (missing_.count(key) > 0) {
        throw std::out_of_range("cell is missing (excluded): " + key.origin.str() + "->" +
                                key.destination.str() + " " + format_year_month(key.month));
    }
    auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second;
}

double FlowTable::total() const {
    double sum = 0.0;
    for (const auto& [key, v] : entries_) sum += v;
    return sum;
}

}  // namespace migflow
