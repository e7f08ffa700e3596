#include "migflow/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace migflow {

namespace {

bool meets_filters(int span, int observed, const DetectionParams& params) {
    return span >= params.min_days &&
           static_cast<double>(observed) / span >= params.prop_days;
}

bool by_interval(const CandidateSegment& a, const CandidateSegment& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return a.country < b.country;
}

}  // namespace

int CandidateSegment::observed_in(Day a, Day b) const {
    auto lo = std::lower_bound(days.begin(), days.end(), a);
    auto hi = std::upper_bound(days.begin(), days.end(), b);
    return static_cast<int>(hi - lo);
}

std::vector<CandidateSegment> detect_candidates(const LocationTrace& trace,
                                                const DetectionParams& params) {
    params.validate();
    trace.validate();

    std::map<CountryCode, std::vector<Day>> by_country;
    for (const auto& obs : trace.observations) {
        by_country[obs.country].push_back(obs.day);
    }

    std::vector<CandidateSegment> candidates;
    for (const auto& [country, days] : by_country) {
        // Greedy left-to-right: a run breaks when the gap between consecutive
        // in-country days exceeds epsilon.
        std::size_t run_begin = 0;
        for (std::size_t i = 1; i <= days.size(); ++i) {
            if (i == days.size() || days[i] - days[i - 1] > params.epsilon_days) {
                CandidateSegment c;
                c.country = country;
                c.start = days[run_begin];
                c.end = days[i - 1];
                c.days.assign(days.begin() + run_begin, days.begin() + i);
                if (meets_filters(c.end - c.start + 1, static_cast<int>(c.days.size()),
                                  params)) {
                    candidates.push_back(std::move(c));
                }
                run_begin = i;
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), by_interval);
    return candidates;
}

std::vector<ResidenceSegment> resolve_overlaps(std::vector<CandidateSegment> candidates,
                                               const DetectionParams& params) {
    // Truncate both sides of every overlapping pair: the earlier segment ends
    // at overlap start - 1, the later starts at overlap end + 1. Repeat until
    // no pair overlaps; emptied segments are dropped.
    bool changed = true;
    while (changed) {
        changed = false;
        std::sort(candidates.begin(), candidates.end(), by_interval);
        for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
            CandidateSegment& a = candidates[i];
            CandidateSegment& b = candidates[i + 1];
            if (b.start > a.end) continue;
            const Day overlap_start = b.start;
            const Day overlap_end = std::min(a.end, b.end);
            a.end = overlap_start - 1;
            b.start = overlap_end + 1;
            std::erase_if(candidates,
                          [](const CandidateSegment& c) { return c.start > c.end; });
            changed = true;
            break;
        }
    }

    std::vector<ResidenceSegment> out;
    for (const auto& c : candidates) {
        const int observed = c.observed_in(c.start, c.end);
        if (observed == 0) continue;
        if (!meets_filters(c.end - c.start + 1, observed, params)) continue;
        out.push_back({c.country, c.start, c.end, observed});
    }
    std::sort(out.begin(), out.end(),
              [](const ResidenceSegment& a, const ResidenceSegment& b) {
                  return a.start < b.start;
              });
    return out;
}

std::vector<ResidenceSegment> detect_segments(const LocationTrace& trace,
                                              const DetectionParams& params) {
    return resolve_overlaps(detect_candidates(trace, params), params);
}

std::vector<MigrationEvent> detect_migrations(const std::vector<ResidenceSegment>& segments,
                                              const DetectionParams& params,
                                              const std::string& user_id) {
    std::vector<MigrationEvent> events;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        const ResidenceSegment& from = segments[i];
        const ResidenceSegment& to = segments[i + 1];
        if (from.country == to.country) continue;
        const int gap = to.start - from.end - 1;
        if (gap > params.max_intersegment_gap_days) continue;
        events.push_back({user_id, from.country, to.country, year_month_of(to.start),
                          from.end, to.start});
    }
    return events;
}

std::vector<FrequencyMigration> frequency_migrations(const LocationTrace& trace) {
    trace.validate();

    struct YearTally {
        std::map<CountryCode, int> counts;
        std::map<CountryCode, Day> last_seen;
    };
    std::map<int, YearTally> years;
    for (const auto& obs : trace.observations) {
        const int y = date_from_day(obs.day).year;
        YearTally& t = years[y];
        ++t.counts[obs.country];
        t.last_seen[obs.country] = obs.day;
    }

    auto modal = [](const YearTally& t) {
        CountryCode best;
        int best_count = -1;
        Day best_last = -1;
        for (const auto& [country, count] : t.counts) {
            const Day last = t.last_seen.at(country);
            if (count > best_count || (count == best_count && last > best_last)) {
                best = country;
                best_count = count;
                best_last = last;
            }
        }
        return best;
    };

    std::vector<FrequencyMigration> out;
    for (auto it = years.begin(); it != years.end(); ++it) {
        auto next = std::next(it);
        if (next == years.end()) break;
        if (next->first != it->first + 1) continue;
        const CountryCode a = modal(it->second);
        const CountryCode b = modal(next->second);
        if (a == b) continue;
        out.push_back({it->first, next->first, a, b});
    }
    return out;
}

double complexity_index(const std::vector<CountryCode>& state_sequence,
                        std::size_t universe_size) {
    if (state_sequence.empty()) {
        throw std::invalid_argument("complexity_index: empty sequence");
    }
    if (universe_size < 2) {
        throw std::invalid_argument("complexity_index: universe size must be >= 2");
    }
    const std::size_t length = state_sequence.size();
    if (length == 1) return 0.0;

    std::size_t dedup_length = 1;
    std::map<CountryCode, std::size_t> counts;
    ++counts[state_sequence[0]];
    for (std::size_t i = 1; i < length; ++i) {
        if (!(state_sequence[i] == state_sequence[i - 1])) ++dedup_length;
        ++counts[state_sequence[i]];
    }

    double entropy = 0.0;
    for (const auto& [country, n] : counts) {
        const double p = static_cast<double>(n) / static_cast<double>(length);
        entropy -= p * std::log(p);
    }
    const double max_entropy = std::log(static_cast<double>(universe_size));

    const double transitions = static_cast<double>(dedup_length - 1) /
                               static_cast<double>(length - 1);
    return std::sqrt(transitions * entropy / max_entropy);
}

DiagnosticsReport segment_diagnostics(const std::vector<LocationTrace>& traces,
                                      const DetectionParams& params,
                                      std::size_t universe_size) {
    if (traces.empty()) {
        throw std::invalid_argument("segment_diagnostics: no traces");
    }

    DiagnosticsReport report;
    std::size_t modal_hits = 0;
    std::size_t top2_hits = 0;
    double complexity_sum = 0.0;
    std::size_t complexity_users = 0;

    for (const auto& trace : traces) {
        const auto segments = detect_segments(trace, params);
        if (!detect_migrations(segments, params, trace.user_id).empty()) {
            ++report.n_migrants_detected;
        }
        if (segments.empty()) continue;

        std::vector<CountryCode> in_segment_states;
        for (const auto& seg : segments) {
            std::map<CountryCode, int> counts;
            for (const auto& obs : trace.observations) {
                if (obs.day < seg.start || obs.day > seg.end) continue;
                ++counts[obs.country];
                in_segment_states.push_back(obs.country);
            }
            int top1 = 0;
            int top2 = 0;
            for (const auto& [country, n] : counts) {
                if (n > top1) {
                    top2 = top1;
                    top1 = n;
                } else if (n > top2) {
                    top2 = n;
                }
            }
            const double span = seg.span_days();
            ++report.n_segments;
            if (top1 >= 0.9 * span) ++modal_hits;
            if (top1 - top2 < 0.2 * span) ++top2_hits;
        }
        if (!in_segment_states.empty()) {
            complexity_sum += complexity_index(in_segment_states, universe_size);
            ++complexity_users;
        }
    }

    if (report.n_segments > 0) {
        report.share_modal_ge_90 = static_cast<double>(modal_hits) / report.n_segments;
        report.share_top2_diff_lt_20 = static_cast<double>(top2_hits) / report.n_segments;
    }
    if (complexity_users > 0) {
        report.mean_complexity = complexity_sum / complexity_users;
    }
    return report;
}

}  // namespace migflow
