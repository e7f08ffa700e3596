#pragma once

#include <cstddef>
#include <vector>

#include "migflow/core.hpp"

namespace migflow {

/// A maximal run of in-country observation days (consecutive gaps <= epsilon)
/// that survived the length/proportion filters. Carries its observed days so
/// overlap truncation can recount them.
struct CandidateSegment {
    CountryCode country;
    Day start = 0;
    Day end = 0;
    std::vector<Day> days;  // ascending, all within [start, end]

    int observed_in(Day a, Day b) const;
};

std::vector<CandidateSegment> detect_candidates(const LocationTrace& trace,
                                                const DetectionParams& params);

/// Removes the overlapping day interval from both members of each overlapping
/// pair, recounts observed days, and re-validates against min_days/prop_days.
std::vector<ResidenceSegment> resolve_overlaps(std::vector<CandidateSegment> candidates,
                                               const DetectionParams& params);

/// Full per-user segment detection: candidates, filters, overlap resolution.
/// Output is sorted by start day and pairwise non-overlapping.
std::vector<ResidenceSegment> detect_segments(const LocationTrace& trace,
                                              const DetectionParams& params);

/// One event per adjacent segment pair in different countries with an
/// inter-segment gap of at most max_intersegment_gap_days.
std::vector<MigrationEvent> detect_migrations(const std::vector<ResidenceSegment>& segments,
                                              const DetectionParams& params,
                                              const std::string& user_id);

struct FrequencyMigration {
    int from_year = 0;
    int to_year = 0;
    CountryCode origin;
    CountryCode destination;

    auto operator<=>(const FrequencyMigration&) const = default;
};

/// Baseline method: modal-country changes between consecutive calendar years.
/// Modal ties break toward the country observed latest in the year.
std::vector<FrequencyMigration> frequency_migrations(const LocationTrace& trace);

/// Sequence complexity: geometric mean of the normalized transition count and
/// the entropy of the state distribution relative to ln(universe_size).
/// Defined as 0 for length-1 sequences.
double complexity_index(const std::vector<CountryCode>& state_sequence,
                        std::size_t universe_size);

struct DiagnosticsReport {
    std::size_t n_segments = 0;
    double share_modal_ge_90 = 0.0;
    double share_top2_diff_lt_20 = 0.0;
    double mean_complexity = 0.0;
    std::size_t n_migrants_detected = 0;
};

DiagnosticsReport segment_diagnostics(const std::vector<LocationTrace>& traces,
                                      const DetectionParams& params,
                                      std::size_t universe_size);

}  // namespace migflow
