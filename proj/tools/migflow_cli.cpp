// migflow: batch pipeline for estimating country-to-country migration flows
// from location traces. Subcommands compose via CSV artifacts on disk.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "migflow/aggregator.hpp"
#include "migflow/core.hpp"
#include "migflow/ingest.hpp"
#include "migflow/parallel.hpp"
#include "migflow/privacy.hpp"
#include "migflow/segmenter.hpp"
#include "migflow/synth.hpp"
#include "migflow/validation.hpp"
#include "migflow/weighting.hpp"

namespace fs = std::filesystem;
using namespace migflow;

namespace {

PopulationMap population_from_stats(const StatsMap& stats) {
    PopulationMap out;
    for (const auto& [key, cy] : stats) out[key] = cy.population;
    return out;
}

std::vector<MigrationEvent> detect_all(const std::vector<LocationTrace>& traces,
                                       const DetectionParams& params, int workers) {
    std::vector<std::vector<MigrationEvent>> per_trace(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) {
        const auto segments = detect_segments(traces[i], params);
        per_trace[i] = detect_migrations(segments, params, traces[i].user_id);
    });
    std::vector<MigrationEvent> events;
    for (auto& chunk : per_trace) {
        events.insert(events.end(), chunk.begin(), chunk.end());
    }
    return events;
}

std::map<CountryCode, double> flows_by_origin(const FlowTable& table, CountryCode destination,
                                              int year) {
    std::map<CountryCode, double> out;
    for (const auto& [key, value] : table.entries()) {
        if (key.destination == destination && key.month.year == year) {
            out[key.origin] += value;
        }
    }
    return out;
}

std::map<CountryCode, double> reference_by_origin(const ReferenceFlows& reference,
                                                  CountryCode destination, int year) {
    std::map<CountryCode, double> out;
    for (const auto& [key, value] : reference.entries) {
        if (key.destination == destination && key.year == year) out[key.origin] += value;
    }
    return out;
}

std::map<CountryCode, double> penetration_by_country(const StatsMap& stats, int year) {
    std::map<CountryCode, double> out;
    for (const auto& [key, cy] : stats) {
        if (key.second == year) out[key.first] = cy.penetration();
    }
    return out;
}

void write_calibration_curve(const std::string& path, const CalibrationResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path, "cannot open for writing");
    out << "r,sum_abs_error\n";
    for (const auto& [r, err] : result.error_curve) {
        out << format_double(r) << "," << format_double(err) << "\n";
    }
    out << std::flush;
}

struct PipelineOptions {
    std::string traces_path;
    std::string reference_path;
    std::string stats_path;
    std::string gni_path;
    std::string hdi_path;
    std::string out_dir;
    std::string preset = "un";
    std::string start_month;
    std::string end_month;
    std::string destination;  // calibration destination country
    int year = 0;             // calibration / flow year
    double epsilon = 10.0;
    double delta = 1e-9;
    int plan_years = 1;
    int plan_aggregates = 30;
    std::uint64_t seed = 1;
    int workers = 1;
};

int run_pipeline(const PipelineOptions& opt) {
    const auto& universe = CountryUniverse::default_universe();
    fs::create_directories(opt.out_dir);
    const auto artifact = [&](const char* name) {
        return (fs::path(opt.out_dir) / name).string();
    };

    const auto traces = load_traces(opt.traces_path, universe);
    const auto params = DetectionParams::preset(opt.preset);
    auto events = detect_all(traces, params, opt.workers);
    std::sort(events.begin(), events.end());
    save_events(artifact("events.csv"), events);

    const MonthRange months{parse_year_month(opt.start_month), parse_year_month(opt.end_month)};
    const FlowTable raw = build_flow_table(events, months, universe);
    save_flow_table(artifact("flows_raw.csv"), raw);

    const auto stats = load_stats(opt.stats_path);
    const auto gni = load_gni(opt.gni_path);
    const auto reference = load_reference(opt.reference_path, universe);
    const auto income = income_index(gni);

    const CountryCode destination{opt.destination};
    const auto calibration = calibrate_selection_rate(
        flows_by_origin(raw, destination, opt.year),
        reference_by_origin(reference, destination, opt.year),
        penetration_by_country(stats, opt.year), income);
    write_calibration_curve(artifact("calibration_curve.csv"), calibration);

    std::map<int, double> r_by_year;
    for (int y = months.first.year; y <= months.last.year; ++y) {
        r_by_year[y] = calibration.r;
    }
    const WeightModel model = selection_weights(stats, income, r_by_year);
    const FlowTable weighted = apply_weights(raw, model);
    save_flow_table(artifact("flows_weighted.csv"), weighted);

    const double sensitivity = sensitivity_from_release_plan(opt.plan_years, opt.plan_aggregates);
    const double sigma = solve_sigma(opt.epsilon, opt.delta, sensitivity);
    const FlowTable released = privatize(weighted, sigma, opt.seed);
    save_flow_table(artifact("flows_released.csv"), released);

    const auto hdi = load_hdi(opt.hdi_path);
    const auto report = validation_report(annualize(released), reference,
                                          population_from_stats(stats), hdi, universe);
    {
        std::ofstream out(artifact("validation_report.txt"), std::ios::binary);
        if (!out) throw IngestError(artifact("validation_report.txt"), "cannot open for writing");
        out << render_validation_report(report);
        out << "sigma: " << format_double(sigma) << "\n";
        out << "r: " << format_double(calibration.r) << "\n";
        out << std::flush;
    }
    std::cout << "pipeline: wrote " << opt.out_dir << " (r=" << format_double(calibration.r)
              << ", sigma=" << format_double(sigma) << ")\n";
    return 0;
}

void write_pipeline_config(const std::string& path, const PipelineOptions& opt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(path, "cannot open for writing");
    out << "[pipeline]\n"
        << "traces = \"" << opt.traces_path << "\"\n"
        << "reference = \"" << opt.reference_path << "\"\n"
        << "stats = \"" << opt.stats_path << "\"\n"
        << "gni = \"" << opt.gni_path << "\"\n"
        << "hdi = \"" << opt.hdi_path << "\"\n"
        << "out-dir = \"" << opt.out_dir << "\"\n"
        << "preset = \"" << opt.preset << "\"\n"
        << "start = \"" << opt.start_month << "\"\n"
        << "end = \"" << opt.end_month << "\"\n"
        << "destination = \"" << opt.destination << "\"\n"
        << "year = " << opt.year << "\n"
        << "epsilon = " << format_double(opt.epsilon) << "\n"
        << "delta = " << format_double(opt.delta) << "\n"
        << "plan-years = " << opt.plan_years << "\n"
        << "plan-aggregates = " << opt.plan_aggregates << "\n"
        << "seed = " << opt.seed << "\n";
    out << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"migflow: country-to-country migration flow estimation pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML config file");
    app.allow_config_extras(CLI::config_extras_mode::ignore);

    int workers = 1;
    app.add_option("--workers", workers, "Worker threads (results are worker-count independent)")
        ->envname("MIGFLOW_WORKERS")
        ->check(CLI::PositiveNumber);

    // ---- synth ----------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic world with ground truth");
    SynthConfig synth_cfg;
    std::string synth_out = "synth";
    synth_cmd->add_option("--out-dir", synth_out, "Output directory");
    synth_cmd->add_option("--countries", synth_cfg.n_countries, "Number of countries");
    synth_cmd->add_option("--users", synth_cfg.n_users, "Number of platform users");
    synth_cmd->add_option("--activity", synth_cfg.activity, "Daily observation probability");
    synth_cmd->add_option("--trip-prob", synth_cfg.trip_prob,
                          "Per-30-day probability of starting an abroad trip");
    synth_cmd->add_option("--monthly-migrants", synth_cfg.total_monthly_migrants,
                          "Expected true migrants per month");
    synth_cmd->add_option("--true-r", synth_cfg.true_r, "Selection rate used for platform bias");
    synth_cmd->add_option("--seed", synth_cfg.seed, "Generator seed")->envname("MIGFLOW_SEED");

    // ---- detect ---------------------------------------------------------
    auto* detect_cmd = app.add_subcommand("detect", "Detect migration events from traces");
    std::string detect_traces, detect_out = "events.csv", detect_preset = "un";
    std::optional<int> detect_epsilon, detect_min_days, detect_gap;
    std::optional<double> detect_prop;
    detect_cmd->add_option("--traces", detect_traces, "Input traces CSV")->required();
    detect_cmd->add_option("--out", detect_out, "Output events CSV");
    detect_cmd->add_option("--preset", detect_preset, "Detection preset: un, nz, short")
        ->check(CLI::IsMember({"un", "nz", "short"}));
    detect_cmd->add_option("--epsilon-days", detect_epsilon, "Max in-segment observation gap");
    detect_cmd->add_option("--min-days", detect_min_days, "Minimum segment span");
    detect_cmd->add_option("--prop-days", detect_prop, "Minimum observed fraction of span");
    detect_cmd->add_option("--max-gap-days", detect_gap, "Max gap between migration segments");

    // ---- aggregate ------------------------------------------------------
    auto* agg_cmd = app.add_subcommand("aggregate", "Count events into a raw flow table");
    std::string agg_events, agg_out = "flows_raw.csv", agg_start, agg_end, agg_exclusions;
    std::vector<std::string> agg_impute;
    agg_cmd->add_option("--events", agg_events, "Input events CSV")->required();
    agg_cmd->add_option("--out", agg_out, "Output flow table CSV");
    agg_cmd->add_option("--start", agg_start, "First month YYYY-MM")->required();
    agg_cmd->add_option("--end", agg_end, "Last month YYYY-MM")->required();
    agg_cmd->add_option("--exclusions", agg_exclusions, "Corridor-month exclusion list CSV");
    agg_cmd->add_option("--impute-month", agg_impute,
                        "Month YYYY-MM to replace by the mean of its neighbors (repeatable)");

    // ---- weight ---------------------------------------------------------
    auto* weight_cmd = app.add_subcommand("weight", "Apply a weighting scheme to a raw table");
    std::string weight_in, weight_out = "flows_weighted.csv", weight_scheme = "selection";
    std::string weight_stats, weight_gni;
    double weight_r = 0.0, weight_beta = 0.0;
    weight_cmd->add_option("--flows", weight_in, "Input raw flow table CSV")->required();
    weight_cmd->add_option("--out", weight_out, "Output weighted flow table CSV");
    weight_cmd
        ->add_option("--scheme", weight_scheme,
                     "Weighting scheme: raw, penetration, selection, coefficient")
        ->check(CLI::IsMember({"raw", "penetration", "selection", "coefficient"}));
    weight_cmd->add_option("--stats", weight_stats, "Country-year population/user stats CSV");
    weight_cmd->add_option("--gni", weight_gni, "Per-capita GNI CSV (selection scheme)");
    weight_cmd->add_option("--r", weight_r, "Selection rate applied to every year");
    weight_cmd->add_option("--beta", weight_beta, "Slope for the coefficient scheme");

    // ---- calibrate ------------------------------------------------------
    auto* cal_cmd = app.add_subcommand("calibrate", "Grid-search the selection rate r");
    std::string cal_flows, cal_reference, cal_stats, cal_gni, cal_dest;
    std::string cal_out = "calibration_curve.csv";
    int cal_year = 0;
    cal_cmd->add_option("--flows", cal_flows, "Raw flow table CSV")->required();
    cal_cmd->add_option("--reference", cal_reference, "Reference annual flows CSV")->required();
    cal_cmd->add_option("--stats", cal_stats, "Country-year stats CSV")->required();
    cal_cmd->add_option("--gni", cal_gni, "Per-capita GNI CSV")->required();
    cal_cmd->add_option("--destination", cal_dest, "Destination with trusted arrivals")
        ->required();
    cal_cmd->add_option("--year", cal_year, "Calibration year")->required();
    cal_cmd->add_option("--out", cal_out, "Output error-curve CSV");

    // ---- privatize ------------------------------------------------------
    auto* priv_cmd = app.add_subcommand("privatize", "Release a weighted table with DP noise");
    std::string priv_in, priv_out = "flows_released.csv";
    double priv_epsilon = 10.0, priv_delta = 1e-9;
    int priv_years = 1, priv_aggregates = 30;
    std::uint64_t priv_seed = 1;
    priv_cmd->add_option("--flows", priv_in, "Input weighted flow table CSV")->required();
    priv_cmd->add_option("--out", priv_out, "Output released flow table CSV");
    priv_cmd->add_option("--epsilon", priv_epsilon, "Privacy budget epsilon");
    priv_cmd->add_option("--delta", priv_delta, "Privacy parameter delta");
    priv_cmd->add_option("--plan-years", priv_years, "Yearly releases in the plan");
    priv_cmd->add_option("--plan-aggregates", priv_aggregates, "Aggregates per yearly release");
    priv_cmd->add_option("--seed", priv_seed, "Noise seed")->envname("MIGFLOW_SEED");

    // ---- validate -------------------------------------------------------
    auto* val_cmd = app.add_subcommand("validate", "Compare annualized flows to a reference");
    std::string val_flows, val_reference, val_stats, val_hdi, val_out = "validation_report.txt";
    val_cmd->add_option("--flows", val_flows, "Estimated flow table CSV")->required();
    val_cmd->add_option("--reference", val_reference, "Reference annual flows CSV")->required();
    val_cmd->add_option("--stats", val_stats, "Country-year stats CSV")->required();
    val_cmd->add_option("--hdi", val_hdi, "HDI CSV")->required();
    val_cmd->add_option("--out", val_out, "Output report path");

    // ---- diagnose -------------------------------------------------------
    auto* diag_cmd = app.add_subcommand("diagnose", "Segment diagnostics across epsilon values");
    std::string diag_traces, diag_out = "diagnostics.csv", diag_preset = "un";
    std::vector<int> diag_epsilons{15, 30, 60, 90};
    diag_cmd->add_option("--traces", diag_traces, "Input traces CSV")->required();
    diag_cmd->add_option("--out", diag_out, "Output diagnostics CSV");
    diag_cmd->add_option("--preset", diag_preset, "Base detection preset")
        ->check(CLI::IsMember({"un", "nz", "short"}));
    diag_cmd->add_option("--epsilons", diag_epsilons, "Epsilon values to sweep");

    // ---- pipeline -------------------------------------------------------
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run detect -> aggregate -> calibrate -> "
                                                    "weight -> privatize -> validate");
    PipelineOptions pipe;
    pipe_cmd->add_option("--traces", pipe.traces_path, "Input traces CSV")->required();
    pipe_cmd->add_option("--reference", pipe.reference_path, "Reference annual flows CSV")
        ->required();
    pipe_cmd->add_option("--stats", pipe.stats_path, "Country-year stats CSV")->required();
    pipe_cmd->add_option("--gni", pipe.gni_path, "Per-capita GNI CSV")->required();
    pipe_cmd->add_option("--hdi", pipe.hdi_path, "HDI CSV")->required();
    pipe_cmd->add_option("--out-dir", pipe.out_dir, "Artifact directory")->required();
    pipe_cmd->add_option("--preset", pipe.preset, "Detection preset")
        ->check(CLI::IsMember({"un", "nz", "short"}));
    pipe_cmd->add_option("--start", pipe.start_month, "First month YYYY-MM")->required();
    pipe_cmd->add_option("--end", pipe.end_month, "Last month YYYY-MM")->required();
    pipe_cmd->add_option("--destination", pipe.destination, "Calibration destination")
        ->required();
    pipe_cmd->add_option("--year", pipe.year, "Calibration year")->required();
    pipe_cmd->add_option("--epsilon", pipe.epsilon, "Privacy budget epsilon");
    pipe_cmd->add_option("--delta", pipe.delta, "Privacy parameter delta");
    pipe_cmd->add_option("--plan-years", pipe.plan_years, "Yearly releases in the plan");
    pipe_cmd->add_option("--plan-aggregates", pipe.plan_aggregates,
                         "Aggregates per yearly release");
    pipe_cmd->add_option("--seed", pipe.seed, "Noise seed")->envname("MIGFLOW_SEED");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto& universe = CountryUniverse::default_universe();

        if (synth_cmd->parsed()) {
            synth_cfg.validate();
            const SynthWorld world = generate_world(synth_cfg);
            fs::create_directories(synth_out);
            const auto artifact = [&](const char* name) {
                return (fs::path(synth_out) / name).string();
            };
            save_traces(artifact("traces.csv"), world.traces);
            save_stats(artifact("stats.csv"), world.stats);
            save_gni(artifact("gni.csv"), world.gni);
            save_hdi(artifact("hdi.csv"), world.hdi);
            const FlowTable truth = ground_truth_flows(world);
            save_flow_table(artifact("flows_truth.csv"), truth);
            const AnnualFlows annual = annualize(truth);
            ReferenceFlows reference;
            reference.provenance = "synthetic ground truth";
            reference.entries = annual.values;
            save_reference(artifact("reference.csv"), reference);

            PipelineOptions demo;
            demo.traces_path = artifact("traces.csv");
            demo.reference_path = artifact("reference.csv");
            demo.stats_path = artifact("stats.csv");
            demo.gni_path = artifact("gni.csv");
            demo.hdi_path = artifact("hdi.csv");
            demo.out_dir = (fs::path(synth_out) / "pipeline").string();
            demo.start_month = format_year_month(world.flow_months.first);
            demo.end_month = format_year_month(world.flow_months.last);
            demo.destination = world.calibration_destination.str();
            demo.year = world.flow_months.first.year;
            demo.seed = synth_cfg.seed;
            write_pipeline_config(artifact("pipeline.toml"), demo);
            std::cout << "synth: wrote " << synth_out << " (" << world.traces.size()
                      << " traces, " << world.ground_truth_events.size()
                      << " true events)\n";
        } else if (detect_cmd->parsed()) {
            DetectionParams params = DetectionParams::preset(detect_preset);
            if (detect_epsilon) params.epsilon_days = *detect_epsilon;
            if (detect_min_days) params.min_days = *detect_min_days;
            if (detect_prop) params.prop_days = *detect_prop;
            if (detect_gap) params.max_intersegment_gap_days = *detect_gap;
            params.validate();
            const auto traces = load_traces(detect_traces, universe);
            auto events = detect_all(traces, params, workers);
            std::sort(events.begin(), events.end());
            save_events(detect_out, events);
            std::cout << "detect: " << events.size() << " events from " << traces.size()
                      << " traces\n";
        } else if (agg_cmd->parsed()) {
            const auto events = load_events(agg_events, universe);
            const MonthRange months{parse_year_month(agg_start), parse_year_month(agg_end)};
            FlowTable table = build_flow_table(events, months, universe);
            if (!agg_exclusions.empty()) {
                ExclusionReport report;
                table = apply_exclusions(std::move(table), load_exclusions(agg_exclusions),
                                         &report);
                std::cout << "aggregate: excluded " << report.cells_excluded << " cells ("
                          << report.cells_out_of_range << " listed months out of range)\n";
            }
            if (!agg_impute.empty()) {
                std::vector<YearMonth> months_to_impute;
                for (const auto& m : agg_impute) months_to_impute.push_back(parse_year_month(m));
                ImputeReport report;
                table = impute_months(std::move(table), months_to_impute, &report);
                std::cout << "aggregate: imputed " << report.cells_imputed << " cells, "
                          << report.cells_left_missing.size() << " left missing\n";
            }
            save_flow_table(agg_out, table);
            std::cout << "aggregate: total " << format_double(table.total()) << " events in "
                      << table.entries().size() << " cells\n";
        } else if (weight_cmd->parsed()) {
            const FlowTable table = load_flow_table(weight_in, universe);
            WeightModel model;
            const WeightScheme scheme = parse_weight_scheme(weight_scheme);
            if (scheme == WeightScheme::raw) {
                model = raw_weights();
            } else if (scheme == WeightScheme::coefficient) {
                if (weight_beta <= 0.0) {
                    throw std::invalid_argument("--beta must be > 0 for the coefficient scheme");
                }
                model = coefficient_weights(weight_beta);
            } else {
                if (weight_stats.empty()) {
                    throw std::invalid_argument("--stats is required for this scheme");
                }
                const auto stats = load_stats(weight_stats);
                if (scheme == WeightScheme::penetration) {
                    model = penetration_weights(stats);
                } else {
                    if (weight_gni.empty() || weight_r <= 0.0) {
                        throw std::invalid_argument(
                            "--gni and --r are required for the selection scheme");
                    }
                    std::map<int, double> r_by_year;
                    for (int y = table.months().first.year; y <= table.months().last.year; ++y) {
                        r_by_year[y] = weight_r;
                    }
                    model = selection_weights(stats, income_index(load_gni(weight_gni)),
                                              r_by_year);
                }
            }
            const FlowTable weighted = apply_weights(table, model);
            save_flow_table(weight_out, weighted);
            std::cout << "weight: " << weight_scheme_name(scheme) << " total "
                      << format_double(weighted.total()) << "\n";
        } else if (cal_cmd->parsed()) {
            const FlowTable raw = load_flow_table(cal_flows, universe);
            const auto reference = load_reference(cal_reference, universe);
            const auto stats = load_stats(cal_stats);
            const CountryCode destination{cal_dest};
            const auto result = calibrate_selection_rate(
                flows_by_origin(raw, destination, cal_year),
                reference_by_origin(reference, destination, cal_year),
                penetration_by_country(stats, cal_year), income_index(load_gni(cal_gni)));
            write_calibration_curve(cal_out, result);
            std::cout << "calibrate: r = " << format_double(result.r) << "\n";
        } else if (priv_cmd->parsed()) {
            const FlowTable weighted = load_flow_table(priv_in, universe);
            const double sensitivity = sensitivity_from_release_plan(priv_years, priv_aggregates);
            const double sigma = solve_sigma(priv_epsilon, priv_delta, sensitivity);
            save_flow_table(priv_out, privatize(weighted, sigma, priv_seed));
            std::cout << "privatize: sigma = " << format_double(sigma) << "\n";
        } else if (val_cmd->parsed()) {
            const FlowTable table = load_flow_table(val_flows, universe);
            const auto reference = load_reference(val_reference, universe);
            const auto stats = load_stats(val_stats);
            const auto report = validation_report(annualize(table), reference,
                                                  population_from_stats(stats),
                                                  load_hdi(val_hdi), universe);
            const std::string text = render_validation_report(report);
            std::ofstream out(val_out, std::ios::binary);
            if (!out) throw IngestError(val_out, "cannot open for writing");
            out << text << std::flush;
            std::cout << text;
        } else if (diag_cmd->parsed()) {
            const auto traces = load_traces(diag_traces, universe);
            std::ofstream out(diag_out, std::ios::binary);
            if (!out) throw IngestError(diag_out, "cannot open for writing");
            out << "epsilon_days,n_segments,share_modal_ge_90,share_top2_diff_lt_20,"
                   "mean_complexity,n_migrants\n";
            for (int epsilon : diag_epsilons) {
                DetectionParams params = DetectionParams::preset(diag_preset);
                params.epsilon_days = epsilon;
                params.validate();
                const auto report = segment_diagnostics(traces, params, universe.size());
                out << epsilon << "," << report.n_segments << ","
                    << format_double(report.share_modal_ge_90) << ","
                    << format_double(report.share_top2_diff_lt_20) << ","
                    << format_double(report.mean_complexity) << ","
                    << report.n_migrants_detected << "\n";
            }
            out << std::flush;
            std::cout << "diagnose: wrote " << diag_out << "\n";
        } else if (pipe_cmd->parsed()) {
            pipe.workers = workers;
            return run_pipeline(pipe);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
