#pragma once

#include <optional>

#include "corl/actor.hpp"

namespace corl {

struct TrialRecord {
    std::uint64_t seed = 0;
    bool success = false;
    int steps = 0;
};

/// Success rate / cycle time evaluation report. sr is the exact rational
/// successes/n_trials; ct (mean steps over successful trials) is absent
/// when no trial succeeded.
struct EvalReport {
    std::string run_id;
    std::string env_id;
    std::string mode;  // "ind_random", "ind_fixed" or "ood"
    std::string exec = "open_loop_chunk";
    int n_trials = 0;
    int successes = 0;
    double sr = 0.0;
    std::optional<double> ct;
    std::uint64_t seed = 0;
    std::vector<TrialRecord> trials;

    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
    void save(const std::string& path) const;
    static EvalReport load(const std::string& path);
};

EvalReport evaluate(const ActorNetwork& actor, Env& env, int n_trials, ResetMode mode, std::uint64_t seed,
                    ExecMode exec = ExecMode::OpenLoopChunk);

/// CSV row schema: run_id,env_id,mode,n_trials,sr,ct,seed (ct empty when absent).
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& r);

struct TrainingCurve {
    std::string run_id;
    std::vector<long> steps;
    std::vector<double> values;
};

/// Renders the comparison artifacts for a set of runs: report.csv with one
/// row per EvalReport, SR bar charts per env/mode, a CT bar chart omitting
/// runs without a CT, and TD-error training curves when metrics logs are
/// present. File bytes are deterministic for fixed inputs.
void compare_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

/// Minimal deterministic SVG bar chart.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double y_max);

/// Deterministic SVG polyline chart (one line per curve).
std::string svg_line_chart(const std::string& title, const std::vector<TrainingCurve>& curves);

}  // namespace corl
