#pragma once

#include "corl/pipeline.hpp"

namespace corl {

struct DiversityRow {
    std::string dataset_kind;  // "random" or "fixed"
    double sr_ind = 0.0;
    double sr_ood = 0.0;
    double drop() const { return sr_ood - sr_ind; }  // negative = degradation
};

struct DiversityResult {
    std::string env_id;
    DiversityRow random_init;
    DiversityRow fixed_init;
    std::string to_csv() const;
    std::string to_text() const;
};

/// Data-diversity experiment: trains the full two-stage pipeline on a
/// fixed-init and a random-init dataset of equal size, then evaluates both
/// IND and OOD.
DiversityResult diversity_experiment(const std::string& env_id, int n_episodes, int upsample_k,
                                     const TrainConfig& cfg, const std::string& out_dir = "");

struct ProbePoint {
    long step = 0;
    double q_start = 0.0;
};

struct ProbeCurve {
    int h = 1;
    std::vector<ProbePoint> points;
    long steps_to_threshold = -1;  // -1 = censored (never crossed within budget)
    bool censored() const { return steps_to_threshold < 0; }
};

struct ProbeResult {
    double true_start_value = 0.0;
    double threshold = 0.0;
    std::vector<ProbeCurve> curves;
    std::string to_csv() const;
};

/// Value-propagation probe on the sparse chain: trains chunked critics with
/// h in {1,2,4} on identical demo data (alpha = 0, bootstrap under the
/// scripted expert) and records gradient steps until the critic's start-state
/// Q exceeds 50% of the true discounted return.
ProbeResult value_propagation_probe(const TrainConfig& base_cfg, const std::vector<int>& horizons,
                                    long max_steps, int check_every, const std::string& out_dir = "");

}  // namespace corl
