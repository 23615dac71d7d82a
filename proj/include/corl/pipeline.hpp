#pragma once

#include <fstream>
#include <optional>

#include "corl/config.hpp"
#include "corl/eval.hpp"

namespace corl {

/// Line-delimited metrics log; one JSON record per line, deterministic
/// number formatting.
class MetricsLogger {
public:
    MetricsLogger() = default;  // disabled
    explicit MetricsLogger(const std::string& path);

    void log_bc(long step, double bc_loss);
    void log_rl(long step, double td_error, double q_data_mean, double q_ood_mean, double regularizer);
    void log_eval(long step, double sr, std::optional<double> ct);

private:
    void write_line(const std::string& line);
    std::unique_ptr<std::ofstream> os_;
};

struct EvalEntry {
    long step = 0;
    double sr = 0.0;
    std::optional<double> ct;
};

/// Index of the best evaluation: max SR, ties broken by lower CT, then
/// earlier step. Throws on an empty log.
int select_best_checkpoint(const std::vector<EvalEntry>& eval_log);

struct BcResult {
    ActorNetwork actor;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Stage 1: behavior cloning from scratch. Writes bc_actor.ckpt and
/// metrics.log into out_dir when non-empty. Deterministic given the seed.
/// On divergence the last good checkpoint is written before aborting.
BcResult train_bc(const OfflineDataset& dataset, const TrainConfig& cfg, const std::string& out_dir = "");

struct RlResult {
    ActorNetwork best_actor;
    ActorNetwork final_actor;
    CriticNetwork final_critic;
    std::vector<EvalEntry> eval_log;
    int best_index = -1;  // into eval_log; -1 when no evaluation ran
    long best_step = 0;
};

/// Stage 2: chunked CalQL offline RL, initialized from the BC actor. The
/// critic and its EMA target are fresh. Actor updates are delayed
/// (cfg.actor_delay); periodic evaluation on eval_env gates best-checkpoint
/// retention (the BC initialization itself is evaluated at step 0).
RlResult train_offline_rl(const OfflineDataset& dataset, const ActorNetwork& bc_actor, const TrainConfig& cfg,
                          Env* eval_env = nullptr, const std::string& out_dir = "",
                          ResetMode eval_mode = ResetMode::IndRandom);

/// Loads an actor checkpoint produced by the pipeline; arch comes from the
/// embedded config text, dims and bounds from the environment spec.
ActorNetwork load_actor_checkpoint(const std::string& path, const EnvSpec& spec);

}  // namespace corl
