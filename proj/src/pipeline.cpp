#include "corl/pipeline.hpp"

#include <limits>
#include <sstream>

namespace corl {

MetricsLogger::MetricsLogger(const std::string& path) {
    if (path.empty()) return;
    os_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*os_) throw DataError(DataError::Kind::Io, "cannot open metrics log: " + path);
}

void MetricsLogger::write_line(const std::string& line) {
    if (!os_) return;
    *os_ << line << '\n';
    os_->flush();
}

void MetricsLogger::log_bc(long step, double bc_loss) {
    write_line("{\"step\":" + std::to_string(step) + ",\"bc_loss\":" + format_double(bc_loss) + "}");
}

void MetricsLogger::log_rl(long step, double td_error, double q_data_mean, double q_ood_mean,
                           double regularizer) {
    write_line("{\"step\":" + std::to_string(step) + ",\"td_error\":" + format_double(td_error) +
               ",\"q_data_mean\":" + format_double(q_data_mean) + ",\"q_ood_mean\":" + format_double(q_ood_mean) +
               ",\"regularizer\":" + format_double(regularizer) + "}");
}

void MetricsLogger::log_eval(long step, double sr, std::optional<double> ct) {
    std::string line = "{\"step\":" + std::to_string(step) + ",\"sr\":" + format_double(sr);
    if (ct) line += ",\"ct\":" + format_double(*ct);
    line += "}";
    write_line(line);
}

int select_best_checkpoint(const std::vector<EvalEntry>& eval_log) {
    if (eval_log.empty()) throw DataError(DataError::Kind::BadArgument, "empty evaluation log");
    int best = 0;
    for (int i = 1; i < static_cast<int>(eval_log.size()); ++i) {
        const EvalEntry& a = eval_log[i];
        const EvalEntry& b = eval_log[best];
        if (a.sr > b.sr) {
            best = i;
        } else if (a.sr == b.sr) {
            const double act = a.ct.value_or(std::numeric_limits<double>::infinity());
            const double bct = b.ct.value_or(std::numeric_limits<double>::infinity());
            if (act < bct) best = i;  // equal CT keeps the earlier entry
        }
    }
    return best;
}

namespace {

void check_dataset_dims(const OfflineDataset& dataset, const TrainConfig& cfg) {
    if (dataset.chunks.empty()) throw DataError(DataError::Kind::BadArgument, "dataset has no chunks");
    if (dataset.h != cfg.h)
        throw ConfigError("dataset chunk horizon h=" + std::to_string(dataset.h) +
                          " does not match config h=" + std::to_string(cfg.h));
    if (dataset.gamma != cfg.gamma)
        throw ConfigError("dataset gamma does not match config gamma");
}

Vec action_bounds_lo(const EnvSpec& spec) { return spec.action_lo; }

}  // namespace

BcResult train_bc(const OfflineDataset& dataset, const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    check_dataset_dims(dataset, cfg);
    auto env = make_env(dataset.env_id);
    const EnvSpec& spec = env->spec();

    RngStream root(cfg.seed);
    RngStream init_rng = root.fork("bc_init");
    RngStream batch_rng = root.fork("bc_batch");

    ActorNetwork actor = ActorNetwork::make(spec.S, spec.A, cfg.h, cfg.actor_hidden_dims(),
                                            action_bounds_lo(spec), spec.action_hi, init_rng);
    nn::AdamState opt(actor.params);
    MetricsLogger log(out_dir.empty() ? "" : out_dir + "/metrics.log");

    BcResult result{actor, 0.0, 0.0};
    const std::string cfg_text = cfg.serialize();
    for (long step = 1; step <= cfg.bc_steps; ++step) {
        auto batch = ChunkBatch::from(sample_batch(dataset, cfg.batch_size, batch_rng));
        ActorLossResult l;
        try {
            l = bc_loss(batch, actor);
            opt.step(actor.params, l.grads, cfg.lr_actor);
        } catch (const TrainingAbort& e) {
            if (!out_dir.empty()) nn::save_checkpoint(out_dir + "/bc_actor.ckpt", actor.params, cfg_text);
            throw TrainingAbort(std::string("behavior cloning diverged at step ") + std::to_string(step) + ": " +
                                    e.what(),
                                step);
        }
        if (step == 1) result.initial_loss = l.loss;
        result.final_loss = l.loss;
        if (step % cfg.log_every == 0 || step == cfg.bc_steps) log.log_bc(step, l.loss);
    }
    result.actor = actor;
    if (!out_dir.empty()) nn::save_checkpoint(out_dir + "/bc_actor.ckpt", actor.params, cfg_text);
    return result;
}

RlResult train_offline_rl(const OfflineDataset& dataset, const ActorNetwork& bc_actor, const TrainConfig& cfg,
                          Env* eval_env, const std::string& out_dir, ResetMode eval_mode) {
    cfg.validate();
    check_dataset_dims(dataset, cfg);
    if (bc_actor.S != static_cast<int>(dataset.S) || bc_actor.A != dataset.A || bc_actor.h != cfg.h)
        throw ConfigError("BC actor dimensions do not match dataset/config");

    RngStream root(cfg.seed);
    RngStream critic_rng = root.fork("critic_init");
    RngStream batch_rng = root.fork("rl_batch");
    RngStream ood_rng = root.fork("ood");
    RngStream eval_seed_rng = root.fork("eval");
    const std::uint64_t eval_seed = eval_seed_rng.next_u64();

    ActorNetwork actor = bc_actor;
    CriticNetwork critic =
        CriticNetwork::make(bc_actor.S, bc_actor.A, cfg.h, cfg.critic_width, cfg.critic_blocks, critic_rng);
    CriticNetwork target_critic = critic;

    nn::AdamState opt_actor(actor.params);
    nn::AdamState opt_critic(critic.params);
    MetricsLogger log(out_dir.empty() ? "" : out_dir + "/metrics.log");

    CalqlConfig calql{cfg.gamma, cfg.alpha, cfg.noise_scale, cfg.n_ood};
    const Vec& lo = actor.action_lo;
    const Vec& hi = actor.action_hi;

    RlResult result{actor, actor, critic, {}, -1, 0};
    std::vector<nn::ParamSet> snapshots;  // actor params at each eval
    std::vector<long> snapshot_steps;

    auto run_eval = [&](long step) {
        if (!eval_env) return;
        EvalReport rep = evaluate(actor, *eval_env, cfg.eval_trials, eval_mode, eval_seed);
        result.eval_log.push_back({step, rep.sr, rep.ct});
        snapshots.push_back(actor.params);
        snapshot_steps.push_back(step);
        log.log_eval(step, rep.sr, rep.ct);
    };

    run_eval(0);  // the BC initialization is a candidate checkpoint

    const std::string cfg_text = cfg.serialize();
    for (long step = 1; step <= cfg.rl_steps; ++step) {
        auto batch = ChunkBatch::from(sample_batch(dataset, cfg.batch_size, batch_rng));
        try {
            CriticLossResult cl =
                critic_loss(batch, critic, target_critic, actor.as_policy(), calql, lo, hi, ood_rng);
            opt_critic.step(critic.params, cl.grads, cfg.lr_critic);
            if (step % cfg.actor_delay == 0) {
                ActorLossResult al = actor_rl_loss(batch, actor, critic);
                opt_actor.step(actor.params, al.grads, cfg.lr_actor);
                nn::ema_update(target_critic.params, critic.params, cfg.tau);
            }
            if (step % cfg.log_every == 0 || step == cfg.rl_steps)
                log.log_rl(step, cl.td_error, cl.q_data_mean, cl.q_ood_mean, cl.regularizer);
        } catch (const TrainingAbort& e) {
            throw TrainingAbort("offline RL aborted at step " + std::to_string(step) + ": " + e.what(), step);
        }
        if (cfg.eval_every > 0 && step % cfg.eval_every == 0) run_eval(step);
    }
    if (eval_env && (cfg.rl_steps % cfg.eval_every != 0)) run_eval(cfg.rl_steps);

    result.final_actor = actor;
    result.final_critic = critic;
    if (!result.eval_log.empty()) {
        result.best_index = select_best_checkpoint(result.eval_log);
        result.best_step = snapshot_steps[result.best_index];
        result.best_actor =
            ActorNetwork::from_params(actor.S, actor.A, actor.h, actor.hidden, actor.action_lo, actor.action_hi,
                                      snapshots[result.best_index]);
    } else {
        result.best_actor = actor;
    }

    if (!out_dir.empty()) {
        nn::save_checkpoint(out_dir + "/best_actor.ckpt", result.best_actor.params, cfg_text);
        nn::save_checkpoint(out_dir + "/final_actor.ckpt", result.final_actor.params, cfg_text);
        nn::save_checkpoint(out_dir + "/final_critic.ckpt", result.final_critic.params, cfg_text);
    }
    return result;
}

ActorNetwork load_actor_checkpoint(const std::string& path, const EnvSpec& spec) {
    std::string cfg_text;
    nn::ParamSet params = nn::load_checkpoint(path, &cfg_text);
    TrainConfig cfg = TrainConfig::parse_text(cfg_text);
    return ActorNetwork::from_params(spec.S, spec.A, cfg.h, cfg.actor_hidden_dims(), spec.action_lo,
                                     spec.action_hi, std::move(params));
}

}  // namespace corl
