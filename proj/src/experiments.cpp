#include "corl/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace corl {

std::string DiversityResult::to_csv() const {
    std::ostringstream os;
    os << "dataset,ind_sr,ood_sr,drop\n";
    for (const DiversityRow* r : {&random_init, &fixed_init})
        os << r->dataset_kind << ',' << format_double(r->sr_ind) << ',' << format_double(r->sr_ood) << ','
           << format_double(r->drop()) << '\n';
    os << "average," << format_double(0.5 * (random_init.sr_ind + fixed_init.sr_ind)) << ','
       << format_double(0.5 * (random_init.sr_ood + fixed_init.sr_ood)) << ','
       << format_double(0.5 * (random_init.drop() + fixed_init.drop())) << '\n';
    return os.str();
}

std::string DiversityResult::to_text() const {
    std::ostringstream os;
    os << "Data diversity (" << env_id << ")\n";
    os << "  dataset   IND SR   OOD SR   drop\n";
    char buf[96];
    for (const DiversityRow* r : {&random_init, &fixed_init}) {
        std::snprintf(buf, sizeof(buf), "  %-8s  %6.3f   %6.3f   %+.3f\n", r->dataset_kind.c_str(), r->sr_ind,
                      r->sr_ood, r->drop());
        os << buf;
    }
    return os.str();
}

DiversityResult diversity_experiment(const std::string& env_id, int n_episodes, int upsample_k,
                                     const TrainConfig& cfg, const std::string& out_dir) {
    DiversityResult result;
    result.env_id = env_id;

    for (ResetMode collect_mode : {ResetMode::IndRandom, ResetMode::IndFixed}) {
        auto env = make_env(env_id);
        OfflineDataset data = collect_demos(*env, n_episodes, collect_mode, upsample_k, cfg.seed, cfg.h, cfg.gamma);

        std::string stage_dir;
        if (!out_dir.empty()) {
            stage_dir = out_dir + "/" + (collect_mode == ResetMode::IndRandom ? "random" : "fixed");
            std::filesystem::create_directories(stage_dir);
            save_dataset(data, stage_dir + "/dataset.jsonl");
        }

        BcResult bc = train_bc(data, cfg);
        auto eval_env = make_env(env_id);
        // IND means the policy's own training distribution: random goals for
        // the random-init dataset, the fixed goal for the fixed-init one.
        RlResult rl = train_offline_rl(data, bc.actor, cfg, eval_env.get(), stage_dir, collect_mode);

        RngStream eval_rng(cfg.seed);
        const std::uint64_t eval_seed = eval_rng.fork("diversity_eval").next_u64();
        EvalReport ind = evaluate(rl.best_actor, *eval_env, cfg.eval_trials, collect_mode, eval_seed);
        EvalReport ood = evaluate(rl.best_actor, *eval_env, cfg.eval_trials, ResetMode::Ood, eval_seed);

        DiversityRow row;
        row.dataset_kind = collect_mode == ResetMode::IndRandom ? "random" : "fixed";
        row.sr_ind = ind.sr;
        row.sr_ood = ood.sr;
        if (collect_mode == ResetMode::IndRandom)
            result.random_init = row;
        else
            result.fixed_init = row;
        if (!stage_dir.empty()) {
            ind.run_id = row.dataset_kind;
            ood.run_id = row.dataset_kind;
            ind.save(stage_dir + "/eval_ind.json");
            ood.save(stage_dir + "/eval_ood.json");
        }
    }
    if (!out_dir.empty()) {
        std::ofstream os(out_dir + "/diversity.csv", std::ios::binary);
        os << result.to_csv();
    }
    return result;
}

std::string ProbeResult::to_csv() const {
    std::ostringstream os;
    os << "h,steps_to_threshold,censored,threshold,true_start_value\n";
    for (const ProbeCurve& c : curves)
        os << c.h << ',' << (c.censored() ? std::string("") : std::to_string(c.steps_to_threshold)) << ','
           << (c.censored() ? "true" : "false") << ',' << format_double(threshold) << ','
           << format_double(true_start_value) << '\n';
    return os.str();
}

ProbeResult value_propagation_probe(const TrainConfig& base_cfg, const std::vector<int>& horizons,
                                    long max_steps, int check_every, const std::string& out_dir) {
    auto env = make_env("chain-sparse");
    const EnvSpec& spec = env->spec();

    ProbeResult result;
    // 20-cell chain, reward collected when stepping off the last cell:
    // the optimal start value is gamma^(chain length - 1).
    result.true_start_value = std::pow(base_cfg.gamma, 19.0);
    result.threshold = 0.5 * result.true_start_value;

    for (int h : horizons) {
        TrainConfig cfg = base_cfg;
        cfg.h = h;
        cfg.alpha = 0.0;
        cfg.validate();

        OfflineDataset data = collect_demos(*env, 30, ResetMode::IndRandom, 0, cfg.seed, h, cfg.gamma);
        const Vec start_state = env->reset(cfg.seed, ResetMode::IndFixed);

        // policy evaluation of the scripted expert: bootstrap chunks come
        // from the expert controller, not a learned actor
        Env* env_ptr = env.get();
        ChunkPolicy expert_policy = [env_ptr, h](const Mat& states) {
            Mat chunks(states.rows() * h, env_ptr->spec().A);
            for (Eigen::Index r = 0; r < states.rows(); ++r) {
                Vec a = env_ptr->expert_action(states.row(r).transpose());
                for (int i = 0; i < h; ++i) chunks.row(r * h + i) = a.transpose();
            }
            return chunks;
        };
        Mat expert_start_chunk = expert_policy(Mat(start_state.transpose()));

        RngStream root(cfg.seed);
        RngStream critic_rng = root.fork("probe_critic");
        RngStream batch_rng = root.fork("probe_batch");
        RngStream ood_rng = root.fork("probe_ood");
        CriticNetwork critic = CriticNetwork::make(spec.S, spec.A, h, cfg.critic_width, cfg.critic_blocks, critic_rng);
        CriticNetwork target = critic;
        nn::AdamState opt(critic.params);
        CalqlConfig calql{cfg.gamma, 0.0, cfg.noise_scale, cfg.n_ood};

        ProbeCurve curve;
        curve.h = h;
        Mat start_states(1, spec.S);
        start_states.row(0) = start_state.transpose();
        for (long step = 1; step <= max_steps; ++step) {
            auto batch = ChunkBatch::from(sample_batch(data, cfg.batch_size, batch_rng));
            CriticLossResult cl =
                critic_loss(batch, critic, target, expert_policy, calql, spec.action_lo, spec.action_hi, ood_rng);
            opt.step(critic.params, cl.grads, cfg.lr_critic);
            nn::ema_update(target.params, critic.params, cfg.tau);
            if (step % check_every == 0) {
                double q = critic.q_values(start_states, expert_start_chunk)(0, h - 1);
                curve.points.push_back({step, q});
                if (q > result.threshold) {
                    curve.steps_to_threshold = step;
                    break;
                }
            }
        }
        result.curves.push_back(std::move(curve));
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(out_dir + "/probe.csv", std::ios::binary);
        os << result.to_csv();
        std::ofstream curve_os(out_dir + "/probe_curves.csv", std::ios::binary);
        curve_os << "h,step,q_start\n";
        for (const ProbeCurve& c : result.curves)
            for (const ProbePoint& p : c.points)
                curve_os << c.h << ',' << p.step << ',' << format_double(p.q_start) << '\n';
    }
    return result;
}

}  // namespace corl
