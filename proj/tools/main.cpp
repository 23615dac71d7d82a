#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "corl/experiments.hpp"

namespace fs = std::filesystem;
using namespace corl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

// Run directories are never silently overwritten.
void prepare_out_dir(const std::string& out, bool force) {
    fs::path p(out);
    if (fs::exists(p) && !fs::is_empty(p)) {
        if (!force) throw ConfigError("output directory exists and is not empty (use --force): " + out);
        fs::remove_all(p);
    }
    fs::create_directories(p);
}

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::load_file(path);
    for (const std::string& ov : overrides) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + ov);
        cfg.apply_override(ov.substr(0, eq), ov.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void write_config_snapshot(const TrainConfig& cfg, const std::string& out) {
    std::ofstream os(out + "/config.cfg", std::ios::binary);
    os << cfg.serialize();
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_config = true) {
    if (with_config) {
        cmd->add_option("--config", o.config_path, "Config file (key = value lines)");
        cmd->add_option("--override", o.overrides, "Config overrides, key=value")->take_all();
    }
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_flag("--force", o.force, "Overwrite an existing non-empty output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chunked offline RL engine: demonstration collection, two-stage training, evaluation"};
    app.require_subcommand(1);

    // ---- collect ----
    auto* collect = app.add_subcommand("collect", "Record scripted-expert demonstrations");
    CommonOpts collect_o;
    std::string collect_env, collect_mode = "ind_random";
    int collect_episodes = 30, collect_upsample = 5, collect_h = 4;
    double collect_gamma = 0.99;
    std::uint64_t collect_seed = 1;
    collect->add_option("--env", collect_env, "Environment id")->required();
    collect->add_option("--episodes", collect_episodes, "Number of episodes");
    collect->add_option("--mode", collect_mode, "Reset mode: ind_random | ind_fixed | ood");
    collect->add_option("--upsample", collect_upsample, "Reward-upsampling count");
    collect->add_option("--horizon", collect_h, "Chunk horizon stored with the dataset");
    collect->add_option("--gamma", collect_gamma, "Discount used for Monte-Carlo returns");
    collect->add_option("--seed", collect_seed, "Seed");
    add_common(collect, collect_o, /*with_config=*/false);

    // ---- train-bc ----
    auto* train_bc_cmd = app.add_subcommand("train-bc", "Stage 1: behavior cloning");
    CommonOpts bc_o;
    std::string bc_data;
    train_bc_cmd->add_option("--data", bc_data, "Dataset file")->required();
    add_common(train_bc_cmd, bc_o);

    // ---- train-rl ----
    auto* train_rl_cmd = app.add_subcommand("train-rl", "Stage 2: chunked CalQL offline RL");
    CommonOpts rl_o;
    std::string rl_data, rl_bc_ckpt;
    train_rl_cmd->add_option("--data", rl_data, "Dataset file")->required();
    train_rl_cmd->add_option("--bc-checkpoint", rl_bc_ckpt, "Stage-1 actor checkpoint")->required();
    add_common(train_rl_cmd, rl_o);

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate an actor checkpoint");
    CommonOpts eval_o;
    std::string eval_ckpt, eval_env, eval_mode = "ind_random", eval_exec = "open_loop_chunk", eval_run_id;
    int eval_trials = 40;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Actor checkpoint")->required();
    eval_cmd->add_option("--env", eval_env, "Environment id")->required();
    eval_cmd->add_option("--trials", eval_trials, "Number of trials");
    eval_cmd->add_option("--mode", eval_mode, "Reset mode: ind_random | ind_fixed | ood");
    eval_cmd->add_option("--exec", eval_exec, "Execution mode: open_loop_chunk | receding_one");
    eval_cmd->add_option("--seed", eval_seed, "Seed");
    eval_cmd->add_option("--run-id", eval_run_id, "Run id written into the report");
    add_common(eval_cmd, eval_o, /*with_config=*/false);

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "Render CSV + SVG comparison artifacts");
    CommonOpts report_o;
    std::vector<std::string> report_runs;
    report_cmd->add_option("--runs", report_runs, "Run directories")->required()->take_all();
    add_common(report_cmd, report_o, /*with_config=*/false);

    // ---- probe ----
    auto* probe_cmd = app.add_subcommand("probe", "Value-propagation probe on chain-sparse");
    CommonOpts probe_o;
    std::vector<int> probe_h = {1, 2, 4};
    long probe_budget = 8000;
    int probe_check = 25;
    probe_cmd->add_option("--horizons", probe_h, "Chunk horizons to compare")->take_all();
    probe_cmd->add_option("--budget", probe_budget, "Gradient-step budget per horizon");
    probe_cmd->add_option("--check-every", probe_check, "Probe cadence in gradient steps");
    add_common(probe_cmd, probe_o);

    // ---- diversity ----
    auto* div_cmd = app.add_subcommand("diversity", "Fixed- vs random-init data diversity experiment");
    CommonOpts div_o;
    std::string div_env = "point-reach-2d";
    int div_episodes = 30, div_upsample = 5;
    div_cmd->add_option("--env", div_env, "Environment id");
    div_cmd->add_option("--episodes", div_episodes, "Episodes per dataset");
    div_cmd->add_option("--upsample", div_upsample, "Reward-upsampling count");
    add_common(div_cmd, div_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*collect) {
            prepare_out_dir(collect_o.out, collect_o.force);
            auto env = make_env(collect_env);
            OfflineDataset data = collect_demos(*env, collect_episodes, reset_mode_from_name(collect_mode),
                                                collect_upsample, collect_seed, collect_h, collect_gamma);
            save_dataset(data, collect_o.out + "/dataset.jsonl");
            std::cout << "collected " << data.episodes.size() << " episodes (" << data.num_chunks()
                      << " chunks) -> " << collect_o.out << "/dataset.jsonl\n";
            if (!data.warning.empty()) std::cout << "warning: " << data.warning << "\n";
        } else if (*train_bc_cmd) {
            TrainConfig cfg = load_config(bc_o.config_path, bc_o.overrides);
            prepare_out_dir(bc_o.out, bc_o.force);
            write_config_snapshot(cfg, bc_o.out);
            OfflineDataset data = load_dataset(bc_data);
            BcResult r = train_bc(data, cfg, bc_o.out);
            std::cout << "bc done: initial loss " << r.initial_loss << ", final loss " << r.final_loss << " -> "
                      << bc_o.out << "/bc_actor.ckpt\n";
        } else if (*train_rl_cmd) {
            TrainConfig cfg = load_config(rl_o.config_path, rl_o.overrides);
            prepare_out_dir(rl_o.out, rl_o.force);
            write_config_snapshot(cfg, rl_o.out);
            OfflineDataset data = load_dataset(rl_data);
            auto env = make_env(data.env_id);
            ActorNetwork bc_actor = load_actor_checkpoint(rl_bc_ckpt, env->spec());
            RlResult r = train_offline_rl(data, bc_actor, cfg, env.get(), rl_o.out);
            std::cout << "rl done: best checkpoint from step " << r.best_step;
            if (r.best_index >= 0) std::cout << " (sr " << r.eval_log[r.best_index].sr << ")";
            std::cout << " -> " << rl_o.out << "/best_actor.ckpt\n";
        } else if (*eval_cmd) {
            prepare_out_dir(eval_o.out, eval_o.force);
            auto env = make_env(eval_env);
            ActorNetwork actor = load_actor_checkpoint(eval_ckpt, env->spec());
            EvalReport rep = evaluate(actor, *env, eval_trials, reset_mode_from_name(eval_mode), eval_seed,
                                      exec_mode_from_name(eval_exec));
            rep.run_id = eval_run_id.empty() ? fs::path(eval_o.out).filename().string() : eval_run_id;
            rep.save(eval_o.out + "/eval_" + eval_mode + ".json");
            std::ofstream csv(eval_o.out + "/eval.csv", std::ios::binary);
            csv << eval_csv_header() << '\n' << eval_csv_row(rep) << '\n';
            std::cout << "sr " << rep.sr;
            if (rep.ct) std::cout << ", ct " << *rep.ct;
            std::cout << " over " << rep.n_trials << " trials\n";
        } else if (*report_cmd) {
            prepare_out_dir(report_o.out, report_o.force);
            compare_report(report_runs, report_o.out);
            std::cout << "report written to " << report_o.out << "\n";
        } else if (*probe_cmd) {
            TrainConfig cfg = load_config(probe_o.config_path, probe_o.overrides);
            prepare_out_dir(probe_o.out, probe_o.force);
            write_config_snapshot(cfg, probe_o.out);
            ProbeResult r = value_propagation_probe(cfg, probe_h, probe_budget, probe_check, probe_o.out);
            for (const ProbeCurve& c : r.curves) {
                std::cout << "h=" << c.h << ": ";
                if (c.censored())
                    std::cout << "censored (no crossing within budget)\n";
                else
                    std::cout << c.steps_to_threshold << " steps to 50% of true start value\n";
            }
        } else if (*div_cmd) {
            TrainConfig cfg = load_config(div_o.config_path, div_o.overrides);
            prepare_out_dir(div_o.out, div_o.force);
            write_config_snapshot(cfg, div_o.out);
            DiversityResult r = diversity_experiment(div_env, div_episodes, div_upsample, cfg, div_o.out);
            std::cout << r.to_text();
        }
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const TrainingAbort& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTraining;
    }
    return kExitOk;
}
