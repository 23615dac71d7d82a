#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "corl/experiments.hpp"

namespace py = pybind11;
using namespace corl;

PYBIND11_MODULE(_corl, m) {
    m.doc() = "Chunked offline RL engine";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TrainingAbort>(m, "TrainingAbort", PyExc_RuntimeError);

    // --- data ---
    py::class_<Step>(m, "Step")
        .def(py::init<>())
        .def_readwrite("state", &Step::state)
        .def_readwrite("action", &Step::action)
        .def_readwrite("reward", &Step::reward)
        .def_readwrite("done", &Step::done);

    py::class_<Episode>(m, "Episode")
        .def(py::init<>())
        .def_readwrite("env_id", &Episode::env_id)
        .def_readwrite("steps", &Episode::steps)
        .def_readwrite("success", &Episode::success)
        .def_property_readonly("length", &Episode::length);

    py::class_<ChunkSample>(m, "ChunkSample")
        .def_readonly("states", &ChunkSample::states)
        .def_readonly("actions", &ChunkSample::actions)
        .def_readonly("rewards", &ChunkSample::rewards)
        .def_readonly("done_mask", &ChunkSample::done_mask)
        .def_readonly("mc_return", &ChunkSample::mc_return)
        .def_readonly("valid_len", &ChunkSample::valid_len);

    py::class_<OfflineDataset>(m, "OfflineDataset")
        .def(py::init<>())
        .def_readwrite("env_id", &OfflineDataset::env_id)
        .def_readwrite("S", &OfflineDataset::S)
        .def_readwrite("A", &OfflineDataset::A)
        .def_readwrite("h", &OfflineDataset::h)
        .def_readwrite("gamma", &OfflineDataset::gamma)
        .def_readwrite("episodes", &OfflineDataset::episodes)
        .def_readonly("chunks", &OfflineDataset::chunks)
        .def_readonly("warning", &OfflineDataset::warning)
        .def("num_chunks", &OfflineDataset::num_chunks)
        .def("rebuild_chunks", &OfflineDataset::rebuild_chunks);

    m.def("mc_return_to_go", &mc_return_to_go, py::arg("episode"), py::arg("gamma"));
    m.def("make_chunks", &make_chunks, py::arg("episode"), py::arg("h"), py::arg("gamma"));
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
    m.def("load_dataset", &load_dataset, py::arg("path"));

    // --- envs ---
    py::class_<EnvSpec>(m, "EnvSpec")
        .def_readonly("env_id", &EnvSpec::env_id)
        .def_readonly("S", &EnvSpec::S)
        .def_readonly("A", &EnvSpec::A)
        .def_readonly("action_lo", &EnvSpec::action_lo)
        .def_readonly("action_hi", &EnvSpec::action_hi)
        .def_readonly("max_steps", &EnvSpec::max_steps);

    py::class_<StepResult>(m, "StepResult")
        .def_readonly("next_state", &StepResult::next_state)
        .def_readonly("reward", &StepResult::reward)
        .def_readonly("done", &StepResult::done)
        .def_readonly("success", &StepResult::success);

    py::class_<Env>(m, "Env")
        .def_property_readonly("spec", &Env::spec)
        .def(
            "reset",
            [](Env& e, std::uint64_t seed, const std::string& mode) {
                return e.reset(seed, reset_mode_from_name(mode));
            },
            py::arg("seed"), py::arg("mode") = "ind_random")
        .def("step", &Env::step, py::arg("state"), py::arg("action"))
        .def("expert_action", &Env::expert_action, py::arg("state"));

    m.def("make_env", &make_env, py::arg("env_id"));
    m.def("registered_env_ids", &registered_env_ids);
    m.def(
        "collect_demos",
        [](Env& env, int n_episodes, const std::string& mode, int upsample_k, std::uint64_t seed, int h,
           double gamma) {
            return collect_demos(env, n_episodes, reset_mode_from_name(mode), upsample_k, seed, h, gamma);
        },
        py::arg("env"), py::arg("n_episodes"), py::arg("mode") = "ind_random", py::arg("upsample_k") = 5,
        py::arg("seed") = 1, py::arg("h") = 4, py::arg("gamma") = 0.99);

    // --- config ---
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("h", &TrainConfig::h)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("tau", &TrainConfig::tau)
        .def_readwrite("lr_actor", &TrainConfig::lr_actor)
        .def_readwrite("lr_critic", &TrainConfig::lr_critic)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("bc_steps", &TrainConfig::bc_steps)
        .def_readwrite("rl_steps", &TrainConfig::rl_steps)
        .def_readwrite("actor_delay", &TrainConfig::actor_delay)
        .def_readwrite("noise_scale", &TrainConfig::noise_scale)
        .def_readwrite("n_ood", &TrainConfig::n_ood)
        .def_readwrite("eval_every", &TrainConfig::eval_every)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("critic_width", &TrainConfig::critic_width)
        .def_readwrite("critic_blocks", &TrainConfig::critic_blocks)
        .def_readwrite("actor_hidden", &TrainConfig::actor_hidden)
        .def_readwrite("actor_layers", &TrainConfig::actor_layers)
        .def_readwrite("eval_trials", &TrainConfig::eval_trials)
        .def_readwrite("log_every", &TrainConfig::log_every)
        .def("validate", &TrainConfig::validate)
        .def("serialize", &TrainConfig::serialize)
        .def_static("load_file", &TrainConfig::load_file)
        .def("apply_override", &TrainConfig::apply_override, py::arg("key"), py::arg("value"));

    // --- actor / training / eval ---
    py::class_<ActorNetwork>(m, "ActorNetwork")
        .def_readonly("S", &ActorNetwork::S)
        .def_readonly("A", &ActorNetwork::A)
        .def_readonly("h", &ActorNetwork::h)
        .def("action_chunk", &ActorNetwork::action_chunk, py::arg("state"));

    py::class_<BcResult>(m, "BcResult")
        .def_readonly("actor", &BcResult::actor)
        .def_readonly("initial_loss", &BcResult::initial_loss)
        .def_readonly("final_loss", &BcResult::final_loss);

    py::class_<EvalEntry>(m, "EvalEntry")
        .def_readonly("step", &EvalEntry::step)
        .def_readonly("sr", &EvalEntry::sr)
        .def_readonly("ct", &EvalEntry::ct);

    py::class_<RlResult>(m, "RlResult")
        .def_readonly("best_actor", &RlResult::best_actor)
        .def_readonly("final_actor", &RlResult::final_actor)
        .def_readonly("eval_log", &RlResult::eval_log)
        .def_readonly("best_index", &RlResult::best_index)
        .def_readonly("best_step", &RlResult::best_step);

    m.def("train_bc", &train_bc, py::arg("dataset"), py::arg("cfg"), py::arg("out_dir") = "");
    m.def(
        "train_offline_rl",
        [](const OfflineDataset& data, const ActorNetwork& bc_actor, const TrainConfig& cfg, Env* eval_env,
           const std::string& out_dir) { return train_offline_rl(data, bc_actor, cfg, eval_env, out_dir); },
        py::arg("dataset"), py::arg("bc_actor"), py::arg("cfg"), py::arg("eval_env") = nullptr,
        py::arg("out_dir") = "");
    m.def("load_actor_checkpoint", &load_actor_checkpoint, py::arg("path"), py::arg("spec"));

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("run_id", &EvalReport::run_id)
        .def_readonly("env_id", &EvalReport::env_id)
        .def_readonly("mode", &EvalReport::mode)
        .def_readonly("n_trials", &EvalReport::n_trials)
        .def_readonly("successes", &EvalReport::successes)
        .def_readonly("sr", &EvalReport::sr)
        .def_readonly("ct", &EvalReport::ct)
        .def("to_json", &EvalReport::to_json)
        .def("save", &EvalReport::save);

    m.def(
        "evaluate",
        [](const ActorNetwork& actor, Env& env, int n_trials, const std::string& mode, std::uint64_t seed,
           const std::string& exec) {
            return evaluate(actor, env, n_trials, reset_mode_from_name(mode), seed, exec_mode_from_name(exec));
        },
        py::arg("actor"), py::arg("env"), py::arg("n_trials") = 40, py::arg("mode") = "ind_random",
        py::arg("seed") = 1, py::arg("exec") = "open_loop_chunk");
}
