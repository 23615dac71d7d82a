#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corl/errors.hpp"

namespace corl {

/// All training hyperparameters. Serialized as a plain "key = value" file;
/// unknown keys are rejected with the list of valid ones.
struct TrainConfig {
    double gamma = 0.99;
    int h = 4;
    double alpha = 1.0;
    double tau = 0.005;
    double lr_actor = 3e-4;
    double lr_critic = 3e-4;
    int batch_size = 64;
    int bc_steps = 2000;
    int rl_steps = 5000;
    int actor_delay = 2;
    double noise_scale = 0.2;
    int n_ood = 4;
    int eval_every = 500;
    std::uint64_t seed = 1;
    int critic_width = 64;
    int critic_blocks = 2;
    int actor_hidden = 128;
    int actor_layers = 2;
    int eval_trials = 40;
    int log_every = 10;

    void validate() const;

    /// Canonical serialization (fixed key order); also the checkpoint-hash text.
    std::string serialize() const;

    static TrainConfig parse_text(const std::string& text);
    static TrainConfig load_file(const std::string& path);
    void apply_override(const std::string& key, const std::string& value);

    static const std::vector<std::string>& known_keys();

    std::vector<int> actor_hidden_dims() const { return std::vector<int>(actor_layers, actor_hidden); }
};

}  // namespace corl
