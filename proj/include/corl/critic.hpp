#pragma once

#include <functional>

#include "corl/data.hpp"
#include "corl/nn/nets.hpp"

namespace corl {

using nn::Mat;

/// Batched view of ChunkSamples, laid out for the network stack. Action
/// rows are sample-major: row b*h + i holds a_{t+i} of sample b.
struct ChunkBatch {
    int B = 0, h = 0, S = 0, A = 0;
    std::vector<Mat> states_at;  // h+1 entries, each B x S (s_{t+i})
    Mat actions;                 // (B*h) x A
    Mat rewards;                 // B x h
    Mat live_reward;             // B x h; 1 while the episode is still running at t+j
    Mat live_boot;               // B x h; col i-1: bootstrap at s_{t+i} allowed
    Mat mc;                      // B x 1 Monte-Carlo return-to-go at s_t
    std::vector<int> valid_len;  // per sample

    const Mat& states0() const { return states_at[0]; }

    static ChunkBatch from(const std::vector<const ChunkSample*>& samples);
    static ChunkBatch from(const std::vector<ChunkSample>& samples);
};

/// Policy hook used for bootstrap targets: maps a stack of states (N x S)
/// to the corresponding action chunks ((N*h) x A).
using ChunkPolicy = std::function<Mat(const Mat& states)>;

/// Causally masked transformer critic. One state token plus h action
/// tokens; Q-head i (0-based) values the action prefix a_{t:t+i+1} and is
/// invariant to later actions.
struct CriticNetwork {
    int S = 0, A = 0, h = 1, width = 64, blocks = 2;
    nn::ParamSet params;
    nn::MlpSpec state_embedder, action_embedder;

    static CriticNetwork make(int S, int A, int h, int width, int blocks, RngStream& rng);

    /// Rebuilds the layer specs for parameters loaded from a checkpoint.
    static CriticNetwork from_params(int S, int A, int h, int width, int blocks, nn::ParamSet params);

    /// Tape forward: states (B x S), actions ((B*h) x A) -> q ((B*h) x 1).
    int forward(nn::Tape& t, int states, int actions, int B, bool trainable) const;

    /// No-grad convenience: returns Q as B x h.
    Mat q_values(const Mat& states, const Mat& actions) const;

    /// Single (s, chunk) evaluation; returns the h prefix Q-values.
    std::vector<double> forward_one(const Vec& s, const std::vector<Vec>& chunk) const;
};

/// Per-prefix TD targets (B x h), Eq.-style discounted reward sums with
/// terminal masking and a full-horizon bootstrap from the target critic on
/// the policy's fresh chunk at s_{t+i}. Gradient-stopped by construction.
Mat chunked_td_targets(const ChunkBatch& batch, const CriticNetwork& target_critic,
                       const ChunkPolicy& policy, double gamma);

struct CriticLossResult {
    double loss = 0.0;
    double td_error = 0.0;      // mean squared TD residual
    double q_data_mean = 0.0;   // mean Q over dataset chunks (all prefixes)
    double q_ood_mean = 0.0;    // mean Q over sampled OOD chunks
    double regularizer = 0.0;   // conservative regularizer value
    nn::Gradients grads;
};

struct CalqlConfig {
    double gamma = 0.99;
    double alpha = 1.0;
    double noise_scale = 0.2;
    int n_ood = 4;
};

/// Conservative regularizer value on a frozen critic (diagnostic /
/// spec-level entry point; critic_loss fuses it into the objective).
double calql_regularizer(const ChunkBatch& batch, const CriticNetwork& critic, const ChunkPolicy& policy,
                         double noise_scale, int n_ood, const Vec& action_lo, const Vec& action_hi,
                         RngStream& rng);

/// Chunked CalQL critic objective: per-prefix MSE against chunked TD
/// targets plus alpha times the conservative regularizer. alpha = 0
/// recovers pure chunked TD.
CriticLossResult critic_loss(const ChunkBatch& batch, const CriticNetwork& critic,
                             const CriticNetwork& target_critic, const ChunkPolicy& policy,
                             const CalqlConfig& cfg, const Vec& action_lo, const Vec& action_hi,
                             RngStream& rng);

/// OOD action chunks for the regularizer: half policy + clipped Gaussian
/// noise, half uniform over the action box. Returns n_ood stacked copies,
/// each (B*h) x A.
Mat sample_ood_chunks(const ChunkBatch& batch, const ChunkPolicy& policy, double noise_scale, int n_ood,
                      const Vec& action_lo, const Vec& action_hi, RngStream& rng);

}  // namespace corl
