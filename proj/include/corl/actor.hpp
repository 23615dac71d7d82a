#pragma once

#include "corl/critic.hpp"
#include "corl/env.hpp"

namespace corl {

enum class ExecMode { OpenLoopChunk, RecedingOne };

const char* exec_mode_name(ExecMode mode);
ExecMode exec_mode_from_name(const std::string& name);

/// Deterministic chunked policy: MLP from state to h*A outputs, tanh
/// squashed to the per-dimension action bounds.
struct ActorNetwork {
    int S = 0, A = 0, h = 1;
    std::vector<int> hidden;
    Vec action_lo, action_hi;
    nn::ParamSet params;
    nn::MlpSpec trunk;

    static ActorNetwork make(int S, int A, int h, const std::vector<int>& hidden, const Vec& lo, const Vec& hi,
                             RngStream& rng);
    static ActorNetwork from_params(int S, int A, int h, const std::vector<int>& hidden, const Vec& lo,
                                    const Vec& hi, nn::ParamSet params);

    /// Tape forward: states (B x S) -> squashed chunk matrix (B x h*A).
    int forward(nn::Tape& t, int states, bool trainable) const;

    /// No-grad: (B x S) -> (B*h) x A, directly consumable by the critic.
    Mat chunk_matrix(const Mat& states) const;

    /// Chunk for a single state.
    std::vector<Vec> action_chunk(const Vec& s) const;

    /// Bootstrap policy hook for TD targets.
    ChunkPolicy as_policy() const;
};

struct ActorLossResult {
    double loss = 0.0;
    nn::Gradients grads;
};

/// Mean squared error against expert chunks over valid (unpadded) steps
/// only. Throws DataError if the batch has no valid steps.
ActorLossResult bc_loss(const ChunkBatch& batch, const ActorNetwork& actor);

/// L(psi) = -(1/h) * mean over batch sum_i Q_theta(s_t, a_hat_{t:t+i});
/// gradients flow through the actor only, the critic is frozen.
ActorLossResult actor_rl_loss(const ChunkBatch& batch, const ActorNetwork& actor, const CriticNetwork& critic);

struct RolloutResult {
    Episode episode;
    bool success = false;
    int steps = 0;          // env steps taken (success step included)
    int actor_queries = 0;  // decision points
};

/// Runs the actor in the environment. open_loop_chunk executes all h
/// actions per query; receding_one re-plans every step.
RolloutResult rollout(const ActorNetwork& actor, Env& env, std::uint64_t seed, ResetMode mode, ExecMode exec);

}  // namespace corl
