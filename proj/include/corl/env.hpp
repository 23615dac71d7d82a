#pragma once

#include <memory>
#include <string>
#include <vector>

#include "corl/data.hpp"

namespace corl {

enum class ResetMode { IndRandom, IndFixed, Ood };

const char* reset_mode_name(ResetMode mode);
ResetMode reset_mode_from_name(const std::string& name);

/// Axis-aligned box in goal-parameter space.
struct Box {
    Vec lo, hi;
    bool contains(const Vec& p) const {
        for (int i = 0; i < lo.size(); ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
    Vec center() const { return 0.5 * (lo + hi); }
};

struct EnvSpec {
    std::string env_id;
    int S = 0;
    int A = 0;
    Vec action_lo, action_hi;  // per-dimension bounds
    int max_steps = 0;
    Box init_region_ind;  // goal-parameter boxes; IND and OOD are disjoint
    Box init_region_ood;
};

struct StepResult {
    Vec next_state;
    double reward = 0.0;
    bool done = false;
    bool success = false;
    bool clamped = false;  // diagnostics: action was clamped to bounds
};

/// Deterministic, seedable sparse-reward environment. Success is evaluated
/// on the state at the decision point; the success step carries reward 1 and
/// terminates the episode.
class Env {
public:
    virtual ~Env() = default;

    const EnvSpec& spec() const { return spec_; }

    Vec reset(std::uint64_t seed, ResetMode mode);
    StepResult step(const Vec& state, const Vec& action);

    virtual Vec expert_action(const Vec& state) const = 0;

    /// Goal parameters drawn at the last reset (for region-membership tests).
    const Vec& last_init_params() const { return last_params_; }

protected:
    virtual Vec make_initial_state(const Vec& params) const = 0;
    virtual Vec dynamics(const Vec& state, const Vec& action) const = 0;
    virtual bool success_predicate(const Vec& state) const = 0;

    EnvSpec spec_;
    int steps_taken_ = 0;
    Vec last_params_;
};

std::unique_ptr<Env> make_env(const std::string& env_id);
std::vector<std::string> registered_env_ids();

/// Runs the scripted expert for n_episodes and packages the result as an
/// OfflineDataset with chunking parameters (h, gamma). On success episodes,
/// appends upsample_k extra hold-position steps each carrying reward 1
/// before the terminal done (Reward Upsampling).
OfflineDataset collect_demos(Env& env, int n_episodes, ResetMode mode, int upsample_k, std::uint64_t seed,
                             int h, double gamma);

}  // namespace corl
