#include "corl/env.hpp"

#include <algorithm>
#include <cmath>

namespace corl {

const char* reset_mode_name(ResetMode mode) {
    switch (mode) {
        case ResetMode::IndRandom: return "ind_random";
        case ResetMode::IndFixed: return "ind_fixed";
        case ResetMode::Ood: return "ood";
    }
    return "?";
}

ResetMode reset_mode_from_name(const std::string& name) {
    if (name == "ind_random") return ResetMode::IndRandom;
    if (name == "ind_fixed") return ResetMode::IndFixed;
    if (name == "ood") return ResetMode::Ood;
    throw DataError(DataError::Kind::BadArgument, "unknown reset mode: " + name);
}

Vec Env::reset(std::uint64_t seed, ResetMode mode) {
    steps_taken_ = 0;
    const Box& box = (mode == ResetMode::Ood) ? spec_.init_region_ood : spec_.init_region_ind;
    if (mode == ResetMode::IndFixed) {
        last_params_ = box.center();
    } else {
        RngStream rng(seed ^ (mode == ResetMode::Ood ? 0x00d00dULL : 0x1adULL));
        last_params_ = Vec(box.lo.size());
        for (int i = 0; i < box.lo.size(); ++i) last_params_[i] = rng.uniform(box.lo[i], box.hi[i]);
    }
    return make_initial_state(last_params_);
}

StepResult Env::step(const Vec& state, const Vec& action) {
    if (state.size() != spec_.S)
        throw DataError(DataError::Kind::DimensionMismatch, "state dimension mismatch in step()");
    if (action.size() != spec_.A)
        throw DataError(DataError::Kind::DimensionMismatch, "action dimension mismatch in step()");
    ++steps_taken_;

    StepResult r;
    if (success_predicate(state)) {
        r.next_state = state;
        r.reward = 1.0;
        r.done = true;
        r.success = true;
        return r;
    }
    Vec a = action;
    for (int i = 0; i < a.size(); ++i) {
        double c = std::clamp(a[i], spec_.action_lo[i], spec_.action_hi[i]);
        if (c != a[i]) r.clamped = true;
        a[i] = c;
    }
    r.next_state = dynamics(state, a);
    r.reward = 0.0;
    r.done = steps_taken_ >= spec_.max_steps;
    return r;
}

namespace {

// 20-cell discrete chain; state is the cell index as a scalar. Actions are
// rounded to {-1, 0, +1}; reward 1 when stepping from the last cell. The
// start cell is the init parameter (IND pinned at 0 so the optimal start
// value is in closed form; OOD starts mid-chain).
class ChainSparseEnv : public Env {
public:
    static constexpr int kCells = 20;

    ChainSparseEnv() {
        spec_.env_id = "chain-sparse";
        spec_.S = 1;
        spec_.A = 1;
        spec_.action_lo = Vec::Constant(1, -1.0);
        spec_.action_hi = Vec::Constant(1, 1.0);
        spec_.max_steps = 40;
        spec_.init_region_ind = {Vec::Constant(1, 0.0), Vec::Constant(1, 0.0)};
        spec_.init_region_ood = {Vec::Constant(1, 10.0), Vec::Constant(1, 18.0)};
    }

    Vec expert_action(const Vec&) const override { return Vec::Constant(1, 1.0); }

protected:
    Vec make_initial_state(const Vec& params) const override {
        return Vec::Constant(1, std::floor(params[0]));
    }
    Vec dynamics(const Vec& state, const Vec& action) const override {
        double move = std::round(action[0]);
        double cell = std::clamp(state[0] + move, 0.0, double(kCells - 1));
        return Vec::Constant(1, cell);
    }
    bool success_predicate(const Vec& state) const override { return state[0] >= kCells - 1; }
};

// 2-D point mass; state = (pos, goal). Velocity action integrated with a
// fixed step; success when the agent sits within 0.05 of the goal.
class PointReachEnv : public Env {
public:
    static constexpr double kDt = 0.05;
    static constexpr double kGoalRadius = 0.05;

    PointReachEnv() {
        spec_.env_id = "point-reach-2d";
        spec_.S = 4;
        spec_.A = 2;
        spec_.action_lo = Vec::Constant(2, -1.0);
        spec_.action_hi = Vec::Constant(2, 1.0);
        spec_.max_steps = 60;
        spec_.init_region_ind = {Vec::Constant(2, 0.2), Vec::Constant(2, 0.8)};
        spec_.init_region_ood = {Vec::Constant(2, -0.3), Vec::Constant(2, 0.1)};
    }

    Vec expert_action(const Vec& state) const override {
        // Full speed toward the goal, exact stop on the last move.
        Vec a(2);
        for (int i = 0; i < 2; ++i) a[i] = std::clamp((state[2 + i] - state[i]) / kDt, -1.0, 1.0);
        return a;
    }

protected:
    Vec make_initial_state(const Vec& goal) const override {
        Vec s(4);
        s[0] = 0.0;
        s[1] = 0.0;
        s[2] = goal[0];
        s[3] = goal[1];
        return s;
    }
    Vec dynamics(const Vec& state, const Vec& action) const override {
        Vec s = state;
        s[0] += kDt * action[0];
        s[1] += kDt * action[1];
        return s;
    }
    bool success_predicate(const Vec& state) const override {
        double dx = state[0] - state[2], dy = state[1] - state[3];
        return std::sqrt(dx * dx + dy * dy) < kGoalRadius;
    }
};

// Multi-phase pick task; state = (hand xyz, grip, object xyz, held flag).
// The object is grasped when the open hand closes near it and follows the
// hand afterwards; success once the held object is above the lift height.
class GraspLiftEnv : public Env {
public:
    static constexpr double kDt = 0.05;
    static constexpr double kGripRate = 0.25;
    static constexpr double kGraspRadius = 0.06;
    static constexpr double kGripClose = 0.7;
    static constexpr double kGripRelease = 0.5;
    static constexpr double kTableZ = 0.05;
    static constexpr double kLiftHeight = 0.4;

    GraspLiftEnv() {
        spec_.env_id = "grasp-lift-toy";
        spec_.S = 8;
        spec_.A = 4;
        spec_.action_lo = Vec::Constant(4, -1.0);
        spec_.action_hi = Vec::Constant(4, 1.0);
        spec_.max_steps = 60;
        spec_.init_region_ind = {Vec::Constant(2, 0.2), Vec::Constant(2, 0.6)};
        spec_.init_region_ood = {Vec::Constant(2, -0.5), Vec::Constant(2, -0.1)};
    }

    Vec expert_action(const Vec& state) const override {
        Vec hand = state.segment(0, 3);
        double grip = state[3];
        Vec obj = state.segment(4, 3);
        bool held = state[7] > 0.5;
        Vec a = Vec::Zero(4);
        if (held) {
            a[2] = 1.0;  // lift
            a[3] = 1.0;  // keep closed
        } else if ((hand - obj).norm() > 0.02) {
            for (int i = 0; i < 3; ++i) a[i] = std::clamp((obj[i] - hand[i]) / kDt, -1.0, 1.0);
            a[3] = grip > 0.0 ? -1.0 : 0.0;  // approach with an open hand
        } else {
            a[3] = 1.0;  // close the grip in place
        }
        return a;
    }

protected:
    Vec make_initial_state(const Vec& obj_xy) const override {
        Vec s(8);
        s << 0.0, 0.0, 0.3, 0.0, obj_xy[0], obj_xy[1], kTableZ, 0.0;
        return s;
    }
    Vec dynamics(const Vec& state, const Vec& action) const override {
        Vec s = state;
        s.segment(0, 3) += kDt * action.segment(0, 3);
        s[3] = std::clamp(s[3] + kGripRate * action[3], 0.0, 1.0);
        bool held = s[7] > 0.5;
        if (held && s[3] < kGripRelease) {
            held = false;  // dropped: object falls back to the table
            s[6] = kTableZ;
        }
        if (!held && s[3] > kGripClose && (s.segment(0, 3) - s.segment(4, 3)).norm() < kGraspRadius) {
            held = true;
        }
        if (held) s.segment(4, 3) = s.segment(0, 3);
        s[7] = held ? 1.0 : 0.0;
        return s;
    }
    bool success_predicate(const Vec& state) const override {
        return state[7] > 0.5 && state[6] > kLiftHeight;
    }
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& env_id) {
    if (env_id == "chain-sparse") return std::make_unique<ChainSparseEnv>();
    if (env_id == "point-reach-2d") return std::make_unique<PointReachEnv>();
    if (env_id == "grasp-lift-toy") return std::make_unique<GraspLiftEnv>();
    throw ConfigError("unknown env_id: " + env_id);
}

std::vector<std::string> registered_env_ids() {
    return {"chain-sparse", "point-reach-2d", "grasp-lift-toy"};
}

OfflineDataset collect_demos(Env& env, int n_episodes, ResetMode mode, int upsample_k, std::uint64_t seed,
                             int h, double gamma) {
    if (n_episodes < 1) throw DataError(DataError::Kind::BadArgument, "n_episodes must be >= 1");
    if (upsample_k < 0) throw DataError(DataError::Kind::BadArgument, "upsample_k must be >= 0");

    OfflineDataset d;
    d.env_id = env.spec().env_id;
    d.S = env.spec().S;
    d.A = env.spec().A;
    d.h = h;
    d.gamma = gamma;

    int successes = 0;
    for (int e = 0; e < n_episodes; ++e) {
        Episode ep;
        ep.env_id = d.env_id;
        ep.init_mode = (mode == ResetMode::IndFixed) ? InitMode::Fixed : InitMode::Random;
        Vec state = env.reset(seed + static_cast<std::uint64_t>(e), mode);
        while (true) {
            Vec action = env.expert_action(state);
            StepResult r = env.step(state, action);
            ep.steps.push_back({state, action, r.reward, r.done});
            if (r.success) ep.success = true;
            state = r.next_state;
            if (r.done) break;
        }
        if (ep.success) {
            ++successes;
            if (upsample_k > 0) {
                Step& last = ep.steps.back();
                last.done = false;
                const Vec hold_state = last.state;
                for (int k = 0; k < upsample_k; ++k)
                    ep.steps.push_back({hold_state, Vec::Zero(d.A), 1.0, k == upsample_k - 1});
            }
        }
        d.episodes.push_back(std::move(ep));
    }
    if (successes * 2 < n_episodes)
        d.warning = "expert success rate below 50% during collection";
    d.rebuild_chunks();
    return d;
}

}  // namespace corl
