#include "corl/critic.hpp"

#include <algorithm>
#include <cmath>

namespace corl {

using nn::Tape;

namespace {

ChunkBatch build_batch(const ChunkSample* const* samples, int B) {
    if (B == 0) throw DataError(DataError::Kind::BadArgument, "empty batch");
    ChunkBatch b;
    b.B = B;
    b.h = static_cast<int>(samples[0]->actions.size());
    b.S = static_cast<int>(samples[0]->states[0].size());
    b.A = static_cast<int>(samples[0]->actions[0].size());
    b.states_at.assign(b.h + 1, Mat(B, b.S));
    b.actions.resize(static_cast<Eigen::Index>(B) * b.h, b.A);
    b.rewards.resize(B, b.h);
    b.live_reward.resize(B, b.h);
    b.live_boot.resize(B, b.h);
    b.mc.resize(B, 1);
    b.valid_len.resize(B);
    for (int i = 0; i < B; ++i) {
        const ChunkSample& c = *samples[i];
        for (int j = 0; j <= b.h; ++j) b.states_at[j].row(i) = c.states[j].transpose();
        for (int j = 0; j < b.h; ++j) {
            b.actions.row(static_cast<Eigen::Index>(i) * b.h + j) = c.actions[j].transpose();
            b.rewards(i, j) = c.rewards[j];
            b.live_reward(i, j) = (j == 0 || !c.done_mask[j - 1]) ? 1.0 : 0.0;
            b.live_boot(i, j) = c.done_mask[j] ? 0.0 : 1.0;
        }
        b.mc(i, 0) = c.mc_return;
        b.valid_len[i] = c.valid_len;
    }
    return b;
}

}  // namespace

ChunkBatch ChunkBatch::from(const std::vector<const ChunkSample*>& samples) {
    return build_batch(samples.data(), static_cast<int>(samples.size()));
}

ChunkBatch ChunkBatch::from(const std::vector<ChunkSample>& samples) {
    std::vector<const ChunkSample*> ptrs;
    ptrs.reserve(samples.size());
    for (const auto& s : samples) ptrs.push_back(&s);
    return build_batch(ptrs.data(), static_cast<int>(ptrs.size()));
}

CriticNetwork CriticNetwork::make(int S, int A, int h, int width, int blocks, RngStream& rng) {
    CriticNetwork c;
    c.S = S;
    c.A = A;
    c.h = h;
    c.width = width;
    c.blocks = blocks;
    c.state_embedder = {"se", {S, width, width}};
    c.action_embedder = {"ae", {A, width, width}};
    nn::init_mlp(c.params, c.state_embedder, rng);
    nn::init_mlp(c.params, c.action_embedder, rng);
    // learned per-position offsets for the h action tokens
    c.params.add("pos", 0.02 * nn::glorot(h, width, rng));
    for (int b = 0; b < blocks; ++b) nn::init_attention_block(c.params, "blk" + std::to_string(b), width, rng);
    // Zero-init head so Q starts at 0; value must propagate from rewards.
    c.params.add("qh.W", Mat::Zero(width, 1));
    c.params.add("qh.b", Mat::Zero(1, 1));
    return c;
}

CriticNetwork CriticNetwork::from_params(int S, int A, int h, int width, int blocks, nn::ParamSet params) {
    RngStream dummy(0);
    CriticNetwork c = make(S, A, h, width, blocks, dummy);
    if (!c.params.same_layout(params)) throw ShapeError("CriticNetwork", "checkpoint layout mismatch");
    c.params = std::move(params);
    return c;
}

int CriticNetwork::forward(Tape& t, int states, int actions, int B, bool trainable) const {
    if (t.val(states).cols() != S) throw ShapeError("critic.state", "state dimension mismatch");
    if (t.val(actions).cols() != A) throw ShapeError("critic.action", "action dimension mismatch");
    if (t.val(actions).rows() != static_cast<Eigen::Index>(B) * h)
        throw ShapeError("critic.action", "action row count != B*h");

    const int T = h + 1;
    int se = nn::mlp_forward(t, params, state_embedder, states, trainable);
    int ae = nn::mlp_forward(t, params, action_embedder, actions, trainable);
    int pos = t.tile_rows(t.param(params, "pos", trainable), B);
    ae = t.add(ae, pos);

    // interleave: token row b*T is the state, rows b*T+1.. are the actions
    std::vector<int> perm(static_cast<std::size_t>(B) * T);
    for (int b = 0; b < B; ++b) {
        perm[static_cast<std::size_t>(b) * T] = b;
        for (int i = 0; i < h; ++i) perm[static_cast<std::size_t>(b) * T + 1 + i] = B + b * h + i;
    }
    int tokens = t.select_rows(t.vstack({se, ae}), std::move(perm));

    for (int b = 0; b < blocks; ++b)
        tokens = nn::attention_block_forward(t, params, "blk" + std::to_string(b), tokens, T, /*causal=*/true,
                                             trainable);

    std::vector<int> action_rows(static_cast<std::size_t>(B) * h);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < h; ++i) action_rows[static_cast<std::size_t>(b) * h + i] = b * T + 1 + i;
    int heads_in = t.select_rows(tokens, std::move(action_rows));
    return t.add_rowvec(t.matmul(heads_in, t.param(params, "qh.W", trainable)),
                        t.param(params, "qh.b", trainable));
}

Mat CriticNetwork::q_values(const Mat& states, const Mat& actions) const {
    Tape t;
    int q = forward(t, t.constant(states), t.constant(actions), static_cast<int>(states.rows()),
                    /*trainable=*/false);
    const Mat& flat = t.val(q);
    Mat out(states.rows(), h);
    for (Eigen::Index b = 0; b < states.rows(); ++b)
        for (int i = 0; i < h; ++i) out(b, i) = flat(b * h + i, 0);
    return out;
}

std::vector<double> CriticNetwork::forward_one(const Vec& s, const std::vector<Vec>& chunk) const {
    if (static_cast<int>(chunk.size()) != h) throw ShapeError("critic", "chunk length != h");
    Mat states(1, S);
    states.row(0) = s.transpose();
    Mat actions(h, A);
    for (int i = 0; i < h; ++i) actions.row(i) = chunk[i].transpose();
    Mat q = q_values(states, actions);
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) out[i] = q(0, i);
    return out;
}

Mat chunked_td_targets(const ChunkBatch& batch, const CriticNetwork& target_critic,
                       const ChunkPolicy& policy, double gamma) {
    const int B = batch.B, h = batch.h;

    // Full-horizon bootstrap Q at every s_{t+i}, i = 1..h, in one batched pass.
    Mat states_stack(static_cast<Eigen::Index>(h) * B, batch.S);
    for (int i = 1; i <= h; ++i) states_stack.middleRows(static_cast<Eigen::Index>(i - 1) * B, B) = batch.states_at[i];
    Mat chunks = policy(states_stack);
    Mat qboot = target_critic.q_values(states_stack, chunks);  // (h*B) x h

    Mat targets(B, h);
    for (int b = 0; b < B; ++b) {
        double acc = 0.0;
        double g = 1.0;
        for (int i = 1; i <= h; ++i) {
            acc += g * batch.rewards(b, i - 1) * batch.live_reward(b, i - 1);
            g *= gamma;
            double boot = batch.live_boot(b, i - 1) * qboot(static_cast<Eigen::Index>(i - 1) * B + b, h - 1);
            targets(b, i - 1) = acc + g * boot;
        }
    }
    return targets;
}

Mat sample_ood_chunks(const ChunkBatch& batch, const ChunkPolicy& policy, double noise_scale, int n_ood,
                      const Vec& action_lo, const Vec& action_hi, RngStream& rng) {
    if (n_ood < 1) throw DataError(DataError::Kind::BadArgument, "n_ood must be >= 1");
    const int B = batch.B, h = batch.h, A = batch.A;
    const int n_policy = n_ood / 2;
    Mat policy_chunks;
    if (n_policy > 0) policy_chunks = policy(batch.states0());  // (B*h) x A

    Mat out(static_cast<Eigen::Index>(n_ood) * B * h, A);
    for (int c = 0; c < n_ood; ++c) {
        for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(B) * h; ++r) {
            for (int a = 0; a < A; ++a) {
                double v;
                if (c < n_policy) {
                    v = policy_chunks(r, a) + rng.normal(0.0, noise_scale);
                    v = std::clamp(v, action_lo[a], action_hi[a]);
                } else {
                    v = rng.uniform(action_lo[a], action_hi[a]);
                }
                out(static_cast<Eigen::Index>(c) * B * h + r, a) = v;
            }
        }
    }
    return out;
}

namespace {

// Shared graph construction for the regularizer; returns the node ids so
// critic_loss can fuse it with the TD term on one tape.
struct RegNodes {
    int reg = -1;       // scalar regularizer node
    int q_ood_mean = -1;
};

RegNodes build_regularizer(Tape& t, const ChunkBatch& batch, const CriticNetwork& critic, int q_data,
                           const Mat& ood_actions, int n_ood, bool trainable) {
    const int B = batch.B, h = batch.h;
    // states tiled per OOD copy, matching the row layout of ood_actions
    Mat states_tiled(static_cast<Eigen::Index>(n_ood) * B, batch.S);
    for (int c = 0; c < n_ood; ++c) states_tiled.middleRows(static_cast<Eigen::Index>(c) * B, B) = batch.states0();
    int q_ood = critic.forward(t, t.constant(states_tiled), t.constant(ood_actions), n_ood * B, trainable);

    // V^mu reference per row: the sample's Monte-Carlo return
    Mat vmu(static_cast<Eigen::Index>(n_ood) * B * h, 1);
    for (int c = 0; c < n_ood; ++c)
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < h; ++i)
                vmu(static_cast<Eigen::Index>(c) * B * h + static_cast<Eigen::Index>(b) * h + i, 0) = batch.mc(b, 0);

    RegNodes n;
    n.q_ood_mean = t.mean_all(q_ood);
    int pushed = t.mean_all(t.max_with_const(q_ood, std::move(vmu)));
    int data_term = t.mean_all(q_data);
    n.reg = t.sub(pushed, data_term);
    return n;
}

}  // namespace

double calql_regularizer(const ChunkBatch& batch, const CriticNetwork& critic, const ChunkPolicy& policy,
                         double noise_scale, int n_ood, const Vec& action_lo, const Vec& action_hi,
                         RngStream& rng) {
    Tape t;
    int q_data = critic.forward(t, t.constant(batch.states0()), t.constant(batch.actions), batch.B,
                                /*trainable=*/false);
    Mat ood = sample_ood_chunks(batch, policy, noise_scale, n_ood, action_lo, action_hi, rng);
    RegNodes n = build_regularizer(t, batch, critic, q_data, ood, n_ood, /*trainable=*/false);
    return t.scalar(n.reg);
}

CriticLossResult critic_loss(const ChunkBatch& batch, const CriticNetwork& critic,
                             const CriticNetwork& target_critic, const ChunkPolicy& policy,
                             const CalqlConfig& cfg, const Vec& action_lo, const Vec& action_hi,
                             RngStream& rng) {
    const int B = batch.B, h = batch.h;
    Mat targets = chunked_td_targets(batch, target_critic, policy, cfg.gamma);
    Mat targets_flat(static_cast<Eigen::Index>(B) * h, 1);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < h; ++i) targets_flat(static_cast<Eigen::Index>(b) * h + i, 0) = targets(b, i);

    Tape t;
    int q_data = critic.forward(t, t.constant(batch.states0()), t.constant(batch.actions), B,
                                /*trainable=*/true);
    int resid = t.sub(q_data, t.constant(targets_flat));
    int td = t.mean_all(t.cmul(resid, resid));

    CriticLossResult out;
    int loss = td;
    if (cfg.alpha != 0.0) {
        Mat ood = sample_ood_chunks(batch, policy, cfg.noise_scale, cfg.n_ood, action_lo, action_hi, rng);
        RegNodes reg = build_regularizer(t, batch, critic, q_data, ood, cfg.n_ood, /*trainable=*/true);
        loss = t.add(td, t.scale(reg.reg, cfg.alpha));
        t.backward(loss);
        out.regularizer = t.scalar(reg.reg);
        out.q_ood_mean = t.scalar(reg.q_ood_mean);
    } else {
        t.backward(loss);
        // still report OOD diagnostics on a frozen side pass
        Mat ood = sample_ood_chunks(batch, policy, cfg.noise_scale, cfg.n_ood, action_lo, action_hi, rng);
        Mat states_tiled(static_cast<Eigen::Index>(cfg.n_ood) * B, batch.S);
        for (int c = 0; c < cfg.n_ood; ++c)
            states_tiled.middleRows(static_cast<Eigen::Index>(c) * B, B) = batch.states0();
        Tape side;
        int q_ood = critic.forward(side, side.constant(states_tiled), side.constant(ood), cfg.n_ood * B,
                                   /*trainable=*/false);
        out.q_ood_mean = side.scalar(side.mean_all(q_ood));
        out.regularizer = 0.0;
    }
    out.loss = t.scalar(loss);
    out.td_error = t.scalar(td);
    out.q_data_mean = t.val(q_data).mean();
    out.grads = t.param_grads(critic.params);
    out.grads.check_finite();
    if (!std::isfinite(out.loss))
        throw TrainingAbort("non-finite critic loss (batch size " + std::to_string(B) + ")");
    return out;
}

}  // namespace corl
