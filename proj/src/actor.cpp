#include "corl/actor.hpp"

#include <cmath>
#include <numeric>

namespace corl {

using nn::Tape;

const char* exec_mode_name(ExecMode mode) {
    return mode == ExecMode::OpenLoopChunk ? "open_loop_chunk" : "receding_one";
}

ExecMode exec_mode_from_name(const std::string& name) {
    if (name == "open_loop_chunk") return ExecMode::OpenLoopChunk;
    if (name == "receding_one") return ExecMode::RecedingOne;
    throw DataError(DataError::Kind::BadArgument, "unknown exec mode: " + name);
}

ActorNetwork ActorNetwork::make(int S, int A, int h, const std::vector<int>& hidden, const Vec& lo,
                                const Vec& hi, RngStream& rng) {
    ActorNetwork a;
    a.S = S;
    a.A = A;
    a.h = h;
    a.hidden = hidden;
    a.action_lo = lo;
    a.action_hi = hi;
    std::vector<int> dims;
    dims.push_back(S);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(h * A);
    a.trunk = {"actor", dims};
    nn::init_mlp(a.params, a.trunk, rng);
    return a;
}

ActorNetwork ActorNetwork::from_params(int S, int A, int h, const std::vector<int>& hidden, const Vec& lo,
                                       const Vec& hi, nn::ParamSet params) {
    RngStream dummy(0);
    ActorNetwork a = make(S, A, h, hidden, lo, hi, dummy);
    if (!a.params.same_layout(params)) throw ShapeError("ActorNetwork", "checkpoint layout mismatch");
    a.params = std::move(params);
    return a;
}

int ActorNetwork::forward(Tape& t, int states, bool trainable) const {
    if (t.val(states).cols() != S) throw ShapeError("actor", "state dimension mismatch");
    int y = t.tanh_op(nn::mlp_forward(t, params, trunk, states, trainable));
    // per-dimension squash: center + halfrange * tanh, tiled over the h steps
    Mat center(1, static_cast<Eigen::Index>(h) * A), halfrange(1, static_cast<Eigen::Index>(h) * A);
    for (int i = 0; i < h; ++i)
        for (int a = 0; a < A; ++a) {
            center(0, static_cast<Eigen::Index>(i) * A + a) = 0.5 * (action_hi[a] + action_lo[a]);
            halfrange(0, static_cast<Eigen::Index>(i) * A + a) = 0.5 * (action_hi[a] - action_lo[a]);
        }
    return t.add_rowvec(t.mul_rowvec(y, t.constant(std::move(halfrange))), t.constant(std::move(center)));
}

Mat ActorNetwork::chunk_matrix(const Mat& states) const {
    Tape t;
    int out = forward(t, t.constant(states), /*trainable=*/false);
    int rows = t.chunk_rows(out, h, A);
    return t.val(rows);
}

std::vector<Vec> ActorNetwork::action_chunk(const Vec& s) const {
    Mat states(1, S);
    states.row(0) = s.transpose();
    Mat m = chunk_matrix(states);
    std::vector<Vec> chunk(h);
    for (int i = 0; i < h; ++i) chunk[i] = m.row(i).transpose();
    return chunk;
}

ChunkPolicy ActorNetwork::as_policy() const {
    return [this](const Mat& states) { return chunk_matrix(states); };
}

ActorLossResult bc_loss(const ChunkBatch& batch, const ActorNetwork& actor) {
    const int B = batch.B, h = batch.h, A = batch.A;
    const long n_valid = std::accumulate(batch.valid_len.begin(), batch.valid_len.end(), 0L);
    if (n_valid == 0) throw DataError(DataError::Kind::BadArgument, "batch has no valid steps");

    // expert chunks and validity mask, flattened to B x h*A
    Mat target(B, static_cast<Eigen::Index>(h) * A), mask(B, static_cast<Eigen::Index>(h) * A);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < h; ++i)
            for (int a = 0; a < A; ++a) {
                target(b, static_cast<Eigen::Index>(i) * A + a) = batch.actions(static_cast<Eigen::Index>(b) * h + i, a);
                mask(b, static_cast<Eigen::Index>(i) * A + a) = (i < batch.valid_len[b]) ? 1.0 : 0.0;
            }

    Tape t;
    int pred = actor.forward(t, t.constant(batch.states0()), /*trainable=*/true);
    int diff = t.sub(pred, t.constant(std::move(target)));
    int sq = t.cmul(diff, diff);
    int masked = t.cmul(sq, t.constant(std::move(mask)));
    int loss = t.scale(t.sum_all(masked), 1.0 / (static_cast<double>(A) * static_cast<double>(n_valid)));
    t.backward(loss);

    ActorLossResult out;
    out.loss = t.scalar(loss);
    out.grads = t.param_grads(actor.params);
    out.grads.check_finite();
    return out;
}

ActorLossResult actor_rl_loss(const ChunkBatch& batch, const ActorNetwork& actor, const CriticNetwork& critic) {
    Tape t;
    int pred = actor.forward(t, t.constant(batch.states0()), /*trainable=*/true);
    int chunk = t.chunk_rows(pred, actor.h, actor.A);
    int q = critic.forward(t, t.constant(batch.states0()), chunk, batch.B, /*trainable=*/false);
    int loss = t.scale(t.mean_all(q), -1.0);
    t.backward(loss);

    ActorLossResult out;
    out.loss = t.scalar(loss);
    if (!std::isfinite(out.loss)) throw TrainingAbort("non-finite actor loss");
    out.grads = t.param_grads(actor.params);
    out.grads.check_finite();
    return out;
}

RolloutResult rollout(const ActorNetwork& actor, Env& env, std::uint64_t seed, ResetMode mode, ExecMode exec) {
    RolloutResult r;
    r.episode.env_id = env.spec().env_id;
    r.episode.init_mode = (mode == ResetMode::IndFixed) ? InitMode::Fixed : InitMode::Random;
    Vec state = env.reset(seed, mode);
    bool done = false;
    while (!done) {
        std::vector<Vec> chunk = actor.action_chunk(state);
        ++r.actor_queries;
        const int to_exec = (exec == ExecMode::OpenLoopChunk) ? actor.h : 1;
        for (int i = 0; i < to_exec && !done; ++i) {
            StepResult sr = env.step(state, chunk[i]);
            r.episode.steps.push_back({state, chunk[i], sr.reward, sr.done});
            ++r.steps;
            if (sr.success) r.success = true;
            state = sr.next_state;
            done = sr.done;
        }
    }
    r.episode.success = r.success;
    return r;
}

}  // namespace corl
