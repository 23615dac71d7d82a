#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corl/actor.hpp"
#include "corl/eval.hpp"

using namespace corl;

namespace {

ActorNetwork make_actor(int S, int A, int h, std::uint64_t seed = 1) {
    RngStream rng(seed);
    return ActorNetwork::make(S, A, h, {16}, Vec::Constant(A, -0.3), Vec::Constant(A, 0.7), rng);
}

ChunkSample demo_sample(int h, int S, int A, RngStream& rng) {
    ChunkSample c;
    for (int i = 0; i <= h; ++i) {
        Vec s(S);
        for (int d = 0; d < S; ++d) s[d] = rng.normal();
        c.states.push_back(s);
    }
    for (int i = 0; i < h; ++i) {
        Vec a(A);
        for (int d = 0; d < A; ++d) a[d] = rng.uniform(-0.3, 0.7);
        c.actions.push_back(a);
    }
    c.rewards.assign(h, 0.0);
    c.done_mask.assign(h, false);
    c.done_mask[h - 1] = true;
    c.valid_len = h;
    c.mc_return = 0.0;
    return c;
}

}  // namespace

TEST_CASE("actor output respects asymmetric action bounds") {
    ActorNetwork actor = make_actor(3, 2, 4);
    RngStream rng(2);
    for (int k = 0; k < 200; ++k) {
        Vec s(3);
        s << rng.normal() * 10, rng.normal() * 10, rng.normal() * 10;
        auto chunk = actor.action_chunk(s);
        REQUIRE(chunk.size() == 4);
        for (const Vec& a : chunk) {
            CHECK(a.minCoeff() >= -0.3);
            CHECK(a.maxCoeff() <= 0.7);
        }
    }
}

TEST_CASE("chunk_matrix agrees with action_chunk") {
    ActorNetwork actor = make_actor(2, 2, 3);
    Mat states(2, 2);
    states << 0.1, -0.4, 1.2, 0.3;
    Mat cm = actor.chunk_matrix(states);
    REQUIRE(cm.rows() == 6);
    for (int b = 0; b < 2; ++b) {
        auto chunk = actor.action_chunk(states.row(b).transpose());
        for (int i = 0; i < 3; ++i)
            for (int d = 0; d < 2; ++d) CHECK(cm(b * 3 + i, d) == chunk[i][d]);
    }
}

TEST_CASE("bc loss averages over valid steps only") {
    const int h = 3, S = 2, A = 2;
    ActorNetwork actor = make_actor(S, A, h);
    RngStream rng(3);

    // one fully valid sample and one padded to valid_len 1
    ChunkSample full = demo_sample(h, S, A, rng);
    ChunkSample part = demo_sample(h, S, A, rng);
    part.valid_len = 1;
    for (int i = 1; i < h; ++i) part.actions[i].setZero();

    ChunkBatch batch = ChunkBatch::from(std::vector<ChunkSample>{full, part});
    double loss = bc_loss(batch, actor).loss;

    // recompute by hand: sum of squared errors over valid steps / (A * n_valid)
    double sse = 0;
    int n_valid = 0;
    auto add = [&](const ChunkSample& c) {
        auto pred = actor.action_chunk(c.states[0]);
        for (int i = 0; i < c.valid_len; ++i) {
            sse += (pred[i] - c.actions[i]).squaredNorm();
            ++n_valid;
        }
    };
    add(full);
    add(part);
    CHECK(loss == doctest::Approx(sse / (A * n_valid)).epsilon(1e-12));

    // padded actions must not contribute: perturbing them changes nothing
    ChunkBatch batch2 = batch;
    batch2.actions.row(h + 1).array() += 5.0;  // sample 1, padded position 1
    CHECK(bc_loss(batch2, actor).loss == doctest::Approx(loss).epsilon(1e-15));
}

TEST_CASE("bc loss rejects a batch with no valid steps") {
    const int h = 2, S = 1, A = 1;
    ActorNetwork actor = make_actor(S, A, h);
    RngStream rng(4);
    ChunkSample c = demo_sample(h, S, A, rng);
    c.valid_len = 0;
    CHECK_THROWS_AS(bc_loss(ChunkBatch::from(std::vector<ChunkSample>{c}), actor), DataError);
}

TEST_CASE("bc training reduces loss") {
    const int h = 2, S = 1, A = 1;
    ActorNetwork actor = make_actor(S, A, h);
    RngStream rng(5);
    std::vector<ChunkSample> ss;
    for (int i = 0; i < 16; ++i) {
        ChunkSample c = demo_sample(h, S, A, rng);
        // learnable target: a fixed function of the state
        for (int j = 0; j < h; ++j)
            c.actions[j] = (0.2 * c.states[0]).cwiseMin(0.7).cwiseMax(-0.3) * (j + 1) * 0.5;
        ss.push_back(c);
    }
    ChunkBatch batch = ChunkBatch::from(ss);
    nn::AdamState adam(actor.params);
    double first = bc_loss(batch, actor).loss, last = first;
    for (int step = 0; step < 200; ++step) {
        ActorLossResult r = bc_loss(batch, actor);
        last = r.loss;
        adam.step(actor.params, r.grads, 1e-2);
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("actor_rl_loss trains the actor and freezes the critic") {
    const int h = 2, S = 2, A = 1;
    ActorNetwork actor = make_actor(S, A, h);
    RngStream rng(6);
    CriticNetwork critic = CriticNetwork::make(S, A, h, 8, 1, rng);
    std::vector<ChunkSample> ss;
    for (int i = 0; i < 4; ++i) ss.push_back(demo_sample(h, S, A, rng));
    ChunkBatch batch = ChunkBatch::from(ss);

    ActorLossResult r = actor_rl_loss(batch, actor, critic);
    // gradient flows into every actor tensor, none into the critic's
    bool actor_grads = true;
    for (const auto& n : actor.params.names()) actor_grads = actor_grads && r.grads.has(n);
    CHECK(actor_grads);
    for (const auto& n : critic.params.names()) CHECK(!r.grads.has(n));

    // loss equals -(mean over B,h of prefix Q at actor actions)
    Mat q = critic.q_values(batch.states0(), actor.chunk_matrix(batch.states0()));
    CHECK(r.loss == doctest::Approx(-q.mean()).epsilon(1e-12));
}

TEST_CASE("rollout query accounting per execution mode") {
    auto env = make_env("chain-sparse");
    ActorNetwork actor = make_actor(env->spec().S, env->spec().A, 4, 9);
    RolloutResult open = rollout(actor, *env, 3, ResetMode::IndRandom, ExecMode::OpenLoopChunk);
    CHECK(open.steps <= env->spec().max_steps);
    CHECK(open.actor_queries == (open.steps + 3) / 4);
    RolloutResult one = rollout(actor, *env, 3, ResetMode::IndRandom, ExecMode::RecedingOne);
    CHECK(one.actor_queries == one.steps);
    // same seed, same trajectory start
    CHECK(open.episode.steps[0].state == one.episode.steps[0].state);
}

TEST_CASE("rollout is deterministic") {
    auto env = make_env("point-reach-2d");
    ActorNetwork actor = make_actor(env->spec().S, env->spec().A, 4, 10);
    RolloutResult a = rollout(actor, *env, 5, ResetMode::IndRandom, ExecMode::OpenLoopChunk);
    RolloutResult b = rollout(actor, *env, 5, ResetMode::IndRandom, ExecMode::OpenLoopChunk);
    CHECK(a.steps == b.steps);
    CHECK(a.success == b.success);
    REQUIRE(a.episode.length() == b.episode.length());
    for (int t = 0; t < a.episode.length(); ++t)
        CHECK(a.episode.steps[t].state == b.episode.steps[t].state);
}
