#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "corl/experiments.hpp"

using namespace corl;
namespace fs = std::filesystem;

namespace {

ActorNetwork expert_like_actor(const std::string& env_id, bool good) {
    // BC on a couple of demos gets chain-sparse to expert level quickly; a
    // freshly initialized actor serves as the "bad" policy.
    auto env = make_env(env_id);
    RngStream rng(good ? 21 : 22);
    ActorNetwork actor = ActorNetwork::make(env->spec().S, env->spec().A, 4, {32},
                                            env->spec().action_lo, env->spec().action_hi, rng);
    if (!good) return actor;
    OfflineDataset data = collect_demos(*env, 6, ResetMode::IndRandom, 0, 5, 4, 0.99);
    nn::AdamState adam(actor.params);
    RngStream br(3);
    for (int step = 0; step < 800; ++step) {
        ChunkBatch batch = ChunkBatch::from(sample_batch(data, 16, br));
        ActorLossResult r = bc_loss(batch, actor);
        adam.step(actor.params, r.grads, 3e-3);
    }
    return actor;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

}  // namespace

TEST_CASE("sr is the exact success fraction and ct averages successes only") {
    auto env = make_env("chain-sparse");
    ActorNetwork good = expert_like_actor("chain-sparse", true);
    EvalReport rep = evaluate(good, *env, 8, ResetMode::IndRandom, 7);
    CHECK(rep.n_trials == 8);
    REQUIRE(rep.trials.size() == 8);
    int wins = 0;
    double steps = 0;
    for (const auto& t : rep.trials)
        if (t.success) {
            ++wins;
            steps += t.steps;
        }
    CHECK(rep.successes == wins);
    CHECK(rep.sr == double(wins) / 8.0);
    if (wins > 0) {
        REQUIRE(rep.ct.has_value());
        CHECK(*rep.ct == doctest::Approx(steps / wins).epsilon(1e-15));
    }
    CHECK(rep.sr == 1.0);  // the BC'd expert should clear chain-sparse
}

TEST_CASE("ct is absent when nothing succeeds") {
    auto env = make_env("point-reach-2d");
    ActorNetwork bad = expert_like_actor("point-reach-2d", false);
    EvalReport rep = evaluate(bad, *env, 6, ResetMode::Ood, 3);
    if (rep.successes == 0) {
        CHECK(!rep.ct.has_value());
        // csv leaves the ct field empty
        std::string row = eval_csv_row(rep);
        CHECK(row.find(",,") != std::string::npos);
    }
    // json round-trip preserves absence/presence
    EvalReport back = EvalReport::from_json(rep.to_json());
    CHECK(back.ct.has_value() == rep.ct.has_value());
    CHECK(back.sr == rep.sr);
    CHECK(back.n_trials == rep.n_trials);
}

TEST_CASE("evaluation is reproducible and seed-sensitive") {
    auto env = make_env("point-reach-2d");
    ActorNetwork actor = expert_like_actor("point-reach-2d", false);
    EvalReport a = evaluate(actor, *env, 10, ResetMode::IndRandom, 5);
    EvalReport b = evaluate(actor, *env, 10, ResetMode::IndRandom, 5);
    CHECK(a.to_json() == b.to_json());
    EvalReport c = evaluate(actor, *env, 10, ResetMode::IndRandom, 6);
    bool same_trials = true;
    for (int i = 0; i < 10; ++i) same_trials = same_trials && (a.trials[i].seed == c.trials[i].seed);
    CHECK(!same_trials);
}

TEST_CASE("csv schema") {
    CHECK(eval_csv_header() == "run_id,env_id,mode,n_trials,sr,ct,seed");
    EvalReport r;
    r.run_id = "run7";
    r.env_id = "chain-sparse";
    r.mode = "ind_random";
    r.n_trials = 40;
    r.successes = 30;
    r.sr = 0.75;
    r.ct = 20.5;
    r.seed = 9;
    CHECK(eval_csv_row(r) == "run7,chain-sparse,ind_random,40,0.75,20.5,9");
    r.ct.reset();
    CHECK(eval_csv_row(r) == "run7,chain-sparse,ind_random,40,0.75,,9");
}

TEST_CASE("svg charts are deterministic and well-formed") {
    std::vector<std::string> labels = {"a", "b"};
    std::vector<double> values = {0.5, 0.875};
    std::string s1 = svg_bar_chart("success rate", labels, values, 1.0);
    std::string s2 = svg_bar_chart("success rate", labels, values, 1.0);
    CHECK(s1 == s2);
    CHECK(s1.rfind("<svg", 0) == 0);
    CHECK(s1.find("</svg>") != std::string::npos);
    CHECK(s1.find("success rate") != std::string::npos);

    std::vector<TrainingCurve> curves(1);
    curves[0].run_id = "r";
    curves[0].steps = {0, 10, 20};
    curves[0].values = {1.0, 0.5, 0.25};
    std::string l1 = svg_line_chart("td error", curves);
    CHECK(l1.rfind("<svg", 0) == 0);
    CHECK(l1.find("</svg>") != std::string::npos);
}

TEST_CASE("compare_report collates runs deterministically") {
    fs::remove_all("./tmp_rep");
    fs::create_directories("./tmp_rep/run_a");
    fs::create_directories("./tmp_rep/run_b");

    auto env = make_env("chain-sparse");
    ActorNetwork good = expert_like_actor("chain-sparse", true);
    ActorNetwork bad = expert_like_actor("chain-sparse", false);
    EvalReport ra = evaluate(good, *env, 5, ResetMode::IndRandom, 2);
    ra.run_id = "run_a";
    ra.save("./tmp_rep/run_a/eval_ind_random.json");
    EvalReport rb = evaluate(bad, *env, 5, ResetMode::IndRandom, 2);
    rb.run_id = "run_b";
    rb.save("./tmp_rep/run_b/eval_ind_random.json");
    {
        std::ofstream m("./tmp_rep/run_a/metrics.log", std::ios::binary);
        m << "{\"step\":10,\"td_error\":0.5,\"q_data_mean\":1,\"q_ood_mean\":0,\"regularizer\":1}\n";
    }

    fs::create_directories("./tmp_rep/out1");
    fs::create_directories("./tmp_rep/out2");
    compare_report({"./tmp_rep/run_a", "./tmp_rep/run_b"}, "./tmp_rep/out1");
    compare_report({"./tmp_rep/run_b", "./tmp_rep/run_a"}, "./tmp_rep/out2");

    std::string csv1 = slurp("./tmp_rep/out1/report.csv");
    std::string csv2 = slurp("./tmp_rep/out2/report.csv");
    CHECK(csv1 == csv2);  // ordering independent of argument order
    CHECK(csv1.find("run_a") != std::string::npos);
    CHECK(csv1.find("run_b") != std::string::npos);
    CHECK(fs::exists("./tmp_rep/out1/sr_chain-sparse_ind_random.svg"));
    CHECK(fs::exists("./tmp_rep/out1/td_error.svg"));
    // run_b never succeeds -> it must be absent from the CT chart rather
    // than plotted as zero
    if (rb.successes == 0 && fs::exists("./tmp_rep/out1/ct_chain-sparse_ind_random.svg")) {
        std::string ct = slurp("./tmp_rep/out1/ct_chain-sparse_ind_random.svg");
        CHECK(ct.find("run_b") == std::string::npos);
    }
    fs::remove_all("./tmp_rep");
}
