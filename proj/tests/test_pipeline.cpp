#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "corl/pipeline.hpp"

using namespace corl;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.h = 2;
    cfg.batch_size = 8;
    cfg.bc_steps = 60;
    cfg.rl_steps = 40;
    cfg.eval_every = 20;
    cfg.eval_trials = 4;
    cfg.critic_width = 8;
    cfg.critic_blocks = 1;
    cfg.actor_hidden = 16;
    cfg.actor_layers = 1;
    cfg.log_every = 10;
    return cfg;
}

OfflineDataset tiny_dataset(const TrainConfig& cfg, const std::string& env_id = "chain-sparse") {
    auto env = make_env(env_id);
    return collect_demos(*env, 4, ResetMode::IndRandom, 2, 11, cfg.h, cfg.gamma);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

struct TempDir {
    fs::path p;
    explicit TempDir(const std::string& name) : p(fs::path("./tmp_") += name) {
        fs::remove_all(p);
        fs::create_directories(p);
    }
    ~TempDir() { fs::remove_all(p); }
    std::string str() const { return p.string(); }
};

}  // namespace

TEST_CASE("config parse, serialize and validation") {
    TrainConfig cfg = TrainConfig::parse_text("gamma = 0.95\nh = 3\n# comment\n\nbatch_size = 32\n");
    CHECK(cfg.gamma == 0.95);
    CHECK(cfg.h == 3);
    CHECK(cfg.batch_size == 32);

    // canonical round-trip
    TrainConfig back = TrainConfig::parse_text(cfg.serialize());
    CHECK(back.serialize() == cfg.serialize());

    CHECK_THROWS_AS(TrainConfig::parse_text("no_such_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::parse_text("gamma 0.9\n"), ConfigError);

    TrainConfig bad = cfg;
    bad.gamma = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.h = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    TrainConfig ov;
    CHECK_THROWS_AS(ov.apply_override("bogus", "1"), ConfigError);
    ov.apply_override("alpha", "2.5");
    CHECK(ov.alpha == 2.5);
    CHECK_THROWS_AS(ov.apply_override("alpha", "not-a-number"), ConfigError);
}

TEST_CASE("select_best_checkpoint tie-breaking") {
    using E = EvalEntry;
    CHECK(select_best_checkpoint({E{0, 0.5, 10.0}, E{1, 0.8, 12.0}, E{2, 0.7, 5.0}}) == 1);
    // tie on SR -> lower CT
    CHECK(select_best_checkpoint({E{0, 0.8, 12.0}, E{1, 0.8, 9.0}}) == 1);
    // tie on SR and CT -> earlier step
    CHECK(select_best_checkpoint({E{0, 0.8, 9.0}, E{1, 0.8, 9.0}}) == 0);
    // absent CT loses to present CT at equal SR
    CHECK(select_best_checkpoint({E{0, 0.0, std::nullopt}, E{1, 0.0, 30.0}}) == 1);
    CHECK_THROWS(select_best_checkpoint({}));
}

TEST_CASE("train_bc is deterministic and writes artifacts") {
    TrainConfig cfg = tiny_config();
    OfflineDataset data = tiny_dataset(cfg);
    TempDir d1("bc1"), d2("bc2");
    BcResult r1 = train_bc(data, cfg, d1.str());
    BcResult r2 = train_bc(data, cfg, d2.str());
    CHECK(r1.final_loss == r2.final_loss);
    CHECK(r1.actor.params.checksum() == r2.actor.params.checksum());
    CHECK(r1.final_loss < r1.initial_loss);
    CHECK(fs::exists(d1.p / "bc_actor.ckpt"));
    CHECK(fs::exists(d1.p / "metrics.log"));
    CHECK(slurp(d1.str() + "/metrics.log") == slurp(d2.str() + "/metrics.log"));
    // bc metric lines carry bc_loss
    CHECK(slurp(d1.str() + "/metrics.log").find("\"bc_loss\"") != std::string::npos);
}

TEST_CASE("bc_steps = 0 leaves the freshly initialized actor untouched") {
    TrainConfig cfg = tiny_config();
    cfg.bc_steps = 0;
    OfflineDataset data = tiny_dataset(cfg);
    BcResult a = train_bc(data, cfg);
    BcResult b = train_bc(data, cfg);
    CHECK(a.actor.params.checksum() == b.actor.params.checksum());
}

TEST_CASE("train_offline_rl evaluates the BC init and keeps the best checkpoint") {
    TrainConfig cfg = tiny_config();
    OfflineDataset data = tiny_dataset(cfg);
    auto env = make_env(data.env_id);
    BcResult bc = train_bc(data, cfg);
    TempDir d("rl");
    RlResult r = train_offline_rl(data, bc.actor, cfg, env.get(), d.str());

    REQUIRE(!r.eval_log.empty());
    CHECK(r.eval_log.front().step == 0);
    CHECK(r.best_index == select_best_checkpoint(r.eval_log));
    CHECK(r.best_step == r.eval_log[r.best_index].step);
    // the retained actor achieves the best SR seen
    double best_sr = 0;
    for (const auto& e : r.eval_log) best_sr = std::max(best_sr, e.sr);
    CHECK(r.eval_log[r.best_index].sr == best_sr);

    CHECK(fs::exists(d.p / "best_actor.ckpt"));
    CHECK(fs::exists(d.p / "final_actor.ckpt"));
    CHECK(fs::exists(d.p / "final_critic.ckpt"));
    CHECK(fs::exists(d.p / "metrics.log"));

    // rl_steps = 0: best actor must be byte-equivalent to BC input
    TrainConfig cfg0 = cfg;
    cfg0.rl_steps = 0;
    RlResult r0 = train_offline_rl(data, bc.actor, cfg0, env.get(), "");
    CHECK(r0.best_actor.params.checksum() == bc.actor.params.checksum());
}

TEST_CASE("train_offline_rl is deterministic end to end") {
    TrainConfig cfg = tiny_config();
    OfflineDataset data = tiny_dataset(cfg, "point-reach-2d");
    auto env = make_env(data.env_id);
    BcResult bc = train_bc(data, cfg);
    TempDir d1("rl1"), d2("rl2");
    RlResult r1 = train_offline_rl(data, bc.actor, cfg, env.get(), d1.str());
    RlResult r2 = train_offline_rl(data, bc.actor, cfg, env.get(), d2.str());
    CHECK(r1.final_actor.params.checksum() == r2.final_actor.params.checksum());
    CHECK(r1.final_critic.params.checksum() == r2.final_critic.params.checksum());
    CHECK(slurp(d1.str() + "/metrics.log") == slurp(d2.str() + "/metrics.log"));
}

TEST_CASE("train_offline_rl rejects mismatched dataset parameters") {
    TrainConfig cfg = tiny_config();
    OfflineDataset data = tiny_dataset(cfg);
    auto env = make_env(data.env_id);
    BcResult bc = train_bc(data, cfg);
    TrainConfig wrong = cfg;
    wrong.h = cfg.h + 1;
    CHECK_THROWS_AS(train_offline_rl(data, bc.actor, wrong, env.get(), ""), ConfigError);
}

TEST_CASE("actor checkpoint round-trips through load_actor_checkpoint") {
    TrainConfig cfg = tiny_config();
    OfflineDataset data = tiny_dataset(cfg);
    TempDir d("ck");
    BcResult bc = train_bc(data, cfg, d.str());
    auto env = make_env(data.env_id);
    ActorNetwork back = load_actor_checkpoint(d.str() + "/bc_actor.ckpt", env->spec());
    CHECK(back.params.checksum() == bc.actor.params.checksum());
    Vec s = Vec::Zero(env->spec().S);
    auto c1 = bc.actor.action_chunk(s);
    auto c2 = back.action_chunk(s);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);
}

TEST_CASE("ema target network lags the online critic") {
    RngStream rng(1);
    CriticNetwork online = CriticNetwork::make(1, 1, 2, 8, 1, rng);
    CriticNetwork target = CriticNetwork::make(1, 1, 2, 8, 1, rng);
    target.params.set_flat(online.params.flat());
    Eigen::VectorXd before = online.params.flat();
    online.params.set_flat(before.array() + 1.0);
    nn::ema_update(target.params, online.params, 0.005);
    Eigen::VectorXd t = target.params.flat();
    // moved 0.5% of the way
    CHECK((t - (before.array() + 0.005).matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("metrics logger output is schema-stable") {
    TempDir d("log");
    {
        MetricsLogger log(d.str() + "/metrics.log");
        log.log_bc(5, 0.125);
        log.log_rl(10, 0.5, 1.25, 0.75, 0.5);
        log.log_eval(20, 0.75, 12.5);
        log.log_eval(40, 0.0, std::nullopt);
    }
    std::string text = slurp(d.str() + "/metrics.log");
    CHECK(text ==
          "{\"step\":5,\"bc_loss\":0.125}\n"
          "{\"step\":10,\"td_error\":0.5,\"q_data_mean\":1.25,\"q_ood_mean\":0.75,\"regularizer\":0.5}\n"
          "{\"step\":20,\"sr\":0.75,\"ct\":12.5}\n"
          "{\"step\":40,\"sr\":0}\n");
}
