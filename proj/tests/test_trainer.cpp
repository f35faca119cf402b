#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/ui_task_fsm.hpp"
#include "fsmgfn/trainer.hpp"

using namespace fsmgfn;

namespace {

Trajectory make_traj(std::size_t n, bool terminated) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) {
    t.steps.push_back({0, 0});
    t.policy_step.push_back(true);
    t.time.push_back(i);
  }
  t.terminal_reached = terminated;
  return t;
}

const char* kChain = "states: S1 S2 TERM\nactions: x y\ninitial: S1\nterminal: TERM\n"
                     "transition: S1 x -> S2\ntransition: S2 y -> TERM\n";
const char* kOneStep = "states: S1 TERM\nactions: x\ninitial: S1\nterminal: TERM\n"
                       "transition: S1 x -> TERM\n";

}  // namespace

TEST_CASE("reward") {
  CHECK(reward(make_traj(9, true)) == doctest::Approx(2.302585).epsilon(1e-6));
  CHECK(reward(make_traj(9, false)) == 0.0);
  CHECK(reward(make_traj(1, true)) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(reward(make_traj(9, true)) == std::log(10.0));
}

TEST_CASE("rollout respects the horizon and the machine") {
  const auto fsm = ui_task_fsm();
  TrainConfig cfg;
  cfg.hidden = 16;
  SUBCASE("t_max of one") {
    cfg.t_max = 1;
    Rng rng(4);
    const auto p = init_params(5, 7, cfg.hidden, rng);
    for (int i = 0; i < 200; ++i) {
      auto t = rollout(fsm, p, cfg, rng);
      CHECK(t.size() == 1);
      CHECK(t.terminal_reached == (fsm.action(t.steps[0].action).name == "A2"));
    }
  }
  SUBCASE("1000 random-parameter rollouts validate") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      auto p = PolicyParams::zeros(5, 7, cfg.hidden);
      p.for_each([&](double& x) { x = rng.uniform(-2, 2); });
      auto t = rollout(fsm, p, cfg, rng);
      auto named = t.named(fsm);
      auto v = validate_trace(fsm, named);
      REQUIRE(v.ok);
      CHECK(v.ends_in_terminal == t.terminal_reached);
      CHECK(t.size() <= cfg.t_max);
    }
  }
  SUBCASE("fixed seed gives identical trajectories") {
    Rng a(77), b(77);
    const auto p = init_params(5, 7, cfg.hidden, a);
    init_params(5, 7, cfg.hidden, b);
    for (int i = 0; i < 50; ++i) {
      auto x = rollout(fsm, p, cfg, a);
      auto y = rollout(fsm, p, cfg, b);
      CHECK(x.steps == y.steps);
    }
  }
  SUBCASE("hover injection in training") {
    cfg.hover_in_training = true;
    cfg.p_hover = 0.4;
    Rng rng(6);
    const auto p = init_params(5, 7, cfg.hidden, rng);
    const auto m = fsm.action_index("M");
    std::size_t injected = 0, policy = 0;
    for (int i = 0; i < 300; ++i) {
      auto t = rollout(fsm, p, cfg, rng);
      REQUIRE(validate_trace(fsm, t.named(fsm)).ok);
      std::size_t pol = 0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t.policy_step[k]) ++pol;
        else {
          CHECK(t.steps[k].action == m);
          ++injected;
        }
      }
      CHECK(pol <= cfg.t_max);
      policy += pol;
    }
    const double rate = double(injected) / double(policy);
    CHECK(rate == doctest::Approx(0.4).epsilon(0.1));
  }
}

TEST_CASE("hover action must exist and self-loop") {
  CHECK(hover_action_index(ui_task_fsm()) == ui_task_fsm().action_index("M"));
  CHECK_THROWS_AS(hover_action_index(parse_fsm(kChain)), SemanticError);
  const auto bad = parse_fsm("states: S1 S2 TERM\nactions: M x\ninitial: S1\nterminal: TERM\n"
                             "transition: S1 M -> S2\ntransition: S2 x -> TERM\n");
  CHECK_THROWS_AS(hover_action_index(bad), SemanticError);
}

TEST_CASE("episode_update") {
  SUBCASE("zero-reward episode leaves parameters bit-identical") {
    const auto fsm = parse_fsm(kChain);
    TrainConfig cfg;
    cfg.t_max = 1;
    cfg.hidden = 8;
    Rng rng(3);
    auto p = init_params(3, 2, 8, rng);
    const auto before = p;
    Optimizer opt(OptimizerKind::adam, 1e-3, p);
    for (int i = 0; i < 20; ++i) {
      auto st = episode_update(fsm, p, opt, cfg, rng);
      CHECK(st.reward == 0.0);
      CHECK_FALSE(st.terminated);
      CHECK(st.loss == 0.0);
    }
    CHECK(p == before);
  }
  SUBCASE("single-valid-action trajectory has zero loss") {
    const auto fsm = parse_fsm(kChain);
    TrainConfig cfg;
    cfg.hidden = 8;
    Rng rng(3);
    auto p = init_params(3, 2, 8, rng);
    Optimizer opt(OptimizerKind::adam, 1e-3, p);
    auto st = episode_update(fsm, p, opt, cfg, rng);
    CHECK(st.terminated);
    CHECK(st.length == 2);
    CHECK(st.reward == doctest::Approx(std::log(3.0)));
    CHECK(std::abs(st.loss) <= 1e-12);
  }
  SUBCASE("terminated episodes have non-negative loss") {
    const auto fsm = ui_task_fsm();
    TrainConfig cfg;
    cfg.hidden = 16;
    Rng rng(12);
    auto p = init_params(5, 7, 16, rng);
    Optimizer opt(OptimizerKind::adam, 1e-3, p);
    for (int i = 0; i < 500; ++i) {
      auto st = episode_update(fsm, p, opt, cfg, rng);
      CHECK(st.loss >= 0.0);
      CHECK((st.reward > 0.0) == st.terminated);
    }
    CHECK(p.all_finite());
  }
  SUBCASE("non-finite values abort") {
    const auto fsm = parse_fsm(kOneStep);
    TrainConfig cfg;
    cfg.hidden = 2;
    auto p = PolicyParams::zeros(2, 1, 2);
    p.b2[0] = std::nan("");
    Optimizer opt(OptimizerKind::sgd, 1e-3, p);
    Rng rng(1);
    CHECK_THROWS_AS(episode_update(fsm, p, opt, cfg, rng), NumericError);
  }
}

TEST_CASE("optimizers") {
  auto p = PolicyParams::zeros(2, 2, 2);
  auto g = PolicyParams::zeros(2, 2, 2);
  g.b2 = {1.0, -2.0};
  SUBCASE("sgd") {
    Optimizer opt(OptimizerKind::sgd, 0.5, p);
    opt.step(p, g);
    CHECK(p.b2[0] == -0.5);
    CHECK(p.b2[1] == 1.0);
    CHECK(opt.steps_taken() == 1);
  }
  SUBCASE("adam first step moves each coordinate by about lr against the sign") {
    Optimizer opt(OptimizerKind::adam, 1e-3, p);
    opt.step(p, g);
    CHECK(p.b2[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p.b2[1] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(p.w1[0] == 0.0);
  }
  CHECK(parse_optimizer("adam") == OptimizerKind::adam);
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), UsageError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.t_max = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.hidden = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("train is deterministic and learns to terminate") {
  const auto fsm = ui_task_fsm();
  TrainConfig cfg;
  cfg.episodes = 2000;
  cfg.seed = 21;
  std::size_t calls = 0;
  auto a = train(fsm, cfg, [&](const EpisodeStats&) { ++calls; });
  auto b = train(fsm, cfg);
  CHECK(calls == 2000);
  CHECK(a.params == b.params);
  REQUIRE(a.history.size() == 2000);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].episode == i + 1);
    CHECK(a.history[i].reward == b.history[i].reward);
  }

  Rng eval(5);
  CHECK(termination_rate(fsm, a.params, cfg, 500, eval) >= 0.9);

  auto mean_reward = [&](std::size_t lo, std::size_t hi) {
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += a.history[i].reward;
    return s / double(hi - lo);
  };
  CHECK(mean_reward(1800, 2000) >= mean_reward(0, 200));

  cfg.optimizer = OptimizerKind::sgd;
  cfg.episodes = 200;
  CHECK(train(fsm, cfg).params.all_finite());
}

TEST_CASE("stats csv") {
  std::vector<EpisodeStats> h{{0, std::log(2.0), 1, true, 0.25}, {1, 0.0, 60, false, 0.0}};
  std::ostringstream out;
  write_stats_csv(out, h);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "episode,reward,length,terminated,loss");
  std::getline(in, line);
  CHECK(line.rfind("0,0.69314718055994", 0) == 0);
  std::getline(in, line);
  CHECK(line == "1,0,60,0,0");
}
