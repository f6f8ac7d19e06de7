// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pompc/trainer.hpp"
#include "support.hpp"

using namespace pompc;
namespace pt = pompc::testing;

namespace {

TrainConfig tiny(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.seeding_steps = 10;
  c.total_steps = 40;
  c.replay_capacity = 1000;
  c.batch_size = 8;
  c.enc_dim = 16;
  c.latent_dim = 16;
  c.mlp_dim = 16;
  c.simnorm_dim = 8;
  c.num_q = 2;
  c.population = 16;
  c.policy_samples = 2;
  c.elites = 4;
  c.iterations = 2;
  c.reanalyze_batch = 4;
  c.reanalyze_interval = 5;
  return c;
}

std::vector<Mlp> all_params(const Agent& a) {
  std::vector<Mlp> out{a.wm.encoder, a.wm.dynamics, a.wm.reward, a.wm.target_encoder, a.pi.trunk, a.prior.trunk};
  for (const auto* e : {&a.q, &a.qk})
    for (int i = 0; i < e->size(); ++i) {
      out.push_back(e->heads[i]);
      out.push_back(e->targets[i]);
    }
  return out;
}

std::vector<std::string> first_update_phases(TrainConfig c) {
  Agent a(c);
  a.seed_phase();
  std::vector<std::string> phases;
  a.on_phase = [&](const std::string& p) { phases.push_back(p); };
  a.update();
  return phases;
}

}  // namespace

TEST(SummarizeReturns, MeanAndInterval) {
  const EvalResult r = summarize_returns({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(r.mean, 2.0);
  EXPECT_NEAR(r.ci95, 1.96 / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(summarize_returns({-4.0}).ci95, 0.0);
  EXPECT_EQ(summarize_returns({}).mean, 0.0);
}

TEST(Trainer, SeedingPhase) {
  Agent a(tiny(1));
  a.seed_phase();
  EXPECT_EQ(a.step, 10);
  EXPECT_EQ(a.buffer.size(), 10u);
  EXPECT_EQ(a.versions.world_model, 10);
  EXPECT_EQ(a.versions.bootstrap_q, 10);
  EXPECT_EQ(a.versions.prior, 0);
  EXPECT_EQ(a.versions.policy, 0);
  EXPECT_EQ(a.updates, 0);
  // Seeding records carry placeholder planner stats.
  for (std::uint64_t id = 0; id < 10; ++id) {
    EXPECT_EQ(a.buffer.at(id).plan_mean, Vec::Zero(1));
    EXPECT_EQ(a.buffer.at(id).plan_std, Vec::Constant(1, a.cfg.max_std));
  }
  const auto before = all_params(a);
  a.seed_phase();  // idempotent
  EXPECT_TRUE(pt::bitwise_equal(before, all_params(a)));
  EXPECT_THROW(Agent(tiny(1)).train_step(), std::logic_error);
}

TEST(Trainer, UpdateCadence) {
  for (long every : {1L, 3L}) {
    TrainConfig c = tiny(2);
    c.update_every = every;
    Agent a(c);
    a.run();
    EXPECT_EQ(a.step, 40);
    EXPECT_EQ(a.updates, a.expected_updates());
    EXPECT_EQ(a.versions.policy, a.updates);
    EXPECT_EQ(a.versions.world_model, 10 + a.updates);
    EXPECT_EQ(a.reanalyze_events, a.updates / 5);
  }
}

TEST(Trainer, PhaseOrder) {
  EXPECT_EQ(first_update_phases(tiny(3)),
            (std::vector<std::string>{"world_model", "bootstrap_q", "prior", "klreg_q", "policy", "targets"}));
  TrainConfig inf = tiny(3);
  inf.lambda = KlWeight::inf();
  EXPECT_EQ(first_update_phases(inf),
            (std::vector<std::string>{"world_model", "bootstrap_q", "prior", "policy", "targets"}));
  TrainConfig direct = tiny(3);
  direct.prior_mode = PriorMode::ReplayDirect;
  EXPECT_EQ(first_update_phases(direct),
            (std::vector<std::string>{"world_model", "bootstrap_q", "klreg_q", "policy", "targets"}));
}

TEST(Trainer, DeterministicGivenSeed) {
  Agent a(tiny(4)), b(tiny(4)), c(tiny(5));
  a.run();
  b.run();
  c.run();
  EXPECT_TRUE(pt::bitwise_equal(all_params(a), all_params(b)));
  EXPECT_EQ(a.rng.state(), b.rng.state());
  EXPECT_FALSE(pt::bitwise_equal(all_params(a), all_params(c)));
}

TEST(Trainer, ReanalyzeWritesPlannerStats) {
  TrainConfig c = tiny(6);
  Agent a(c);
  a.seed_phase();
  std::vector<ReanalyzeReport> reports;
  a.on_reanalyze = [&](const ReanalyzeReport& r) { reports.push_back(r); };
  for (int i = 0; i < 10; ++i) a.update();
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.writes + r.failures, 4);
    for (std::size_t k = 0; k < r.ids.size(); ++k)
      if (a.buffer.contains(r.ids[k])) {
        EXPECT_GE(r.written_std[k].minCoeff(), c.min_std);
        EXPECT_LE(r.written_std[k].maxCoeff(), c.max_std);
      }
  }
}

TEST(Trainer, EvaluateLeavesAgentUntouched) {
  Agent a(tiny(7));
  a.run();
  const auto params = all_params(a);
  const std::string rng = a.rng.state();
  TrainConfig c = a.cfg;
  const EvalResult e1 = evaluate(a, 1, 11), e2 = evaluate(a, 1, 11);
  EXPECT_EQ(e1.returns, e2.returns);
  EXPECT_TRUE(pt::bitwise_equal(params, all_params(a)));
  EXPECT_EQ(rng, a.rng.state());
  EXPECT_LE(e1.mean, 0.0);
  EXPECT_GE(e1.mean, 200 * a.env->reward_min());
  const EvalResult r = evaluate_random(*a.env, 2, 3);
  EXPECT_EQ(r.returns.size(), 2u);
  EXPECT_THROW(evaluate(a, 0, 1), std::invalid_argument);
}

TEST(Trainer, CheckpointResumeMatchesUninterruptedRun) {
  TrainConfig c = tiny(8);
  Agent full(c);
  full.run();

  TrainConfig half = c;
  half.total_steps = 25;
  Agent first(half);
  first.run();
  std::stringstream ss;
  first.to_checkpoint().write(ss);
  Agent resumed = Agent::from_checkpoint(Checkpoint::read(ss), {"total_steps=40"});
  resumed.run();
  EXPECT_EQ(resumed.step, full.step);
  EXPECT_EQ(resumed.updates, full.updates);
  EXPECT_TRUE(pt::bitwise_equal(all_params(full), all_params(resumed)));
  EXPECT_EQ(full.rng.state(), resumed.rng.state());

  std::stringstream again;
  first.to_checkpoint().write(again);
  EXPECT_THROW(Agent::from_checkpoint(Checkpoint::read(again), {"planner.horizon=5"}), ConfigError);
}
