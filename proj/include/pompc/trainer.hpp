// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plan -> infer -> regularize training loop.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pompc/checkpoint.hpp"
#include "pompc/config.hpp"
#include "pompc/envs.hpp"
#include "pompc/metrics.hpp"
#include "pompc/planner.hpp"
#include "pompc/policy.hpp"
#include "pompc/prior.hpp"
#include "pompc/replay.hpp"
#include "pompc/value.hpp"
#include "pompc/worldmodel.hpp"

namespace pompc {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incremented by each parameter-changing phase of an update, in the order
/// the phases run.
struct ParamVersions {
  long world_model = 0;
  long bootstrap_q = 0;
  long prior = 0;
  long klreg_q = 0;
  long policy = 0;
  long targets = 0;
};

struct UpdateStats {
  double wm_loss = 0, consistency = 0, reward = 0, value = 0;
  double prior_loss = 0, klreg_q_loss = 0, policy_loss = 0;
  double policy_kl_term = 0, policy_q_term = 0, policy_entropy_term = 0;
  double kl_mean = 0, q_mean = 0;
  double grad_norm_model = 0, grad_norm_prior = 0, grad_norm_klreg_q = 0, grad_norm_policy = 0;
  int reanalyze_writes = 0, reanalyze_failures = 0;
  bool reanalyzed = false;
};

struct EvalResult {
  double mean = 0.0;
  double ci95 = 0.0;  // half-width; 0 for a single episode
  std::vector<double> returns;
};

inline EvalResult summarize_returns(std::vector<double> returns) {
  EvalResult r;
  r.returns = std::move(returns);
  const double n = static_cast<double>(r.returns.size());
  if (r.returns.empty()) return r;
  for (double v : r.returns) r.mean += v / n;
  if (r.returns.size() > 1) {
    double ss = 0.0;
    for (double v : r.returns) ss += (v - r.mean) * (v - r.mean);
    r.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return r;
}

/// POMPC_SEED, when set, replaces the configured seed.
inline void apply_env_overrides(TrainConfig& cfg) {
  if (const char* s = std::getenv("POMPC_SEED"); s != nullptr && *s != '\0') set_config_value(cfg, "seed", s);
}

class Agent {
 public:
  TrainConfig cfg;
  std::unique_ptr<Env> env;
  WorldModel wm;
  QEnsemble q;   // bootstrap Q used by the planner
  QEnsemble qk;  // KL-regularized Q used by the policy update
  GaussianPolicyNet pi;
  GaussianPolicyNet prior;
  ScaleTracker s_kl, s_q, s_p;
  AdamState opt_wm, opt_q, opt_prior, opt_qk, opt_pi;
  ReplayBuffer buffer;
  Rng rng;

  EnvState env_state;
  Mat warm;
  long step = 0;     // environment steps taken, seeding included
  long updates = 0;  // main-loop gradient updates
  long episode = 0;
  double episode_return = 0.0;
  long reanalyze_events = 0;
  bool seeded = false;
  std::vector<double> episode_returns;
  double last_elite_score = 0.0;  // from the most recent acting plan, for metrics
  double last_plan_std = 0.0;
  ParamVersions versions;
  MetricsWriter metrics;

  /// Called with the phase name right after each parameter-changing phase.
  std::function<void(const std::string&)> on_phase;
  std::function<void(const ReanalyzeReport&)> on_reanalyze;
  /// Sees every reanalyze planner call and its result.
  std::function<void(const Vec&, const PlanResult&)> on_replan;

  explicit Agent(TrainConfig config)
      : cfg(std::move(config)),
        env(make_env(cfg.env_name)),
        buffer(static_cast<std::size_t>(cfg.replay_capacity), env->obs_dim(), env->action_dim(), cfg.min_std,
               cfg.max_std),
        rng(cfg.seed) {
    cfg.validate();
    const ModelDims d = cfg.model_dims(env->obs_dim(), env->action_dim());
    Rng init(Rng::derive(cfg.seed, 0xC0FFEE, 0).next_u64());
    wm = make_world_model(d, init);
    q = make_q_ensemble(q_head_spec(d), d.num_q, d.grid, init);
    qk = make_q_ensemble(q_head_spec(d), d.num_q, d.grid, init);
    const double lo = cfg.log_std_min, hi = cfg.log_std_max;
    pi = make_policy_net(d.latent_dim, d.action_dim, d.mlp_dim, 2, d.activation, lo, hi, init);
    prior = make_policy_net(d.latent_dim, d.action_dim, d.mlp_dim, 2, d.activation, lo, hi, init);
    s_kl.rate = s_q.rate = s_p.rate = cfg.scale_rate;
    auto mk = [&](std::vector<Mlp*> ps) {
      return make_adam(std::span<Mlp* const>(ps), cfg.adam_beta1, cfg.adam_beta2);
    };
    opt_wm = mk(wm_params());
    opt_q = mk(heads(q));
    opt_prior = mk({&prior.trunk});
    opt_qk = mk(heads(qk));
    opt_pi = mk({&pi.trunk});
    warm = Mat::Zero(cfg.horizon, env->action_dim());
    env_state = env->reset(rng.next_u64());
  }

  std::vector<Mlp*> wm_params() { return {&wm.encoder, &wm.dynamics, &wm.reward}; }
  static std::vector<Mlp*> heads(QEnsemble& e) {
    std::vector<Mlp*> out;
    for (auto& h : e.heads) out.push_back(&h);
    return out;
  }

  PlanResult plan_from(const Vec& obs, const Mat& init_mean, bool use_mean, std::uint64_t seed) const {
    const LatentModel model(wm, q, pi);
    const Vec z = encode(wm, obs).col(0);
    return plan(model, z, init_mean, cfg.plan_config(use_mean), seed);
  }

  /// Seeding: N_s steps with the untrained sampling policy and placeholder
  /// planner stats (zero mean, max std), then N_s world-model + bootstrap-Q
  /// updates.
  void seed_phase() {
    if (seeded) return;
    const int A = env->action_dim();
    for (long i = 0; i < cfg.seeding_steps && step < cfg.total_steps; ++i) {
      const Vec obs = env->observe(env_state);
      const Vec a = act(pi, encode(wm, obs).col(0), false, rng);
      record_step(obs, a, Vec::Zero(A), Vec::Constant(A, cfg.max_std));
    }
    for (long i = 0; i < cfg.seeding_steps; ++i) {
      if (buffer.size() < static_cast<std::size_t>(cfg.horizon)) break;
      SliceBatch batch = buffer.sample_slices(cfg.batch_size, cfg.horizon, rng);
      UpdateStats st;
      model_update(batch, st);
      polyak(wm.target_encoder, wm.encoder, cfg.tau);
      polyak_update(q, cfg.tau);
    }
    seeded = true;
    metrics.flush();
  }

  /// One environment interaction through the planner, then a gradient
  /// update every update_every steps.
  void train_step() {
    if (!seeded) throw std::logic_error("train_step before seed_phase");
    const Vec obs = env->observe(env_state);
    const PlanResult pr = plan_from(obs, warm, cfg.train_use_mean, rng.next_u64());
    warm = shift_warm_start(pr.mean);
    last_elite_score = pr.elite_score_mean;
    last_plan_std = pr.std.mean();
    record_step(obs, pr.action, pr.mean.row(0).transpose(), pr.std.row(0).transpose());
    if ((step - cfg.seeding_steps) % cfg.update_every == 0 && buffer.size() >= static_cast<std::size_t>(cfg.horizon))
      update();
  }

  /// Runs until total_steps, saving a checkpoint every checkpoint_every
  /// steps and at the end when a path is configured.
  void run() {
    seed_phase();
    while (step < cfg.total_steps) {
      train_step();
      if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 &&
          step < cfg.total_steps)
        save(cfg.checkpoint_path);
    }
    metrics.flush();
    if (!cfg.checkpoint_path.empty()) save(cfg.checkpoint_path);
  }

  /// Expected main-loop update count for a full run.
  long expected_updates() const {
    return std::max(0L, (cfg.total_steps - cfg.seeding_steps) / cfg.update_every);
  }

  UpdateStats update() {
    UpdateStats st;
    ++updates;
    try {
      SliceBatch batch = buffer.sample_slices(cfg.batch_size, cfg.horizon, rng);

      const ReanalyzeReport rep = lazy_reanalyze(
          buffer, batch, cfg.reanalyze_batch, cfg.reanalyze_interval, updates, [&](const Vec& obs) {
            PlanResult pr = plan_from(obs, Mat::Zero(cfg.horizon, env->action_dim()), false, rng.next_u64());
            if (on_replan) on_replan(obs, pr);
            return pr;
          });
      st.reanalyzed = rep.triggered;
      st.reanalyze_writes = rep.writes;
      st.reanalyze_failures = rep.failures;
      if (rep.triggered) {
        ++reanalyze_events;
        if (on_reanalyze) on_reanalyze(rep);
      }

      const WorldModelLossResult wl = model_update(batch, st);
      const int H = cfg.horizon;
      const bool direct = cfg.prior_mode == PriorMode::ReplayDirect;

      if (!direct) {
        const PriorLossResult pl =
            prior_loss(prior, wl.latents, std::span<const Mat>(batch.plan_mean).first(H),
                       std::span<const Mat>(batch.plan_std).first(H), cfg.prior_mode, s_p.divisor(), cfg.rho);
        GradBundle g = pl.grads;
        st.prior_loss = pl.loss;
        st.grad_norm_prior = clip_global_norm(g, cfg.grad_clip);
        std::vector<Mlp*> ps{&prior.trunk};
        adam_step(ps, opt_prior, g, cfg.lr);
        if (pl.kl_observations.size() >= 2) s_p.update(pl.kl_observations);
        phase_done("prior", versions.prior);
      }

      if (!cfg.lambda.infinite) {
        ValueBatch vb{wl.latents, batch.action, batch.reward, wl.next_latents};
        std::vector<GaussianBatch> prior_next;
        std::vector<Vec> valid;
        for (int t = 0; t < H; ++t) {
          if (direct) {
            prior_next.push_back(GaussianBatch{batch.plan_mean[t + 1], batch.plan_std[t + 1]});
            valid.push_back(t + 1 < H ? Vec(Vec::Ones(batch.size)) : batch.successor_valid);
          } else {
            prior_next.push_back(gaussian_forward(prior, wl.next_latents[t]));
          }
        }
        QLossResult kq = klreg_q_loss(qk, vb, pi, prior_next, valid, cfg.lambda.value, s_kl.divisor(), cfg.discount,
                                      cfg.rho, rng);
        GradBundle g = std::move(kq.grads);
        g.scale(cfg.biased_value_coef);
        st.klreg_q_loss = kq.loss;
        st.grad_norm_klreg_q = clip_global_norm(g, cfg.grad_clip);
        adam_step(heads(qk), opt_qk, g, cfg.lr);
        phase_done("klreg_q", versions.klreg_q);
      }

      std::vector<GaussianBatch> priors;
      for (int t = 0; t < H; ++t) {
        if (direct) priors.push_back(GaussianBatch{batch.plan_mean[t], batch.plan_std[t]});
        else priors.push_back(gaussian_forward(prior, wl.latents[t]));
      }
      const PolicyLossResult pr = sampling_policy_loss(pi, wl.latents, priors, qk, s_kl.divisor(), s_q.divisor(),
                                                       cfg.policy_loss_config(), rng);
      GradBundle g = pr.grads;
      st.policy_loss = pr.loss;
      st.policy_kl_term = pr.kl_term;
      st.policy_q_term = pr.q_term;
      st.policy_entropy_term = pr.entropy_term;
      st.kl_mean = mean_of(pr.kl_observations);
      st.q_mean = mean_of(pr.q_observations);
      st.grad_norm_policy = clip_global_norm(g, cfg.grad_clip);
      std::vector<Mlp*> ps{&pi.trunk};
      adam_step(ps, opt_pi, g, cfg.lr);
      if (pr.kl_observations.size() >= 2) s_kl.update(pr.kl_observations);
      if (pr.q_observations.size() >= 2) s_q.update(pr.q_observations);
      phase_done("policy", versions.policy);

      polyak_update(q, cfg.tau);
      polyak_update(qk, cfg.tau);
      polyak(wm.target_encoder, wm.encoder, cfg.tau);
      phase_done("targets", versions.targets);
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "numeric failure at step " << step << ", update " << updates << ": " << e.what()
         << " | wm_loss=" << st.wm_loss << " consistency=" << st.consistency << " reward=" << st.reward
         << " value=" << st.value << " prior_loss=" << st.prior_loss << " klreg_q_loss=" << st.klreg_q_loss
         << " | grad_norm model=" << st.grad_norm_model << " prior=" << st.grad_norm_prior
         << " klreg_q=" << st.grad_norm_klreg_q << " | S_KL=" << s_kl.value << " S_Q=" << s_q.value
         << " S_p=" << s_p.value;
      throw TrainingError(os.str());
    }

    MetricRow row;
    row.row_type = "update";
    row.step = step;
    row.update = updates;
    row.episode = episode;
    row.values = {{"wm_loss", st.wm_loss},
                  {"consistency_loss", st.consistency},
                  {"reward_loss", st.reward},
                  {"q_loss", st.value},
                  {"prior_loss", st.prior_loss},
                  {"klreg_q_loss", st.klreg_q_loss},
                  {"policy_loss", st.policy_loss},
                  {"policy_kl_term", st.policy_kl_term},
                  {"policy_q_term", st.policy_q_term},
                  {"policy_entropy_term", st.policy_entropy_term},
                  {"kl_mean", st.kl_mean},
                  {"q_mean", st.q_mean},
                  {"S_KL", s_kl.value},
                  {"S_Q", s_q.value},
                  {"S_p", s_p.value},
                  {"grad_norm_model", st.grad_norm_model},
                  {"grad_norm_prior", st.grad_norm_prior},
                  {"grad_norm_klreg_q", st.grad_norm_klreg_q},
                  {"grad_norm_policy", st.grad_norm_policy},
                  {"reanalyze_writes", static_cast<double>(st.reanalyze_writes)},
                  {"reanalyze_failures", static_cast<double>(st.reanalyze_failures)},
                  {"elite_score_mean", last_elite_score},
                  {"plan_std_mean", last_plan_std}};
    metrics.add(row);
    return st;
  }

  Checkpoint to_checkpoint() const {
    Checkpoint ck;
    ck.config_text = dump_config(cfg);
    ck.put_mlp("wm.encoder", wm.encoder);
    ck.put_mlp("wm.dynamics", wm.dynamics);
    ck.put_mlp("wm.reward", wm.reward);
    ck.put_mlp("wm.target_encoder", wm.target_encoder);
    for (int i = 0; i < q.size(); ++i) {
      ck.put_mlp("q.head" + std::to_string(i), q.heads[i]);
      ck.put_mlp("q.target" + std::to_string(i), q.targets[i]);
      ck.put_mlp("qk.head" + std::to_string(i), qk.heads[i]);
      ck.put_mlp("qk.target" + std::to_string(i), qk.targets[i]);
    }
    ck.put_mlp("pi", pi.trunk);
    ck.put_mlp("prior", prior.trunk);
    put_adam(ck, "opt.wm", opt_wm);
    put_adam(ck, "opt.q", opt_q);
    put_adam(ck, "opt.prior", opt_prior);
    put_adam(ck, "opt.qk", opt_qk);
    put_adam(ck, "opt.pi", opt_pi);
    ck.put_scalar("scale.kl", s_kl.value);
    ck.put_scalar("scale.q", s_q.value);
    ck.put_scalar("scale.p", s_p.value);
    ck.put_scalar("counter.step", static_cast<double>(step));
    ck.put_scalar("counter.updates", static_cast<double>(updates));
    ck.put_scalar("counter.episode", static_cast<double>(episode));
    ck.put_scalar("counter.reanalyze_events", static_cast<double>(reanalyze_events));
    ck.put_scalar("counter.seeded", seeded ? 1.0 : 0.0);
    ck.put_scalar("episode.return", episode_return);
    ck.put_vec("episode.returns", Eigen::Map<const Vec>(episode_returns.data(), static_cast<Eigen::Index>(episode_returns.size())));
    ck.put_vec("env.x", env_state.x);
    ck.put_scalar("env.t", env_state.t);
    ck.put_mat("planner.warm", warm);
    ck.put_bytes("rng", rng.state());
    std::ostringstream rb;
    buffer.write(rb);
    ck.put_bytes("replay", rb.str());
    return ck;
  }

  void save(const std::string& path) const {
    metrics_flush_const();
    to_checkpoint().save(path);
  }

  /// Rebuilds an agent from a checkpoint; the stored config snapshot is
  /// authoritative except for io.* keys, which `overrides` may replace.
  static Agent from_checkpoint(const Checkpoint& ck, const std::vector<std::string>& overrides = {}) {
    TrainConfig c;
    apply_config_text(c, ck.config_text);
    for (const auto& o : overrides) {
      const std::string key = detail::trim(std::string_view(o).substr(0, o.find('=')));
      if (key.rfind("io.", 0) != 0 && key != "total_steps")
        throw ConfigError("config key '" + key + "' cannot change when resuming from a checkpoint");
      apply_override(c, o);
    }
    Agent a(c);
    ck.get_mlp("wm.encoder", a.wm.encoder);
    ck.get_mlp("wm.dynamics", a.wm.dynamics);
    ck.get_mlp("wm.reward", a.wm.reward);
    ck.get_mlp("wm.target_encoder", a.wm.target_encoder);
    for (int i = 0; i < a.q.size(); ++i) {
      ck.get_mlp("q.head" + std::to_string(i), a.q.heads[i]);
      ck.get_mlp("q.target" + std::to_string(i), a.q.targets[i]);
      ck.get_mlp("qk.head" + std::to_string(i), a.qk.heads[i]);
      ck.get_mlp("qk.target" + std::to_string(i), a.qk.targets[i]);
    }
    ck.get_mlp("pi", a.pi.trunk);
    ck.get_mlp("prior", a.prior.trunk);
    get_adam(ck, "opt.wm", a.opt_wm);
    get_adam(ck, "opt.q", a.opt_q);
    get_adam(ck, "opt.prior", a.opt_prior);
    get_adam(ck, "opt.qk", a.opt_qk);
    get_adam(ck, "opt.pi", a.opt_pi);
    a.s_kl.value = ck.scalar("scale.kl");
    a.s_q.value = ck.scalar("scale.q");
    a.s_p.value = ck.scalar("scale.p");
    a.step = static_cast<long>(ck.scalar("counter.step"));
    a.updates = static_cast<long>(ck.scalar("counter.updates"));
    a.episode = static_cast<long>(ck.scalar("counter.episode"));
    a.reanalyze_events = static_cast<long>(ck.scalar("counter.reanalyze_events"));
    a.seeded = ck.scalar("counter.seeded") != 0.0;
    a.episode_return = ck.scalar("episode.return");
    const Tensor& er = ck.tensor("episode.returns");
    a.episode_returns = er.data;
    const Tensor& ex = ck.tensor("env.x");
    a.env_state.x = Eigen::Map<const Vec>(ex.data.data(), static_cast<Eigen::Index>(ex.data.size()));
    a.env_state.t = static_cast<int>(ck.scalar("env.t"));
    a.warm = ck.mat("planner.warm", a.cfg.horizon, a.env->action_dim());
    a.rng.set_state(ck.bytes("rng"));
    std::istringstream rb(ck.bytes("replay"));
    a.buffer = ReplayBuffer::read(rb);
    return a;
  }

 private:
  static double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

  void phase_done(const char* name, long& counter) {
    ++counter;
    if (on_phase) on_phase(name);
  }

  void metrics_flush_const() const { const_cast<MetricsWriter&>(metrics).flush(); }

  /// Joint world-model + bootstrap-Q step: one backward pass, one global
  /// norm clip over both, separate Adam states.
  WorldModelLossResult model_update(const SliceBatch& batch, UpdateStats& st) {
    WorldModelLossResult wl = world_model_loss(wm, q, pi, batch, cfg.wm_loss_config(), rng);
    st.wm_loss = wl.total;
    st.consistency = wl.consistency;
    st.reward = wl.reward;
    st.value = wl.value;
    st.grad_norm_model = clip_global_norm(wl.grads, cfg.grad_clip);
    GradBundle gw, gq;
    for (std::size_t i = 0; i < wl.grads.nets.size(); ++i) (i < 3 ? gw : gq).nets.push_back(std::move(wl.grads.nets[i]));
    adam_step(wm_params(), opt_wm, gw, cfg.lr);
    phase_done("world_model", versions.world_model);
    adam_step(heads(q), opt_q, gq, cfg.lr);
    phase_done("bootstrap_q", versions.bootstrap_q);
    return wl;
  }

  void record_step(const Vec& obs, const Vec& a, const Vec& plan_mean, const Vec& plan_std) {
    const StepResult sr = env->step(env_state, a);
    TransitionRecord rec;
    rec.s = obs;
    rec.a = a;
    rec.r = sr.reward;
    rec.s_next = env->observe(sr.state);
    rec.plan_mean = plan_mean;
    rec.plan_std = plan_std;
    rec.episode = episode;
    rec.step = env_state.t;
    rec.done = sr.done;
    buffer.push(std::move(rec));
    episode_return += sr.reward;
    env_state = sr.state;
    ++step;
    if (sr.done) {
      MetricRow row;
      row.row_type = "episode";
      row.step = step;
      row.update = updates;
      row.episode = episode;
      row.values = {{"return", episode_return}, {"length", static_cast<double>(env_state.t)}};
      metrics.add(row);
      episode_returns.push_back(episode_return);
      ++episode;
      episode_return = 0.0;
      env_state = env->reset(rng.next_u64());
      warm.setZero();
      metrics.flush();
    }
  }

  static void put_adam(Checkpoint& ck, const std::string& name, const AdamState& s) {
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      ck.put_mlp(name + ".m" + std::to_string(i), s.m[i]);
      ck.put_mlp(name + ".v" + std::to_string(i), s.v[i]);
    }
    ck.put_scalar(name + ".step", static_cast<double>(s.step));
  }

  static void get_adam(const Checkpoint& ck, const std::string& name, AdamState& s) {
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      ck.get_mlp(name + ".m" + std::to_string(i), s.m[i]);
      ck.get_mlp(name + ".v" + std::to_string(i), s.v[i]);
    }
    s.step = static_cast<long>(ck.scalar(name + ".step"));
  }
};

/// Full episodes with the planner; the agent is not modified.
inline EvalResult evaluate(const Agent& agent, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate needs at least one episode");
  Rng r(seed);
  std::vector<double> returns;
  const Env& env = *agent.env;
  for (int e = 0; e < episodes; ++e) {
    EnvState s = env.reset(r.next_u64());
    Mat warm = Mat::Zero(agent.cfg.horizon, env.action_dim());
    double ret = 0.0;
    bool done = false;
    while (!done) {
      const PlanResult pr = agent.plan_from(env.observe(s), warm, agent.cfg.eval_use_mean, r.next_u64());
      warm = shift_warm_start(pr.mean);
      const StepResult sr = env.step(s, pr.action);
      ret += sr.reward;
      s = sr.state;
      done = sr.done;
    }
    returns.push_back(ret);
  }
  return summarize_returns(std::move(returns));
}

/// Reference return of uniformly random actions in the action box.
inline EvalResult evaluate_random(const Env& env, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate needs at least one episode");
  Rng r(seed);
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    EnvState s = env.reset(r.next_u64());
    double ret = 0.0;
    bool done = false;
    while (!done) {
      Vec a(env.action_dim());
      for (int i = 0; i < env.action_dim(); ++i) a[i] = r.uniform(-1.0, 1.0);
      const StepResult sr = env.step(s, a);
      ret += sr.reward;
      s = sr.state;
      done = sr.done;
    }
    returns.push_back(ret);
  }
  return summarize_returns(std::move(returns));
}

}  // namespace pompc
