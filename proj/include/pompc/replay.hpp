// SPDX-License-Identifier: Apache-2.0
#pragma once

// FIFO trajectory replay storing each transition with the planning-policy
// statistics (mean, std of the first planned step) that produced it.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pompc/batch.hpp"
#include "pompc/binio.hpp"
#include "pompc/nnet.hpp"
#include "pompc/planner.hpp"
#include "pompc/rng.hpp"

namespace pompc {

struct TransitionRecord {
  Vec s;
  Vec a;
  double r = 0.0;
  Vec s_next;
  Vec plan_mean;
  Vec plan_std;
  std::int64_t episode = 0;
  std::int64_t step = 0;
  bool done = false;
};

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayBuffer {
 public:
  static constexpr std::uint32_t kVersion = 1;

  ReplayBuffer(std::size_t capacity, int obs_dim, int action_dim, double min_std, double max_std)
      : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim), min_std_(min_std), max_std_(max_std) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    records_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return static_cast<std::size_t>(next_id_ - first_id_); }
  std::uint64_t first_id() const { return first_id_; }
  std::uint64_t next_id() const { return next_id_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  /// Appends a record, evicting the oldest when full. Rejects records whose
  /// planner std leaves [min_std, max_std].
  void push(TransitionRecord rec) {
    if (rec.s.size() != obs_dim_ || rec.s_next.size() != obs_dim_ || rec.a.size() != action_dim_ ||
        rec.plan_mean.size() != action_dim_ || rec.plan_std.size() != action_dim_)
      throw ShapeError("replay push: record dimensions do not match the buffer");
    if (!rec.s.allFinite() || !rec.s_next.allFinite() || !rec.a.allFinite() || !std::isfinite(rec.r) ||
        !rec.plan_mean.allFinite())
      throw ReplayError("replay push: non-finite record");
    for (Eigen::Index i = 0; i < rec.plan_std.size(); ++i) {
      const double s = rec.plan_std[i];
      if (!(s >= min_std_ && s <= max_std_)) throw ReplayError("replay push: planner std outside [min_std, max_std]");
    }
    if (records_.size() < capacity_) {
      records_.push_back(std::move(rec));
    } else {
      records_[static_cast<std::size_t>(next_id_ % capacity_)] = std::move(rec);
      ++first_id_;
    }
    ++next_id_;
  }

  bool contains(std::uint64_t id) const { return id >= first_id_ && id < next_id_; }

  const TransitionRecord& at(std::uint64_t id) const {
    if (!contains(id)) throw ReplayError("replay: id " + std::to_string(id) + " not resident");
    return records_[static_cast<std::size_t>(id % capacity_)];
  }

  TransitionRecord& at(std::uint64_t id) {
    if (!contains(id)) throw ReplayError("replay: id " + std::to_string(id) + " not resident");
    return records_[static_cast<std::size_t>(id % capacity_)];
  }

  /// True when records id .. id + H - 1 are resident, from one episode and
  /// consecutive in time.
  bool valid_start(std::uint64_t id, int horizon) const {
    if (horizon < 1 || id < first_id_ || id + static_cast<std::uint64_t>(horizon) > next_id_) return false;
    const TransitionRecord& r0 = at(id);
    for (int k = 1; k < horizon; ++k) {
      const TransitionRecord& rk = at(id + static_cast<std::uint64_t>(k));
      if (rk.episode != r0.episode || rk.step != r0.step + k) return false;
    }
    return true;
  }

  /// n_b slices drawn uniformly from all valid start positions.
  SliceBatch sample_slices(int n_b, int horizon, Rng& rng) const {
    if (n_b < 1) throw std::invalid_argument("sample_slices: batch size must be positive");
    if (horizon < 1) throw std::invalid_argument("sample_slices: horizon must be positive");
    if (size() < static_cast<std::size_t>(horizon)) throw ReplayError("replay holds no valid slice");
    const std::uint64_t last_start = next_id_ - static_cast<std::uint64_t>(horizon);
    std::vector<std::uint64_t> ids;
    ids.reserve(static_cast<std::size_t>(n_b));
    long misses = 0;
    std::vector<std::uint64_t> all_valid;
    bool scanned = false;
    while (static_cast<int>(ids.size()) < n_b) {
      if (scanned) {
        ids.push_back(all_valid[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(all_valid.size()) - 1))]);
        continue;
      }
      const auto id = static_cast<std::uint64_t>(
          rng.uniform_int(static_cast<std::int64_t>(first_id_), static_cast<std::int64_t>(last_start)));
      if (valid_start(id, horizon)) {
        ids.push_back(id);
        misses = 0;
      } else if (++misses > 1000) {
        for (std::uint64_t k = first_id_; k <= last_start; ++k)
          if (valid_start(k, horizon)) all_valid.push_back(k);
        if (all_valid.empty()) throw ReplayError("replay holds no valid slice");
        scanned = true;
      }
    }
    return gather(ids, horizon);
  }

  /// Builds a batch from explicit start ids (each must be a valid start).
  SliceBatch gather(const std::vector<std::uint64_t>& ids, int horizon) const {
    const int B = static_cast<int>(ids.size());
    SliceBatch batch;
    batch.horizon = horizon;
    batch.size = B;
    batch.start_ids = ids;
    batch.obs.assign(static_cast<std::size_t>(horizon + 1), Mat(obs_dim_, B));
    batch.action.assign(static_cast<std::size_t>(horizon), Mat(action_dim_, B));
    batch.reward.assign(static_cast<std::size_t>(horizon), Vec(B));
    batch.plan_mean.assign(static_cast<std::size_t>(horizon + 1), Mat::Zero(action_dim_, B));
    batch.plan_std.assign(static_cast<std::size_t>(horizon + 1), Mat::Constant(action_dim_, B, max_std_));
    batch.successor_valid = Vec::Zero(B);
    for (int b = 0; b < B; ++b) {
      const std::uint64_t id = ids[static_cast<std::size_t>(b)];
      if (!valid_start(id, horizon)) throw ReplayError("gather: invalid slice start");
      for (int t = 0; t < horizon; ++t) {
        const TransitionRecord& rec = at(id + static_cast<std::uint64_t>(t));
        const auto ts = static_cast<std::size_t>(t);
        batch.obs[ts].col(b) = rec.s;
        batch.action[ts].col(b) = rec.a;
        batch.reward[ts][b] = rec.r;
        batch.plan_mean[ts].col(b) = rec.plan_mean;
        batch.plan_std[ts].col(b) = rec.plan_std;
        if (t + 1 == horizon) batch.obs[ts + 1].col(b) = rec.s_next;
      }
      const std::uint64_t succ = id + static_cast<std::uint64_t>(horizon);
      if (succ < next_id_) {
        const TransitionRecord& last = at(succ - 1);
        const TransitionRecord& s = at(succ);
        if (s.episode == last.episode && s.step == last.step + 1) {
          batch.plan_mean[static_cast<std::size_t>(horizon)].col(b) = s.plan_mean;
          batch.plan_std[static_cast<std::size_t>(horizon)].col(b) = s.plan_std;
          batch.successor_valid[b] = 1.0;
        }
      }
    }
    return batch;
  }

  // Binary layout (little-endian), documented in docs/FORMATS.md:
  //   magic "POMPCRB1", u32 version, u64 capacity, u32 obs_dim, u32 action_dim,
  //   f64 min_std, f64 max_std, u64 first_id, u64 count,
  //   then count records of (2 * obs_dim + 3 * action_dim + 4) f64 values:
  //   s, a, r, s_next, plan_mean, plan_std, episode, step, done.
  void write(std::ostream& os) const {
    os.write("POMPCRB1", 8);
    binio::put<std::uint32_t>(os, kVersion);
    binio::put<std::uint64_t>(os, capacity_);
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(obs_dim_));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(action_dim_));
    binio::put<double>(os, min_std_);
    binio::put<double>(os, max_std_);
    binio::put<std::uint64_t>(os, first_id_);
    binio::put<std::uint64_t>(os, size());
    auto vec = [&](const Vec& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) binio::put<double>(os, v[i]);
    };
    for (std::uint64_t id = first_id_; id < next_id_; ++id) {
      const TransitionRecord& r = at(id);
      vec(r.s);
      vec(r.a);
      binio::put<double>(os, r.r);
      vec(r.s_next);
      vec(r.plan_mean);
      vec(r.plan_std);
      binio::put<double>(os, static_cast<double>(r.episode));
      binio::put<double>(os, static_cast<double>(r.step));
      binio::put<double>(os, r.done ? 1.0 : 0.0);
    }
  }

  static ReplayBuffer read(std::istream& is) {
    binio::expect_magic(is, "POMPCRB1");
    const auto version = binio::get<std::uint32_t>(is);
    if (version != kVersion) throw binio::FormatError("unsupported replay version " + std::to_string(version));
    const auto capacity = binio::get<std::uint64_t>(is);
    const auto obs_dim = static_cast<int>(binio::get<std::uint32_t>(is));
    const auto action_dim = static_cast<int>(binio::get<std::uint32_t>(is));
    const double min_std = binio::get<double>(is);
    const double max_std = binio::get<double>(is);
    const auto first = binio::get<std::uint64_t>(is);
    const auto count = binio::get<std::uint64_t>(is);
    if (count > capacity) throw binio::FormatError("replay count exceeds capacity");
    ReplayBuffer buf(static_cast<std::size_t>(capacity), obs_dim, action_dim, min_std, max_std);
    // Rebuild the ring so that ids keep their original slots.
    buf.first_id_ = first;
    buf.next_id_ = first;
    buf.records_.resize(std::min<std::uint64_t>(capacity, first + count));
    auto vec = [&](int n) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v[i] = binio::get<double>(is);
      return v;
    };
    for (std::uint64_t k = 0; k < count; ++k) {
      TransitionRecord r;
      r.s = vec(obs_dim);
      r.a = vec(action_dim);
      r.r = binio::get<double>(is);
      r.s_next = vec(obs_dim);
      r.plan_mean = vec(action_dim);
      r.plan_std = vec(action_dim);
      r.episode = static_cast<std::int64_t>(binio::get<double>(is));
      r.step = static_cast<std::int64_t>(binio::get<double>(is));
      r.done = binio::get<double>(is) != 0.0;
      buf.records_[static_cast<std::size_t>(buf.next_id_ % capacity)] = std::move(r);
      ++buf.next_id_;
    }
    return buf;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ReplayError("cannot open '" + path + "' for writing");
    write(os);
  }

  static ReplayBuffer load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ReplayError("cannot open '" + path + "'");
    return read(is);
  }

 private:
  std::size_t capacity_;
  int obs_dim_;
  int action_dim_;
  double min_std_;
  double max_std_;
  std::vector<TransitionRecord> records_;
  std::uint64_t first_id_ = 0;
  std::uint64_t next_id_ = 0;
};

struct ReanalyzeReport {
  bool triggered = false;
  int writes = 0;
  int failures = 0;
  std::vector<std::uint64_t> ids;  // records rewritten, in write order
  std::vector<Vec> written_std;    // planner std written for each id
};

/// Every k-th update, re-plans (zero warm start, via `replan`) from the
/// first encoded state of the first n_b_r slices and overwrites their stored
/// step-0 statistics in both the batch and the buffer. `replan` maps an
/// observation to a PlanResult; a fallback result counts as a failure and
/// leaves the old statistics in place.
template <class Replan>
ReanalyzeReport lazy_reanalyze(ReplayBuffer& buffer, SliceBatch& batch, int n_b_r, int k, long update_counter,
                               Replan&& replan) {
  if (k < 1) throw std::invalid_argument("reanalyze interval must be >= 1");
  ReanalyzeReport rep;
  if (update_counter % k != 0) return rep;
  rep.triggered = true;
  const int n = std::min(n_b_r, batch.size);
  for (int b = 0; b < n; ++b) {
    const PlanResult pr = replan(Vec(batch.obs[0].col(b)));
    if (pr.fallback) {
      ++rep.failures;
      continue;
    }
    const Vec mean0 = pr.mean.row(0).transpose();
    const Vec std0 = pr.std.row(0).transpose();
    batch.plan_mean[0].col(b) = mean0;
    batch.plan_std[0].col(b) = std0;
    TransitionRecord& rec = buffer.at(batch.start_ids[static_cast<std::size_t>(b)]);
    rec.plan_mean = mean0;
    rec.plan_std = std0;
    rep.ids.push_back(batch.start_ids[static_cast<std::size_t>(b)]);
    rep.written_std.push_back(std0);
    ++rep.writes;
  }
  return rep;
}

}  // namespace pompc
