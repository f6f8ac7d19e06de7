// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "pompc/replay.hpp"

using namespace pompc;

namespace {

TransitionRecord rec(double tag, std::int64_t episode, std::int64_t step, bool done = false) {
  TransitionRecord r;
  r.s = Vec::Constant(3, tag);
  r.a = Vec::Constant(1, 0.01 * tag);
  r.r = tag;
  r.s_next = Vec::Constant(3, tag + 0.5);
  r.plan_mean = Vec::Constant(1, -0.01 * tag);
  r.plan_std = Vec::Constant(1, 0.5);
  r.episode = episode;
  r.step = step;
  r.done = done;
  return r;
}

// Episodes of the given lengths, tagged with their global index.
ReplayBuffer filled(std::size_t capacity, const std::vector<int>& lengths) {
  ReplayBuffer b(capacity, 3, 1, 0.05, 2.0);
  int tag = 0;
  for (std::size_t e = 0; e < lengths.size(); ++e)
    for (int t = 0; t < lengths[e]; ++t) b.push(rec(tag++, static_cast<std::int64_t>(e), t, t + 1 == lengths[e]));
  return b;
}

}  // namespace

TEST(Replay, FifoEviction) {
  const ReplayBuffer b = filled(5, {8});
  EXPECT_EQ(b.size(), 5u);
  EXPECT_EQ(b.first_id(), 3u);
  EXPECT_EQ(b.next_id(), 8u);
  EXPECT_FALSE(b.contains(2));
  EXPECT_THROW(b.at(2), ReplayError);
  for (std::uint64_t id = 3; id < 8; ++id) EXPECT_EQ(b.at(id).r, static_cast<double>(id));
}

TEST(Replay, RejectsMalformedRecords) {
  ReplayBuffer b(4, 3, 1, 0.05, 2.0);
  TransitionRecord r = rec(0, 0, 0);
  r.plan_std[0] = 2.5;
  EXPECT_THROW(b.push(r), ReplayError);
  r = rec(0, 0, 0);
  r.r = std::nan("");
  EXPECT_THROW(b.push(r), ReplayError);
  r = rec(0, 0, 0);
  r.a = Vec::Zero(2);
  EXPECT_THROW(b.push(r), ShapeError);
  EXPECT_EQ(b.size(), 0u);
  EXPECT_THROW(ReplayBuffer(0, 3, 1, 0.05, 2.0), std::invalid_argument);
}

TEST(Replay, SlicesStayInsideOneEpisode) {
  const ReplayBuffer b = filled(100, {5, 2, 9, 4});
  EXPECT_TRUE(b.valid_start(0, 5));
  EXPECT_FALSE(b.valid_start(1, 5));
  EXPECT_FALSE(b.valid_start(5, 3));  // episode 1 has 2 steps
  Rng rng(1);
  const SliceBatch s = b.sample_slices(500, 3, rng);
  for (int i = 0; i < s.size; ++i) {
    const std::uint64_t id = s.start_ids[static_cast<std::size_t>(i)];
    for (int t = 1; t < 3; ++t) {
      EXPECT_EQ(b.at(id + t).episode, b.at(id).episode);
      EXPECT_EQ(b.at(id + t).step, b.at(id).step + t);
    }
  }
}

TEST(Replay, StartsAreUniformOverValidPositions) {
  const ReplayBuffer b = filled(100, {6, 3, 7});
  std::vector<std::uint64_t> valid;
  for (std::uint64_t id = 0; id < 16; ++id)
    if (b.valid_start(id, 3)) valid.push_back(id);
  ASSERT_EQ(valid.size(), 4u + 1u + 5u);
  Rng rng(2);
  const int n = 100000;
  const SliceBatch s = b.sample_slices(n, 3, rng);
  std::map<std::uint64_t, int> counts;
  for (auto id : s.start_ids) ++counts[id];
  EXPECT_EQ(counts.size(), valid.size());
  const double p = 1.0 / static_cast<double>(valid.size());
  double chi2 = 0;
  for (auto id : valid) chi2 += std::pow(counts[id] - n * p, 2) / (n * p);
  EXPECT_LT(chi2, 27.88);  // chi-square, 9 dof, p = 0.001
}

TEST(Replay, GatherLayout) {
  const ReplayBuffer b = filled(100, {4, 4});
  const SliceBatch s = b.gather({0, 1, 2, 4}, 2);
  EXPECT_EQ(s.obs.size(), 3u);
  EXPECT_EQ(s.obs[0](0, 1), 1.0);
  EXPECT_EQ(s.obs[1](0, 1), 2.0);
  EXPECT_EQ(s.obs[2](0, 1), 2.5);  // s_next of the last record
  EXPECT_EQ(s.reward[1][3], 5.0);
  EXPECT_NEAR(s.plan_mean[0](0, 2), -0.02, 1e-15);
  // Successor stats exist only when the next record continues the episode.
  EXPECT_EQ(s.successor_valid, (Vec(4) << 1, 1, 0, 1).finished());
  EXPECT_NEAR(s.plan_mean[2](0, 0), -0.02, 1e-15);
  EXPECT_EQ(s.plan_std[2](0, 2), 2.0);
  EXPECT_THROW(b.gather({3}, 2), ReplayError);
}

TEST(Replay, TooFewRecords) {
  const ReplayBuffer b = filled(10, {2});
  Rng rng(3);
  EXPECT_THROW(b.sample_slices(4, 3, rng), ReplayError);
  const ReplayBuffer c = filled(10, {2, 2, 2});
  EXPECT_THROW(c.sample_slices(4, 3, rng), ReplayError);
}

TEST(Replay, BinaryRoundTrip) {
  ReplayBuffer b = filled(7, {5, 6});
  std::stringstream ss;
  b.write(ss);
  ReplayBuffer c = ReplayBuffer::read(ss);
  EXPECT_EQ(c.first_id(), b.first_id());
  EXPECT_EQ(c.next_id(), b.next_id());
  EXPECT_EQ(c.capacity(), b.capacity());
  for (std::uint64_t id = b.first_id(); id < b.next_id(); ++id) {
    EXPECT_EQ(c.at(id).s, b.at(id).s);
    EXPECT_EQ(c.at(id).plan_std, b.at(id).plan_std);
    EXPECT_EQ(c.at(id).episode, b.at(id).episode);
    EXPECT_EQ(c.at(id).done, b.at(id).done);
  }
  // Both continue identically after the round trip.
  b.push(rec(99, 2, 0));
  c.push(rec(99, 2, 0));
  Rng r1(4), r2(4);
  EXPECT_EQ(b.sample_slices(20, 2, r1).start_ids, c.sample_slices(20, 2, r2).start_ids);

  std::stringstream bad("NOTARPLB");
  EXPECT_THROW(ReplayBuffer::read(bad), binio::FormatError);
}

TEST(Reanalyze, CadenceAndWrites) {
  ReplayBuffer b = filled(100, {30});
  SliceBatch s = b.gather({0, 3, 6, 9}, 2);
  const Vec action_before = b.at(3).a;
  int calls = 0;
  auto replan = [&](const Vec& obs) {
    ++calls;
    PlanResult pr;
    pr.mean = Mat::Constant(2, 1, obs[0]);
    pr.std = Mat::Constant(2, 1, 0.25);
    pr.fallback = obs[0] == 6.0;
    return pr;
  };
  EXPECT_FALSE(lazy_reanalyze(b, s, 3, 10, 7, replan).triggered);
  EXPECT_EQ(calls, 0);
  const ReanalyzeReport rep = lazy_reanalyze(b, s, 3, 10, 20, replan);
  EXPECT_TRUE(rep.triggered);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(rep.writes, 2);
  EXPECT_EQ(rep.failures, 1);
  EXPECT_EQ(rep.ids, (std::vector<std::uint64_t>{0, 3}));
  EXPECT_EQ(b.at(3).plan_mean[0], 3.0);
  EXPECT_EQ(b.at(3).plan_std[0], 0.25);
  EXPECT_EQ(s.plan_std[0](0, 1), 0.25);
  EXPECT_EQ(b.at(6).plan_std[0], 0.5);  // failure keeps the old stats
  EXPECT_EQ(b.at(9).plan_std[0], 0.5);  // beyond n_b_r
  EXPECT_EQ(b.at(3).a, action_before);
  EXPECT_THROW(lazy_reanalyze(b, s, 3, 0, 20, replan), std::invalid_argument);
}
