// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "pompc/nnet.hpp"

namespace pompc {

/// n_b contiguous H-step slices drawn from replay, stored step-major with
/// one column per slice.
struct SliceBatch {
  int horizon = 0;
  int size = 0;
  std::vector<Mat> obs;        // H + 1 entries, obs_dim x B
  std::vector<Mat> action;     // H entries, action_dim x B
  std::vector<Vec> reward;     // H entries
  std::vector<Mat> plan_mean;  // H + 1 entries; entry H belongs to the successor transition
  std::vector<Mat> plan_std;   // H + 1 entries
  Vec successor_valid;         // B; 1 where entry H exists in the same episode
  std::vector<std::uint64_t> start_ids;  // sequence id of each slice's first record
};

}  // namespace pompc
