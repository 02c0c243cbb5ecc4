#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecl/core/rng.hpp"
#include "ecl/harness/config.hpp"
#include "ecl/models/input.hpp"

namespace ecl::harness {

/// One epoch's sample order. Easy-to-hard and hard-to-easy are stable sorts by
/// label; random is a seeded shuffle.
std::vector<std::size_t> order_curriculum(std::span<const int> labels, Curriculum strategy, Rng& rng);

/// Resizes a T x J motor stream to `steps` rows: truncates, or repeats the
/// last row (hold).
Mat<float> fit_stream(const Mat<float>& stream, Index steps);

/// Replaces each sample's motor stream with that of sample perm[i] for a
/// uniform permutation; returns perm. Images and labels are untouched.
std::vector<std::size_t> shuffle_joints(std::vector<SequenceInput<float>>& batch, Rng& rng,
                                        ShuffleMode mode = ShuffleMode::Both);

}  // namespace ecl::harness
