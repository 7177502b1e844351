#pragma once

#include <vector>

namespace covlaw {

/// A set partition of {0, ..., k-1} as a list of blocks, each block sorted.
using SetPartition = std::vector<std::vector<int>>;

/// All set partitions of {0, ..., k-1} (Bell(k) of them), generated from
/// restricted growth strings in lexicographic order. Cached per k.
const std::vector<SetPartition>& set_partitions(int k);

/// Partitions of [2k + m] with no singleton block and none of the pair
/// blocks {0,1}, {2,3}, ..., {2k-2, 2k-1}.
std::vector<SetPartition> restricted_partitions(int k, int m);

}  // namespace covlaw
