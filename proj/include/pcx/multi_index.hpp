#pragma once

#include <cstdint>
#include <vector>

// Strictly increasing multi-indices over {0,...,d-1}, stored as bitmasks.
// Basis enumeration is lexicographic on the index tuple, which for bitmasks
// over a fixed d is the order produced by combinations(d, k).

namespace pcx {

using IndexMask = std::uint32_t;

int binom(int n, int k);

// All k-subsets of {0..d-1} as bitmasks, lexicographic in tuple order:
// (0,1) < (0,2) < ... < (1,2) < ...
const std::vector<IndexMask>& index_sets(int d, int k);

// Rank of a mask within index_sets(d, k); -1 if popcount mismatch.
int set_rank(int d, int k, IndexMask mask);

int popcount(IndexMask m);

// Parity sign of interleaving two disjoint sorted index lists A, B into
// sorted order with A-elements initially before B-elements;
// 0 if the sets intersect.  This is the sign in dx^A ^ dx^B = s * dx^{A|B}.
int merge_sign(IndexMask a, IndexMask b);

// Sign of removing index `i` from set `m` (position parity of i inside m):
// i_{e_i} dx^m = sign * dx^{m \ i}.  Requires i in m.
int removal_sign(IndexMask m, int i);

// Sorted indices of a mask.
std::vector<int> mask_indices(IndexMask m);

}  // namespace pcx
