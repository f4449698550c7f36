#include "pcx/multi_index.hpp"

#include <bit>
#include <map>
#include <stdexcept>

namespace pcx {

int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return static_cast<int>(r);
}

int popcount(IndexMask m) { return std::popcount(m); }

namespace {

std::vector<IndexMask> enumerate_sets(int d, int k) {
  std::vector<IndexMask> out;
  if (k < 0 || k > d) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    IndexMask m = 0;
    for (int i : idx) m |= IndexMask(1) << i;
    out.push_back(m);
    int p = k - 1;
    while (p >= 0 && idx[p] == d - k + p) --p;
    if (p < 0) break;
    ++idx[p];
    for (int q = p + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  if (k == 0) out = {IndexMask(0)};
  return out;
}

}  // namespace

const std::vector<IndexMask>& index_sets(int d, int k) {
  static std::map<std::pair<int, int>, std::vector<IndexMask>> cache;
  auto key = std::make_pair(d, k);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, enumerate_sets(d, k)).first;
  return it->second;
}

int set_rank(int d, int k, IndexMask mask) {
  const auto& sets = index_sets(d, k);
  for (int r = 0; r < static_cast<int>(sets.size()); ++r)
    if (sets[r] == mask) return r;
  return -1;
}

int merge_sign(IndexMask a, IndexMask b) {
  if (a & b) return 0;
  // Count inversions: pairs (i in a, j in b) with i > j.
  int inv = 0;
  for (int i = 0; i < 32; ++i) {
    if (!(a >> i)) break;
    if (a & (IndexMask(1) << i)) inv += std::popcount(b & ((IndexMask(1) << i) - 1));
  }
  return (inv % 2 == 0) ? 1 : -1;
}

int removal_sign(IndexMask m, int i) {
  if (!(m & (IndexMask(1) << i))) throw std::logic_error("removal_sign: index not in mask");
  int pos = std::popcount(m & ((IndexMask(1) << i) - 1));
  return (pos % 2 == 0) ? 1 : -1;
}

std::vector<int> mask_indices(IndexMask m) {
  std::vector<int> out;
  for (int i = 0; i < 32; ++i)
    if (m & (IndexMask(1) << i)) out.push_back(i);
  return out;
}

}  // namespace pcx
