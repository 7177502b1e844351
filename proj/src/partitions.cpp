#include "covlaw/partitions.hpp"

#include <map>
#include <mutex>

#include "covlaw/error.hpp"

namespace covlaw {

namespace {

std::vector<SetPartition> enumerate(int k) {
  std::vector<SetPartition> out;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  // a[i] <= 1 + max(a[0..i-1]), a[0] = 0.
  std::vector<int> a(k, 0);
  while (true) {
    int blocks = 0;
    for (int v : a) blocks = std::max(blocks, v + 1);
    SetPartition p(blocks);
    for (int i = 0; i < k; ++i) p[a[i]].push_back(i);
    out.push_back(std::move(p));
    int i = k - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int j = 0; j < i; ++j) prefix_max = std::max(prefix_max, a[j]);
      if (a[i] <= prefix_max) {
        ++a[i];
        for (int j = i + 1; j < k; ++j) a[j] = 0;
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

}  // namespace

const std::vector<SetPartition>& set_partitions(int k) {
  if (k < 0 || k > 12) throw Error(ErrorCode::InvalidArgument, "set partitions supported for 0 <= k <= 12");
  static std::mutex mu;
  static std::map<int, std::vector<SetPartition>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, enumerate(k)).first;
  return it->second;
}

std::vector<SetPartition> restricted_partitions(int k, int m) {
  std::vector<SetPartition> out;
  for (const auto& p : set_partitions(2 * k + m)) {
    bool ok = true;
    for (const auto& b : p) {
      if (b.size() == 1 || (b.size() == 2 && b[0] % 2 == 0 && b[1] == b[0] + 1 && b[1] < 2 * k)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(p);
  }
  return out;
}

}  // namespace covlaw
