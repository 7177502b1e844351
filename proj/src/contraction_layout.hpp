#pragma once

// Index bookkeeping shared by the serial and OpenMP pair contractions.

#include <cstddef>
#include <utility>
#include <vector>

namespace covlaw::kernels::detail {

struct PairLayout {
  std::size_t n;
  std::vector<std::size_t> free_stride;    // stride in A or B of each result axis
  std::vector<bool> free_in_a;
  std::vector<std::size_t> shared_a, shared_b;  // strides of the shared axes
  std::size_t result_size = 1;
  std::size_t shared_size = 1;

  PairLayout(int a_order, int b_order, std::size_t n_,
             const std::vector<std::pair<int, int>>& shared)
      : n(n_) {
    auto strides = [&](int order) {
      std::vector<std::size_t> s(order);
      std::size_t w = 1;
      for (int ax = order; ax-- > 0;) {
        s[ax] = w;
        w *= n;
      }
      return s;
    };
    const auto sa = strides(a_order), sb = strides(b_order);
    std::vector<bool> used_a(a_order, false), used_b(b_order, false);
    for (auto [x, y] : shared) {
      used_a[x] = used_b[y] = true;
      shared_a.push_back(sa[x]);
      shared_b.push_back(sb[y]);
      shared_size *= n;
    }
    for (int ax = 0; ax < a_order; ++ax)
      if (!used_a[ax]) {
        free_stride.push_back(sa[ax]);
        free_in_a.push_back(true);
        result_size *= n;
      }
    for (int ax = 0; ax < b_order; ++ax)
      if (!used_b[ax]) {
        free_stride.push_back(sb[ax]);
        free_in_a.push_back(false);
        result_size *= n;
      }
  }

  double entry(const double* A, const double* B, std::size_t r) const {
    std::size_t base_a = 0, base_b = 0;
    for (std::size_t ax = free_stride.size(); ax-- > 0;) {
      const std::size_t i = r % n;
      r /= n;
      (free_in_a[ax] ? base_a : base_b) += i * free_stride[ax];
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < shared_size; ++s) {
      std::size_t oa = base_a, ob = base_b, rem = s;
      for (std::size_t ax = shared_a.size(); ax-- > 0;) {
        const std::size_t i = rem % n;
        rem /= n;
        oa += i * shared_a[ax];
        ob += i * shared_b[ax];
      }
      acc += A[oa] * B[ob];
    }
    return acc;
  }
};

}  // namespace covlaw::kernels::detail
