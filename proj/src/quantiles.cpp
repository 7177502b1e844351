#include <algorithm>
#include <cmath>
#include <numbers>

#include "covlaw/equilibrium.hpp"
#include "covlaw/error.hpp"

namespace covlaw {

namespace {

// Clenshaw evaluation of sum_k c_k T_k(s).
double chebyshev_eval(const std::vector<double>& c, double s) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = 2.0 * s * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return s * b1 - b2 + c[0];
}

}  // namespace

// Within a component [a, b] the substitution x = a + (b - a)(1 - cos psi) / 2
// removes the square-root edge behaviour, so the counting integrand
// rho(x) dx/dpsi is smooth in psi and a Chebyshev series in s = 2 psi / pi - 1
// converges spectrally.
QuantileTable::QuantileTable(const SpectrumModel& model, const SupportProfile& profile, int nodes) {
  if (nodes < 8) throw Error(ErrorCode::InvalidArgument, "QuantileTable needs at least 8 nodes");
  const double N = static_cast<double>(model.N());
  double above = 0.0;
  for (const auto& comp : profile.components) {
    const double a = comp.lo, b = comp.hi;
    const int K = nodes;
    std::vector<double> h(K);
    for (int j = 0; j < K; ++j) {
      const double s = std::cos(std::numbers::pi * (j + 0.5) / K);
      const double psi = 0.5 * std::numbers::pi * (s + 1.0);
      const double x = a + 0.5 * (b - a) * (1.0 - std::cos(psi));
      const double rho = x > 0.0 ? std::max(0.0, boundary_value(x, model).imag()) / std::numbers::pi : 0.0;
      h[j] = N * rho * 0.5 * (b - a) * std::sin(psi) * 0.5 * std::numbers::pi;
    }
    std::vector<double> c(K + 2, 0.0);
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int j = 0; j < K; ++j) acc += h[j] * std::cos(std::numbers::pi * k * (j + 0.5) / K);
      c[k] = (k == 0 ? 1.0 : 2.0) * acc / K;
    }
    // Antiderivative coefficients, pinned to zero at s = -1.
    std::vector<double> A(K + 1, 0.0);
    A[1] = c[0] - 0.5 * c[2];
    for (int k = 2; k <= K; ++k) A[k] = (c[k - 1] - c[k + 1]) / (2.0 * k);
    double at_minus_one = 0.0;
    for (int k = 1; k <= K; ++k) at_minus_one += (k % 2 ? -1.0 : 1.0) * A[k];
    A[0] = -at_minus_one;

    Table t{comp, std::move(A), 0.0, above};
    t.count = chebyshev_eval(t.antiderivative, 1.0);
    above += t.count;
    tables_.push_back(std::move(t));
  }
  const double total = above;
  max_index_ = 0;
  while (static_cast<double>(max_index_ + 1) - 0.5 < total - 1e-9) ++max_index_;
  max_index_ = std::min(max_index_, std::min(model.n(), model.N()));
}

double QuantileTable::tail_in_component(const Table& t, double psi) const {
  const double s = 2.0 * psi / std::numbers::pi - 1.0;
  return t.count - chebyshev_eval(t.antiderivative, s);
}

double QuantileTable::count_above(double E) const {
  for (const auto& t : tables_) {
    if (E >= t.component.hi) return t.count_above;
    if (E >= t.component.lo) {
      const double a = t.component.lo, b = t.component.hi;
      const double u = std::clamp(1.0 - 2.0 * (E - a) / (b - a), -1.0, 1.0);
      return t.count_above + tail_in_component(t, std::acos(u));
    }
  }
  return tables_.empty() ? 0.0 : tables_.back().count_above + tables_.back().count;
}

double QuantileTable::location(std::size_t i) const {
  if (i < 1 || i > max_index_) throw Error(ErrorCode::QuantileOutOfRange, "index outside 1..max_index()");
  const double target = static_cast<double>(i) - 0.5;
  for (const auto& t : tables_) {
    if (target >= t.count_above + t.count) continue;
    const double want = target - t.count_above;
    double lo = 0.0, hi = std::numbers::pi;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double psi = 0.5 * (lo + hi);
      if (tail_in_component(t, psi) > want) lo = psi; else hi = psi;
    }
    const double psi = 0.5 * (lo + hi);
    const double a = t.component.lo, b = t.component.hi;
    return a + 0.5 * (b - a) * (1.0 - std::cos(psi));
  }
  throw Error(ErrorCode::QuantileOutOfRange, "index beyond the positive mass");
}

std::vector<double> QuantileTable::all_locations() const {
  std::vector<double> out(max_index_);
  for (std::size_t i = 1; i <= max_index_; ++i) out[i - 1] = location(i);
  return out;
}

}  // namespace covlaw
