#include "covlaw/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "covlaw/error.hpp"

namespace covlaw {

namespace {

constexpr double kPoleTolerance = 1e-14;
constexpr double kNearSingular = 1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

double scaled_tolerance(const SolverOptions& o, cplx z) {
  return o.tolerance * std::max(1.0, std::abs(z));
}

// N^{-1} sum_alpha sigma / (1 + sigma m), over distinct atoms.
template <typename T>
T stieltjes_term(T m, const SpectrumModel& model) {
  T acc{};
  for (const auto& a : model.atoms()) acc += a.weight * a.value / (1.0 + a.value * m);
  return acc / static_cast<double>(model.N());
}

template <typename T>
T stieltjes_term_prime(T m, const SpectrumModel& model) {
  T acc{};
  for (const auto& a : model.atoms()) {
    const T d = 1.0 + a.value * m;
    acc += a.weight * a.value * a.value / (d * d);
  }
  return acc / static_cast<double>(model.N());
}

double real_z0(double m, const SpectrumModel& model) {
  return -1.0 / m + stieltjes_term(m, model);
}

double real_z0_prime(double m, const SpectrumModel& model) {
  return 1.0 / (m * m) - stieltjes_term_prime(m, model);
}

struct StepResult {
  bool ok = false;
  cplx m;
  double residual = kInf;
  int iterations = 0;
};

// Newton with backtracking that keeps the iterate in the upper half-plane.
StepResult newton_upper(cplx z, cplx m, double tol, const SpectrumModel& model,
                        int max_iterations = 80) {
  StepResult r;
  r.m = m;
  cplx f = z0_eval(m, model) - z;
  r.residual = std::abs(f);
  int polish = 0;
  for (int it = 0; it < max_iterations; ++it) {
    if (r.residual <= tol) {
      if (++polish > 2) break;
    }
    const cplx d = z0_prime(r.m, model);
    if (d == cplx(0.0)) break;
    const cplx step = f / d;
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      const cplx trial = r.m - lambda * step;
      if (trial.imag() > 0.0) {
        const cplx ft = z0_eval(trial, model) - z;
        if (std::abs(ft) < r.residual || (r.residual <= tol && std::abs(ft) <= r.residual)) {
          r.m = trial;
          f = ft;
          r.residual = std::abs(ft);
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    ++r.iterations;
    if (!accepted) break;
    if (std::abs(lambda * step) <= 1e-16 * std::abs(r.m)) break;
  }
  r.ok = r.residual <= tol && r.m.imag() > 0.0;
  return r;
}

// Damped fixed point m <- (1-w) m + w * (-1 / (z - S(m))), then Newton polish.
StepResult damped_fixed_point(cplx z, cplx m, double tol, const SpectrumModel& model,
                              const SolverOptions& o) {
  StepResult r;
  r.m = m;
  for (int it = 0; it < o.max_iterations; ++it) {
    const cplx next = -1.0 / (z - stieltjes_term(r.m, model));
    const cplx updated = (1.0 - o.damping) * r.m + o.damping * next;
    const double change = std::abs(updated - r.m);
    r.m = updated;
    ++r.iterations;
    if (change <= 1e-3 * tol * std::max(1.0, std::abs(r.m))) break;
  }
  StepResult polished = newton_upper(z, r.m, tol, model);
  polished.iterations += r.iterations;
  return polished;
}

StepResult solve_at(cplx z, cplx guess, double tol, const SpectrumModel& model,
                    const SolverOptions& o) {
  StepResult r = newton_upper(z, guess, tol, model);
  if (r.ok) return r;
  StepResult fp = damped_fixed_point(z, guess, tol, model, o);
  fp.iterations += r.iterations;
  return fp;
}

EquilibriumSolution finish(cplx z, const StepResult& r, const SpectrumModel& model) {
  EquilibriumSolution s;
  s.m_tilde0 = r.m;
  const double g = model.gamma();
  s.m0 = (r.m - (1.0 - g) * (-1.0 / z)) / g;
  s.residual = r.residual;
  s.iterations = r.iterations;
  return s;
}

}  // namespace

// --- SpectrumModel ------------------------------------------------------------

SpectrumModel::SpectrumModel(std::vector<double> sigma, std::size_t N)
    : sigma_(std::move(sigma)), N_(N) {
  if (N_ == 0) throw Error(ErrorCode::InvalidArgument, "sample count N must be positive");
  if (sigma_.empty()) throw Error(ErrorCode::InvalidArgument, "population dimension n must be positive");
  for (double s : sigma_) {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw Error(ErrorCode::InvalidArgument, "population eigenvalues must be finite and nonnegative");
  }
  std::sort(sigma_.begin(), sigma_.end(), std::greater<>());
  for (double s : sigma_) {
    if (s <= 0.0) break;
    ++rank_;
    if (!atoms_.empty() && std::abs(atoms_.back().value - s) <= 1e-12 * atoms_.back().value) {
      auto& a = atoms_.back();
      a.value = (a.value * a.weight + s) / (a.weight + 1.0);
      a.weight += 1.0;
    } else {
      atoms_.push_back({s, 1.0});
    }
  }
}

SpectrumModel SpectrumModel::identity(std::size_t n, std::size_t N, double scale) {
  return SpectrumModel(std::vector<double>(n, scale), N);
}

SpectrumModel SpectrumModel::from_atoms(const std::vector<std::pair<double, std::size_t>>& atoms,
                                        std::size_t N) {
  std::vector<double> sigma;
  for (const auto& [value, mult] : atoms) sigma.insert(sigma.end(), mult, value);
  return SpectrumModel(std::move(sigma), N);
}

bool SpectrumModel::satisfies_basic_assumptions(double C, double c) const {
  const double g = gamma();
  if (g < c || g > C) return false;
  if (max_sigma() > C) return false;
  const auto small = std::count_if(sigma_.begin(), sigma_.end(), [c](double s) { return s <= c; });
  return static_cast<double>(small) <= (1.0 - c) * static_cast<double>(n());
}

// --- SupportProfile -----------------------------------------------------------

bool SupportProfile::contains(double E, double tolerance) const {
  return std::any_of(components.begin(), components.end(), [&](const Interval& c) {
    return E >= c.lo - tolerance && E <= c.hi + tolerance;
  });
}

double SupportProfile::kappa(double E) const {
  double best = kInf;
  for (double x : edges) best = std::min(best, std::abs(x - E));
  return best;
}

double SupportProfile::distance(cplx z) const {
  double best = zero_atom ? std::abs(z) : kInf;
  for (const auto& c : components) {
    const double nearest = std::clamp(z.real(), c.lo, c.hi);
    best = std::min(best, std::abs(z - cplx(nearest, 0.0)));
  }
  return best;
}

// --- z0 -----------------------------------------------------------------------

cplx z0_eval(cplx m, const SpectrumModel& model) {
  if (std::abs(m) < kPoleTolerance) throw Error(ErrorCode::PoleHit, "m at the pole 0");
  for (const auto& a : model.atoms()) {
    if (std::abs(m + 1.0 / a.value) < kPoleTolerance)
      throw Error(ErrorCode::PoleHit, "m at the pole -1/sigma");
  }
  return -1.0 / m + stieltjes_term(m, model);
}

cplx z0_prime(cplx m, const SpectrumModel& model) {
  if (std::abs(m) < kPoleTolerance) throw Error(ErrorCode::PoleHit, "m at the pole 0");
  for (const auto& a : model.atoms()) {
    if (std::abs(m + 1.0 / a.value) < kPoleTolerance)
      throw Error(ErrorCode::PoleHit, "m at the pole -1/sigma");
  }
  return 1.0 / (m * m) - stieltjes_term_prime(m, model);
}

double z0_inverse_variable(double t, const SpectrumModel& model) {
  double acc = 0.0;
  for (const auto& a : model.atoms()) acc += a.weight * a.value * t / (t + a.value);
  return -t + acc / static_cast<double>(model.N());
}

// --- solver -------------------------------------------------------------------

EquilibriumSolution solve_mp(SpectralPoint point, const SpectrumModel& model,
                             const SolverOptions& options) {
  if (!(point.eta > 0.0) || !std::isfinite(point.E))
    throw Error(ErrorCode::InvalidPoint, "solve_mp needs Im z > 0");
  const cplx z = point.z();
  const double tol = scaled_tolerance(options, z);
  const double eta_start = 10.0 * (1.0 + model.max_sigma());

  if (point.eta >= eta_start) {
    StepResult r = solve_at(z, -1.0 / z, tol, model, options);
    if (!r.ok) throw Error(ErrorCode::NonConvergence, "no convergence at large eta");
    return finish(z, r, model);
  }

  // Continuation in eta from the asymptotic regime down to the target.
  double eta = eta_start;
  cplx m = -1.0 / cplx(point.E, eta);
  {
    StepResult r = solve_at(cplx(point.E, eta), m, scaled_tolerance(options, cplx(point.E, eta)),
                            model, options);
    if (!r.ok) throw Error(ErrorCode::NonConvergence, "no convergence at the continuation start");
    m = r.m;
  }
  int total = 0;
  double ratio = options.eta_ratio;
  StepResult last;
  while (true) {
    const double next_eta = std::max(point.eta, eta * ratio);
    const cplx zk(point.E, next_eta);
    StepResult r = solve_at(zk, m, scaled_tolerance(options, zk), model, options);
    total += r.iterations;
    if (!r.ok) {
      // Shorter step from the last accepted point.
      ratio = std::sqrt(ratio);
      if (ratio > 0.999)
        throw Error(ErrorCode::NonConvergence,
                    "continuation stalled (irregular point or cusp?) at eta=" +
                        std::to_string(next_eta));
      continue;
    }
    m = r.m;
    eta = next_eta;
    last = r;
    ratio = std::min(options.eta_ratio, ratio * ratio);
    if (eta <= point.eta) break;
  }
  last.iterations = total;
  return finish(z, last, model);
}

EquilibriumSolution solve_mp(SpectralPoint point, const SpectrumModel& model,
                             const SupportProfile& profile, const SolverOptions& options) {
  EquilibriumSolution s = solve_mp(point, model, options);
  s.kappa = profile.kappa(point.E);
  return s;
}

EquilibriumSolution solve_mp_extended(SpectralPoint point, const SpectrumModel& model) {
  if (point.eta > 0.0) return solve_mp(point, model);
  if (point.eta < 0.0) {
    EquilibriumSolution s = solve_mp({point.E, -point.eta}, model);
    s.m_tilde0 = std::conj(s.m_tilde0);
    s.m0 = std::conj(s.m0);
    return s;
  }
  if (point.E == 0.0) throw Error(ErrorCode::InvalidPoint, "z = 0");
  const double E = point.E;
  const double eta_small = 1e-9 * std::max(1.0, std::abs(E));
  const EquilibriumSolution near = solve_mp({E, eta_small}, model);
  if (near.m_tilde0.imag() > 1e-4 * std::max(1.0, std::abs(near.m_tilde0)))
    throw Error(ErrorCode::InsideSpectrum, "E lies inside the spectral support");
  double m = near.m_tilde0.real();
  double f = real_z0(m, model) - E;
  for (int it = 0; it < 100 && std::abs(f) > 1e-15 * std::max(1.0, std::abs(E)); ++it) {
    const double d = real_z0_prime(m, model);
    if (!(d > 0.0)) throw Error(ErrorCode::InsideSpectrum, "no physical real branch at E");
    const double next = m - f / d;
    const double fn = real_z0(next, model) - E;
    if (std::abs(fn) >= std::abs(f)) break;
    m = next;
    f = fn;
  }
  if (std::abs(m - near.m_tilde0.real()) > 1e-5 * std::max(1.0, std::abs(m)))
    throw Error(ErrorCode::InsideSpectrum, "real branch does not continue the upper solution");
  EquilibriumSolution s;
  s.m_tilde0 = m;
  const double g = model.gamma();
  s.m0 = (s.m_tilde0 - (1.0 - g) * (-1.0 / cplx(E, 0.0))) / g;
  s.residual = std::abs(f);
  s.iterations = near.iterations;
  return s;
}

cplx boundary_value(double E, const SpectrumModel& model) {
  if (!(E > 0.0)) throw Error(ErrorCode::InvalidPoint, "boundary value needs E > 0");
  // Near a hard edge at 0 the regularization has to shrink with E.
  const double scale = E;
  const cplx start = solve_mp({E, 1e-10 * scale}, model).m_tilde0;
  // Newton on the real-coefficient equation z0(m) = E. Conjugation commutes
  // with the Newton map, so iterates are reflected into the closed upper
  // half-plane. Stops once the residual no longer decreases.
  cplx m = start;
  double res = std::abs(z0_eval(m, model) - E);
  for (int it = 0; it < 100; ++it) {
    const cplx d = z0_prime(m, model);
    if (d == cplx(0.0)) break;
    cplx next = m - (z0_eval(m, model) - E) / d;
    next.imag(std::abs(next.imag()));
    const double next_res = std::abs(z0_eval(next, model) - E);
    if (!(next_res < res)) break;
    m = next;
    res = next_res;
  }
  const bool converged = res <= 1e-12 * std::max(E, 1.0 / std::abs(m));
  const bool consistent = std::abs(m - start) <= 1e-3 * std::max(1.0, std::abs(m));
  if (converged && consistent) {
    if (m.imag() < 1e-14 * std::abs(m)) m.imag(0.0);
    return m;
  }
  // Richardson extrapolation of m over eta in {1e-6, 5e-7}.
  const cplx m1 = solve_mp({E, 1e-6 * scale}, model).m_tilde0;
  const cplx m2 = solve_mp({E, 5e-7 * scale}, model).m_tilde0;
  return {2.0 * m2.real() - m1.real(), std::max(0.0, 2.0 * m2.imag() - m1.imag())};
}

// --- support classification -------------------------------------------------------

namespace {

// Roots of z0' on the open interval (a, b) via a Chebyshev-spaced sign scan.
std::vector<double> critical_points_in(double a, double b, const SpectrumModel& model,
                                       const ClassifyOptions& o) {
  const int M = o.scan_points;
  std::vector<double> xs(M), fs(M);
  for (int j = 0; j < M; ++j) {
    // Descending from b to a; endpoints excluded.
    xs[j] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(std::numbers::pi * (j + 0.5) / M);
    fs[j] = real_z0_prime(xs[j], model);
  }
  std::vector<double> roots;
  for (int j = 1; j < M; ++j) {
    if ((fs[j - 1] > 0.0) == (fs[j] > 0.0)) continue;
    double hi = xs[j - 1], lo = xs[j];
    const bool hi_positive = fs[j - 1] > 0.0;
    while (hi - lo > o.bisection_tolerance * std::max(1.0, std::abs(lo))) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((real_z0_prime(mid, model) > 0.0) == hi_positive) hi = mid; else lo = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;  // descending
}

double tail_derivative(double t, const SpectrumModel& model) {
  double acc = 0.0;
  for (const auto& a : model.atoms()) acc += a.weight * a.value * a.value / ((t + a.value) * (t + a.value));
  return -1.0 + acc / static_cast<double>(model.N());
}

}  // namespace

SupportProfile classify_support(const SpectrumModel& model, const ClassifyOptions& o) {
  const auto atoms = model.atoms();
  if (atoms.empty()) throw Error(ErrorCode::DegenerateSpectrum, "all population eigenvalues are zero");

  SupportProfile p;
  p.zero_atom = model.rank() < model.N();
  std::vector<double> edges;

  // (-1/sigma_1, 0): exactly one critical point.
  {
    auto r = critical_points_in(-1.0 / atoms[0].value, 0.0, model, o);
    if (r.size() != 1)
      throw Error(ErrorCode::BracketFailure,
                  "expected one critical point in (-1/sigma_1, 0), found " + std::to_string(r.size()));
    p.critical_points.push_back(r[0]);
  }
  // (-1/sigma_{k+1}, -1/sigma_k): zero or two.
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    auto r = critical_points_in(-1.0 / atoms[k + 1].value, -1.0 / atoms[k].value, model, o);
    if (r.size() % 2 != 0)
      throw Error(ErrorCode::BracketFailure, "odd critical-point count between poles; refine the scan");
    if (r.size() > 2)
      throw Error(ErrorCode::BracketFailure, "more than two critical points between poles");
    for (double m : r) p.critical_points.push_back(m);
  }
  // (-inf, -1/sigma_min) U (0, inf] in t = 1/m, where z0' is monotone.
  double tail_edge = 0.0;
  {
    const double s_min = atoms.back().value;
    if (model.rank() == model.N()) {
      p.critical_points.push_back(kInf);
      tail_edge = 0.0;
    } else {
      double lo = -s_min * (1.0 - 1e-15);
      double hi = 1.0;
      while (tail_derivative(hi, model) > 0.0) hi *= 2.0;
      if (tail_derivative(lo, model) <= 0.0) lo = -s_min * (1.0 - 1e-12);
      while (hi - lo > o.bisection_tolerance * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (tail_derivative(mid, model) > 0.0) lo = mid; else hi = mid;
      }
      const double t = 0.5 * (lo + hi);
      p.critical_points.push_back(t == 0.0 ? kInf : 1.0 / t);
      tail_edge = std::max(0.0, z0_inverse_variable(t, model));
    }
  }

  const std::size_t count = p.critical_points.size();
  for (std::size_t j = 0; j + 1 < count; ++j) edges.push_back(real_z0(p.critical_points[j], model));
  edges.push_back(tail_edge);
  p.edges = edges;
  p.p = count / 2;

  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const bool strict = (j % 2 == 0);  // x_{2k-1} > x_{2k}; x_{2k} >= x_{2k+1}
    if (strict ? !(edges[j] > edges[j + 1]) : (edges[j] < edges[j + 1] - o.cusp_tolerance))
      throw Error(ErrorCode::BracketFailure, "edges violate the interlacing order");
  }
  for (std::size_t k = 0; k < p.p; ++k) p.components.push_back({edges[2 * k + 1], edges[2 * k]});
  for (std::size_t k = 0; k + 1 < p.p; ++k) {
    if (edges[2 * k + 1] - edges[2 * k + 2] < o.cusp_tolerance) p.cusps.push_back(k);
  }

  if (o.compute_edge_counts) {
    double above = 0.0;
    for (std::size_t k = 0; k < p.p; ++k) {
      const double c = component_count(model, p.components[k]);
      p.component_counts.push_back(c);
      p.edge_counts.push_back(above);
      above += c;
      p.edge_counts.push_back(above);
    }
    for (double nj : p.edge_counts) {
      if (std::abs(nj - std::round(nj)) > o.integrality_tolerance)
        throw Error(ErrorCode::NumericalFailure,
                    "edge count " + std::to_string(nj) + " is not within tolerance of an integer");
    }
  }
  return p;
}

// --- density and counting ---------------------------------------------------------

namespace {

double density_unchecked(double x, const SpectrumModel& model) {
  if (!(x > 0.0)) return 0.0;
  return std::max(0.0, boundary_value(x, model).imag()) / std::numbers::pi;
}

// N * integral of rho over [x_edge, x_edge + side * width] with x = x_edge + side * t^2.
double edge_integral(const SpectrumModel& model, double x_edge, double side, double width) {
  if (width <= 0.0) return 0.0;
  auto f = [&](double t) { return density_unchecked(x_edge + side * t * t, model) * 2.0 * t; };
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, 0.0, std::sqrt(width), 8, 1e-10);
  return static_cast<double>(model.N()) * v;
}

}  // namespace

double density(double E, const SpectrumModel& model, const SupportProfile& profile) {
  if (!(E > 0.0)) throw Error(ErrorCode::InvalidPoint, "density needs E > 0");
  constexpr double kEdgeTolerance = 1e-12;
  if (!profile.contains(E, kEdgeTolerance * std::max(1.0, E))) return 0.0;
  return density_unchecked(E, model);
}

double density(double E, const SpectrumModel& model) {
  return density(E, model, classify_support(model, {.compute_edge_counts = false}));
}

double component_count(const SpectrumModel& model, Interval c) {
  const double mid = 0.5 * (c.lo + c.hi);
  return edge_integral(model, c.lo, +1.0, mid - c.lo) + edge_integral(model, c.hi, -1.0, c.hi - mid);
}

double classical_location(const SpectrumModel& model, std::size_t i) {
  return classical_location(model, classify_support(model), i);
}

double classical_location(const SpectrumModel& model, const SupportProfile& profile, std::size_t i) {
  if (i < 1 || i > std::min(model.n(), model.N()))
    throw Error(ErrorCode::QuantileOutOfRange, "index outside 1..min(n, N)");
  const double target = static_cast<double>(i) - 0.5;
  double above = 0.0;
  for (std::size_t k = 0; k < profile.p; ++k) {
    const Interval c = profile.components[k];
    const double count = profile.component_counts.empty() ? component_count(model, c)
                                                           : profile.component_counts[k];
    if (target >= above + count) {
      above += count;
      continue;
    }
    const double want = target - above;  // count inside [x, c.hi]
    const double mid = 0.5 * (c.lo + c.hi);
    auto tail = [&](double x) {
      return x >= mid ? edge_integral(model, c.hi, -1.0, c.hi - x)
                      : count - edge_integral(model, c.lo, +1.0, x - c.lo);
    };
    double lo = c.lo, hi = c.hi;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double x = 0.5 * (lo + hi);
      if (tail(x) > want) lo = x; else hi = x;
    }
    return 0.5 * (lo + hi);
  }
  throw Error(ErrorCode::QuantileOutOfRange, "i - 1/2 exceeds the positive mass (zero eigenvalue index)");
}

// --- pointwise reference quantities -----------------------------------------------

ErrorParameter error_parameter(SpectralPoint point, const EquilibriumSolution& solution, std::size_t N) {
  const double ne = static_cast<double>(N) * point.eta;
  const double im = std::max(0.0, solution.m_tilde0.imag());
  return {std::sqrt(im / ne) + 1.0 / ne};
}

cplx DeterministicEquivalent::population_bilinear(std::span<const double> a,
                                                  std::span<const double> b) const {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < population_diagonal.size(); ++i) acc += a[i] * b[i] * population_diagonal[i];
  return acc;
}

DeterministicEquivalent deterministic_equivalent(SpectralPoint point, const EquilibriumSolution& solution,
                                                 const SpectrumModel& model) {
  const cplx z = point.z();
  DeterministicEquivalent d;
  d.point = point;
  d.sample_scalar = z * solution.m_tilde0;
  d.population_diagonal.reserve(model.n());
  for (double s : model.sigma()) {
    const cplx denom = -z - z * solution.m_tilde0 * s;
    if (std::abs(denom) < kNearSingular)
      throw Error(ErrorCode::NearSingular, "-z - z m sigma vanishes; point is not regular");
    d.population_diagonal.push_back(1.0 / denom);
  }
  return d;
}

RegularityReport regularity_report(SpectralPoint point, const EquilibriumSolution& solution,
                                   const SpectrumModel& model, const SupportProfile& profile) {
  RegularityReport r;
  const cplx m = solution.m_tilde0;
  r.abs_z = std::abs(point.z());
  r.abs_m_tilde0 = std::abs(m);
  r.min_abs_one_plus_sigma_m = kInf;
  for (const auto& a : model.atoms())
    r.min_abs_one_plus_sigma_m = std::min(r.min_abs_one_plus_sigma_m, std::abs(1.0 + a.value * m));
  if (model.rank() < model.n()) r.min_abs_one_plus_sigma_m = std::min(r.min_abs_one_plus_sigma_m, 1.0);
  r.kappa = profile.kappa(point.E);
  r.inside_support = profile.contains(point.E);
  const double s = std::sqrt(r.kappa + point.eta);
  r.g = r.inside_support ? s : point.eta / s;
  r.im_ratio = m.imag() / r.g;
  return r;
}

}  // namespace covlaw
