#include "covlaw/ensembles.hpp"

#include <algorithm>
#include <cmath>

#include "covlaw/error.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/stats.hpp"

namespace covlaw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

// m_l = sum_{j=1}^{l} C(l-1, j-1) kappa_j m_{l-j}.
std::vector<double> moments_from_cumulants(const std::vector<double>& kappa, int L) {
  std::vector<double> m(L + 1, 0.0);
  m[0] = 1.0;
  for (int l = 1; l <= L; ++l)
    for (int j = 1; j <= l; ++j) m[l] += binomial(l - 1, j - 1) * kappa[j] * m[l - j];
  return m;
}

std::vector<double> cumulants_from_moments(const std::vector<double>& m, int L) {
  std::vector<double> kappa(L + 1, 0.0);
  for (int l = 1; l <= L; ++l) {
    kappa[l] = m[l];
    for (int j = 1; j < l; ++j) kappa[l] -= binomial(l - 1, j - 1) * kappa[j] * m[l - j];
  }
  return kappa;
}

double poly_power(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

}  // namespace

// --- scalar laws and functions ---------------------------------------------------------

void EntryDistribution::validate() const {
  if (law == EntryLaw::StudentT && df < 9)
    throw Error(ErrorCode::InvalidArgument, "student_t entries need integer df >= 9");
}

double EntryDistribution::draw(Stream& s) const {
  switch (law) {
    case EntryLaw::Gaussian: return s.normal();
    case EntryLaw::Rademacher: return s.rademacher();
    case EntryLaw::StudentT: return s.student_t(df);
  }
  return 0.0;
}

double EntryDistribution::raw_moment(int k) const {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "negative moment order");
  if (k % 2 == 1) return 0.0;
  const int h = k / 2;
  switch (law) {
    case EntryLaw::Gaussian: {
      double r = 1.0;
      for (int j = 1; j <= h; ++j) r *= 2 * j - 1;
      return r;
    }
    case EntryLaw::Rademacher: return 1.0;
    case EntryLaw::StudentT: {
      if (k >= df) throw Error(ErrorCode::UnsupportedAnalytic, "student_t moment of order >= df does not exist");
      // Unit-variance scaling: E t^{2h} = prod_j (2j - 1)(df - 2) / (df - 2j).
      double r = 1.0;
      for (int j = 1; j <= h; ++j) r *= (2.0 * j - 1.0) * (df - 2.0) / (df - 2.0 * j);
      return r;
    }
  }
  return 0.0;
}

double Polynomial::operator()(double x) const {
  if (basis == Basis::Power) return poly_power(coeffs, x);
  // He_{k+1} = x He_k - k He_{k-1}
  double acc = 0.0, prev = 0.0, cur = 1.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    acc += coeffs[k] * cur;
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return acc;
}

std::vector<double> Polynomial::power_coefficients() const {
  if (basis == Basis::Power) return coeffs;
  const std::size_t D = coeffs.size();
  std::vector<double> out(D, 0.0);
  std::vector<double> prev(D, 0.0), cur(D, 0.0);
  if (D == 0) return out;
  cur[0] = 1.0;
  for (std::size_t k = 0; k < D; ++k) {
    for (std::size_t j = 0; j < D; ++j) out[j] += coeffs[k] * cur[j];
    std::vector<double> next(D, 0.0);
    for (std::size_t j = 0; j + 1 < D; ++j) next[j + 1] += cur[j];
    for (std::size_t j = 0; j < D; ++j) next[j] -= static_cast<double>(k) * prev[j];
    prev = cur;
    cur = next;
  }
  return out;
}

double ScalarFunction::value(double x) const {
  return kind == Kind::Tanh ? scale * std::tanh(x) : poly_power(coeffs, x);
}

double ScalarFunction::d1(double x) const {
  if (kind == Kind::Tanh) {
    const double t = std::tanh(x);
    return scale * (1.0 - t * t);
  }
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs[k];
  return acc;
}

double ScalarFunction::d2(double x) const {
  if (kind == Kind::Tanh) {
    const double t = std::tanh(x);
    return -2.0 * scale * t * (1.0 - t * t);
  }
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 2;)
    acc = acc * x + static_cast<double>(k * (k - 1)) * coeffs[k];
  return acc;
}

// --- spec helpers -------------------------------------------------------------------

std::vector<std::pair<std::size_t, std::size_t>> chaos_pairs(std::size_t d, std::size_t M) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j <= std::min(i + M, d - 1); ++j) out.emplace_back(i, j);
  return out;
}

std::string family_name(const EnsembleSpec& spec) {
  return std::visit(overloaded{
                        [](const Separable&) { return std::string("separable"); },
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const Mixture&) { return std::string("mixture"); },
                        [](const RandomFeatures&) { return std::string("random_features"); },
                        [](const GibbsTilt&) { return std::string("gibbs_tilt"); },
                        [](const ChaosPairs&) { return std::string("chaos_pairs"); },
                    },
                    spec);
}

std::size_t dimension(const EnsembleSpec& spec) {
  return std::visit(overloaded{
                        [](const Separable& s) { return static_cast<std::size_t>(s.factor.rows()); },
                        [](const Sphere& s) { return s.d; },
                        [](const Mixture& s) { return s.d; },
                        [](const RandomFeatures& s) { return static_cast<std::size_t>(s.X.rows()); },
                        [](const GibbsTilt& s) { return static_cast<std::size_t>(s.X.cols()); },
                        [](const ChaosPairs& s) { return chaos_pairs(s.d, s.M).size(); },
                    },
                    spec);
}

void validate(const EnsembleSpec& spec) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  std::visit(overloaded{
                 [&](const Separable& s) {
                   if (s.factor.size() == 0) fail("separable factor is empty");
                   if (!s.factor.allFinite()) fail("separable factor has non-finite entries");
                   s.entry.validate();
                 },
                 [&](const Sphere& s) {
                   if (s.d == 0) fail("sphere dimension must be positive");
                 },
                 [&](const Mixture& s) {
                   if (s.d == 0) fail("mixture dimension must be positive");
                   if (!(std::abs(s.c) < 1.0)) fail("mixture amplitude needs |c| < 1");
                 },
                 [&](const RandomFeatures& s) {
                   if (s.X.size() == 0) fail("random features X is empty");
                   if (s.activation.empty()) fail("random features activation is empty");
                   if (s.activation.size() != 1 && s.activation.size() != static_cast<std::size_t>(s.X.rows()))
                     fail("activation list must be shared or one per row");
                   s.entry.validate();
                 },
                 [&](const GibbsTilt& s) {
                   if (s.X.size() == 0) fail("gibbs tilt X is empty");
                   if (s.sigma.empty()) fail("gibbs tilt sigma list is empty");
                   if (s.sigma.size() != 1 && s.sigma.size() != static_cast<std::size_t>(s.X.rows()))
                     fail("sigma list must be shared or one per row");
                   if (s.mcmc.chains == 0) fail("gibbs tilt needs at least one chain");
                 },
                 [&](const ChaosPairs& s) {
                   if (s.d < 2 || s.M == 0) fail("chaos pairs need d >= 2 and M >= 1");
                 },
             },
             spec);
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Quadrature: return "quadrature";
    case Provenance::McmcEstimate: return "mcmc_estimate";
    case Provenance::SampleEstimate: return "sample_estimate";
  }
  return "unknown";
}

std::vector<double> PopulationCovariance::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

// --- random features -------------------------------------------------------------------

Vector random_features_mean(const RandomFeatures& rf) {
  const std::size_t n = rf.X.rows();
  Vector mu(n);
  if (rf.entry.law == EntryLaw::Gaussian) {
    const auto& gh = gauss_hermite64();
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rf.X.row(i).norm();
      const Polynomial& p = rf.activation_for(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < gh.nodes.size(); ++k) acc += gh.weights[k] * p(a * gh.nodes[k]);
      mu(i) = acc;
    }
    return mu;
  }
  // Cumulants of x . w add over independent coordinates; moments follow.
  int L = 0;
  for (const auto& p : rf.activation) L = std::max(L, p.degree());
  std::vector<double> mw(L + 1);
  for (int k = 0; k <= L; ++k) mw[k] = rf.entry.raw_moment(k);
  const std::vector<double> kw = cumulants_from_moments(mw, L);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ks(L + 1, 0.0);
    for (Eigen::Index a = 0; a < rf.X.cols(); ++a) {
      const double x = rf.X(i, a);
      double xp = 1.0;
      for (int r = 1; r <= L; ++r) {
        xp *= x;
        ks[r] += xp * kw[r];
      }
    }
    const std::vector<double> ms = moments_from_cumulants(ks, L);
    const std::vector<double> c = rf.activation_for(i).power_coefficients();
    double acc = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) acc += c[l] * ms[l];
    mu(i) = acc;
  }
  return mu;
}

namespace {

Matrix random_features_covariance(const RandomFeatures& rf) {
  const std::size_t n = rf.X.rows();
  const auto& gh = gauss_hermite64();
  const std::size_t K = gh.nodes.size();
  const Vector mu = random_features_mean(rf);
  Vector norms(n);
  for (std::size_t i = 0; i < n; ++i) norms(i) = rf.X.row(i).norm();
  Matrix S(n, n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const Polynomial& pi = rf.activation_for(i);
    std::vector<double> u(K);
    for (std::size_t k = 0; k < K; ++k) u[k] = pi(norms(i) * gh.nodes[k]);
    for (std::size_t j = i; j < n; ++j) {
      const Polynomial& pj = rf.activation_for(j);
      const double a = norms(i), b = norms(j);
      double rho = (a > 0.0 && b > 0.0) ? rf.X.row(i).dot(rf.X.row(j)) / (a * b) : 0.0;
      rho = std::clamp(rho, -1.0, 1.0);
      const double perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double inner = 0.0;
        for (std::size_t l = 0; l < K; ++l) inner += gh.weights[l] * pj(b * (rho * gh.nodes[k] + perp * gh.nodes[l]));
        acc += gh.weights[k] * u[k] * inner;
      }
      // Covariance of the centered features, or the raw second moment.
      const double v = rf.centered ? acc - mu(i) * mu(j) : acc;
      S(i, j) = S(j, i) = v;
    }
  }
  return S;
}

// --- Gibbs tilt ---------------------------------------------------------------------

struct TiltTarget {
  const GibbsTilt& spec;

  double potential(const Vector& w, const Vector& proj) const {
    double acc = 0.5 * w.squaredNorm();
    for (Eigen::Index i = 0; i < proj.size(); ++i) acc += spec.lambda * spec.sigma_for(i).value(proj(i));
    return acc;
  }
  Vector gradient(const Vector& w, const Vector& proj) const {
    Vector s(proj.size());
    for (Eigen::Index i = 0; i < proj.size(); ++i) s(i) = spec.sigma_for(i).d1(proj(i));
    return w + spec.lambda * (spec.X.transpose() * s);
  }
};

struct Chain {
  Vector w;
  Vector proj;  // X w
  Vector grad;
  double U = 0.0;
  double step = 0.0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  Stream rng{0};

  void reset_state(const TiltTarget& t) {
    proj = t.spec.X * w;
    U = t.potential(w, proj);
    grad = t.gradient(w, proj);
  }

  bool advance(const TiltTarget& t) {
    const Eigen::Index n = w.size();
    Vector xi(n);
    for (Eigen::Index k = 0; k < n; ++k) xi(k) = rng.normal();
    const Vector prop = w - step * grad + std::sqrt(2.0 * step) * xi;
    const Vector pproj = t.spec.X * prop;
    const double pU = t.potential(prop, pproj);
    const Vector pgrad = t.gradient(prop, pproj);
    const double forward = (prop - w + step * grad).squaredNorm();
    const double backward = (w - prop + step * pgrad).squaredNorm();
    const double log_alpha = -pU + U - (backward - forward) / (4.0 * step);
    ++proposed;
    if (std::log(rng.uniform()) < log_alpha) {
      w = prop;
      proj = pproj;
      U = pU;
      grad = pgrad;
      ++accepted;
      return true;
    }
    return false;
  }
};

std::size_t thinning_from_acf(const std::vector<double>& x) {
  const std::size_t L = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(L);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return 1;
  const std::size_t max_lag = std::min<std::size_t>(1000, L / 4);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < L; ++t) c += (x[t] - mean) * (x[t + lag] - mean);
    if (c / c0 < 0.05) return lag;
  }
  return max_lag;
}

}  // namespace

HessianBounds gibbs_hessian_bounds(const GibbsTilt& spec, std::uint64_t seed) {
  validate(EnsembleSpec{spec});
  const std::size_t d = spec.X.rows(), n = spec.X.cols();
  Stream rng = Stream::substream(seed, 0x4e55);
  HessianBounds hb{1e300, -1e300};

  // Nonzero spectrum of X^T D X equals that of S D S with S = (X X^T)^{1/2}.
  const bool reduce = d < n;
  Matrix S;
  if (reduce) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.X * spec.X.transpose());
    S = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
  }
  for (std::size_t probe = 0; probe <= spec.probe_points; ++probe) {
    Vector w = Vector::Zero(n);
    if (probe > 0)
      for (std::size_t k = 0; k < n; ++k) w(k) = rng.normal();
    const Vector proj = spec.X * w;
    Vector D(d);
    for (std::size_t i = 0; i < d; ++i) D(i) = spec.lambda * spec.sigma_for(i).d2(proj(i));
    Vector ev;
    if (reduce) {
      ev = Eigen::SelfAdjointEigenSolver<Matrix>(S * D.asDiagonal() * S, Eigen::EigenvaluesOnly).eigenvalues();
      hb.lower = std::min(hb.lower, 1.0);
      hb.upper = std::max(hb.upper, 1.0);
    } else {
      Matrix H = spec.X.transpose() * D.asDiagonal() * spec.X;
      ev = Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues();
    }
    hb.lower = std::min(hb.lower, 1.0 + ev.minCoeff());
    hb.upper = std::max(hb.upper, 1.0 + ev.maxCoeff());
  }
  if (hb.lower <= 0.05)
    throw Error(ErrorCode::NotLogConcave,
                "Hessian lower bound " + std::to_string(hb.lower) + " <= 0.05; lambda too large");
  return hb;
}

Matrix sample_gibbs(const GibbsTilt& spec, std::size_t N, std::uint64_t seed, McmcDiagnostics* diag) {
  gibbs_hessian_bounds(spec, seed);
  const std::size_t n = spec.X.cols();
  const std::size_t C = spec.mcmc.chains;
  const TiltTarget target{spec};
  std::vector<Chain> chains(C);
  std::vector<std::size_t> thins(C);
  std::vector<Vector> sums(C, Vector::Zero(n));

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < C; ++c) {
    Chain& ch = chains[c];
    ch.rng = Stream::substream(seed, c);
    ch.step = spec.mcmc.step;
    ch.w = Vector::Zero(n);
    for (std::size_t k = 0; k < n; ++k) ch.w(k) = ch.rng.normal();
    ch.reset_state(target);
    // Burn-in with step adaptation toward acceptance 0.574.
    constexpr std::size_t batch = 50;
    std::size_t acc_in_batch = 0;
    for (std::size_t t = 1; t <= spec.mcmc.burn_in; ++t) {
      acc_in_batch += ch.advance(target);
      if (t % batch == 0) {
        const double rate = static_cast<double>(acc_in_batch) / batch;
        ch.step *= std::exp(rate - 0.574);
        acc_in_batch = 0;
      }
    }
    ch.proposed = ch.accepted = 0;
    // Long run: mean estimate and the |w|^2 trace for thinning.
    std::vector<double> trace;
    trace.reserve(spec.mcmc.mean_run);
    for (std::size_t t = 0; t < spec.mcmc.mean_run; ++t) {
      ch.advance(target);
      sums[c] += ch.w;
      trace.push_back(ch.w.squaredNorm());
    }
    thins[c] = spec.mcmc.thin ? spec.mcmc.thin : thinning_from_acf(trace);
  }

  Vector mean = Vector::Zero(n);
  for (const auto& s : sums) mean += s;
  mean /= static_cast<double>(C * spec.mcmc.mean_run);
  const std::size_t thin = *std::max_element(thins.begin(), thins.end());

  Matrix G(n, N);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = c; j < N; j += C) {
      for (std::size_t t = 0; t < thin; ++t) chains[c].advance(target);
      G.col(j) = chains[c].w - mean;
    }
  }

  std::size_t proposed = 0, accepted = 0;
  double step = 0.0;
  for (const auto& ch : chains) {
    proposed += ch.proposed;
    accepted += ch.accepted;
    step += ch.step / static_cast<double>(C);
  }
  const double rate = proposed ? static_cast<double>(accepted) / proposed : 0.0;
  if (diag) *diag = {step, rate, thin};
  if (rate < 0.3 || rate > 0.8)
    throw Error(ErrorCode::McmcNotMixed, "MALA acceptance " + std::to_string(rate) + " outside [0.3, 0.8]");
  return G;
}

// --- sampling ---------------------------------------------------------------------------

Matrix sample(const EnsembleSpec& spec, std::size_t N, std::uint64_t seed, Execution exec) {
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "sample count N must be positive");
  validate(spec);
  if (const auto* gt = std::get_if<GibbsTilt>(&spec)) return sample_gibbs(*gt, N, seed);

  const std::size_t n = dimension(spec);
  Matrix G(n, N);
  Vector rf_mean;
  if (const auto* rf = std::get_if<RandomFeatures>(&spec); rf && rf->centered) rf_mean = random_features_mean(*rf);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (const auto* cp = std::get_if<ChaosPairs>(&spec)) pairs = chaos_pairs(cp->d, cp->M);

  auto column = [&](std::size_t j) {
    Stream s = Stream::substream(seed, j);
    auto out = G.col(j);
    std::visit(overloaded{
                   [&](const Separable& e) {
                     Vector w(e.factor.cols());
                     for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = e.entry.draw(s);
                     out.noalias() = e.factor * w;
                   },
                   [&](const Sphere& e) {
                     for (std::size_t k = 0; k < e.d; ++k) out(k) = s.normal();
                     out *= std::sqrt(static_cast<double>(e.d)) / out.norm();
                   },
                   [&](const Mixture& e) {
                     const double scale = std::sqrt(1.0 + e.c * s.rademacher());
                     for (std::size_t k = 0; k < e.d; ++k) out(k) = scale * s.normal();
                   },
                   [&](const RandomFeatures& e) {
                     Vector w(e.X.cols());
                     for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = e.entry.draw(s);
                     const Vector proj = e.X * w;
                     for (Eigen::Index i = 0; i < proj.size(); ++i) out(i) = e.activation_for(i)(proj(i));
                     if (e.centered) out -= rf_mean;
                   },
                   [&](const GibbsTilt&) {},
                   [&](const ChaosPairs& e) {
                     Vector x(e.d);
                     for (std::size_t k = 0; k < e.d; ++k) x(k) = s.normal();
                     for (std::size_t p = 0; p < pairs.size(); ++p) out(p) = x(pairs[p].first) * x(pairs[p].second);
                   },
               },
               spec);
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < N; ++j) column(j);
  } else {
    for (std::size_t j = 0; j < N; ++j) column(j);
  }
  return G;
}

// --- covariance -------------------------------------------------------------------------

PopulationCovariance population_covariance(const EnsembleSpec& spec) {
  validate(spec);
  const std::size_t n = dimension(spec);
  return std::visit(
      overloaded{
          [&](const Separable& e) {
            return PopulationCovariance{e.factor * e.factor.transpose(), Provenance::Exact, std::nullopt};
          },
          [&](const RandomFeatures& e) {
            if (e.entry.law != EntryLaw::Gaussian)
              throw Error(ErrorCode::UnsupportedAnalytic,
                          "exact covariance needs Gaussian w; use estimate_covariance");
            return PopulationCovariance{random_features_covariance(e), Provenance::Quadrature, std::nullopt};
          },
          [&](const GibbsTilt&) -> PopulationCovariance {
            throw Error(ErrorCode::UnsupportedAnalytic, "gibbs tilt covariance is estimated by MCMC");
          },
          [&](const auto&) {
            return PopulationCovariance{Matrix::Identity(n, n), Provenance::Exact, std::nullopt};
          },
      },
      spec);
}

PopulationCovariance estimate_covariance(const EnsembleSpec& spec, std::size_t reps, std::uint64_t seed) {
  constexpr std::size_t B = 20;
  if (reps < 2 * B) throw Error(ErrorCode::InsufficientSamples, "covariance estimate needs at least 40 draws");
  const Matrix G = sample(spec, reps, seed);
  const std::size_t n = G.rows();
  const Matrix full = G * G.transpose();
  std::vector<Matrix> leave(B);
  Matrix avg = Matrix::Zero(n, n);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * reps / B, hi = (b + 1) * reps / B;
    const auto block = G.middleCols(lo, hi - lo);
    leave[b] = (full - block * block.transpose()) / static_cast<double>(reps - (hi - lo));
    avg += leave[b] / static_cast<double>(B);
  }
  double ss = 0.0;
  for (const auto& L : leave) {
    const double d = operator_norm(L - avg);
    ss += d * d;
  }
  PopulationCovariance pc;
  pc.matrix = full / static_cast<double>(reps);
  pc.provenance = std::holds_alternative<GibbsTilt>(spec) ? Provenance::McmcEstimate : Provenance::SampleEstimate;
  pc.estimate_error = std::sqrt((B - 1.0) / B * ss);
  return pc;
}

QuadraticFormStats quadratic_form_stats(const EnsembleSpec& spec, const Matrix& A, std::size_t reps,
                                        std::uint64_t seed, const PopulationCovariance* sigma) {
  if (reps < 2) throw Error(ErrorCode::InsufficientSamples, "quadratic form statistics need reps >= 2");
  PopulationCovariance own;
  if (!sigma) {
    own = population_covariance(spec);
    sigma = &own;
  }
  const std::size_t n = dimension(spec);
  if (static_cast<std::size_t>(A.rows()) != n || static_cast<std::size_t>(A.cols()) != n)
    throw Error(ErrorCode::InvalidArgument, "test matrix must be n x n");
  const double trace = (sigma->matrix.cwiseProduct(A.transpose())).sum();
  const double fro = A.norm();
  if (!(fro > 0.0)) throw Error(ErrorCode::InvalidArgument, "test matrix must be nonzero");

  std::vector<double> q(reps);
  constexpr std::size_t kBatch = 4096;
  for (std::size_t start = 0; start < reps; start += kBatch) {
    const std::size_t m = std::min(kBatch, reps - start);
    const Matrix G = sample(spec, m, mix64(seed + start));
    const Matrix AG = A * G;
    for (std::size_t j = 0; j < m; ++j) q[start + j] = (G.col(j).dot(AG.col(j)) - trace) / fro;
  }
  QuadraticFormStats st;
  st.count = reps;
  st.mean = mean(q);
  st.variance = sample_variance(q);
  st.p05 = quantile7(q, 0.05);
  st.p50 = quantile7(q, 0.5);
  st.p95 = quantile7(q, 0.95);
  return st;
}

}  // namespace covlaw
