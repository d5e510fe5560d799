// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "dgflow/csv.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/parallel.hpp"
#include "dgflow/random.hpp"

namespace dgflow::oracle {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kNegativeTolerance = 1e-14;

// (a - b) / (log a - log b), written as mean * x / atanh(x) with
// x = (a - b) / (a + b) to stay accurate when a ~ b.
double log_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  const double x = (a - b) / (a + b);
  const double m = 0.5 * (a + b);
  if (std::abs(x) < 1e-6) return m * (1.0 - x * x / 3.0);
  return m * x / std::atanh(x);
}

std::vector<double> prefix_mass(const Grid1D& g) {
  std::vector<double> c(g.cells() + 1, 0.0);
  const double dx = g.dx();
  for (std::size_t i = 0; i < g.cells(); ++i) c[i + 1] = c[i] + g.rho[i] * dx;
  return c;
}

double cdf_from_prefix(const Grid1D& g, const std::vector<double>& prefix, double x) {
  if (x <= g.x_min) return 0.0;
  if (x >= g.x_max) return prefix.back();
  const double dx = g.dx();
  auto i = static_cast<std::size_t>((x - g.x_min) / dx);
  i = std::min(i, g.cells() - 1);
  const double left = g.x_min + static_cast<double>(i) * dx;
  return prefix[i] + g.rho[i] * (x - left);
}

void check_grid(const Grid1D& g) {
  if (g.cells() < 2) throw ConfigError("grid needs at least two cells");
  if (!(g.x_max > g.x_min)) throw ConfigError("grid needs x_max > x_min");
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace

double Grid1D::mass() const {
  double m = 0.0;
  for (double r : rho) m += r;
  return m * dx();
}

double Grid1D::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < cells(); ++i) m += center(i) * rho[i];
  return m * dx() / mass();
}

double Grid1D::variance() const {
  // Exact second moment of the piecewise-constant density.
  const double mu = mean();
  const double h = dx();
  double v = 0.0;
  for (std::size_t i = 0; i < cells(); ++i) {
    const double c = center(i) - mu;
    v += rho[i] * (c * c + h * h / 12.0);
  }
  return v * h / mass();
}

double Grid1D::cdf(double x) const {
  return cdf_from_prefix(*this, prefix_mass(*this), x);
}

AnalyticDensity1D AnalyticDensity1D::gaussian(double mean, double sd) {
  return mixture({{1.0, mean, sd}});
}

AnalyticDensity1D AnalyticDensity1D::mixture(std::vector<Component> components) {
  if (components.empty()) throw ConfigError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !(c.sd > 0.0) || !std::isfinite(c.mean))
      throw ConfigError("mixture components need positive weight and sd");
    total += c.weight;
  }
  for (auto& c : components) c.weight /= total;
  AnalyticDensity1D d;
  d.components_ = std::move(components);
  return d;
}

std::pair<double, double> AnalyticDensity1D::log_density_and_score(double x) const {
  // Two passes (max, then sums) keep this allocation-free.
  static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  auto log_term = [&](const Component& c) {
    const double z = (x - c.mean) / c.sd;
    return std::log(c.weight) - 0.5 * z * z - std::log(c.sd) - kLogSqrt2Pi;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : components_) best = std::max(best, log_term(c));
  double acc = 0.0;
  double score = 0.0;
  for (const auto& c : components_) {
    const double w = std::exp(log_term(c) - best);
    acc += w;
    score += w * (c.mean - x) / (c.sd * c.sd);
  }
  return {best + std::log(acc), score / acc};
}

double AnalyticDensity1D::log_density(double x) const { return log_density_and_score(x).first; }

double AnalyticDensity1D::density(double x) const { return std::exp(log_density(x)); }

double AnalyticDensity1D::score(double x) const { return log_density_and_score(x).second; }

double AnalyticDensity1D::mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

double AnalyticDensity1D::variance() const {
  const double m = mean();
  double v = 0.0;
  for (const auto& c : components_) v += c.weight * (c.sd * c.sd + (c.mean - m) * (c.mean - m));
  return v;
}

std::vector<double> AnalyticDensity1D::sample(std::size_t n, std::uint64_t seed) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CounterRng rng(seed, i);
    const double u = rng.uniform(0);
    std::size_t k = 0;
    double acc = components_[0].weight;
    while (u > acc && k + 1 < components_.size()) acc += components_[++k].weight;
    out[i] = components_[k].mean + components_[k].sd * rng.normal_pair(1).first;
  }
  return out;
}

Grid1D discretize(const AnalyticDensity1D& density, double x_min, double x_max,
                  std::size_t cells) {
  Grid1D g{x_min, x_max, std::vector<double>(cells, 0.0)};
  check_grid(g);
  for (std::size_t i = 0; i < cells; ++i) g.rho[i] = density.density(g.center(i));
  const double m = g.mass();
  if (!(m > 0.0)) throw ConfigError("density has no mass on the grid");
  for (double& r : g.rho) r /= m;
  return g;
}

double stable_dt(const Grid1D& grid, const AnalyticDensity1D& mu, const DriftTerm& div,
                 double gamma) {
  check_grid(grid);
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  const double dx = grid.dx();
  double v_max = 0.0;
  if (div) {
    for (std::size_t i = 0; i < grid.cells(); ++i)
      v_max = std::max(v_max, std::abs(mu.score(grid.center(i))));
    v_max = std::max(v_max, std::abs(mu.score(grid.x_min)));
    v_max = std::max(v_max, std::abs(mu.score(grid.x_max)));
  }
  const double diffusion = gamma + (div ? 1.0 : 0.0);
  if (diffusion == 0.0 && v_max == 0.0) throw ConfigError("flow has neither drift nor diffusion");
  return 0.4 * dx * dx / (diffusion + v_max * dx);
}

namespace {

// Step with precomputed log mu at the cell centres.
Grid1D fpe_step_impl(const Grid1D& rho, const std::vector<double>& log_mu, const DriftTerm& div,
                     double gamma, double dt) {
  const std::size_t n = rho.cells();
  const double dx = rho.dx();
  std::vector<double> fp(n, 0.0);
  if (div) {
    for (std::size_t i = 0; i < n; ++i) {
      const double log_r = std::log(std::max(rho.rho[i], kTiny)) - log_mu[i];
      fp[i] = div->f_prime(std::clamp(std::exp(log_r), kTiny, 1e300));
    }
  }
  std::vector<double> flux(n + 1, 0.0);  // flux[i] sits between cells i-1 and i
  for (std::size_t i = 1; i < n; ++i) {
    const double a = rho.rho[i - 1];
    const double b = rho.rho[i];
    double f = -gamma * (b - a) / dx;
    if (div) f -= log_mean(a, b) * (fp[i] - fp[i - 1]) / dx;
    flux[i] = f;
  }
  Grid1D out{rho.x_min, rho.x_max, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double v = rho.rho[i] - dt / dx * (flux[i + 1] - flux[i]);
    if (!std::isfinite(v)) throw NumericError("FPE produced a non-finite density", -1,
                                              static_cast<std::int64_t>(i));
    if (v < 0.0) {
      if (v < -kNegativeTolerance)
        throw NumericError("FPE density went negative (" + std::to_string(v) + ")", -1,
                           static_cast<std::int64_t>(i));
      v = 0.0;
    }
    out.rho[i] = v;
  }
  return out;
}

std::vector<double> log_mu_on(const Grid1D& g, const AnalyticDensity1D& mu) {
  std::vector<double> l(g.cells());
  for (std::size_t i = 0; i < g.cells(); ++i) l[i] = mu.log_density(g.center(i));
  return l;
}

}  // namespace

Grid1D fpe_step(const Grid1D& rho, const AnalyticDensity1D& mu, const DriftTerm& div,
                double gamma, double dt) {
  const double limit = stable_dt(rho, mu, div, gamma);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12))
    throw ConfigError("dt = " + std::to_string(dt) + " outside (0, " + std::to_string(limit) +
                      "]");
  return fpe_step_impl(rho, log_mu_on(rho, mu), div, gamma, dt);
}

namespace {

double free_energy_impl(const Grid1D& rho, const std::vector<double>& log_mu,
                        const DriftTerm& div, double gamma) {
  const double dx = rho.dx();
  double e = 0.0;
  for (std::size_t i = 0; i < rho.cells(); ++i) {
    const double p = rho.rho[i];
    if (div) {
      const double r =
          std::clamp(std::exp(std::log(std::max(p, kTiny)) - log_mu[i]), kTiny, 1e300);
      e += div->f(r) * std::exp(log_mu[i]);
    }
    if (gamma > 0.0 && p > 0.0) e += gamma * p * std::log(p);
  }
  return e * dx;
}

}  // namespace

double free_energy(const Grid1D& rho, const AnalyticDensity1D& mu, const DriftTerm& div,
                   double gamma) {
  return free_energy_impl(rho, log_mu_on(rho, mu), div, gamma);
}

FpeRun solve_fpe(const Grid1D& rho0, const AnalyticDensity1D& mu, const DriftTerm& div,
                 double gamma, double t_end, bool track_energy) {
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be non-negative");
  const double limit = stable_dt(rho0, mu, div, gamma);
  FpeRun run;
  run.steps = static_cast<std::size_t>(std::ceil(t_end / limit));
  run.dt = run.steps > 0 ? t_end / static_cast<double>(run.steps) : 0.0;
  run.final = rho0;
  const auto log_mu = log_mu_on(rho0, mu);
  const double m0 = rho0.mass();
  double energy = track_energy ? free_energy_impl(rho0, log_mu, div, gamma) : 0.0;
  for (std::size_t s = 0; s < run.steps; ++s) {
    try {
      run.final = fpe_step_impl(run.final, log_mu, div, gamma, run.dt);
    } catch (const NumericError& e) {
      throw NumericError(e.what(), static_cast<std::int64_t>(s), e.index());
    }
    run.max_mass_error = std::max(run.max_mass_error, std::abs(run.final.mass() - m0));
    if (track_energy) {
      const double next = free_energy_impl(run.final, log_mu, div, gamma);
      const double inc = next - energy;
      run.max_energy_increase = std::max(run.max_energy_increase, inc);
      if (inc > 1e-13 * std::max(1.0, std::abs(energy))) run.energy_monotone = false;
      energy = next;
    }
  }
  return run;
}

GaussianMoments gaussian_flow_closed_form(double m0, double s0_sq, double t, double gamma) {
  if (!(s0_sq > 0.0)) throw DomainError("initial variance must be positive");
  if (!(t >= 0.0)) throw ConfigError("t must be non-negative");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  const double s_inf = 1.0 + gamma;
  return {m0 * std::exp(-t), s_inf + (s0_sq - s_inf) * std::exp(-2.0 * t)};
}

double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("bandwidth needs at least two points");
  const double m = mean_of(x);
  const double sd = std::sqrt(variance_of(x, m) * static_cast<double>(x.size()) /
                              static_cast<double>(x.size() - 1));
  std::vector<double> v(x.begin(), x.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw ConfigError("bandwidth undefined for constant data");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

namespace {

// Gaussian KDE and its derivative on a uniform grid via linear binning.
struct BinnedKde {
  double lo = 0.0;
  double step = 0.0;
  std::vector<double> value;
  std::vector<double> slope;

  void fit(std::span<const double> x, double h) {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    lo = *mn - 6.0 * h;
    const double hi = *mx + 6.0 * h;
    const auto m = std::max<std::size_t>(2048, static_cast<std::size_t>(std::ceil((hi - lo) / (h / 8.0))));
    step = (hi - lo) / static_cast<double>(m - 1);
    std::vector<double> w(m, 0.0);
    const double unit = 1.0 / static_cast<double>(x.size());
    for (double v : x) {
      const double pos = (v - lo) / step;
      const auto k = std::min(static_cast<std::size_t>(pos), m - 2);
      const double frac = pos - static_cast<double>(k);
      w[k] += unit * (1.0 - frac);
      w[k + 1] += unit * frac;
    }
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(6.0 * h / step));
    std::vector<double> kern(static_cast<std::size_t>(2 * reach + 1));
    std::vector<double> dkern(kern.size());
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    for (std::ptrdiff_t j = -reach; j <= reach; ++j) {
      const double u = static_cast<double>(j) * step / h;
      const double k = norm * std::exp(-0.5 * u * u);
      kern[static_cast<std::size_t>(j + reach)] = k;
      dkern[static_cast<std::size_t>(j + reach)] = -u / h * k;
    }
    value.assign(m, 0.0);
    slope.assign(m, 0.0);
    const auto mm = static_cast<std::ptrdiff_t>(m);
    for (std::ptrdiff_t k = 0; k < mm; ++k) {
      const double wk = w[static_cast<std::size_t>(k)];
      if (wk == 0.0) continue;
      const std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, k - reach);
      const std::ptrdiff_t b = std::min<std::ptrdiff_t>(mm - 1, k + reach);
      for (std::ptrdiff_t j = a; j <= b; ++j) {
        value[static_cast<std::size_t>(j)] += wk * kern[static_cast<std::size_t>(j - k + reach)];
        slope[static_cast<std::size_t>(j)] += wk * dkern[static_cast<std::size_t>(j - k + reach)];
      }
    }
  }

  std::pair<double, double> at(double x) const {
    const double pos = (x - lo) / step;
    const auto k = std::min(static_cast<std::size_t>(std::max(pos, 0.0)), value.size() - 2);
    const double frac = pos - static_cast<double>(k);
    return {value[k] + frac * (value[k + 1] - value[k]),
            slope[k] + frac * (slope[k + 1] - slope[k])};
  }
};

}  // namespace

ParticleRun simulate_particles_running_ratio(std::size_t n_particles,
                                             const AnalyticDensity1D& rho0,
                                             const AnalyticDensity1D& mu, const FDivergence& div,
                                             double gamma, double eta, std::size_t steps,
                                             std::uint64_t seed, int threads) {
  if (n_particles < 1000) throw ConfigError("running-ratio simulation needs >= 1000 particles");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");

  ParticleRun run;
  run.particles = rho0.sample(n_particles, derive_seed(seed, 1));
  auto record = [&](double t, double h) {
    const double m = mean_of(run.particles);
    run.times.push_back(t);
    run.means.push_back(m);
    run.variances.push_back(variance_of(run.particles, m));
    run.bandwidths.push_back(h);
  };
  const std::uint64_t noise_seed = derive_seed(seed, 2);
  const double noise = std::sqrt(2.0 * gamma * eta);
  BinnedKde kde;
  std::vector<double> next(n_particles);
  for (std::size_t s = 0; s < steps; ++s) {
    const double h = silverman_bandwidth(run.particles);
    if (s == 0) record(0.0, h);
    kde.fit(run.particles, h);
    parallel_chunks(n_particles, 1024, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double x = run.particles[i];
        const auto [p, dp] = kde.at(x);
        const double p_safe = std::max(p, kTiny);
        // -d_x f'(p/mu) = -r f''(r) (d_x log p - d_x log mu), r = p / mu
        const auto [log_mu, score_mu] = mu.log_density_and_score(x);
        const double logit = log_mu - std::log(p_safe);
        const double v = -div.drift_scale(logit) * (dp / p_safe - score_mu);
        double y = x + eta * v;
        if (noise > 0.0) y += noise * CounterRng(noise_seed, i).normal_pair(s).first;
        if (!std::isfinite(y))
          throw NumericError("particle left the finite range", static_cast<std::int64_t>(s),
                             static_cast<std::int64_t>(i));
        next[i] = y;
      }
    });
    run.particles.swap(next);
    record(static_cast<double>(s + 1) * eta, h);
  }
  if (steps == 0) record(0.0, silverman_bandwidth(run.particles));
  return run;
}

double ks_distance(std::span<const double> samples, const Grid1D& grid) {
  if (samples.empty()) throw ConfigError("KS distance needs samples");
  check_grid(grid);
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto prefix = prefix_mass(grid);
  const double total = prefix.back();
  if (!(total > 0.0)) throw ConfigError("grid has no mass");
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf_from_prefix(grid, prefix, x[i]) / total;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS distance needs samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(x.size()) -
                             static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

void write_grid_csv(const std::filesystem::path& path, double t, const Grid1D& grid,
                    bool append) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  if (!append) out << "t,x,rho\n";
  for (std::size_t i = 0; i < grid.cells(); ++i)
    out << io::format_double(t) << ',' << io::format_double(grid.center(i)) << ','
        << io::format_double(grid.rho[i]) << '\n';
}

}  // namespace dgflow::oracle
