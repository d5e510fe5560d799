// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgflow/fdivergence.hpp"

namespace dgflow::oracle {

/// Cell-averaged density on a uniform grid over [x_min, x_max].
struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  std::vector<double> rho;

  std::size_t cells() const { return rho.size(); }
  double dx() const { return (x_max - x_min) / static_cast<double>(rho.size()); }
  double center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
  double mass() const;
  double mean() const;
  double variance() const;
  /// Piecewise-linear CDF (exact for piecewise-constant density).
  double cdf(double x) const;
};

/// Finite mixture of 1D Gaussians.
class AnalyticDensity1D {
 public:
  struct Component {
    double weight;
    double mean;
    double sd;
  };

  static AnalyticDensity1D gaussian(double mean, double sd);
  static AnalyticDensity1D mixture(std::vector<Component> components);

  double density(double x) const;
  double log_density(double x) const;
  std::pair<double, double> log_density_and_score(double x) const;
  /// d/dx log density
  double score(double x) const;
  double mean() const;
  double variance() const;
  const std::vector<Component>& components() const { return components_; }

  /// n draws; draw i depends only on (seed, i).
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<Component> components_;
};

/// Samples `density` at cell centres and rescales to unit mass.
Grid1D discretize(const AnalyticDensity1D& density, double x_min, double x_max,
                  std::size_t cells);

/// Drift part of the flow: an f-divergence towards mu, or none for a pure
/// entropy (heat) flow.
using DriftTerm = std::optional<FDivergence>;

/// Largest dt accepted by fpe_step:
/// 0.4 dx^2 / (gamma + D + v_max dx), D = 1 if a divergence term is present
/// (sup_r r f''(r) = 1 for KL, JS and LogD) and v_max = max |d/dx log mu| on
/// the grid.
double stable_dt(const Grid1D& grid, const AnalyticDensity1D& mu, const DriftTerm& div,
                 double gamma);

/// One explicit conservative finite-volume step of
///   d_t rho = d_x(rho d_x f'(rho/mu)) + gamma d_xx rho
/// with no-flux boundaries. Interface flux is
///   F = -rho_face (phi_{i+1} - phi_i) / dx,  phi = f'(rho/mu) + gamma log rho,
/// where rho_face is the logarithmic mean of the neighbouring cells (so the
/// gamma part equals the centred difference gamma (rho_{i+1} - rho_i) / dx).
/// Throws ConfigError if dt exceeds stable_dt, NumericError if a cell drops
/// below -1e-14; values in (-1e-14, 0) are clamped to 0.
Grid1D fpe_step(const Grid1D& rho, const AnalyticDensity1D& mu, const DriftTerm& div,
                double gamma, double dt);

/// Discrete free energy sum f(rho_i/mu_i) mu_i dx + gamma sum rho_i log rho_i dx.
double free_energy(const Grid1D& rho, const AnalyticDensity1D& mu, const DriftTerm& div,
                   double gamma);

struct FpeRun {
  Grid1D final;
  std::size_t steps = 0;
  double dt = 0.0;
  double max_mass_error = 0.0;     // max over steps of |mass - 1|
  double max_energy_increase = 0.0;  // max over steps of F_{n+1} - F_n (<= 0 ideally)
  bool energy_monotone = true;     // increases never exceed 1e-13 * max(1, |F|)
};

/// Integrates to t_end with a uniform step no larger than stable_dt.
FpeRun solve_fpe(const Grid1D& rho0, const AnalyticDensity1D& mu, const DriftTerm& div,
                 double gamma, double t_end, bool track_energy = true);

struct GaussianMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// KL flow towards N(0, 1) without diffusion, from N(m0, s0_sq):
/// m_t = m0 e^{-t}, s_t^2 = 1 + (s0_sq - 1) e^{-2t}. Throws DomainError if
/// s0_sq <= 0. With entropy weight gamma the variance relaxes to 1 + gamma
/// instead: s_t^2 = (1 + gamma) + (s0_sq - 1 - gamma) e^{-2t}.
GaussianMoments gaussian_flow_closed_form(double m0, double s0_sq, double t, double gamma = 0.0);

struct ParticleRun {
  std::vector<double> particles;  // final positions
  std::vector<double> times;      // t after each step, starting with 0
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> bandwidths;  // KDE bandwidth used at each step
};

/// Simulates the McKean-Vlasov SDE dx = -d_x f'(rho_t/mu)(x) dt + sqrt(2 gamma) dW
/// with Euler-Maruyama, re-estimating rho_t every step with a Gaussian KDE
/// (Silverman bandwidth, evaluated on a fine binned grid). Particles start
/// from `rho0`. Requires n_particles >= 1000.
ParticleRun simulate_particles_running_ratio(std::size_t n_particles,
                                             const AnalyticDensity1D& rho0,
                                             const AnalyticDensity1D& mu, const FDivergence& div,
                                             double gamma, double eta, std::size_t steps,
                                             std::uint64_t seed, int threads = 1);

/// Silverman's rule of thumb 0.9 min(sd, IQR / 1.34) n^{-1/5}.
double silverman_bandwidth(std::span<const double> x);

/// Sup-norm gap between the empirical CDF of `samples` and grid.cdf.
double ks_distance(std::span<const double> samples, const Grid1D& grid);
/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// `t,x,rho` rows for every cell.
void write_grid_csv(const std::filesystem::path& path, double t, const Grid1D& grid,
                    bool append = false);

}  // namespace dgflow::oracle
