// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace dgflow {

enum class DivergenceKind { KL, JS, LogD };

/// Generator f of an f-divergence D_f(mu || rho) = int f(rho / mu) mu, with its
/// first two derivatives. All members require r > 0 and throw DomainError otherwise.
///
///   KL    f = r log r                       f' = log r + 1      f'' = 1 / r
///   JS    f = r log r - (r+1) log((r+1)/2)  f' = log(2r/(r+1))  f'' = 1 / (r^2 + r)
///   LogD  f = (r+1) log(r+1) - 2 log 2      f' = log(r+1) + 1   f'' = 1 / (r+1)
class FDivergence {
 public:
  constexpr explicit FDivergence(DivergenceKind kind = DivergenceKind::KL) : kind_(kind) {}

  DivergenceKind kind() const { return kind_; }
  std::string name() const;

  double f(double r) const;
  double f_prime(double r) const;
  double f_double_prime(double r) const;

  /// Scalar multiplying grad d in the flow velocity -grad_x f'(exp(-d(x))),
  /// i.e. f''(r) r with r = exp(-d): 1 for KL, sigmoid(d) for JS and
  /// sigmoid(-d) for LogD. Well defined for every finite d.
  double drift_scale(double logit) const;

  static FDivergence parse(const std::string& name);

 private:
  DivergenceKind kind_;
};

/// Numerically stable logistic function.
double sigmoid(double x);

}  // namespace dgflow
