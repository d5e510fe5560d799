// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/fdivergence.hpp"

#include <cmath>
#include <numbers>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

void require_positive(double r) {
  if (!(r > 0.0)) throw DomainError("f-divergence evaluated at r = " + std::to_string(r) +
                                    " (requires r > 0)");
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string FDivergence::name() const {
  switch (kind_) {
    case DivergenceKind::KL:
      return "kl";
    case DivergenceKind::JS:
      return "js";
    case DivergenceKind::LogD:
      return "logd";
  }
  return "kl";
}

FDivergence FDivergence::parse(const std::string& name) {
  if (name == "kl" || name == "KL") return FDivergence(DivergenceKind::KL);
  if (name == "js" || name == "JS") return FDivergence(DivergenceKind::JS);
  if (name == "logd" || name == "LogD") return FDivergence(DivergenceKind::LogD);
  throw ConfigError("unknown divergence '" + name + "' (expected kl, js or logd)");
}

double FDivergence::f(double r) const {
  require_positive(r);
  switch (kind_) {
    case DivergenceKind::KL:
      return r * std::log(r);
    case DivergenceKind::JS:
      return r * std::log(r) - (r + 1.0) * std::log((r + 1.0) / 2.0);
    case DivergenceKind::LogD:
      return (r + 1.0) * std::log(r + 1.0) - 2.0 * std::numbers::ln2;
  }
  return 0.0;
}

double FDivergence::f_prime(double r) const {
  require_positive(r);
  switch (kind_) {
    case DivergenceKind::KL:
      return std::log(r) + 1.0;
    case DivergenceKind::JS:
      return std::log(2.0 * r / (r + 1.0));
    case DivergenceKind::LogD:
      return std::log(r + 1.0) + 1.0;
  }
  return 0.0;
}

double FDivergence::f_double_prime(double r) const {
  require_positive(r);
  switch (kind_) {
    case DivergenceKind::KL:
      return 1.0 / r;
    case DivergenceKind::JS:
      return 1.0 / (r * r + r);
    case DivergenceKind::LogD:
      return 1.0 / (r + 1.0);
  }
  return 0.0;
}

double FDivergence::drift_scale(double logit) const {
  switch (kind_) {
    case DivergenceKind::KL:
      return 1.0;
    case DivergenceKind::JS:
      return sigmoid(logit);
    case DivergenceKind::LogD:
      return sigmoid(-logit);
  }
  return 1.0;
}

}  // namespace dgflow
