#include "dpmm/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dpmm {

EpsilonSchedule::EpsilonSchedule(Kind kind, double scale, double rate) : kind_(kind), scale_(scale), rate_(rate) {
  if (kind_ == Kind::exact) return;
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw std::invalid_argument("epsilon schedule: scale must be positive");
  switch (kind_) {
    case Kind::geometric:
    case Kind::proportional:
      if (!(rate_ > 0.0 && rate_ < 1.0)) throw std::invalid_argument("epsilon schedule: rate must lie in (0, 1)");
      break;
    case Kind::polynomial:
      if (!(rate_ > 1.0)) throw std::invalid_argument("epsilon schedule: power must exceed 1 for summability");
      break;
    default:
      break;
  }
}

EpsilonSchedule EpsilonSchedule::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ':')) parts.push_back(item);
  if (parts.empty()) throw std::invalid_argument("epsilon schedule: empty text");
  auto num = [&](std::size_t k, double fallback) {
    if (k >= parts.size()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[k], &used);
      if (used != parts[k].size()) throw std::invalid_argument(parts[k]);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("epsilon schedule: bad number '" + parts[k] + "'");
    }
  };
  const std::string& kind = parts[0];
  if (kind == "exact") return exact();
  if (kind == "const" || kind == "constant") {
    if (parts.size() != 2) throw std::invalid_argument("epsilon schedule: use const:<eps>");
    return constant(num(1, 0.0));
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("epsilon schedule: use " + kind + ":<rate>[:<scale>]");
  if (kind == "geometric" || kind == "geo") return geometric(num(1, 0.0), num(2, 1.0));
  if (kind == "poly" || kind == "polynomial") return polynomial(num(1, 0.0), num(2, 1.0));
  if (kind == "prop" || kind == "proportional") return proportional(num(1, 0.0), num(2, 1.0));
  throw std::invalid_argument("epsilon schedule: unknown kind '" + kind + "'");
}

std::string EpsilonSchedule::to_string() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case Kind::exact: return "exact";
    case Kind::constant: out << "const:" << scale_; break;
    case Kind::geometric: out << "geometric:" << rate_ << ':' << scale_; break;
    case Kind::polynomial: out << "poly:" << rate_ << ':' << scale_; break;
    case Kind::proportional: out << "prop:" << rate_ << ':' << scale_; break;
  }
  return out.str();
}

double EpsilonSchedule::value(int k, double previous_step) const {
  switch (kind_) {
    case Kind::exact: return 0.0;
    case Kind::constant: return scale_;
    case Kind::geometric: return scale_ * std::pow(rate_, k);
    case Kind::polynomial: return scale_ / std::pow(static_cast<double>(k + 1), rate_);
    case Kind::proportional:
      return previous_step < 0.0 ? scale_ : scale_ * std::pow(rate_, k) * previous_step;
  }
  return 0.0;
}

AlgorithmParams AlgorithmParams::uniform(int agents, double theta, double alpha, double gamma, double beta,
                                         EpsilonSchedule schedule) {
  AlgorithmParams p;
  p.theta.assign(agents, theta);
  p.alpha.assign(agents, alpha);
  p.gamma.assign(agents, gamma);
  p.beta = beta;
  p.schedule = schedule;
  return p;
}

std::string ParamCheck::describe() const {
  std::ostringstream out;
  if (ok()) {
    out << "parameters valid (" << metrics.accepted_by << "); max gamma*beta*lambda_max = "
        << max_gamma_beta_lambda;
    return out.str();
  }
  for (const auto& v : violations) {
    if (v.agent >= 0) out << "agent " << v.agent << ": ";
    out << v.message << '\n';
  }
  return out.str();
}

ParamCheck check_params(const AlgorithmParams& params, const MixingMatrix& mixing, const std::vector<int>& dims,
                        int multiplier_dim) {
  ParamCheck check;
  const int m = mixing.size();
  auto fail = [&](int agent, std::string msg) { check.violations.push_back({agent, std::move(msg)}); };

  if (params.agent_count() != m || static_cast<int>(params.alpha.size()) != m ||
      static_cast<int>(params.gamma.size()) != m) {
    fail(-1, "parameter vectors must have one entry per agent (" + std::to_string(m) + ")");
    return check;
  }
  if (static_cast<int>(dims.size()) != m) {
    fail(-1, "dimension list must have one entry per agent");
    return check;
  }
  for (int i = 0; i < m; ++i) {
    if (!(params.theta[i] > 0.0 && params.theta[i] < 2.0))
      fail(i, "theta = " + std::to_string(params.theta[i]) + " violates theta_i in (0,2)");
    if (!(params.alpha[i] > 0.0)) fail(i, "alpha must be positive");
    if (!(params.gamma[i] > 0.0)) fail(i, "gamma must be positive");
  }
  if (!(params.beta > 0.0)) fail(-1, "beta must be positive");
  if (!check.ok()) return check;

  const double gamma_max = *std::max_element(params.gamma.begin(), params.gamma.end());
  check.max_gamma_beta_lambda = gamma_max * params.beta * mixing.exact_lambda_max;

  Mat schur = -params.beta * mixing.entries;
  for (int i = 0; i < m; ++i) schur(i, i) += 1.0 / params.gamma[i];
  const double margin = symmetric_eigenvalues(schur).minCoeff();

  std::string rule;
  if (margin > 0.0) rule = "exact";
  if (mixing.kind == MixingKind::scaled_metropolis && mixing.exact_lambda_max < mixing.spectral_bound &&
      gamma_max * params.beta <= mixing.scaling / 2.0)
    rule = rule.empty() ? "scaled-sufficient" : rule + "+scaled-sufficient";
  if (rule.empty()) {
    const int worst = static_cast<int>(std::max_element(params.gamma.begin(), params.gamma.end()) -
                                       params.gamma.begin());
    fail(worst, "gamma_i*beta*lambda_max(L) = " + std::to_string(check.max_gamma_beta_lambda) +
                    " ; Gamma^-1 - beta L is not positive definite (need gamma_i*beta < 1/lambda_max(L))");
    return check;
  }

  MetricMatrices& mm = check.metrics;
  mm.theta = params.theta;
  mm.alpha = params.alpha;
  mm.gamma = params.gamma;
  mm.beta = params.beta;
  mm.dims = dims;
  mm.multiplier_dim = multiplier_dim;
  mm.lambda_max = mixing.exact_lambda_max;
  mm.schur_margin = margin;
  mm.accepted_by = rule;
  return check;
}

MetricMatrices validate_params(const AlgorithmParams& params, const MixingMatrix& mixing,
                               const std::vector<int>& dims, int multiplier_dim) {
  ParamCheck check = check_params(params, mixing, dims, multiplier_dim);
  if (!check.ok()) throw std::invalid_argument("invalid algorithm parameters:\n" + check.describe());
  return std::move(check.metrics);
}

}  // namespace dpmm
