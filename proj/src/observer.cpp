#include "dpmm/observer.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dpmm/problem_io.hpp"

namespace dpmm {

const char* IterationTrace::csv_header() {
  return "round,objective_residual,eq_violation,ineq_violation,consensus_error,foo_residual,successive_diff_H,"
         "fejer_slack,epsilon_max,inner_iterations_total";
}

void IterationTrace::write_csv(std::ostream& out) const {
  out << csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.round << ',' << format_number(r.objective_residual) << ',' << format_number(r.eq_violation) << ','
        << format_number(r.ineq_violation) << ',' << format_number(r.consensus_error) << ','
        << format_number(r.foo_residual) << ',' << format_number(r.successive_diff_H) << ','
        << format_number(r.fejer_slack) << ',' << format_number(r.epsilon_max) << ',' << r.inner_iterations_total
        << '\n';
  }
}

std::string IterationTrace::to_csv() const {
  std::ostringstream s;
  write_csv(s);
  return s.str();
}

IterationTrace IterationTrace::read_csv(std::istream& in) {
  IterationTrace t;
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw std::invalid_argument("trace: missing or unexpected CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw std::invalid_argument("trace: row with " + std::to_string(f.size()) + " fields");
    TraceRow r;
    r.round = std::stoi(f[0]);
    r.objective_residual = std::stod(f[1]);
    r.eq_violation = std::stod(f[2]);
    r.ineq_violation = std::stod(f[3]);
    r.consensus_error = std::stod(f[4]);
    r.foo_residual = std::stod(f[5]);
    r.successive_diff_H = std::stod(f[6]);
    r.fejer_slack = std::stod(f[7]);
    r.epsilon_max = std::stod(f[8]);
    r.inner_iterations_total = std::stol(f[9]);
    t.rows.push_back(r);
  }
  return t;
}

double first_order_residual(const MetricMatrices& metrics, const MixingMatrix& mixing, const RoundSnapshot& snap) {
  double sq = 0.0;
  for (std::size_t i = 0; i < snap.before.size(); ++i) {
    const AgentState& b = snap.before[i];
    const AgentState& a = snap.after[i];
    sq += ((b.x - b.x_hat) / metrics.alpha[i] + b.certificate).squaredNorm();
    sq += (b.y - a.y).squaredNorm() / (metrics.gamma[i] * metrics.gamma[i]);
  }
  return std::sqrt(sq + mixing_quadratic(snap.before, mixing));
}

double successive_difference(const MetricMatrices& metrics, const MixingMatrix& mixing, const RoundSnapshot& snap) {
  double sq = 0.0;
  for (std::size_t i = 0; i < snap.before.size(); ++i) {
    const AgentState& b = snap.before[i];
    const AgentState& a = snap.after[i];
    sq += (b.x - a.x).squaredNorm() / (metrics.alpha[i] * metrics.theta[i]);
    sq += (b.y - a.y).squaredNorm() / metrics.gamma[i];
  }
  return sq + metrics.beta * mixing_quadratic(snap.before, mixing);
}

InclusionResult inclusion_check(const CoupledProblem& problem, const MetricMatrices& metrics,
                                const RoundSnapshot& snap, double tol) {
  InclusionResult res;
  const int p = problem.cone.p;
  const int q = problem.cone.q;
  double worst = -1.0;
  auto note = [&](double gap, int agent, const char* block, double& slot) {
    slot = std::max(slot, gap);
    if (gap > worst) {
      worst = gap;
      res.worst_agent = agent;
      res.worst_block = block;
    }
  };
  for (int i = 0; i < problem.agent_count(); ++i) {
    const LocalProblem& local = problem.agents[i];
    const AgentState& s = snap.before[i];
    const double gamma = metrics.gamma[i];

    Vec u = (s.x - s.x_hat) / metrics.alpha[i] + s.certificate - local.smooth.gradient(s.x_hat) -
            local.constraint_jacobian_transpose(s.x_hat, s.y_hat);
    const double xg = l1_box_subgradient(-u, s.x_hat, local.l1_weight, local.lower, local.upper).distance;
    note(xg, i, "x", res.x_gap);

    const Vec r = (s.y - gamma * s.lambda - s.y_hat) / gamma + local.constraint_map(s.x_hat);
    double yg = 0.0;
    for (int j = 0; j < p; ++j) yg = std::max(yg, std::abs(r(j)));
    for (int j = p; j < p + q; ++j) {
      if (s.y_hat(j) < 0.0) yg = std::max(yg, -s.y_hat(j));
      yg = std::max(yg, s.y_hat(j) > 0.0 ? std::abs(r(j)) : std::max(r(j), 0.0));
    }
    note(yg, i, "y", res.y_gap);
  }
  res.ok = res.gap() <= tol;
  return res;
}

Mat reference_lambda(const CoupledProblem& problem, const BlockVec& x_star) {
  const int m = problem.agent_count();
  Mat lam(m, problem.cone.dim());
  for (int i = 0; i < m; ++i) lam.row(i) = problem.agents[i].constraint_map(x_star[i]).transpose();
  const Vec mean = lam.colwise().mean().transpose();
  for (int i = 0; i < m; ++i) lam.row(i) -= mean.transpose();
  return lam;
}

Observer::Observer(const CoupledProblem& problem, const MixingMatrix& mixing, const MetricMatrices& metrics,
                   std::optional<ReferencePoint> reference, ObserverOptions options)
    : problem_(problem),
      mixing_(mixing),
      metrics_(metrics),
      options_(options),
      reference_(std::move(reference)) {
  factor_ = mixing_factor(mixing_.entries);
  z_ = Mat::Zero(factor_.rows(), problem_.cone.dim());
  if (reference_) {
    XiPoint star;
    star.x = reference_->x;
    star.y = reference_->y.transpose().replicate(problem_.agent_count(), 1);
    star.z = lift_to_z(factor_, reference_lambda(problem_, reference_->x));
    xi_star_ = std::move(star);
  }
}

XiPoint Observer::point_of(const std::vector<AgentState>& states, const Mat& z) const {
  XiPoint xi;
  xi.y.resize(states.size(), problem_.cone.dim());
  for (std::size_t i = 0; i < states.size(); ++i) {
    xi.x.push_back(states[i].x);
    xi.y.row(i) = states[i].y.transpose();
  }
  xi.z = z;
  return xi;
}

void Observer::observe(const RoundSnapshot& snap) {
  const int m = problem_.agent_count();
  const int p = problem_.cone.p;
  const int q = problem_.cone.q;

  Mat y_hat(m, problem_.cone.dim());
  Mat lambda_after(m, problem_.cone.dim());
  BlockVec x_after(m);
  for (int i = 0; i < m; ++i) {
    y_hat.row(i) = snap.before[i].y_hat.transpose();
    lambda_after.row(i) = snap.after[i].lambda.transpose();
    x_after[i] = snap.after[i].x;
  }
  if (summary_.rounds == 0) {
    Mat lambda0(m, problem_.cone.dim());
    for (int i = 0; i < m; ++i) lambda0.row(i) = snap.before[i].lambda.transpose();
    z_ = lift_to_z(factor_, lambda0);
  }
  const Mat z_before = z_;
  const Mat z_after = z_before + metrics_.beta * factor_ * y_hat;

  if (options_.record_history && history_.empty()) history_.push_back(point_of(snap.before, z_before));

  TraceRow row;
  row.round = snap.round + 1;
  if (reference_) {
    const double f = evaluate_objective(problem_, x_after);
    row.objective_residual = std::abs(f - reference_->f_star) / std::abs(reference_->f_star);
  }
  const Vec s = constraint_map(problem_, x_after);
  row.eq_violation = p > 0 ? s.head(p).cwiseAbs().maxCoeff() : 0.0;
  row.ineq_violation = q > 0 ? s.tail(q).cwiseMax(0.0).maxCoeff() : 0.0;
  {
    Vec mean = Vec::Zero(problem_.cone.dim());
    for (const auto& a : snap.after) mean += a.y;
    mean /= m;
    for (const auto& a : snap.after) row.consensus_error = std::max(row.consensus_error, (a.y - mean).norm());
  }
  row.foo_residual = first_order_residual(metrics_, mixing_, snap);
  row.successive_diff_H = successive_difference(metrics_, mixing_, snap);
  for (const auto& b : snap.before) {
    row.epsilon_max = std::max(row.epsilon_max, b.epsilon);
    row.inner_iterations_total += b.inner_iterations;
  }

  InvariantReading reading;
  if (xi_star_) {
    const XiPoint xi_k = point_of(snap.before, z_before);
    const XiPoint xi_next = point_of(snap.after, z_after);
    XiPoint xi_hat{BlockVec(m), y_hat, z_after};
    double noise = 0.0;
    for (int i = 0; i < m; ++i) {
      xi_hat.x[i] = snap.before[i].x_hat;
      noise += (snap.before[i].x_hat - xi_star_->x[i]).dot(snap.before[i].certificate);
    }
    reading.fejer_slack = h_norm_sq(metrics_, xi_k - *xi_star_) - d_norm_sq(metrics_, factor_, xi_k - xi_hat) +
                          2.0 * noise - h_norm_sq(metrics_, xi_next - *xi_star_);
    row.fejer_slack = reading.fejer_slack;
  }

  {
    Vec sum = Vec::Zero(problem_.cone.dim());
    double scale = 1.0;
    for (const auto& a : snap.after) {
      sum += a.lambda;
      scale = std::max(scale, a.lambda.cwiseAbs().maxCoeff());
    }
    reading.lambda_sum = sum.cwiseAbs().maxCoeff() / scale;
  }
  for (const auto& b : snap.before)
    if (q > 0) reading.polar_violation = std::max(reading.polar_violation, -b.y_hat.tail(q).minCoeff());
  reading.factor_error = (factor_.transpose() * z_after - lambda_after).cwiseAbs().maxCoeff();
  reading.inclusion = inclusion_check(problem_, metrics_, snap, options_.inclusion_tol);

  z_ = z_after;
  if (options_.record_history) history_.push_back(point_of(snap.after, z_after));

  summary_.rounds += 1;
  summary_.worst_lambda_sum = std::max(summary_.worst_lambda_sum, reading.lambda_sum);
  summary_.worst_polar_violation = std::max(summary_.worst_polar_violation, reading.polar_violation);
  summary_.worst_factor_error = std::max(summary_.worst_factor_error, reading.factor_error);
  summary_.worst_inclusion_gap = std::max(summary_.worst_inclusion_gap, reading.inclusion.gap());
  if (!reading.inclusion.ok) ++summary_.inclusion_failures;
  if (xi_star_) {
    summary_.min_fejer_slack = std::min(summary_.min_fejer_slack, reading.fejer_slack);
    if (!(reading.fejer_slack >= -options_.fejer_tol)) ++summary_.fejer_violations;
  }
  readings_.push_back(std::move(reading));
  trace_.rows.push_back(row);
}

LinearFit fit_line(const std::vector<double>& t, const std::vector<double>& values) {
  LinearFit fit;
  const int n = static_cast<int>(t.size());
  fit.points = n;
  if (n < 2 || values.size() != t.size()) return fit;
  Mat a(n, 2);
  Vec b(n);
  for (int k = 0; k < n; ++k) {
    a(k, 0) = t[k];
    a(k, 1) = 1.0;
    b(k) = values[k];
  }
  const Vec coef = a.colPivHouseholderQr().solve(b);
  fit.slope = coef(0);
  fit.intercept = coef(1);
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  const double ss_res = (a * coef - b).squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::pair<std::vector<double>, bool> tail_window_maxima(const std::vector<double>& r, int window, int windows) {
  const int n = static_cast<int>(r.size());
  if (window < 1 || windows < 2 || n < window * windows)
    throw std::invalid_argument("rate analysis: trace shorter than the requested windows");
  std::vector<double> maxima;
  const int start = n - window * windows;
  for (int w = 0; w < windows; ++w) {
    double best = -kInf;
    for (int k = start + w * window; k < start + (w + 1) * window; ++k)
      best = std::max(best, static_cast<double>(k + 1) * r[k]);
    maxima.push_back(best);
  }
  bool decreasing = true;
  for (std::size_t w = 1; w < maxima.size(); ++w) decreasing = decreasing && maxima[w] < maxima[w - 1];
  return {maxima, decreasing};
}

RateCertificate rate_analysis(const IterationTrace& trace, const RateOptions& options) {
  const int n = static_cast<int>(trace.rows.size());
  if (n < options.min_rounds)
    throw std::invalid_argument("rate analysis: need at least " + std::to_string(options.min_rounds) + " rounds");
  std::vector<double> succ, foo_sq;
  for (const auto& r : trace.rows) {
    succ.push_back(r.successive_diff_H);
    foo_sq.push_back(r.foo_residual * r.foo_residual);
  }
  RateCertificate cert;
  std::tie(cert.succ_diff_window_max, cert.succ_diff_decreasing) =
      tail_window_maxima(succ, options.window, options.windows);
  std::tie(cert.foo_sq_window_max, cert.foo_sq_decreasing) =
      tail_window_maxima(foo_sq, options.window, options.windows);
  return cert;
}

LinearFit distance_fit(const MetricMatrices& metrics, const std::vector<XiPoint>& history, const XiPoint& limit,
                       int first, int last) {
  if (first < 0 || last >= static_cast<int>(history.size()) || first >= last)
    throw std::invalid_argument("distance fit: round range outside the recorded history");
  std::vector<double> t, v;
  for (int k = first; k <= last; ++k) {
    const double d = h_norm_sq(metrics, history[k] - limit);
    if (d <= 0.0) continue;
    t.push_back(k);
    v.push_back(0.5 * std::log(d));
  }
  return fit_line(t, v);
}

std::string format_rate_report(const RateCertificate& cert) {
  std::ostringstream s;
  auto list = [&](const std::vector<double>& v) {
    for (double x : v) s << ' ' << format_number(x);
  };
  s << "succ_diff_window_max";
  list(cert.succ_diff_window_max);
  s << "\nsucc_diff_decreasing " << (cert.succ_diff_decreasing ? "yes" : "no");
  s << "\nfoo_sq_window_max";
  list(cert.foo_sq_window_max);
  s << "\nfoo_sq_decreasing " << (cert.foo_sq_decreasing ? "yes" : "no");
  if (cert.linear_fit) {
    s << "\nlinear_fit_rounds " << cert.fit_first_round << ' ' << cert.fit_last_round;
    s << "\nlinear_fit_slope " << format_number(cert.linear_fit->slope);
    s << "\nlinear_fit_r_squared " << format_number(cert.linear_fit->r_squared);
    s << "\nempirical_contraction " << format_number(std::exp(cert.linear_fit->slope));
  }
  if (cert.constants) {
    s << "\nc1 " << format_number(cert.constants->c1) << "\nc2 " << format_number(cert.constants->c2) << "\nc3 "
      << format_number(cert.constants->c3) << "\nc4 " << format_number(cert.constants->c4) << "\nomega "
      << format_number(cert.constants->omega);
  }
  s << "\nkappa estimated empirically\nrho estimated empirically\n";
  return s.str();
}

}  // namespace dpmm
