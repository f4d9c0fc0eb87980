#include "dpmm/problem_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace dpmm {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

void write_values(std::ostream& out, const Eigen::Ref<const Vec>& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << format_number(v(k));
}

void write_matrix(std::ostream& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) write_values(out, m.row(r).transpose());
}

void write_function(std::ostream& out, const char* label, const SmoothFunction& f) {
  out << "  " << label << ' ' << f.terms().size() << '\n';
  for (const auto& term : f.terms()) {
    out << "    ";
    if (const auto* q = std::get_if<QuadraticTerm>(&term)) {
      out << "quadratic " << q->C.rows();
      write_matrix(out, q->C);
      write_values(out, q->d);
    } else if (const auto* l = std::get_if<LogisticTerm>(&term)) {
      out << "logistic";
      write_values(out, l->a);
      out << ' ' << format_number(l->offset);
    } else if (const auto* c = std::get_if<LinearTerm>(&term)) {
      out << "linear";
      write_values(out, c->c);
      out << ' ' << format_number(c->offset);
    }
    out << '\n';
  }
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream fields(line);
      std::string tok;
      while (fields >> tok) tokens_.push_back(tok);
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  const std::string& peek() const {
    if (done()) fail("unexpected end of file");
    return tokens_[pos_];
  }
  std::string word() {
    const std::string& w = peek();
    ++pos_;
    return w;
  }
  void expect(const std::string& keyword) {
    const std::string got = word();
    if (got != keyword) fail("expected '" + keyword + "', found '" + got + "'");
  }
  double number() {
    const std::string tok = word();
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("not a number: '" + tok + "'");
    return v;
  }
  int integer() {
    const double v = number();
    if (v != static_cast<double>(static_cast<int>(v))) fail("expected an integer");
    return static_cast<int>(v);
  }
  int count() {
    const int v = integer();
    if (v < 0) fail("expected a nonnegative count");
    return v;
  }
  Vec vector(int n) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v(k) = number();
    return v;
  }
  Mat matrix(int rows, int cols) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = number();
    return m;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("problem file: " + what + " (token " + std::to_string(pos_) + ")");
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

SmoothFunction read_function(TokenReader& in, int n) {
  const int terms = in.count();
  std::vector<SmoothTerm> out;
  for (int t = 0; t < terms; ++t) {
    const std::string kind = in.word();
    if (kind == "quadratic") {
      const int rows = in.count();
      Mat C = in.matrix(rows, n);
      Vec d = in.vector(rows);
      out.push_back(QuadraticTerm{std::move(C), std::move(d)});
    } else if (kind == "logistic") {
      Vec a = in.vector(n);
      out.push_back(LogisticTerm{std::move(a), in.number()});
    } else if (kind == "linear") {
      Vec c = in.vector(n);
      out.push_back(LinearTerm{std::move(c), in.number()});
    } else {
      in.fail("unknown term kind '" + kind + "'");
    }
  }
  return SmoothFunction(n, std::move(out));
}

}  // namespace

void write_problem(std::ostream& out, const CoupledProblem& problem) {
  out << "dpmm-problem 1\n";
  out << "cone " << problem.cone.p << ' ' << problem.cone.q << '\n';
  out << "agents " << problem.agents.size() << '\n';
  for (std::size_t i = 0; i < problem.agents.size(); ++i) {
    const LocalProblem& a = problem.agents[i];
    out << "agent " << i << '\n';
    out << "  dim " << a.dim << '\n';
    out << "  l1 " << format_number(a.l1_weight) << '\n';
    out << "  lower";
    write_values(out, a.lower);
    out << "\n  upper";
    write_values(out, a.upper);
    out << "\n  A";
    write_matrix(out, a.A);
    out << "\n  b";
    write_values(out, a.b);
    out << '\n';
    write_function(out, "smooth", a.smooth);
    for (const auto& gj : a.g) write_function(out, "ineq", gj);
  }
  out << "end\n";
  if (problem.slater_witness) {
    out << "witness";
    write_values(out, problem.stack(*problem.slater_witness));
    out << '\n';
  }
}

CoupledProblem read_problem(std::istream& stream) {
  TokenReader in(stream);
  in.expect("dpmm-problem");
  if (in.integer() != 1) in.fail("unsupported format version");
  CoupledProblem problem;
  in.expect("cone");
  problem.cone.p = in.count();
  problem.cone.q = in.count();
  in.expect("agents");
  const int m = in.count();
  for (int i = 0; i < m; ++i) {
    in.expect("agent");
    if (in.integer() != i) in.fail("agents must appear in order");
    LocalProblem a;
    a.cone = problem.cone;
    in.expect("dim");
    a.dim = in.count();
    in.expect("l1");
    a.l1_weight = in.number();
    in.expect("lower");
    a.lower = in.vector(a.dim);
    in.expect("upper");
    a.upper = in.vector(a.dim);
    in.expect("A");
    a.A = in.matrix(problem.cone.p, a.dim);
    in.expect("b");
    a.b = in.vector(problem.cone.p);
    in.expect("smooth");
    a.smooth = read_function(in, a.dim);
    for (int j = 0; j < problem.cone.q; ++j) {
      in.expect("ineq");
      a.g.push_back(read_function(in, a.dim));
    }
    problem.agents.push_back(std::move(a));
  }
  in.expect("end");
  if (!in.done()) {
    in.expect("witness");
    problem.slater_witness = problem.split(in.vector(problem.total_dim()));
  }
  if (!in.done()) in.fail("trailing content");
  problem.validate();
  return problem;
}

std::string problem_to_string(const CoupledProblem& problem) {
  std::ostringstream out;
  write_problem(out, problem);
  return out.str();
}

CoupledProblem problem_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_problem(in);
}

std::uint64_t problem_hash(const CoupledProblem& problem) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : problem_to_string(problem)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dpmm
