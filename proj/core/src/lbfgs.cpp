#include "tcrf/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include "tcrf/errors.hpp"

namespace tcrf {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Point {
  double a = 0.0, f = 0.0, d = 0.0;  // step, value, directional derivative
  std::vector<double> x, g;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const std::vector<double>& x0, double f0, const std::vector<double>& p,
             const LbfgsOptions& o)
      : f_(f), x0_(x0), p_(p), f0_(f0), opts_(o) {}

  // Nocedal & Wright, Algorithms 3.5 / 3.6.
  std::optional<Point> run(double d0, double a_init) {
    d0_ = d0;
    Point prev;
    prev.a = 0.0;
    prev.f = f0_;
    prev.d = d0;
    double a = a_init;
    for (std::size_t i = 0; evals_ < opts_.max_line_evals; ++i) {
      Point cur = eval(a);
      if (cur.f > f0_ + opts_.c1 * a * d0 || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.d) <= -opts_.c2 * d0) return cur;
      if (cur.d >= 0) return zoom(cur, prev);
      prev = std::move(cur);
      a *= 2.0;
    }
    return std::nullopt;
  }

 private:
  Point eval(double a) {
    ++evals_;
    Point pt;
    pt.a = a;
    pt.x = x0_;
    for (std::size_t i = 0; i < pt.x.size(); ++i) pt.x[i] += a * p_[i];
    pt.g.assign(pt.x.size(), 0.0);
    pt.f = f_(pt.x, pt.g);
    if (!std::isfinite(pt.f)) throw NumericError("non-finite objective during line search");
    for (double v : pt.g)
      if (!std::isfinite(v)) throw NumericError("non-finite gradient during line search");
    pt.d = dot(pt.g, p_);
    return pt;
  }

  static double interpolate(const Point& lo, const Point& hi) {
    // Cubic through (a, f, d) at both ends, safeguarded into the interior.
    double a0 = lo.a, a1 = hi.a;
    double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a0 - a1);
    double disc = d1 * d1 - lo.d * hi.d;
    double left = std::min(a0, a1), right = std::max(a0, a1), width = right - left;
    double a = 0.5 * (a0 + a1);
    if (disc >= 0) {
      double d2 = std::copysign(std::sqrt(disc), a1 - a0);
      double denom = hi.d - lo.d + 2.0 * d2;
      if (denom != 0.0) {
        double c = a1 - (a1 - a0) * (hi.d + d2 - d1) / denom;
        if (std::isfinite(c)) a = c;
      }
    }
    return std::clamp(a, left + 0.1 * width, right - 0.1 * width);
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    while (evals_ < opts_.max_line_evals) {
      if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, lo.a)) break;
      double a = interpolate(lo, hi);
      Point cur = eval(a);
      if (cur.f > f0_ + opts_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.d) <= -opts_.c2 * d0_) return cur;
        if (cur.d * (hi.a - lo.a) >= 0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Out of budget: accept the best sufficient-decrease point, if any.
    if (lo.a > 0 && lo.f <= f0_ + opts_.c1 * lo.a * d0_ && lo.f < f0_) return lo;
    return std::nullopt;
  }

  const Objective& f_;
  const std::vector<double>& x0_;
  const std::vector<double>& p_;
  double f0_;
  double d0_ = 0.0;
  const LbfgsOptions& opts_;
  std::size_t evals_ = 0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opts) {
  if (opts.memory < 1) throw std::invalid_argument("L-BFGS memory must be at least 1");
  LbfgsResult res;
  res.report.method = "lbfgs";
  std::vector<double> x = std::move(x0);
  std::vector<double> g(x.size(), 0.0);
  double fx = f(x, g);
  if (!std::isfinite(fx)) throw NumericError("non-finite objective at the starting point");
  res.report.objective_trace.push_back(fx);

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  bool restarted = false;
  std::size_t iter = 0;

  while (true) {
    if (inf_norm(g) < opts.grad_tol) {
      res.report.converged = true;
      res.report.message = "gradient tolerance reached";
      break;
    }
    if (iter >= opts.max_iters) {
      res.report.message = "maximum iterations reached";
      break;
    }

    // Two-loop recursion: p = -H g.
    std::vector<double> q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(S[k], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    for (double& v : q) v *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      double beta = rho[k] * dot(Y[k], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * S[k][i];
    }
    std::vector<double> p(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) p[i] = -q[i];
    double d0 = dot(g, p);
    if (!(d0 < 0)) {
      // Not a descent direction: fall back to steepest descent.
      S.clear(), Y.clear(), rho.clear();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = -g[i];
      d0 = dot(g, p);
    }

    double a_init = S.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
    LineSearch ls(f, x, fx, p, opts);
    std::optional<Point> next = ls.run(d0, a_init);
    if (!next) {
      if (restarted || S.empty()) {
        res.report.message = "line search failed";
        break;
      }
      restarted = true;
      S.clear(), Y.clear(), rho.clear();
      continue;
    }
    restarted = false;

    std::vector<double> s(x.size()), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] = next->x[i] - x[i];
      y[i] = next->g[i] - g[i];
    }
    double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > opts.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
    }
    x = std::move(next->x);
    g = std::move(next->g);
    fx = next->f;
    ++iter;
    res.report.objective_trace.push_back(fx);
  }

  res.report.iterations = iter;
  res.report.final_objective = fx;
  res.x = std::move(x);
  return res;
}

}  // namespace tcrf
