#pragma once

// Limited-memory BFGS with a strong-Wolfe line search.

#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace admmnet {

struct TrainConfig {
  int max_iterations = 100;
  int history = 10;                   // m, number of stored curvature pairs
  double sufficient_decrease = 1e-4;  // c1
  double curvature = 0.9;             // c2
  double grad_tolerance = 1e-10;      // stop when ||g||_2 <= tol
  double value_tolerance = 0.0;       // stop when |f_k - f_{k+1}| <= tol * max(1, |f_k|)
  int max_line_search = 30;
  int record_every = 1;               // keep every k-th iterate in the trace

  void validate() const {
    if (max_iterations < 0) throw std::invalid_argument("TrainConfig: max_iterations must be >= 0");
    if (history < 1) throw std::invalid_argument("TrainConfig: history must be >= 1");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < curvature && curvature < 1.0))
      throw std::invalid_argument("TrainConfig: need 0 < sufficient_decrease < curvature < 1");
    if (max_line_search < 1) throw std::invalid_argument("TrainConfig: max_line_search must be >= 1");
    if (record_every < 1) throw std::invalid_argument("TrainConfig: record_every must be >= 1");
  }
};

/// Returns f(x) and writes the gradient into grad (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

inline const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

struct IterateRecord {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double wall_time = 0.0;  // seconds since start
  int evaluations = 0;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> grad;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<IterateRecord> history;  // iteration 0 is the starting point
  int evaluations = 0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), safeguarded into [lo, hi].
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if (std::isfinite(t) && t > lo + 0.1 * (hi - lo) && t < hi - 0.1 * (hi - lo)) return t;
  }
  return 0.5 * (a + b);
}

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> x, g;
};

}  // namespace detail

/// Minimizes fn from x0. Accepted iterates satisfy the strong Wolfe conditions, so the
/// recorded values are non-increasing. On a line-search failure the memory is dropped and
/// a steepest-descent step is tried once; if that also fails the best point is returned.
inline LbfgsResult lbfgs_minimize(const Objective& fn, std::vector<double> x0, const TrainConfig& cfg,
                                  const std::function<void(const IterateRecord&)>& on_iterate = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const std::size_t n = x0.size();

  LbfgsResult res;
  res.x = std::move(x0);
  res.grad.assign(n, 0.0);
  res.value = fn(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) throw std::runtime_error("lbfgs_minimize: objective is not finite at the start");

  auto record = [&](int it, double step, bool force) {
    IterateRecord r{it, res.value, std::sqrt(detail::dot(res.grad, res.grad)), step, elapsed(), res.evaluations};
    if (force || it % cfg.record_every == 0) res.history.push_back(r);
    if (on_iterate) on_iterate(r);
  };
  record(0, 0.0, true);

  std::deque<std::vector<double>> S, Y;
  std::deque<double> RHO;
  std::vector<double> dir(n), alpha_buf;

  auto eval = [&](const std::vector<double>& xk, const std::vector<double>& d, double a) {
    detail::LinePoint p;
    p.alpha = a;
    p.x.resize(n);
    p.g.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) p.x[i] = xk[i] + a * d[i];
    p.f = fn(p.x, p.g);
    ++res.evaluations;
    p.d = detail::dot(p.g, d);
    return p;
  };

  // Strong-Wolfe search (bracketing then zoom). Returns false on failure.
  auto line_search = [&](const std::vector<double>& d, double a_init, detail::LinePoint& out) {
    const double f0 = res.value;
    const double d0 = detail::dot(res.grad, d);
    if (!(d0 < 0.0)) return false;
    detail::LinePoint prev{0.0, f0, d0, res.x, res.grad};
    double a = a_init;
    int evals = 0;
    auto zoom = [&](detail::LinePoint lo, detail::LinePoint hi) {
      while (evals < cfg.max_line_search) {
        double a_new = detail::cubic_step(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d);
        if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) return false;
        detail::LinePoint p = eval(res.x, d, a_new);
        ++evals;
        if (!std::isfinite(p.f) || p.f > f0 + cfg.sufficient_decrease * a_new * d0 || p.f >= lo.f) {
          hi = std::move(p);
        } else {
          if (std::abs(p.d) <= -cfg.curvature * d0) {
            out = std::move(p);
            return true;
          }
          if (p.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
          lo = std::move(p);
        }
      }
      return false;
    };
    for (; evals < cfg.max_line_search;) {
      detail::LinePoint p = eval(res.x, d, a);
      ++evals;
      if (!std::isfinite(p.f)) {
        a = 0.5 * (prev.alpha + a);
        continue;
      }
      if (p.f > f0 + cfg.sufficient_decrease * a * d0 || (prev.alpha > 0.0 && p.f >= prev.f))
        return zoom(std::move(prev), std::move(p));
      if (std::abs(p.d) <= -cfg.curvature * d0) {
        out = std::move(p);
        return true;
      }
      if (p.d >= 0.0) return zoom(std::move(p), std::move(prev));
      prev = std::move(p);
      a *= 2.0;
    }
    return false;
  };

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const double gnorm = std::sqrt(detail::dot(res.grad, res.grad));
    if (gnorm <= cfg.grad_tolerance) {
      res.status = LbfgsStatus::converged;
      return res;
    }
    // two-loop recursion
    for (std::size_t i = 0; i < n; ++i) dir[i] = -res.grad[i];
    const std::size_t m = S.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t j = m; j-- > 0;) {
      alpha_buf[j] = RHO[j] * detail::dot(S[j], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[j] * Y[j][i];
    }
    if (m > 0) {
      const double gamma = detail::dot(S[m - 1], Y[m - 1]) / detail::dot(Y[m - 1], Y[m - 1]);
      for (auto& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double b = RHO[j] * detail::dot(Y[j], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_buf[j] - b) * S[j][i];
    }
    double a0 = m > 0 ? 1.0 : std::min(1.0, 1.0 / gnorm);

    detail::LinePoint p;
    bool ok = line_search(dir, a0, p);
    if (!ok && m > 0) {
      S.clear();
      Y.clear();
      RHO.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -res.grad[i];
      ok = line_search(dir, std::min(1.0, 1.0 / gnorm), p);
    }
    if (!ok) {
      res.status = LbfgsStatus::line_search_failed;
      return res;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = p.x[i] - res.x[i];
      y[i] = p.g[i] - res.grad[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
      if (static_cast<int>(S.size()) == cfg.history) {
        S.pop_front();
        Y.pop_front();
        RHO.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      RHO.push_back(1.0 / sy);
    }
    const double f_old = res.value;
    res.x = std::move(p.x);
    res.grad = std::move(p.g);
    res.value = p.f;
    record(it, p.alpha, it == cfg.max_iterations);
    if (cfg.value_tolerance > 0.0 && std::abs(f_old - res.value) <= cfg.value_tolerance * std::max(1.0, std::abs(f_old))) {
      res.status = LbfgsStatus::converged;
      return res;
    }
  }
  res.status = std::sqrt(detail::dot(res.grad, res.grad)) <= cfg.grad_tolerance ? LbfgsStatus::converged
                                                                               : LbfgsStatus::max_iterations;
  return res;
}

}  // namespace admmnet
