#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace admmnet {

/// Soft thresholding S(a; theta) = sgn(a) max(|a| - theta, 0).
inline double soft_threshold(double a, double theta) noexcept {
  if (a > theta) return a - theta;
  if (a < -theta) return a + theta;
  return 0.0;
}

/// Learnable piecewise-linear scalar function.
///
/// Control positions p_i are fixed and uniformly spaced on [-1, 1]; the values q_i
/// are the learnable part. Outside [-1, 1] the function continues with slope one:
/// S(a) = a + q_1 - p_1 for a < p_1 and a + q_N - p_N for a > p_N.
/// At a control point the right-hand segment is the active one.
class PiecewiseLinear {
 public:
  static constexpr int default_controls = 101;

  /// One interpolation weight on a control value.
  struct Weight {
    int index;
    double weight;
  };

  PiecewiseLinear() : PiecewiseLinear(std::vector<double>(default_controls, 0.0)) {}

  explicit PiecewiseLinear(std::vector<double> values) : q_(std::move(values)) {
    if (q_.size() < 2) throw std::invalid_argument("PiecewiseLinear: needs at least 2 control points");
    build_positions();
  }

  static PiecewiseLinear from_function(const std::function<double(double)>& f, int controls = default_controls) {
    check_controls(controls);
    std::vector<double> q(static_cast<std::size_t>(controls));
    for (int i = 0; i < controls; ++i) q[static_cast<std::size_t>(i)] = f(position(i, controls));
    return PiecewiseLinear(std::move(q));
  }

  static PiecewiseLinear identity(int controls = default_controls) {
    return from_function([](double p) { return p; }, controls);
  }

  /// q_i = S(p_i; theta).
  static PiecewiseLinear from_soft_threshold(double theta, int controls = default_controls) {
    if (!(theta >= 0.0)) throw std::invalid_argument("from_soft_threshold: theta must be nonnegative");
    return from_function([theta](double p) { return soft_threshold(p, theta); }, controls);
  }

  /// q_i = max(p_i, 0).
  static PiecewiseLinear from_relu(int controls = default_controls) {
    return from_function([](double p) { return std::max(p, 0.0); }, controls);
  }

  /// q_i = (p_i - S(p_i; theta)) / theta, the gradient of the Moreau envelope of |.|
  /// (a Huber function): clip(p / theta, -1, 1).
  static PiecewiseLinear from_huber_gradient(double theta, int controls = default_controls) {
    if (!(theta > 0.0)) throw std::invalid_argument("from_huber_gradient: theta must be positive");
    return from_function([theta](double p) { return (p - soft_threshold(p, theta)) / theta; }, controls);
  }

  /// p_i = (2i - (N-1)) / (N-1); exact at -1, 0 (odd N) and 1, symmetric about 0.
  static double position(int i, int controls) noexcept {
    return static_cast<double>(2 * i - (controls - 1)) / static_cast<double>(controls - 1);
  }

  int controls() const noexcept { return static_cast<int>(q_.size()); }
  std::span<const double> positions() const noexcept { return p_; }
  std::span<const double> values() const noexcept { return q_; }
  std::span<double> values() noexcept { return q_; }
  double spacing() const noexcept { return p_[1] - p_[0]; }

  /// Index r of the interior segment [p_r, p_{r+1}) containing a, for p_1 <= a <= p_N.
  int segment(double a) const noexcept {
    const int n = controls();
    int r = static_cast<int>(std::floor((a - p_.front()) / spacing()));
    r = std::clamp(r, 0, n - 2);
    while (r > 0 && a < p_[static_cast<std::size_t>(r)]) --r;
    while (r < n - 2 && a >= p_[static_cast<std::size_t>(r) + 1]) ++r;
    return r;
  }

  double operator()(double a) const noexcept { return eval(a); }

  double eval(double a) const noexcept {
    const std::size_t last = q_.size() - 1;
    if (a < p_.front()) return a + q_.front() - p_.front();
    if (a > p_[last]) return a + q_[last] - p_[last];
    const auto r = static_cast<std::size_t>(segment(a));
    const double t = (a - p_[r]) / (p_[r + 1] - p_[r]);
    return (1.0 - t) * q_[r] + t * q_[r + 1];
  }

  /// dS/da; one outside [p_1, p_N) and the active segment's slope inside.
  double grad_input(double a) const noexcept {
    const std::size_t last = q_.size() - 1;
    if (a < p_.front() || a >= p_[last]) return 1.0;
    const auto r = static_cast<std::size_t>(segment(a));
    return (q_[r + 1] - q_[r]) / (p_[r + 1] - p_[r]);
  }

  /// dS/dq: at most two nonzero interpolation weights.
  /// Returns the number of weights written.
  int grad_controls(double a, std::array<Weight, 2>& out) const noexcept {
    const int last = controls() - 1;
    if (a < p_.front()) {
      out[0] = {0, 1.0};
      return 1;
    }
    if (a > p_[static_cast<std::size_t>(last)]) {
      out[0] = {last, 1.0};
      return 1;
    }
    const int r = segment(a);
    const auto ru = static_cast<std::size_t>(r);
    const double t = (a - p_[ru]) / (p_[ru + 1] - p_[ru]);
    out[0] = {r, 1.0 - t};
    out[1] = {r + 1, t};
    return 2;
  }

  /// Dense form of grad_controls, length N_c.
  std::vector<double> grad_controls_dense(double a) const {
    std::vector<double> w(q_.size(), 0.0);
    std::array<Weight, 2> ws{};
    const int n = grad_controls(a, ws);
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(ws[static_cast<std::size_t>(i)].index)] += ws[static_cast<std::size_t>(i)].weight;
    return w;
  }

  /// Accumulate g * dS/dq at input a into grad (length N_c).
  void accumulate_control_grad(double a, double g, std::span<double> grad) const noexcept {
    std::array<Weight, 2> ws{};
    const int n = grad_controls(a, ws);
    for (int i = 0; i < n; ++i) grad[static_cast<std::size_t>(ws[static_cast<std::size_t>(i)].index)] += g * ws[static_cast<std::size_t>(i)].weight;
  }

  friend bool operator==(const PiecewiseLinear& a, const PiecewiseLinear& b) { return a.q_ == b.q_; }

 private:
  static void check_controls(int controls) {
    if (controls < 2) throw std::invalid_argument("PiecewiseLinear: needs at least 2 control points");
  }

  void build_positions() {
    const int n = controls();
    p_.resize(q_.size());
    for (int i = 0; i < n; ++i) p_[static_cast<std::size_t>(i)] = position(i, n);
  }

  std::vector<double> p_;
  std::vector<double> q_;
};

}  // namespace admmnet
