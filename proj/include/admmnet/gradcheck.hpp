#pragma once

// Central finite-difference check of the analytic network gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "admmnet/training.hpp"

namespace admmnet {

struct GradCheckOptions {
  double step = 1e-6;          // h = step * max(1, |theta_i|)
  double kink_radius = 0.0;    // also skip if a moved activation lies this close to a kink
  double tolerance = 1e-5;     // per-class relative error threshold
  std::size_t max_per_class = 0;  // 0 = check every coordinate
  std::uint64_t seed = 0;      // coordinate sampling
  bool corrupt_eta_sign = false;  // flips the analytic eta gradient (harness self-test)
};

struct ClassReport {
  std::string cls;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_abs_error = 0.0;
  double max_abs_numeric = 0.0;
  double rel_error = 0.0;  // max |analytic - numeric| / max |numeric|
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ClassReport> classes;  // in first-appearance order
  bool pass = true;

  const ClassReport* find(const std::string& cls) const {
    for (const auto& c : classes)
      if (c.cls == cls) return &c;
    return nullptr;
  }
};

namespace detail {

struct Activation {
  const PiecewiseLinear* f;
  double a;
};

inline void collect_activations(const BasicTape& t, const BasicNetParams& p, std::vector<Activation>& out) {
  for (std::size_t n = 0; n < t.stages.size(); ++n)
    for (std::size_t l = 0; l < t.stages[n].a.size(); ++l)
      for (const auto& v : t.stages[n].a[l].data()) {
        out.push_back({&p.stages[n].plf[l], v.real()});
        out.push_back({&p.stages[n].plf[l], v.imag()});
      }
}

inline void collect_activations(const GenericTape& t, const GenericNetParams& p, std::vector<Activation>& out) {
  for (std::size_t n = 0; n < t.stages.size(); ++n)
    for (std::size_t k = 0; k < t.stages[n].sub.size(); ++k)
      for (const auto& c1 : t.stages[n].sub[k].c1)
        for (const auto& v : c1.data()) {
          out.push_back({&p.stages[n].sub[k].plf, v.real()});
          if (p.complex_mode) out.push_back({&p.stages[n].sub[k].plf, v.imag()});
        }
}

// Distance from a to the nearest knot where the left and right slopes differ.
inline double distance_to_kink(const PiecewiseLinear& f, double a) {
  const auto pos = f.positions();
  const auto q = f.values();
  const std::size_t n = pos.size();
  const double h = f.spacing();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double left = k == 0 ? 1.0 : (q[k] - q[k - 1]) / h;
    const double right = k + 1 == n ? 1.0 : (q[k + 1] - q[k]) / h;
    if (std::abs(left - right) > 1e-12 * std::max(1.0, std::abs(left) + std::abs(right)))
      best = std::min(best, std::abs(a - pos[k]));
  }
  return best;
}

template <typename P>
double loss_and_activations(const P& p, const SamplingMask& mask, std::span<const Sample> samples,
                            const P& slope_params, std::vector<Activation>* acts) {
  double s = 0.0;
  for (const auto& smp : samples) {
    auto fw = net_forward(smp.y, mask, p, acts != nullptr);
    s += nmse_loss(fw.image, smp.xgt);
    if (acts) {
      // slopes are judged with the unperturbed PLFs
      std::vector<Activation> tmp;
      collect_activations(fw.tape, slope_params, tmp);
      acts->insert(acts->end(), tmp.begin(), tmp.end());
    }
  }
  return s / static_cast<double>(samples.size());
}

}  // namespace detail

/// Compares analytic gradients of the mean NMSE over `samples` with central differences.
/// Coordinates whose perturbation moves any PLF activation across a kink (a knot with
/// unequal adjacent slopes) are skipped and counted.
template <typename P>
GradCheckReport finite_diff_check(const P& params, const SamplingMask& mask, std::span<const Sample> samples,
                                  const GradCheckOptions& opts = {}) {
  if (samples.empty()) throw std::invalid_argument("finite_diff_check: no samples");
  const FlatParams flat = pack_params(params);

  Dataset ds{{samples.begin(), samples.end()}, mask, mask.sampling_rate(), 0.0};
  const BatchObjective<P> obj(params, ds);
  std::vector<double> analytic(flat.values.size());
  obj(flat.values, analytic);

  std::vector<detail::Activation> base;
  detail::loss_and_activations(params, mask, samples, params, &base);

  GradCheckReport rep;
  std::mt19937_64 rng(opts.seed);
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::vector<std::size_t>> coords;
  std::vector<std::string> order;
  for (const auto& sl : flat.layout) {
    if (!index.count(sl.cls)) {
      index[sl.cls] = rep.classes.size();
      rep.classes.push_back({sl.cls});
      order.push_back(sl.cls);
    }
    for (std::size_t i = 0; i < sl.size; ++i) coords[sl.cls].push_back(sl.offset + i);
  }

  for (const auto& cls : order) {
    auto& list = coords[cls];
    if (opts.max_per_class > 0 && list.size() > opts.max_per_class) {
      std::shuffle(list.begin(), list.end(), rng);
      list.resize(opts.max_per_class);
      std::sort(list.begin(), list.end());
    }
    ClassReport& cr = rep.classes[index[cls]];
    for (std::size_t i : list) {
      const double t = flat.values[i];
      const double h = opts.step * std::max(1.0, std::abs(t));
      std::vector<double> v = flat.values;
      std::vector<detail::Activation> ap, am;
      v[i] = t + h;
      const double fp = detail::loss_and_activations(unpack_params(std::span<const double>(v), params), mask,
                                                     samples, params, &ap);
      v[i] = t - h;
      const double fm = detail::loss_and_activations(unpack_params(std::span<const double>(v), params), mask,
                                                     samples, params, &am);
      bool kink = false;
      for (std::size_t j = 0; j < base.size() && !kink; ++j) {
        const auto& f = *base[j].f;
        const double a0 = base[j].a;
        for (double a1 : {ap[j].a, am[j].a}) {
          if (a1 == a0) continue;
          const double s0 = f.grad_input(a0), s1 = f.grad_input(a1);
          if (std::abs(s1 - s0) > 1e-9 * std::max(1.0, std::abs(s0)) ||
              (opts.kink_radius > 0.0 && detail::distance_to_kink(f, a0) < opts.kink_radius)) {
            kink = true;
            break;
          }
        }
      }
      if (kink) {
        ++cr.skipped;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * h);
      double a = analytic[i];
      if (opts.corrupt_eta_sign && cls == "eta") a = -a;
      ++cr.checked;
      cr.max_abs_error = std::max(cr.max_abs_error, std::abs(a - numeric));
      cr.max_abs_numeric = std::max(cr.max_abs_numeric, std::abs(numeric));
    }
  }
  for (auto& cr : rep.classes) {
    cr.rel_error = cr.max_abs_numeric > 0.0 ? cr.max_abs_error / cr.max_abs_numeric : cr.max_abs_error;
    cr.pass = cr.checked > 0 && cr.rel_error < opts.tolerance;
    rep.pass = rep.pass && cr.pass;
  }
  return rep;
}

/// Adds seeded Gaussian noise of relative size `scale` to every parameter.
template <typename P>
P perturb_params(const P& p, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FlatParams f = pack_params(p);
  for (double& v : f.values) v += scale * (std::abs(v) + 0.1) * g(rng);
  return unpack_params(std::span<const double>(f.values), p);
}

}  // namespace admmnet
