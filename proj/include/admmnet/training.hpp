#pragma once

// Loss, metrics, parameter flattening and the batch objective used for training.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "admmnet/basic_net.hpp"
#include "admmnet/data.hpp"
#include "admmnet/generic_net.hpp"
#include "admmnet/lbfgs.hpp"

namespace admmnet {

/// Relative l2 error ||xhat - xgt|| / ||xgt|| (not squared).
inline double nmse_loss(const ComplexGrid& xhat, const ComplexGrid& xgt) {
  xhat.check_shape(xgt, "nmse_loss");
  const double ng = norm2(xgt);
  if (!(ng > 0.0)) throw std::invalid_argument("nmse_loss: ground truth is zero");
  return norm2(xhat - xgt) / ng;
}

/// ||xhat - xgt||^2 / ||xgt||^2, the squared-ratio variant.
inline double nmse_squared(const ComplexGrid& xhat, const ComplexGrid& xgt) {
  const double r = nmse_loss(xhat, xgt);
  return r * r;
}

struct LossGradient {
  ComplexGrid grad;
  bool degenerate = false;  // xhat == xgt, where the loss is not differentiable
};

/// Gradient of nmse_loss w.r.t. xhat, divided by batch_size.
inline LossGradient nmse_grad(const ComplexGrid& xhat, const ComplexGrid& xgt, std::size_t batch_size = 1) {
  xhat.check_shape(xgt, "nmse_grad");
  const double ng = norm2(xgt);
  if (!(ng > 0.0)) throw std::invalid_argument("nmse_grad: ground truth is zero");
  ComplexGrid r = xhat - xgt;
  const double nr = norm2(r);
  if (nr == 0.0) return {ComplexGrid(xhat.height(), xhat.width()), true};
  r *= 1.0 / (ng * nr * static_cast<double>(batch_size));
  return {std::move(r), false};
}

/// 20 log10(max|xgt| / RMSE(|xhat|, |xgt|)); +inf when the magnitudes agree exactly.
inline double psnr(const ComplexGrid& xhat, const ComplexGrid& xgt) {
  xhat.check_shape(xgt, "psnr");
  double peak = 0.0, se = 0.0;
  for (std::size_t i = 0; i < xgt.size(); ++i) {
    peak = std::max(peak, std::abs(xgt[i]));
    const double d = std::abs(xhat[i]) - std::abs(xgt[i]);
    se += d * d;
  }
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: ground truth is zero");
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double rmse = std::sqrt(se / static_cast<double>(xgt.size()));
  return 20.0 * std::log10(peak / rmse);
}

struct ParamSlice {
  std::string cls;   // parameter class, e.g. "rho", "w1", "q"
  std::string name;  // unique path, e.g. "stage2.sub1.w1.0"
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct FlatParams {
  std::vector<double> values;
  std::vector<ParamSlice> layout;
};

template <typename P>
FlatParams pack_params(const P& p) {
  FlatParams f;
  visit_params(p, [&](const std::string& cls, const std::string& name, std::span<const double> s) {
    f.layout.push_back({cls, name, f.values.size(), s.size()});
    f.values.insert(f.values.end(), s.begin(), s.end());
  });
  return f;
}

/// Writes flat values into a copy of `like`; the layout must match its structure.
template <typename P>
P unpack_params(std::span<const double> values, const P& like) {
  P p = like;
  std::size_t off = 0;
  visit_params(p, [&](const std::string&, const std::string& name, std::span<double> s) {
    if (off + s.size() > values.size())
      throw DimensionMismatch("unpack_params: vector too short at '" + name + "'");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), s.size(), s.begin());
    off += s.size();
  });
  if (off != values.size())
    throw DimensionMismatch("unpack_params: vector has " + std::to_string(values.size()) + " entries, layout needs " +
                            std::to_string(off));
  return p;
}

template <typename P>
P unpack_params(const FlatParams& f, const P& like) {
  const FlatParams ref = pack_params(like);
  if (ref.layout.size() != f.layout.size()) throw DimensionMismatch("unpack_params: layout differs");
  for (std::size_t i = 0; i < ref.layout.size(); ++i)
    if (ref.layout[i].name != f.layout[i].name || ref.layout[i].size != f.layout[i].size)
      throw DimensionMismatch("unpack_params: layout differs at '" + f.layout[i].name + "'");
  return unpack_params(std::span<const double>(f.values), like);
}

template <typename P>
std::size_t param_count(const P& p) {
  std::size_t n = 0;
  visit_params(p, [&](auto&&, auto&&, std::span<const double> s) { n += s.size(); });
  return n;
}

inline BasicForwardResult net_forward(const ComplexGrid& y, const SamplingMask& m, const BasicNetParams& p,
                                      bool record = false) {
  return basic_forward(y, m, p, record);
}
inline GenericForwardResult net_forward(const ComplexGrid& y, const SamplingMask& m, const GenericNetParams& p,
                                        bool record = false) {
  return generic_forward(y, m, p, record);
}
inline BasicGradients net_backward(const BasicTape& t, const ComplexGrid& y, const SamplingMask& m,
                                   const BasicNetParams& p, const ComplexGrid& g) {
  return basic_backward(t, y, m, p, g);
}
inline GenericGradients net_backward(const GenericTape& t, const ComplexGrid& y, const SamplingMask& m,
                                     const GenericNetParams& p, const ComplexGrid& g) {
  return generic_backward(t, y, m, p, g);
}

namespace detail {

/// Runs f(i) for i in [0, n) on up to `threads` workers, contiguous chunks.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t t = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / t; i < (w + 1) * n / t; ++i) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Mean NMSE of the network over a dataset. Summed in sample order.
template <typename P>
double mean_nmse(const P& params, const Dataset& ds, int threads = 1) {
  if (ds.samples.empty()) throw std::invalid_argument("mean_nmse: empty dataset");
  std::vector<double> per(ds.size());
  detail::parallel_for(ds.size(), threads, [&](std::size_t i) {
    per[i] = nmse_loss(net_forward(ds.samples[i].y, ds.mask, params).image, ds.samples[i].xgt);
  });
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

inline double mean_nmse_zero_filled(const Dataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("mean_nmse_zero_filled: empty dataset");
  double s = 0.0;
  for (const auto& smp : ds.samples) s += nmse_loss(zero_filled(smp.y, ds.mask), smp.xgt);
  return s / static_cast<double>(ds.size());
}

/// Objective for L-BFGS: mean NMSE over a dataset and its gradient w.r.t. the flat
/// parameter vector. Per-sample work may run on several threads; the reduction is in
/// sample order, so results do not depend on the thread count.
template <typename P>
class BatchObjective {
 public:
  BatchObjective(P skeleton, const Dataset& data, int threads = 1)
      : skeleton_(std::move(skeleton)), data_(&data), threads_(threads) {
    if (data.samples.empty()) throw std::invalid_argument("BatchObjective: empty dataset");
  }

  double operator()(std::span<const double> theta, std::span<double> grad) const {
    const P p = unpack_params(theta, skeleton_);
    const std::size_t N = data_->size();
    std::vector<double> loss(N);
    std::vector<std::vector<double>> g(N);
    detail::parallel_for(N, threads_, [&](std::size_t i) {
      const Sample& s = data_->samples[i];
      auto fw = net_forward(s.y, data_->mask, p, true);
      loss[i] = nmse_loss(fw.image, s.xgt);
      const LossGradient lg = nmse_grad(fw.image, s.xgt, N);
      g[i] = pack_params(net_backward(fw.tape, s.y, data_->mask, p, lg.grad)).values;
    });
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      total += loss[i];
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[i][j];
    }
    return total / static_cast<double>(N);
  }

  const P& skeleton() const noexcept { return skeleton_; }

 private:
  P skeleton_;
  const Dataset* data_;
  int threads_;
};

template <typename P>
struct TrainResult {
  P params;
  LbfgsResult optimizer;
};

template <typename P>
TrainResult<P> train(const P& init, const Dataset& data, const TrainConfig& cfg, int threads = 1,
                     const std::function<void(const IterateRecord&)>& on_iterate = {}) {
  const BatchObjective<P> obj(init, data, threads);
  LbfgsResult r = lbfgs_minimize(std::cref(obj), pack_params(init).values, cfg, on_iterate);
  P out = unpack_params(std::span<const double>(r.x), init);
  return {std::move(out), std::move(r)};
}

}  // namespace admmnet
