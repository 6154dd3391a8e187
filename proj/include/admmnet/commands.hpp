#pragma once

// Implementations of the command-line subcommands. Each returns a process exit code and
// writes human-readable progress to `out`.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

#include "admmnet/admm_reference.hpp"
#include "admmnet/container.hpp"
#include "admmnet/gradcheck.hpp"
#include "admmnet/image_io.hpp"
#include "admmnet/run_config.hpp"
#include "admmnet/training.hpp"

namespace admmnet {

using AnyParams = std::variant<BasicNetParams, GenericNetParams>;

inline GenericArch generic_arch(const RunConfig& c) {
  return {c.arch.filters, c.arch.filter_size, c.arch.fusion_size, c.arch.stages,
          c.arch.sub_iterations, c.arch.controls, c.net == NetKind::complex};
}

inline AnyParams initial_params(const RunConfig& c) {
  const auto& a = c.arch;
  const auto& ip = c.init_params;
  if (c.net == NetKind::basic) {
    if (c.init == InitMode::model) return basic_model_init(a.filters, a.filter_size, a.stages, a.controls, ip.rho, ip.lambda);
    return basic_random_init(a.filters, a.filter_size, a.stages, a.controls, ip.rho, c.seed);
  }
  if (c.init == InitMode::model) return generic_model_init(generic_arch(c), ip.rho, ip.lambda, ip.step);
  return generic_random_init(generic_arch(c), ip.rho, ip.step, c.seed);
}

/// Parameter file: the run configuration as JSON text plus the flat parameter vector.
inline void save_params(const std::string& path, const RunConfig& cfg, const AnyParams& p) {
  Container c;
  c.add(Record::text("kind", "params"));
  c.add(Record::text("config", to_json(cfg).dump()));
  std::visit(
      [&](const auto& params) {
        const FlatParams f = pack_params(params);
        c.add(Record::f64("values", {f.values.size()}, f.values));
      },
      p);
  write_container(path, c);
}

struct LoadedParams {
  RunConfig config;
  AnyParams params;
};

inline LoadedParams load_params(const std::string& path) {
  const Container c = read_container(path);
  if (c.at("kind").as_text() != "params") throw ContainerError("'" + path + "' does not hold parameters");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(c.at("config").as_text());
  } catch (const nlohmann::json::parse_error& e) {
    throw ContainerError(std::string("corrupt config record: ") + e.what());
  }
  RunConfig cfg = apply_config(RunConfig{}, j);
  // any initializer gives the right shape; random works for every filter count
  RunConfig shape = cfg;
  shape.init = InitMode::random;
  AnyParams skel = initial_params(shape);
  const auto values = c.at("values").as_f64();
  AnyParams p = std::visit([&](const auto& s) -> AnyParams { return unpack_params(std::span<const double>(values), s); },
                           skel);
  return {cfg, std::move(p)};
}

inline ComplexGrid reconstruct(const AnyParams& p, const ComplexGrid& y, const SamplingMask& mask) {
  return std::visit([&](const auto& params) { return net_forward(y, mask, params).image; }, p);
}

inline int cmd_make_data(const RunConfig& c, std::ostream& out) {
  std::filesystem::create_directories(c.paths.out_dir);
  const SamplingMask mask = pseudo_radial_mask(c.data.n, c.data.sampling_rate);
  struct Split {
    const char* name;
    int count;
    std::string path;
    std::uint64_t seed;
  };
  const Split splits[] = {{"train", c.data.train, c.paths.train_path(), c.seed * 3 + 0},
                          {"val", c.data.val, c.paths.val_path(), c.seed * 3 + 1},
                          {"test", c.data.test, c.paths.test_path(), c.seed * 3 + 2}};
  for (const auto& s : splits) {
    DatasetSpec spec{c.data.n, s.count, c.data.sampling_rate, c.data.noise_sigma_min, c.data.noise_sigma_max,
                     c.data.phase, s.seed};
    write_dataset(s.path, make_dataset(spec, mask));
    out << s.name << ": " << s.count << " samples -> " << s.path << "\n";
  }
  out << "sampling rate: target " << c.data.sampling_rate << ", achieved " << mask.sampling_rate() << " ("
      << mask.kept_count() << " of " << c.data.n * c.data.n << " frequencies)\n";
  return 0;
}

/// Trains from the configured initialization, or from `resume_from` if non-empty.
inline int cmd_train(const RunConfig& c, std::ostream& out, const std::string& resume_from = "") {
  const Dataset train_set = read_dataset(c.paths.train_path());
  if (train_set.samples.empty()) throw std::invalid_argument("training set '" + c.paths.train_path() + "' is empty");
  AnyParams init = resume_from.empty() ? initial_params(c) : load_params(resume_from).params;
  std::filesystem::create_directories(c.paths.out_dir);
  std::ofstream csv(c.paths.metrics_path());
  if (!csv) throw std::runtime_error("cannot write metrics file '" + c.paths.metrics_path() + "'");
  csv << "iter,loss,grad_norm,wall_time\n" << std::setprecision(17);
  auto log = [&](const IterateRecord& r) {
    if (r.iteration % c.train.record_every != 0) return;
    csv << r.iteration << "," << r.value << "," << r.grad_norm << "," << r.wall_time << "\n";
    csv.flush();
  };
  AnyParams trained = std::visit(
      [&](const auto& p) -> AnyParams {
        auto res = train(p, train_set, c.train, c.threads, log);
        out << "status: " << to_string(res.optimizer.status) << ", iterations: " << res.optimizer.history.back().iteration
            << ", loss " << res.optimizer.history.front().value << " -> " << res.optimizer.value << "\n";
        return std::move(res.params);
      },
      init);
  save_params(c.paths.params_path(), c, trained);
  out << "params -> " << c.paths.params_path() << "\nmetrics -> " << c.paths.metrics_path() << "\n";
  if (std::filesystem::exists(c.paths.val_path())) {
    const Dataset val = read_dataset(c.paths.val_path());
    if (!val.samples.empty())
      out << "validation NMSE: "
          << std::visit([&](const auto& p) { return mean_nmse(p, val, c.threads); }, trained) << "\n";
  }
  return 0;
}

enum class Reconstructor { net, admm1, admm2, zero_filled };

inline Reconstructor parse_reconstructor(const std::string& s) {
  if (s == "net") return Reconstructor::net;
  if (s == "admm1") return Reconstructor::admm1;
  if (s == "admm2") return Reconstructor::admm2;
  if (s == "zero") return Reconstructor::zero_filled;
  throw std::invalid_argument("unknown solver '" + s + "' (expected net, admm1, admm2 or zero)");
}

/// Reconstructs every sample of `input`; writes <out_dir>/recon.csv and magnitude PGMs.
/// The classical solvers use the configured init_params, filter count and N_s + 1 iterations.
inline int cmd_reconstruct(const RunConfig& c, const std::string& params_path, const std::string& input,
                           Reconstructor solver, std::ostream& out) {
  const Dataset ds = read_dataset(input);
  std::optional<AnyParams> net;
  RunConfig cfg = c;
  if (solver == Reconstructor::net) {
    LoadedParams lp = load_params(params_path);
    net = std::move(lp.params);
    cfg.arch = lp.config.arch;
  }
  const int iters = cfg.arch.stages + 1;
  std::filesystem::create_directories(c.paths.out_dir);
  const std::string table = c.paths.out_dir + "/recon.csv";
  std::ofstream csv(table);
  if (!csv) throw std::runtime_error("cannot write '" + table + "'");
  csv << "id,nmse,psnr,ms\n";
  out << "id,nmse,psnr,ms\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds.samples[i];
    const auto t0 = std::chrono::steady_clock::now();
    ComplexGrid x;
    switch (solver) {
      case Reconstructor::net: x = reconstruct(*net, s.y, ds.mask); break;
      case Reconstructor::zero_filled: x = zero_filled(s.y, ds.mask); break;
      case Reconstructor::admm1: {
        FilterBank bank = dct_filter_bank(cfg.arch.filter_size, true);
        bank.kernels.resize(static_cast<std::size_t>(std::min(cfg.arch.filters, bank.count())));
        x = admm_solver1(s.y, ds.mask, Solver1Config::model_based(bank, cfg.init_params.rho, cfg.init_params.lambda, iters))
                .x.back();
        break;
      }
      case Reconstructor::admm2: {
        FilterBank bank = dct_filter_bank(cfg.arch.filter_size, true);
        bank.kernels.resize(static_cast<std::size_t>(std::min(cfg.arch.filters, bank.count())));
        x = admm_solver2(s.y, ds.mask,
                         Solver2Config::model_based(bank, cfg.init_params.rho, cfg.init_params.lambda,
                                                    cfg.init_params.step, cfg.arch.sub_iterations, iters,
                                                    cfg.arch.controls))
                .x.back();
        break;
      }
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << i << "," << std::setprecision(10) << nmse_loss(x, s.xgt) << "," << psnr(x, s.xgt) << "," << ms;
    csv << line.str() << "\n";
    out << line.str() << "\n";
    write_pgm(c.paths.out_dir + "/recon_" + std::to_string(i) + ".pgm", x, 1.0);
  }
  out << "table -> " << table << "\n";
  return 0;
}

struct EvalSummary {
  double nmse = 0.0;
  double psnr = 0.0;
  double zero_filled_nmse = 0.0;
  double zero_filled_psnr = 0.0;
};

inline EvalSummary evaluate(const AnyParams& p, const Dataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalSummary e;
  for (const auto& s : ds.samples) {
    const ComplexGrid x = reconstruct(p, s.y, ds.mask);
    const ComplexGrid z = zero_filled(s.y, ds.mask);
    e.nmse += nmse_loss(x, s.xgt);
    e.psnr += psnr(x, s.xgt);
    e.zero_filled_nmse += nmse_loss(z, s.xgt);
    e.zero_filled_psnr += psnr(z, s.xgt);
  }
  const double n = static_cast<double>(ds.size());
  e.nmse /= n;
  e.psnr /= n;
  e.zero_filled_nmse /= n;
  e.zero_filled_psnr /= n;
  return e;
}

inline int cmd_eval(const std::string& params_path, const std::string& data_path, std::ostream& out) {
  const LoadedParams lp = load_params(params_path);
  const Dataset ds = read_dataset(data_path);
  const EvalSummary e = evaluate(lp.params, ds);
  out << nlohmann::json{{"samples", ds.size()},
                        {"nmse", e.nmse},
                        {"psnr", e.psnr},
                        {"nmse_squared", e.nmse * e.nmse},
                        {"zero_filled_nmse", e.zero_filled_nmse},
                        {"zero_filled_psnr", e.zero_filled_psnr}}
             .dump(2)
      << "\n";
  return 0;
}

struct GradCheckCommand {
  double perturb = 0.0;  // relative parameter noise applied before the check
  bool corrupt_eta = false;
  GradCheckOptions options;
};

inline GradCheckReport run_gradcheck(const RunConfig& c, const GradCheckCommand& g) {
  const SamplingMask mask = pseudo_radial_mask(c.data.n, c.data.sampling_rate);
  DatasetSpec spec{c.data.n, 2, c.data.sampling_rate, 0.005, 0.02, c.net == NetKind::complex || c.data.phase, c.seed};
  const Dataset ds = make_dataset(spec, mask);
  GradCheckOptions o = g.options;
  o.corrupt_eta_sign = g.corrupt_eta;
  AnyParams p = initial_params(c);
  if (g.perturb > 0.0) std::visit([&](auto& q) { q = perturb_params(q, g.perturb, c.seed + 17); }, p);
  return std::visit(
      [&](const auto& q) { return finite_diff_check(q, mask, std::span<const Sample>(ds.samples), o); }, p);
}

inline int cmd_gradcheck(const RunConfig& c, const GradCheckCommand& g, std::ostream& out) {
  const GradCheckReport rep = run_gradcheck(c, g);
  out << "net: " << to_string(c.net) << ", tolerance " << g.options.tolerance << "\n";
  out << std::left << std::setw(6) << "class" << std::right << std::setw(9) << "checked" << std::setw(9) << "skipped"
      << std::setw(14) << "rel_error" << "  result\n";
  for (const auto& cr : rep.classes) {
    out << std::left << std::setw(6) << cr.cls << std::right << std::setw(9) << cr.checked << std::setw(9)
        << cr.skipped << std::setw(14) << std::setprecision(3) << std::scientific << cr.rel_error << std::defaultfloat
        << "  " << (cr.pass ? "ok" : "FAIL") << "\n";
  }
  out << (rep.pass ? "gradient check passed" : "gradient check FAILED") << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace admmnet
