// admmnet: data generation, training, reconstruction, evaluation and gradient checks.

#include <CLI11.hpp>
#include <iostream>

#include "admmnet.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string profile;
  std::string out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> net;
  std::optional<std::string> init;
  std::optional<int> max_iterations;
  std::optional<double> rate;
  std::optional<int> n;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("-c,--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--profile", f.profile, "preset: tiny, desk or paper")->check(CLI::IsMember({"tiny", "desk", "paper"}));
  app->add_option("-o,--out-dir", f.out_dir, "output directory (paths.out_dir)");
  app->add_option("--threads", f.threads, "worker threads for per-sample work")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--net", f.net, "basic, generic or complex")->check(CLI::IsMember({"basic", "generic", "complex"}));
  app->add_option("--init", f.init, "model or random")->check(CLI::IsMember({"model", "random"}));
  app->add_option("--max-iterations", f.max_iterations, "L-BFGS iteration cap");
  app->add_option("--rate", f.rate, "sampling rate");
  app->add_option("--n", f.n, "image size");
}

// Profile, then config file, then flags; the merged document is validated once.
admmnet::RunConfig resolve(const CommonFlags& f) {
  nlohmann::json j = f.config.empty() ? nlohmann::json::object() : admmnet::load_json_file(f.config);
  if (!j.is_object()) throw admmnet::ConfigError("$", "expected an object");
  if (!f.profile.empty()) j["profile"] = f.profile;
  if (f.threads) j["threads"] = *f.threads;
  if (f.seed) j["seed"] = *f.seed;
  if (f.net) j["net"] = *f.net;
  if (f.init) j["init"] = *f.init;
  if (f.max_iterations) j["train"]["max_iterations"] = *f.max_iterations;
  if (f.rate) j["data"]["sampling_rate"] = *f.rate;
  if (f.n) j["data"]["n"] = *f.n;
  if (!f.out_dir.empty()) j["paths"]["out_dir"] = f.out_dir;
  return admmnet::parse_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unrolled ADMM networks for compressive-sensing MRI"};
  app.require_subcommand(1);

  CommonFlags make_f, train_f, recon_f, eval_f, grad_f, show_f;

  auto* make = app.add_subcommand("make-data", "write train/val/test datasets");
  add_common(make, make_f);

  auto* tr = app.add_subcommand("train", "train a network with L-BFGS");
  add_common(tr, train_f);
  std::string resume;
  tr->add_option("--resume", resume, "continue from a params file")->check(CLI::ExistingFile);

  auto* rec = app.add_subcommand("reconstruct", "reconstruct a dataset and write a metrics table");
  add_common(rec, recon_f);
  std::string rec_params, rec_input, solver = "net";
  rec->add_option("--params", rec_params, "params file (default: paths.params)");
  rec->add_option("--input", rec_input, "dataset file (default: paths.test_data)");
  rec->add_option("--solver", solver, "net, admm1, admm2 or zero")->check(CLI::IsMember({"net", "admm1", "admm2", "zero"}));

  auto* ev = app.add_subcommand("eval", "mean NMSE and PSNR of a params file on a dataset");
  add_common(ev, eval_f);
  std::string ev_params, ev_input;
  ev->add_option("--params", ev_params, "params file (default: paths.params)");
  ev->add_option("--input", ev_input, "dataset file (default: paths.test_data)");

  auto* gc = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  add_common(gc, grad_f);
  admmnet::GradCheckCommand gcmd;
  gc->add_option("--perturb", gcmd.perturb, "relative noise added to the initial parameters");
  gc->add_flag("--corrupt-eta", gcmd.corrupt_eta, "flip the analytic eta gradient (self-test, must fail)");
  gc->add_option("--tolerance", gcmd.options.tolerance, "relative error threshold");
  gc->add_option("--kink-radius", gcmd.options.kink_radius, "skip activations this close to a PLF kink");
  gc->add_option("--max-per-class", gcmd.options.max_per_class, "sample at most this many coordinates per class");

  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  add_common(show, show_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make) return admmnet::cmd_make_data(resolve(make_f), std::cout);
    if (*tr) return admmnet::cmd_train(resolve(train_f), std::cout, resume);
    if (*rec) {
      const auto cfg = resolve(recon_f);
      return admmnet::cmd_reconstruct(cfg, rec_params.empty() ? cfg.paths.params_path() : rec_params,
                                      rec_input.empty() ? cfg.paths.test_path() : rec_input,
                                      admmnet::parse_reconstructor(solver), std::cout);
    }
    if (*ev) {
      const auto cfg = resolve(eval_f);
      return admmnet::cmd_eval(ev_params.empty() ? cfg.paths.params_path() : ev_params,
                               ev_input.empty() ? cfg.paths.test_path() : ev_input, std::cout);
    }
    if (*gc) return admmnet::cmd_gradcheck(resolve(grad_f), gcmd, std::cout);
    if (*show) {
      std::cout << admmnet::to_json(resolve(show_f)).dump(2) << "\n";
      return 0;
    }
  } catch (const admmnet::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
