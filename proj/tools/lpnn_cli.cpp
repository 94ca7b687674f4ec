#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "lpnn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ladder polynomial neural network toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  lpnn::cmd::CommonOpts opts;
  std::string out_dir = "out";
  std::uint64_t seed_value = 0;
  app.add_option("--config", opts.config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "seed override (takes precedence over config)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  CLI::App* train = app.add_subcommand("train", "fit a ladder network on a CSV dataset");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on a CSV dataset");
  CLI::App* analyze =
      app.add_subcommand("analyze", "Lipschitz bounds, line polynomials, activation scatter");
  CLI::App* bayes = app.add_subcommand("bayes", "moment propagation under a Gaussian weight prior");
  CLI::App* convert = app.add_subcommand("convert", "build a ladder network from a kernel/FM spec");
  CLI::App* tt = app.add_subcommand("tt", "export a model as tensor-train cores");
  CLI::App* experiment = app.add_subcommand("experiment", "built-in benchmark experiments");
  experiment->require_subcommand(1);
  experiment->fallthrough();
  CLI::App* product_approx =
      experiment->add_subcommand("product-approx", "tanh baseline vs product/relu targets grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  opts.out = out_dir;
  if (seed_opt->count()) opts.seed = seed_value;

  try {
    if (train->parsed()) return lpnn::cmd::run_train(opts);
    if (eval->parsed()) return lpnn::cmd::run_eval(opts);
    if (analyze->parsed()) return lpnn::cmd::run_analyze(opts);
    if (bayes->parsed()) return lpnn::cmd::run_bayes(opts);
    if (convert->parsed()) return lpnn::cmd::run_convert(opts);
    if (tt->parsed()) return lpnn::cmd::run_tt(opts);
    if (experiment->parsed() && product_approx->parsed()) return lpnn::cmd::run_product_approx(opts);
    std::fprintf(stderr, "error: no command selected\n");
    return 1;
  } catch (const lpnn::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const lpnn::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
