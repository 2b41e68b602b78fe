#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "ncdl/pipeline.hpp"

namespace {

// Loads config and applies --seed / --out overrides.
ncdl::RunConfig make_config(const std::string& config_path,
                            const std::optional<std::uint64_t>& seed,
                            const std::optional<std::string>& out_dir) {
  ncdl::RunConfig cfg = config_path.empty() ? ncdl::RunConfig{}
                                            : ncdl::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-world proposal fusion, contrastive features, novel-class "
               "clustering and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", out_dir, "Override the output directory");

  auto* generate = app.add_subcommand(
      "generate", "Generate the synthetic world and detector streams");
  auto* fuse = app.add_subcommand("fuse", "Fuse the two proposal streams");
  auto* train = app.add_subcommand("train-embed", "Train the embedder");
  auto* cluster = app.add_subcommand("cluster", "Cluster fused instances");
  auto* evaluate = app.add_subcommand("evaluate", "Compute the metric report");
  auto* report = app.add_subcommand(
      "report", "Render the variant-by-k comparison table");
  auto* bench = app.add_subcommand(
      "bench-cluster", "Time full vs mini-batch k-means");

  std::vector<int> bench_n = {10000, 100000};
  std::vector<int> bench_k = {80, 1000};
  int bench_d = 128;
  bench->add_option("--n", bench_n, "Sample sizes");
  bench->add_option("--k", bench_k, "Cluster counts");
  bench->add_option("--d", bench_d, "Feature dimension");

  // Let --config/--seed/--out appear after the subcommand too.
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const ncdl::RunConfig cfg = make_config(config_path, seed, out_dir);
    if (generate->parsed()) {
      ncdl::stage_generate(cfg);
    } else if (fuse->parsed()) {
      ncdl::stage_fuse(cfg);
    } else if (train->parsed()) {
      ncdl::stage_train(cfg);
    } else if (cluster->parsed()) {
      ncdl::stage_cluster(cfg);
    } else if (evaluate->parsed()) {
      const auto [base, over] = ncdl::stage_evaluate(cfg);
      std::cout << "corloc=" << base.corloc
                << " base_disc=" << base.discovered_classes
                << " over_disc=" << over.discovered_classes << "\n";
    } else if (report->parsed()) {
      ncdl::stage_report(cfg);
    } else if (bench->parsed()) {
      ncdl::stage_bench(cfg, bench_n, bench_k, bench_d);
    }
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}
