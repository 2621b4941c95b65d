#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "acr/cli.hpp"

namespace cli = acr::cli;

int main(int argc, char** argv) {
  CLI::App app{"Attention-based two-hand reconstruction toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to standard error");

  cli::SynthArgs synth;
  std::uint64_t synth_seed = 0;
  std::string synth_config, synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Sample scenes and write oracle map stacks");
  auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "Base seed (default: ACR_SEED or 0)");
  synth_cmd->add_option("--count", synth.count, "Number of scenes")->check(CLI::NonNegativeNumber);
  auto* synth_config_opt = synth_cmd->add_option("--config", synth_config, "JSON config file");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--jobs", synth.jobs, "Scenes generated in parallel")->check(CLI::PositiveNumber);

  cli::AggregateArgs aggregate;
  std::string agg_maps, agg_config, agg_out;
  auto* agg_cmd = app.add_subcommand("aggregate", "Run the aggregation pipeline on a map stack");
  agg_cmd->add_option("--maps", agg_maps, "Map stack tensor file")->required();
  auto* agg_config_opt = agg_cmd->add_option("--interaction-config", agg_config, "Interaction settings (JSON)");
  auto* agg_out_opt = agg_cmd->add_option("--out", agg_out, "Output JSON (default: standard output)");

  cli::FitArgs fit;
  std::uint64_t fit_seed = 0;
  std::string fit_scene, fit_config, fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "Fit hand parameters to a scene from a perturbed start");
  fit_cmd->add_option("--scene", fit_scene, "Scene JSON")->required();
  fit_cmd->add_option("--noise", fit.noise, "Perturbation scale")->check(CLI::NonNegativeNumber);
  auto* fit_seed_opt = fit_cmd->add_option("--seed", fit_seed, "Perturbation seed (default: ACR_SEED or scene seed)");
  auto* fit_config_opt = fit_cmd->add_option("--config", fit_config, "JSON config file");
  fit_cmd->add_option("--out", fit_out, "Output directory")->required();

  std::string exp_scene, exp_obj, exp_heat, exp_config;
  auto* exp_cmd = app.add_subcommand("export", "Export meshes as OBJ and center maps as PGM");
  exp_cmd->add_option("--scene", exp_scene, "Scene JSON")->required();
  auto* exp_obj_opt = exp_cmd->add_option("--obj", exp_obj, "Directory for OBJ meshes");
  auto* exp_heat_opt = exp_cmd->add_option("--heatmap", exp_heat, "Directory for PGM heatmaps");
  auto* exp_config_opt = exp_cmd->add_option("--config", exp_config, "JSON config file");

  std::string eval_pred, eval_gt, eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "Compare predicted and ground-truth hands");
  eval_cmd->add_option("--pred", eval_pred, "Prediction JSON")->required();
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth JSON")->required();
  auto* eval_config_opt = eval_cmd->add_option("--config", eval_config, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  const cli::Context ctx{std::cout, std::cerr, verbose};
  auto optional_path = [](CLI::Option* opt, const std::string& value) -> std::optional<std::filesystem::path> {
    if (opt->count() == 0) return std::nullopt;
    return std::filesystem::path(value);
  };

  return cli::guarded(ctx, [&]() -> int {
    if (synth_cmd->parsed()) {
      if (synth_seed_opt->count() > 0) synth.seed = synth_seed;
      synth.config = optional_path(synth_config_opt, synth_config);
      synth.out = synth_out;
      return cli::cmd_synth(synth, ctx);
    }
    if (agg_cmd->parsed()) {
      aggregate.maps = agg_maps;
      aggregate.interaction_config = optional_path(agg_config_opt, agg_config);
      aggregate.out = optional_path(agg_out_opt, agg_out);
      return cli::cmd_aggregate(aggregate, ctx);
    }
    if (fit_cmd->parsed()) {
      fit.scene = fit_scene;
      if (fit_seed_opt->count() > 0) fit.seed = fit_seed;
      fit.config = optional_path(fit_config_opt, fit_config);
      fit.out = fit_out;
      return cli::cmd_fit(fit, ctx);
    }
    if (exp_cmd->parsed()) {
      return cli::cmd_export({exp_scene, optional_path(exp_obj_opt, exp_obj), optional_path(exp_heat_opt, exp_heat),
                              optional_path(exp_config_opt, exp_config)},
                             ctx);
    }
    return cli::cmd_eval({eval_pred, eval_gt, optional_path(eval_config_opt, eval_config)}, ctx);
  });
}
