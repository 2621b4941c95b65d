#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace acr::cli {

struct Context {
  std::ostream& out;  // machine-readable results
  std::ostream& err;  // diagnostics
  bool verbose = false;

  void log(const std::string& message) const;
};

// Seed from the flag, else from ACR_SEED, else `fallback`.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t fallback = 0);

struct SynthArgs {
  std::optional<std::uint64_t> seed;
  int count = 1;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  int jobs = 1;
};
// Writes scene_{i}.json and maps_{i}.acrt for i in [0, count); scene i uses
// seed + i.
int cmd_synth(const SynthArgs& args, const Context& ctx);

struct AggregateArgs {
  std::filesystem::path maps;
  std::optional<std::filesystem::path> interaction_config;
  std::optional<std::filesystem::path> out;  // stdout when absent
};
int cmd_aggregate(const AggregateArgs& args, const Context& ctx);

struct FitArgs {
  std::filesystem::path scene;
  double noise = 0.05;
  std::optional<std::uint64_t> seed;  // perturbation seed
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
};
// Writes fit.json and trace.csv into `out`.
int cmd_fit(const FitArgs& args, const Context& ctx);

struct ExportArgs {
  std::filesystem::path scene;
  std::optional<std::filesystem::path> obj_dir;
  std::optional<std::filesystem::path> heatmap_dir;
  std::optional<std::filesystem::path> config;
};
// hand_{left,right}.obj for present hands; center_{left,right}.pgm.
int cmd_export(const ExportArgs& args, const Context& ctx);

struct EvalArgs {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::optional<std::filesystem::path> config;
};
// Prints per-hand and mean metrics (mm) as JSON.
int cmd_eval(const EvalArgs& args, const Context& ctx);

// Runs `body`, mapping exceptions to a message on ctx.err and exit code 1.
template <class F>
int guarded(const Context& ctx, F&& body);

int report_error(const Context& ctx, const std::exception& e);

template <class F>
int guarded(const Context& ctx, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return report_error(ctx, e);
  }
}

}  // namespace acr::cli
