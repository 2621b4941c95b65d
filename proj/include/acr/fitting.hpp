#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "acr/hand_model.hpp"
#include "acr/losses.hpp"
#include "acr/synth.hpp"

namespace acr {

struct FitConfig {
  int max_iters = 300;
  double step = 1e-2;          // first trial step along the fallback steepest-descent direction
  int max_halvings = 20;
  double fd_step = 1e-4;       // central differences
  double tolerance = 1e-7;     // on the accepted loss decrease
  double loss_floor = 1e-12;   // stop once the loss is this small
  double damping = 1e-9;       // relative diagonal damping of the Gauss-Newton system
  bool freeze_alignment = true;  // Procrustes solve held fixed across gradient probes
  int jobs = 1;                // threads for gradient probes; results do not depend on it
  TermMask mask = TermMask::mesh_terms();
  LossWeights weights;

  void validate() const;
};

struct HandMetrics {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
  double mpvpe_mm = 0.0;
  double pa_mpvpe_mm = 0.0;
};

// Joint and vertex errors of `pred` against `gt`, root-aligned (joint 0) and
// Procrustes-aligned, in millimeters.
HandMetrics hand_metrics(const HandModel& model, const HandParams& pred, const HandParams& gt);

using HandSlots = std::array<std::optional<HandParams>, 2>;

struct FitResult {
  HandSlots params;
  std::vector<LossBreakdown> trace;  // accepted losses, trace[0] at the initialization
  std::array<std::optional<HandMetrics>, 2> initial_metrics;
  std::array<std::optional<HandMetrics>, 2> final_metrics;
  int iterations = 0;
  std::string stop_reason;
};

// Minimizes the masked total loss of the scene's present hands starting from
// `init`, which must hold a value for exactly the hands present in the scene.
// Each step builds a finite-difference Jacobian of the loss residuals (norm
// terms enter through their quadratic majorizer), takes the Gauss-Newton
// direction and backtracks by halving until the Armijo condition holds.
// Throws InitializationError when the initial loss is not finite.
FitResult fit_scene(const Scene& scene, const HandSlots& init, const HandModelPair& models,
                    const FitConfig& cfg = {});

// "iteration,total,<term>..." with one column per term in `mask`.
std::string trace_csv(const FitResult& result, TermMask mask);

}  // namespace acr
