// Full-scale accuracy: 50000 train / 10000 test, 20 epochs. Hours on a CPU.
// Runs only with HEBB_CIFAR_DIR set and HEBB_FULL_SCALE=1; exits 77 otherwise.

#include "reproduction.hpp"

using accept::fmt;

int main() {
  accept::Report rep;
  const auto dir = accept::cifar_dir();
  const char* full = std::getenv("HEBB_FULL_SCALE");
  if (!dir || !full || std::string(full) != "1") {
    rep.skip("12", "full-scale accuracy", "needs HEBB_CIFAR_DIR and HEBB_FULL_SCALE=1");
    return accept::kSkip;
  }

  const accept::Reproduction r = accept::reproduce(*dir, 50000, 10000, 20, 0);
  const double fin = r.default_scores.at("final_output");
  const double tfin = r.triangle_scores.at("final_output");
  const double un1 = r.untrained_scores.at("l1_quadrants");
  rep.line("12a", "default final output", std::abs(fin - 34.5) <= 3.0, fmt("%.2f%% (need 34.5 +- 3)", fin));
  rep.line("12b", "triangle-pruned final output", std::abs(tfin - 64.55) <= 3.0, fmt("%.2f%% (need 64.55 +- 3)", tfin));
  rep.line("12c", "untrained L1 quadrants", std::abs(un1 - 43.3) <= 3.0, fmt("%.2f%% (need 43.3 +- 3)", un1));

  const auto out = accept::output_dir("hebb_acceptance_full");
  accept::export_grids(r, out);
  std::printf("[MANUAL] 13  layer-1 receptive field grid: inspect %s\n",
              (out / "rf_default_layer1.png").string().c_str());
  std::printf("runtime %.1f s\n", r.seconds);
  return rep.exit_code();
}
