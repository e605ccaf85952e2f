#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dds/diffusion.hpp"
#include "dds/linear_map.hpp"
#include "dds/rng.hpp"
#include "dds/samplers.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Elementwise sign(v) max(|v| - kappa, 0); for complex entries sign(v) = v/|v|.
Tensor soft_threshold(const Tensor& v, double kappa);

/// Split variable z ~ D_z x and scaled dual w, both shaped like the volume.
struct AdmmState {
  Tensor z;
  Tensor w;

  static AdmmState zeros(const Shape& volume_shape, DType dtype);
};

struct TvConfig {
  double lambda = 10.0;
  double rho = 0.04;
  int cg_steps = 5;
  /// Optional per-step weights: lambda_schedule[t - 1] is used at step t.
  std::vector<double> lambda_schedule;

  double lambda_at(int t) const;
  void validate() const;
};

/// One ADMM iteration on 0.5||y - A x||^2 + lambda ||D_z x||_1 warm-started at x_hat:
///   x' = cg(A*A + rho D*D, A*y + rho D*(z - w), x_hat, M)
///   z  = S_{lambda/rho}(D x' + w)
///   w  = w + D x' - z
Tensor admm_tv_dc(const Tensor& x_hat, const LinearMap& a, const Tensor& y, AdmmState& state, const TvConfig& cfg,
                  int t = 1);

/// 0.5||y - A x||^2 + lambda ||D_z x||_1
double tv_objective(const Tensor& x, const LinearMap& a, const Tensor& y, double lambda);

/// Reference ADMM run to `iterations` outer steps with an exact-ish x-update
/// (CG to relative tolerance 1e-12, at most cg_cap iterations).
Tensor reference_admm(const Tensor& x0, const LinearMap& a, const Tensor& y, double lambda, double rho,
                      int iterations, int cg_cap = 1000);

struct Recon3dResult {
  ReconResult recon;
  /// (t, objective) after each data-consistency step that ran ADMM.
  std::vector<std::pair<int, double>> objective;
};

std::string objective_to_csv(const std::vector<std::pair<int, double>>& objective);

/// Volume reconstruction: diffusion loop with ADMM-TV data consistency and
/// (z, w) shared across steps. In VE mode steps t >= N/2 use plain M-step CG;
/// ADMM starts from zero state at t = N/2 - 1.
Recon3dResult dds_3d_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                                 const SamplerConfig& cfg, const TvConfig& tv, RngStream& rng,
                                 const Tensor* ground_truth = nullptr);

}  // namespace dds
