#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dds/diffusion.hpp"
#include "dds/error.hpp"
#include "dds/linear_map.hpp"
#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

enum class DcStrategy { DdsCg, DdsProximalCg, Ddnm, Projection, Gradient, Dps };
/// Where projection/gradient baselines act: the noisy iterate x_{t-1} after the
/// DDIM step (with y rescaled by sqrt(ab_{t-1}) in VP), or the denoised x_hat_t.
enum class DcTarget { Noisy, Denoised };

DcStrategy parse_strategy(const std::string& s);
std::string to_string(DcStrategy s);
DcTarget parse_target(const std::string& s);
std::string to_string(DcTarget t);

struct SamplerConfig {
  int nfe = 50;
  /// Unset: 0.15 for nfe <= 20, 0.5 for nfe <= 50, 0.8 above.
  std::optional<double> eta;
  int cg_steps = 5;
  double gamma = 0.95;
  Mode mode = Mode::Vp;
  DcStrategy strategy = DcStrategy::DdsCg;
  DcTarget target = DcTarget::Noisy;
  double xi = 1.0;
  double dps_step = 1.0;
  /// Divide xi and dps_step by ||y - A x|| at the point where the gradient
  /// or DPS step is taken, instead of using them as constants.
  bool residual_step = false;
  double ve_truncation = 1.0 / 50.0;
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  std::optional<double> rejection_tau;
  int max_retries = 4;
  int pinv_max_iters = 200;
  double pinv_tol = 1e-10;
  /// Raise when the pseudo-inverse CG hits its cap instead of using the
  /// truncated iterate. Multi-coil masked Fourier maps are numerically
  /// rank-deficient, so the cap is the normal case there.
  bool pinv_strict = false;
  std::uint64_t seed = 0;

  double resolved_eta() const;
  void validate() const;
};

struct StepRecord {
  int t = 0;
  /// ||y - A x_hat'_t|| after data consistency (x_hat_t itself for noisy-target baselines).
  double residual = 0.0;
  /// ||y - A x_hat_t|| before data consistency.
  double residual_pre = 0.0;
  /// ||x_hat_t - x*|| before data consistency; NaN without ground truth.
  double gt_error = 0.0;
  /// Haar-MAD noise estimate of x_t (mean over slices for volumes).
  double noise_est = 0.0;
  /// Distance of x_hat'_t to the affine prior; NaN for other priors.
  double subspace_dist = 0.0;
};

std::string trace_to_csv(const std::vector<StepRecord>& trace);

struct ReconResult {
  Tensor x0;
  std::vector<StepRecord> trace;
  bool accepted = true;
  int attempts = 1;
  double residual = 0.0;
  double seconds = 0.0;
};

/// Raised when a non-finite value appears mid-run; carries the partial trace.
class SamplerDiverged : public NumericalError {
 public:
  SamplerDiverged(const std::string& what, std::vector<StepRecord> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<StepRecord>& trace() const { return trace_; }

 private:
  std::vector<StepRecord> trace_;
};

/// A^dagger r: the closed-form pseudo-inverse when the map has one, otherwise
/// CG on A*A x = A* r from zero (run as CGLS). Stops once ||r - A x|| or
/// ||A*(r - A x)|| falls below tol times its initial value. At the iteration
/// cap the truncated iterate is returned, or NumericalError raised if strict.
Tensor apply_pinv(const LinearMap& a, const Tensor& r, int max_iters = 200, double tol = 1e-10,
                  bool strict = true);

/// (I - A^dagger A) x_hat + A^dagger y
Tensor ddnm_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, int pinv_iters = 200,
                 double pinv_tol = 1e-10, bool strict = true);
/// Same algebra as ddnm_step; the sampler applies it to the noisy iterate by default.
Tensor projection_dc_step(const Tensor& x, const LinearMap& a, const Tensor& y, int pinv_iters = 200,
                          double pinv_tol = 1e-10, bool strict = true);
/// x - xi A*(A x - y)
Tensor gradient_dc_step(const Tensor& x, const LinearMap& a, const Tensor& y, double xi);
/// x_hat_t - gamma * mcg gradient at x_t.
Tensor dps_dc_step(const Tensor& x_t, const NoiseLevel& lvl, const Denoiser& prior, const LinearMap& a,
                   const Tensor& y, double gamma);
/// M-step CG on (A*A, A*y) from x_hat.
Tensor dds_cg_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, int m);
/// M-step CG on (I + gamma A*A, x_hat + gamma A*y) from x_hat.
Tensor dds_proximal_cg_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, double gamma, int m);

/// Data-consistency hook used by the generic loop: maps x_hat_t (and the
/// current x_t) to x_hat'_t.
using DcHook = std::function<Tensor(const Tensor& x_hat, const Tensor& x_t, int t, const NoiseLevel& lvl)>;

/// Full reconstruction with schedules built from cfg.
ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, RngStream& rng, const Tensor* ground_truth = nullptr);
ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, const VpSchedule& sched, RngStream& rng,
                            const Tensor* ground_truth = nullptr);
ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, const VeSchedule& sched, RngStream& rng,
                            const Tensor* ground_truth = nullptr);

/// Diffusion loop with a caller-supplied DC hook (used by the 3-D path).
/// `hook_for_step` picks the hook per timestep.
ReconResult run_sampler(const LinearMap& a, const Tensor& y, const Denoiser& denoiser, const SamplerConfig& cfg,
                        const VpSchedule* vp, const VeSchedule* ve, RngStream& rng, const Tensor* ground_truth,
                        const std::function<DcHook(int t)>& hook_for_step);

/// Reruns `run(seed)` until ||y - A x0|| <= tau or max_retries extra attempts
/// are spent. Attempt 0 uses `seed`; attempt k uses derive_seed(seed, k).
/// Returns the accepted run, or the best-residual run flagged not accepted.
ReconResult rejection_wrap(const std::function<ReconResult(std::uint64_t)>& run, const LinearMap& a,
                           const Tensor& y, double tau, int max_retries, std::uint64_t seed);

/// Convenience: rejection sampling around dds_reconstruct when cfg.rejection_tau is set.
ReconResult reconstruct_with_rejection(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                                       const SamplerConfig& cfg, const Tensor* ground_truth = nullptr);

}  // namespace dds
