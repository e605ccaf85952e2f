#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dds/linear_map.hpp"
#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

enum class Mode { Vp, Ve };

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);

/// Noise level of x_t as seen by a denoiser. VP uses alpha_bar, VE uses sigma.
struct NoiseLevel {
  Mode mode = Mode::Vp;
  double alpha_bar = 1.0;
  double sigma = 0.0;

  static NoiseLevel vp(double alpha_bar) { return {Mode::Vp, alpha_bar, 0.0}; }
  static NoiseLevel ve(double sigma) { return {Mode::Ve, 1.0, sigma}; }
};

/// Variance-preserving schedule over N inference steps, t = 1..N, t = N noisiest.
/// alpha_bar(0) = 1.
class VpSchedule {
 public:
  /// Linear training betas on a T-step grid, subsampled with stride floor(T/N):
  /// step t uses training index 1 + (t-1) * stride.
  static VpSchedule linear(int n, int train_steps = 1000, double beta_min = 1e-4, double beta_max = 0.02);
  /// alpha_bars[t-1] = alpha_bar(t), strictly decreasing in (0, 1).
  static VpSchedule from_alpha_bars(std::vector<double> alpha_bars);

  int steps() const { return static_cast<int>(ab_.size()) - 1; }
  double alpha_bar(int t) const;
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  /// sqrt((1-ab_{t-1})/(1-ab_t)) * sqrt(1 - ab_t/ab_{t-1})
  double beta_tilde(int t) const;
  NoiseLevel level(int t) const { return NoiseLevel::vp(alpha_bar(t)); }
  std::string to_csv() const;

 private:
  void check_t(int t, int lo) const;
  std::vector<double> ab_;  // index 0..N
};

/// Variance-exploding schedule, sigma geometric from sigma_min (t=1) to
/// sigma_max (t=N); sigma(0) = 0.
class VeSchedule {
 public:
  static VeSchedule geometric(int n, double sigma_min = 0.01, double sigma_max = 10.0);
  static VeSchedule from_sigmas(std::vector<double> sigmas);

  int steps() const { return static_cast<int>(sigma_.size()) - 1; }
  double sigma(int t) const;
  /// 1 - sigma_{t-1}^2 / sigma_t^2
  double beta_tilde(int t) const;
  NoiseLevel level(int t) const { return NoiseLevel::ve(sigma(t)); }
  std::string to_csv() const;

 private:
  void check_t(int t, int lo) const;
  std::vector<double> sigma_;  // index 0..N
};

// Parameterization conversions.
Tensor vp_tweedie(const Tensor& x_t, const Tensor& eps_hat, double alpha_bar);
Tensor vp_eps_from_denoised(const Tensor& x_t, const Tensor& x_hat, double alpha_bar);
Tensor ve_score_from_denoised(const Tensor& x_t, const Tensor& x_hat, double sigma);
Tensor ve_eps_from_denoised(const Tensor& x_t, const Tensor& x_hat, double sigma);
/// VP: s = -eps / sqrt(1 - alpha_bar). VE: s = -eps / sigma.
Tensor score_from_eps(const Tensor& eps, const NoiseLevel& lvl);
Tensor eps_from_score(const Tensor& score, const NoiseLevel& lvl);

/// x_{t-1} = sqrt(ab_{t-1}) x_hat + sqrt(1 - ab_{t-1} - eta^2 bt^2) eps_hat + eta bt eps.
/// Fresh noise is drawn only when eta > 0. Requires 2 <= t <= N.
Tensor vp_ddim_step(const Tensor& x_hat, const Tensor& eps_hat, int t, double eta, RngStream& rng,
                    const VpSchedule& sched);

/// x_{t-1} = x_hat - s_{t-1} s_t sqrt(1 - bt^2 eta^2) score + s_{t-1} eta bt eps.
Tensor ve_ddim_step(const Tensor& x_hat, const Tensor& score, int t, double eta, RngStream& rng,
                    const VeSchedule& sched);

/// Coefficients of the two VP step terms, exposed for identity checks.
struct DdimCoefficients {
  double denoised;
  double deterministic;
  double stochastic;
};
DdimCoefficients vp_ddim_coefficients(int t, double eta, const VpSchedule& sched);
DdimCoefficients ve_ddim_coefficients(int t, double eta, const VeSchedule& sched);

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  /// Posterior-mean estimate of x_0 given x_t at the given noise level.
  virtual Tensor denoise(const Tensor& x_t, const NoiseLevel& lvl) const = 0;
  virtual std::string name() const = 0;
};

/// Uniform prior on the affine subspace c + span(Q). Its exact Tweedie
/// denoiser is a scaled orthogonal projection:
///   VP: (1/sqrt(ab)) Q Q^H (x - sqrt(ab) c) + c
///   VE: Q Q^H (x - c) + c
class AffineSubspacePrior : public Denoiser {
 public:
  /// Columns must be orthonormal within 1e-10.
  AffineSubspacePrior(std::vector<Tensor> basis, Tensor offset);
  /// Orthonormalizes arbitrary independent columns first.
  static AffineSubspacePrior from_spanning(std::vector<Tensor> columns, Tensor offset);

  const std::vector<Tensor>& basis() const { return q_; }
  const Tensor& offset() const { return c_; }
  std::size_t dim() const { return q_.size(); }
  const Shape& shape() const { return c_.shape(); }

  /// Q Q^H v
  Tensor project(const Tensor& v) const;
  /// ||(v - c) - Q Q^H (v - c)||
  double distance(const Tensor& v) const;
  /// c + Q a with a standard normal (complex if the basis is complex).
  Tensor sample(RngStream& rng) const;

  Tensor denoise(const Tensor& x_t, const NoiseLevel& lvl) const override;
  std::string name() const override { return "affine-subspace"; }

 private:
  std::vector<Tensor> q_;
  Tensor c_;
};

/// Mixture of isotropic Gaussians N(mu_k, tau2 I); complex means give
/// circular complex components with E|x - mu|^2 = tau2 per entry.
class GmmPrior : public Denoiser {
 public:
  GmmPrior(std::vector<double> weights, std::vector<Tensor> means, double tau2);

  const std::vector<double>& weights() const { return w_; }
  const std::vector<Tensor>& means() const { return mu_; }
  double tau2() const { return tau2_; }
  bool is_complex() const { return mu_.front().is_complex(); }

  std::vector<double> responsibilities(const Tensor& x_t, const NoiseLevel& lvl) const;
  Tensor sample(RngStream& rng) const;

  Tensor denoise(const Tensor& x_t, const NoiseLevel& lvl) const override;
  std::string name() const override { return "gmm"; }

 private:
  std::vector<double> w_;
  std::vector<Tensor> mu_;
  double tau2_;
};

/// Applies a 2-D denoiser to each axial slice of a (nz, ny, nx) volume.
class SliceDenoiser : public Denoiser {
 public:
  explicit SliceDenoiser(std::shared_ptr<const Denoiser> inner) : inner_(std::move(inner)) {}
  Tensor denoise(const Tensor& x_t, const NoiseLevel& lvl) const override;
  std::string name() const override { return "slice(" + inner_->name() + ")"; }

 private:
  std::shared_ptr<const Denoiser> inner_;
};

/// Manifold-constrained gradient d/dx_t 0.5||y - A x_hat(x_t)||^2 for the
/// affine prior, using its closed-form Jacobian (1/sqrt(ab)) Q Q^H (VP) or
/// Q Q^H (VE).
Tensor mcg_dps_gradient(const Tensor& x_t, const NoiseLevel& lvl, const AffineSubspacePrior& prior,
                        const LinearMap& a, const Tensor& y);
/// Same, for a generic denoiser; throws ConfigError unless it is affine.
Tensor mcg_dps_gradient(const Tensor& x_t, const NoiseLevel& lvl, const Denoiser& prior,
                        const LinearMap& a, const Tensor& y);

}  // namespace dds
