#include "dds/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dds/error.hpp"

namespace dds {

Mode parse_mode(const std::string& s) {
  if (s == "vp") return Mode::Vp;
  if (s == "ve") return Mode::Ve;
  throw ConfigError("unknown diffusion mode '" + s + "' (expected vp or ve)");
}

std::string to_string(Mode m) { return m == Mode::Vp ? "vp" : "ve"; }

VpSchedule VpSchedule::linear(int n, int train_steps, double beta_min, double beta_max) {
  if (n < 1 || train_steps < n) throw ConfigError("vp schedule: need 1 <= N <= T");
  if (!(beta_min > 0 && beta_max < 1 && beta_min < beta_max))
    throw ConfigError("vp schedule: need 0 < beta_min < beta_max < 1");
  std::vector<double> train(static_cast<std::size_t>(train_steps) + 1, 1.0);
  for (int i = 1; i <= train_steps; ++i) {
    const double b = train_steps == 1
                         ? beta_min
                         : beta_min + (beta_max - beta_min) * (i - 1) / double(train_steps - 1);
    train[static_cast<std::size_t>(i)] = train[static_cast<std::size_t>(i - 1)] * (1.0 - b);
  }
  const int stride = train_steps / n;
  std::vector<double> ab;
  for (int t = 1; t <= n; ++t) ab.push_back(train[static_cast<std::size_t>(1 + (t - 1) * stride)]);
  return from_alpha_bars(std::move(ab));
}

VpSchedule VpSchedule::from_alpha_bars(std::vector<double> alpha_bars) {
  if (alpha_bars.empty()) throw ConfigError("vp schedule: empty");
  double prev = 1.0;
  for (double a : alpha_bars) {
    if (!(a > 0.0 && a < prev))
      throw ConfigError("vp schedule: alpha_bar must be strictly decreasing in (0, 1)");
    prev = a;
  }
  VpSchedule s;
  s.ab_.push_back(1.0);
  s.ab_.insert(s.ab_.end(), alpha_bars.begin(), alpha_bars.end());
  return s;
}

void VpSchedule::check_t(int t, int lo) const {
  if (t < lo || t > steps())
    throw ConfigError("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(steps()) + "]");
}

double VpSchedule::alpha_bar(int t) const {
  check_t(t, 0);
  return ab_[static_cast<std::size_t>(t)];
}

double VpSchedule::beta(int t) const {
  check_t(t, 1);
  return 1.0 - ab_[static_cast<std::size_t>(t)] / ab_[static_cast<std::size_t>(t - 1)];
}

double VpSchedule::beta_tilde(int t) const {
  check_t(t, 1);
  const double a = ab_[static_cast<std::size_t>(t)], ap = ab_[static_cast<std::size_t>(t - 1)];
  return std::sqrt((1.0 - ap) / (1.0 - a)) * std::sqrt(1.0 - a / ap);
}

std::string VpSchedule::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,beta,alpha_bar,beta_tilde\n";
  for (int t = 1; t <= steps(); ++t) os << t << ',' << beta(t) << ',' << alpha_bar(t) << ',' << beta_tilde(t) << '\n';
  return os.str();
}

VeSchedule VeSchedule::geometric(int n, double sigma_min, double sigma_max) {
  if (n < 1) throw ConfigError("ve schedule: need N >= 1");
  if (!(sigma_min > 0 && sigma_max > sigma_min)) throw ConfigError("ve schedule: need 0 < sigma_min < sigma_max");
  std::vector<double> s;
  for (int t = 1; t <= n; ++t)
    s.push_back(n == 1 ? sigma_max : sigma_min * std::pow(sigma_max / sigma_min, double(t - 1) / double(n - 1)));
  return from_sigmas(std::move(s));
}

VeSchedule VeSchedule::from_sigmas(std::vector<double> sigmas) {
  if (sigmas.empty()) throw ConfigError("ve schedule: empty");
  double prev = 0.0;
  for (double s : sigmas) {
    if (!(s > prev && std::isfinite(s))) throw ConfigError("ve schedule: sigma must be strictly increasing and > 0");
    prev = s;
  }
  VeSchedule v;
  v.sigma_.push_back(0.0);
  v.sigma_.insert(v.sigma_.end(), sigmas.begin(), sigmas.end());
  return v;
}

void VeSchedule::check_t(int t, int lo) const {
  if (t < lo || t > steps())
    throw ConfigError("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(steps()) + "]");
}

double VeSchedule::sigma(int t) const {
  check_t(t, 0);
  return sigma_[static_cast<std::size_t>(t)];
}

double VeSchedule::beta_tilde(int t) const {
  check_t(t, 1);
  const double s = sigma_[static_cast<std::size_t>(t)], sp = sigma_[static_cast<std::size_t>(t - 1)];
  return 1.0 - (sp * sp) / (s * s);
}

std::string VeSchedule::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,sigma,beta_tilde\n";
  for (int t = 1; t <= steps(); ++t) os << t << ',' << sigma(t) << ',' << beta_tilde(t) << '\n';
  return os.str();
}

namespace {

void check_alpha_bar(double ab) {
  if (!(ab > 0.0 && ab <= 1.0)) throw ConfigError("alpha_bar must lie in (0, 1]");
}

}  // namespace

Tensor vp_tweedie(const Tensor& x_t, const Tensor& eps_hat, double alpha_bar) {
  check_alpha_bar(alpha_bar);
  Tensor out = x_t;
  out.axpy(-std::sqrt(1.0 - alpha_bar), eps_hat);
  out *= 1.0 / std::sqrt(alpha_bar);
  return out;
}

Tensor vp_eps_from_denoised(const Tensor& x_t, const Tensor& x_hat, double alpha_bar) {
  check_alpha_bar(alpha_bar);
  if (alpha_bar == 1.0) throw ConfigError("eps is undefined at alpha_bar = 1");
  Tensor out = x_t;
  out.axpy(-std::sqrt(alpha_bar), x_hat);
  out *= 1.0 / std::sqrt(1.0 - alpha_bar);
  return out;
}

Tensor ve_score_from_denoised(const Tensor& x_t, const Tensor& x_hat, double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  return (1.0 / (sigma * sigma)) * (x_hat - x_t);
}

Tensor ve_eps_from_denoised(const Tensor& x_t, const Tensor& x_hat, double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be > 0");
  return (1.0 / sigma) * (x_t - x_hat);
}

Tensor score_from_eps(const Tensor& eps, const NoiseLevel& lvl) {
  const double s = lvl.mode == Mode::Vp ? std::sqrt(1.0 - lvl.alpha_bar) : lvl.sigma;
  if (!(s > 0)) throw ConfigError("score undefined at zero noise level");
  return (-1.0 / s) * eps;
}

Tensor eps_from_score(const Tensor& score, const NoiseLevel& lvl) {
  const double s = lvl.mode == Mode::Vp ? std::sqrt(1.0 - lvl.alpha_bar) : lvl.sigma;
  return (-s) * score;
}

DdimCoefficients vp_ddim_coefficients(int t, double eta, const VpSchedule& sched) {
  if (t < 2 || t > sched.steps()) throw ConfigError("vp_ddim_step: t must lie in [2, N]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  const double abp = sched.alpha_bar(t - 1);
  const double bt = sched.beta_tilde(t);
  double rad = 1.0 - abp - eta * eta * bt * bt;
  if (rad < 0.0) {
    if (rad < -1e-14) throw NumericalError("vp_ddim_step: negative radicand");
    rad = 0.0;
  }
  return {std::sqrt(abp), std::sqrt(rad), eta * bt};
}

DdimCoefficients ve_ddim_coefficients(int t, double eta, const VeSchedule& sched) {
  if (t < 2 || t > sched.steps()) throw ConfigError("ve_ddim_step: t must lie in [2, N]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  const double bt = sched.beta_tilde(t);
  const double rad = 1.0 - bt * bt * eta * eta;
  if (rad < 0.0) throw NumericalError("ve_ddim_step: beta_tilde^2 eta^2 > 1");
  const double sp = sched.sigma(t - 1), s = sched.sigma(t);
  return {1.0, sp * s * std::sqrt(rad), sp * eta * bt};
}

Tensor vp_ddim_step(const Tensor& x_hat, const Tensor& eps_hat, int t, double eta, RngStream& rng,
                    const VpSchedule& sched) {
  const auto c = vp_ddim_coefficients(t, eta, sched);
  Tensor out = c.denoised * x_hat;
  out.axpy(c.deterministic, eps_hat);
  if (eta > 0.0) out.axpy(c.stochastic, randn(rng, out.shape(), out.dtype()));
  return out;
}

Tensor ve_ddim_step(const Tensor& x_hat, const Tensor& score, int t, double eta, RngStream& rng,
                    const VeSchedule& sched) {
  const auto c = ve_ddim_coefficients(t, eta, sched);
  Tensor out = x_hat;
  out.axpy(-c.deterministic, score);
  if (eta > 0.0) out.axpy(c.stochastic, randn(rng, out.shape(), out.dtype()));
  return out;
}

AffineSubspacePrior::AffineSubspacePrior(std::vector<Tensor> basis, Tensor offset)
    : q_(std::move(basis)), c_(std::move(offset)) {
  if (c_.empty()) throw ConfigError("affine prior: offset must be set (use zeros for a subspace)");
  for (auto& q : q_)
    if (q.shape() != c_.shape()) throw ConfigError("affine prior: basis/offset shape mismatch");
  for (std::size_t i = 0; i < q_.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (std::abs(inner(q_[i], q_[j]) - (i == j ? 1.0 : 0.0)) > 1e-10)
        throw ConfigError("affine prior: basis is not orthonormal");
}

AffineSubspacePrior AffineSubspacePrior::from_spanning(std::vector<Tensor> columns, Tensor offset) {
  std::vector<Tensor> q;
  for (auto& v : columns) {
    const double before = norm(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) v.axpy(-inner(qi, v), qi);
    const double after = norm(v);
    if (before == 0.0 || after < 1e-10 * before) throw ConfigError("affine prior: columns are dependent");
    q.push_back((1.0 / after) * v);
  }
  return AffineSubspacePrior(std::move(q), std::move(offset));
}

Tensor AffineSubspacePrior::project(const Tensor& v) const {
  Tensor out = v.zeros_like();
  for (const auto& q : q_) out.axpy(inner(q, v), q);
  return out;
}

double AffineSubspacePrior::distance(const Tensor& v) const {
  Tensor d = v - c_;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : q_) d.axpy(-inner(q, d), q);
  return norm(d);
}

Tensor AffineSubspacePrior::sample(RngStream& rng) const {
  Tensor out = c_;
  const bool complex = !q_.empty() && q_.front().is_complex();
  for (const auto& q : q_) out.axpy(complex ? rng.complex_normal() : cplx(rng.normal()), q);
  return out;
}

Tensor AffineSubspacePrior::denoise(const Tensor& x_t, const NoiseLevel& lvl) const {
  if (lvl.mode == Mode::Vp) {
    check_alpha_bar(lvl.alpha_bar);
    const double s = std::sqrt(lvl.alpha_bar);
    Tensor d = x_t;
    d.axpy(-s, c_);
    Tensor out = (1.0 / s) * project(d);
    out += c_;
    return out;
  }
  Tensor out = project(x_t - c_);
  out += c_;
  return out;
}

GmmPrior::GmmPrior(std::vector<double> weights, std::vector<Tensor> means, double tau2)
    : w_(std::move(weights)), mu_(std::move(means)), tau2_(tau2) {
  if (w_.empty() || w_.size() != mu_.size()) throw ConfigError("gmm: weights and means must be nonempty and match");
  double s = 0.0;
  for (double w : w_) {
    if (!(w > 0.0)) throw ConfigError("gmm: weights must be positive");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw ConfigError("gmm: weights must sum to 1");
  if (!(tau2 > 0.0)) throw ConfigError("gmm: tau2 must be > 0");
  for (const auto& m : mu_)
    if (m.shape() != mu_.front().shape() || m.dtype() != mu_.front().dtype())
      throw ConfigError("gmm: means must share shape and dtype");
}

namespace {

struct GaussianKernel {
  double scale;     // x_t = scale * x0 + noise
  double noise_var; // per-entry noise variance (complex: E|n|^2)
};

GaussianKernel kernel_of(const NoiseLevel& lvl) {
  if (lvl.mode == Mode::Vp) {
    check_alpha_bar(lvl.alpha_bar);
    return {std::sqrt(lvl.alpha_bar), 1.0 - lvl.alpha_bar};
  }
  if (!(lvl.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  return {1.0, lvl.sigma * lvl.sigma};
}

}  // namespace

std::vector<double> GmmPrior::responsibilities(const Tensor& x_t, const NoiseLevel& lvl) const {
  const auto k = kernel_of(lvl);
  const double v = k.scale * k.scale * tau2_ + k.noise_var;
  // Complex circular Gaussians have density ~ exp(-|z|^2 / v); real ones exp(-z^2 / 2v).
  const double denom = is_complex() ? v : 2.0 * v;
  std::vector<double> logits(mu_.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    Tensor d = x_t;
    d.axpy(-k.scale, mu_[i]);
    const double nd = norm(d);
    logits[i] = std::log(w_[i]) - nd * nd / denom;
    if (std::isfinite(logits[i])) mx = std::max(mx, logits[i]);
  }
  if (!std::isfinite(mx)) throw NumericalError("gmm: all component likelihoods underflowed");
  double z = 0.0;
  for (auto& l : logits) {
    l = std::isfinite(l) ? std::exp(l - mx) : 0.0;
    z += l;
  }
  for (auto& l : logits) l /= z;
  return logits;
}

Tensor GmmPrior::denoise(const Tensor& x_t, const NoiseLevel& lvl) const {
  const auto k = kernel_of(lvl);
  const double v = k.scale * k.scale * tau2_ + k.noise_var;
  const auto r = responsibilities(x_t, lvl);
  // Per-component conjugate mean: (tau2 * scale * x + noise_var * mu) / v.
  Tensor out = (tau2_ * k.scale / v) * x_t;
  for (std::size_t i = 0; i < mu_.size(); ++i)
    if (r[i] > 0.0) out.axpy(r[i] * k.noise_var / v, mu_[i]);
  return out;
}

Tensor GmmPrior::sample(RngStream& rng) const {
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = w_[0];
  while (k + 1 < w_.size() && u >= acc) acc += w_[++k];
  Tensor out = mu_[k];
  out.axpy(std::sqrt(tau2_), randn(rng, out.shape(), out.dtype()));
  return out;
}

Tensor SliceDenoiser::denoise(const Tensor& x_t, const NoiseLevel& lvl) const {
  if (x_t.ndim() != 3) throw ConfigError("slice denoiser expects a (nz, ny, nx) volume");
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < x_t.shape()[0]; ++k) out.push_back(inner_->denoise(x_t.slice(k), lvl));
  return Tensor::stack(out);
}

Tensor mcg_dps_gradient(const Tensor& x_t, const NoiseLevel& lvl, const AffineSubspacePrior& prior,
                        const LinearMap& a, const Tensor& y) {
  Tensor x_hat = prior.denoise(x_t, lvl);
  Tensor g = prior.project(a.adjoint(a.apply(x_hat) - y));
  if (lvl.mode == Mode::Vp) g *= 1.0 / std::sqrt(lvl.alpha_bar);
  return g;
}

Tensor mcg_dps_gradient(const Tensor& x_t, const NoiseLevel& lvl, const Denoiser& prior,
                        const LinearMap& a, const Tensor& y) {
  const auto* affine = dynamic_cast<const AffineSubspacePrior*>(&prior);
  if (!affine) throw ConfigError("mcg gradient needs an affine-subspace prior, got " + prior.name());
  return mcg_dps_gradient(x_t, lvl, *affine, a, y);
}

}  // namespace dds
