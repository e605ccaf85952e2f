#include "dds/samplers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "dds/krylov.hpp"
#include "dds/metrics.hpp"

namespace dds {

DcStrategy parse_strategy(const std::string& s) {
  if (s == "dds-cg") return DcStrategy::DdsCg;
  if (s == "dds-proximal-cg") return DcStrategy::DdsProximalCg;
  if (s == "ddnm") return DcStrategy::Ddnm;
  if (s == "projection") return DcStrategy::Projection;
  if (s == "gradient") return DcStrategy::Gradient;
  if (s == "dps") return DcStrategy::Dps;
  throw ConfigError("unknown dc strategy '" + s + "'");
}

std::string to_string(DcStrategy s) {
  switch (s) {
    case DcStrategy::DdsCg: return "dds-cg";
    case DcStrategy::DdsProximalCg: return "dds-proximal-cg";
    case DcStrategy::Ddnm: return "ddnm";
    case DcStrategy::Projection: return "projection";
    case DcStrategy::Gradient: return "gradient";
    case DcStrategy::Dps: return "dps";
  }
  return "?";
}

DcTarget parse_target(const std::string& s) {
  if (s == "noisy") return DcTarget::Noisy;
  if (s == "denoised") return DcTarget::Denoised;
  throw ConfigError("unknown dc target '" + s + "' (expected noisy or denoised)");
}

std::string to_string(DcTarget t) { return t == DcTarget::Noisy ? "noisy" : "denoised"; }

double SamplerConfig::resolved_eta() const {
  if (eta) return *eta;
  if (nfe <= 20) return 0.15;
  if (nfe <= 50) return 0.5;
  return 0.8;
}

void SamplerConfig::validate() const {
  if (nfe < 2) throw ConfigError("nfe must be >= 2");
  if (cg_steps < 1) throw ConfigError("cg steps must be >= 1");
  const double e = resolved_eta();
  if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (!(xi > 0.0)) throw ConfigError("gradient step xi must be > 0");
  if (!(dps_step > 0.0)) throw ConfigError("dps step must be > 0");
  if (!(ve_truncation >= 0.0 && ve_truncation < 1.0)) throw ConfigError("ve truncation must lie in [0, 1)");
  if (!(sigma_min > 0.0 && sigma_max > sigma_min)) throw ConfigError("need 0 < sigma_min < sigma_max");
  if (rejection_tau && !(*rejection_tau >= 0.0)) throw ConfigError("rejection tau must be >= 0");
  if (max_retries < 0) throw ConfigError("max retries must be >= 0");
  if (pinv_max_iters < 1 || !(pinv_tol > 0.0)) throw ConfigError("invalid pseudo-inverse solver settings");
}

std::string trace_to_csv(const std::vector<StepRecord>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "t,residual,gt-error,noise-est,subspace-dist\n";
  for (const auto& r : trace)
    os << r.t << ',' << r.residual << ',' << r.gt_error << ',' << r.noise_est << ',' << r.subspace_dist << '\n';
  return os.str();
}

Tensor apply_pinv(const LinearMap& a, const Tensor& r, int max_iters, double tol, bool strict) {
  if (a.has_pseudo_inverse()) return a.pseudo_inverse(r);
  if (max_iters < 1 || !(tol > 0.0)) throw ConfigError("invalid pseudo-inverse solver settings");
  // CGLS from zero: the iterates of CG on A*A x = A* r, with the data residual
  // s = r - A x tracked directly so consistent systems can stop on ||s||.
  Tensor x = a.adjoint(r).zeros_like();
  Tensor s = r;
  Tensor z = a.adjoint(s);
  const double nr = norm(r), nz0 = norm(z);
  if (nz0 == 0.0) return x;
  Tensor p = z;
  double zz = std::norm(nz0);
  for (int k = 0; k < max_iters; ++k) {
    if (norm(s) <= tol * nr || std::sqrt(zz) <= tol * nz0) return x;
    Tensor w = a.apply(p);
    const double ww = std::norm(norm(w));
    if (ww == 0.0) return x;
    const double alpha = zz / ww;
    x.axpy(alpha, p);
    s.axpy(-alpha, w);
    z = a.adjoint(s);
    const double zz_new = std::norm(norm(z));
    p *= zz_new / zz;
    p += z;
    zz = zz_new;
  }
  if (norm(s) <= tol * nr || std::sqrt(zz) <= tol * nz0 || !strict) return x;
  throw NumericalError("pseudo-inverse CG did not reach tolerance within " + std::to_string(max_iters) +
                       " iterations (relative normal residual " + std::to_string(std::sqrt(zz) / nz0) + ")");
}

Tensor ddnm_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, int pinv_iters, double pinv_tol,
                 bool strict) {
  Tensor out = x_hat;
  out += apply_pinv(a, y - a.apply(x_hat), pinv_iters, pinv_tol, strict);
  return out;
}

Tensor projection_dc_step(const Tensor& x, const LinearMap& a, const Tensor& y, int pinv_iters, double pinv_tol,
                          bool strict) {
  return ddnm_step(x, a, y, pinv_iters, pinv_tol, strict);
}

Tensor gradient_dc_step(const Tensor& x, const LinearMap& a, const Tensor& y, double xi) {
  if (!(xi > 0.0)) throw ConfigError("gradient step xi must be > 0");
  Tensor out = x;
  out.axpy(-xi, a.adjoint(a.apply(x) - y));
  return out;
}

Tensor dps_dc_step(const Tensor& x_t, const NoiseLevel& lvl, const Denoiser& prior, const LinearMap& a,
                   const Tensor& y, double gamma) {
  Tensor out = prior.denoise(x_t, lvl);
  out.axpy(-gamma, mcg_dps_gradient(x_t, lvl, prior, a, y));
  return out;
}

Tensor dds_cg_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, int m) {
  return build_normal(a, y).solve(x_hat, m).x;
}

Tensor dds_proximal_cg_step(const Tensor& x_hat, const LinearMap& a, const Tensor& y, double gamma, int m) {
  return build_proximal_normal(a, y, x_hat, gamma).solve(x_hat, m).x;
}

namespace {

double trace_noise(const Tensor& x) {
  if (x.ndim() == 2 && x.shape()[0] >= 2 && x.shape()[1] >= 2) return estimate_noise(x);
  if (x.ndim() == 3 && x.shape()[1] >= 2 && x.shape()[2] >= 2) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.shape()[0]; ++k) s += estimate_noise(x.slice(k));
    return s / static_cast<double>(x.shape()[0]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double step_scale(const SamplerConfig& cfg, const LinearMap& a, const Tensor& y, const Tensor& x) {
  if (!cfg.residual_step) return 1.0;
  const double r = norm(y - a.apply(x));
  return r > 0.0 ? 1.0 / r : 1.0;
}

}  // namespace

ReconResult run_sampler(const LinearMap& a, const Tensor& y, const Denoiser& denoiser, const SamplerConfig& cfg,
                        const VpSchedule* vp, const VeSchedule* ve, RngStream& rng, const Tensor* ground_truth,
                        const std::function<DcHook(int t)>& hook_for_step) {
  cfg.validate();
  if ((vp == nullptr) == (ve == nullptr)) throw ConfigError("run_sampler: exactly one schedule required");
  if (y.shape() != a.range) throw ConfigError("measurement shape does not match the operator range");
  if (ground_truth && ground_truth->shape() != a.domain) throw ConfigError("ground truth shape mismatch");
  const auto start = std::chrono::steady_clock::now();
  const int n = vp ? vp->steps() : ve->steps();
  const double eta = cfg.resolved_eta();
  const auto* affine = dynamic_cast<const AffineSubspacePrior*>(&denoiser);
  const bool noisy_baseline = cfg.target == DcTarget::Noisy &&
                              (cfg.strategy == DcStrategy::Projection || cfg.strategy == DcStrategy::Gradient);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  ReconResult res;
  try {
    Tensor x = randn(rng, a.domain, a.domain_dtype);
    if (ve) x *= ve->sigma(n);
    for (int t = n; t >= 1; --t) {
      const NoiseLevel lvl = vp ? vp->level(t) : ve->level(t);
      Tensor xh = denoiser.denoise(x, lvl);
      StepRecord rec;
      rec.t = t;
      rec.residual_pre = norm(y - a.apply(xh));
      rec.gt_error = ground_truth ? norm(xh - *ground_truth) : nan;
      rec.noise_est = trace_noise(x);
      const bool last = t == 1 || (ve && static_cast<double>(t) <= static_cast<double>(n) * cfg.ve_truncation);
      if (last) {
        rec.residual = rec.residual_pre;
        rec.subspace_dist = affine ? affine->distance(xh) : nan;
        res.trace.push_back(rec);
        res.x0 = std::move(xh);
        break;
      }
      Tensor xh2 = hook_for_step(t)(xh, x, t, lvl);
      rec.residual = norm(y - a.apply(xh2));
      rec.subspace_dist = affine ? affine->distance(xh2) : nan;
      res.trace.push_back(rec);
      if (vp) {
        Tensor eps = vp_eps_from_denoised(x, xh, lvl.alpha_bar);
        x = vp_ddim_step(xh2, eps, t, eta, rng, *vp);
      } else {
        Tensor score = ve_score_from_denoised(x, xh, lvl.sigma);
        x = ve_ddim_step(xh2, score, t, eta, rng, *ve);
      }
      if (noisy_baseline) {
        const double scale = vp ? std::sqrt(vp->alpha_bar(t - 1)) : 1.0;
        Tensor ys = scale * y;
        x = cfg.strategy == DcStrategy::Projection ? projection_dc_step(x, a, ys, cfg.pinv_max_iters, cfg.pinv_tol, cfg.pinv_strict)
                                                   : gradient_dc_step(x, a, ys, cfg.xi * step_scale(cfg, a, ys, x));
      }
    }
    res.residual = norm(y - a.apply(res.x0));
  } catch (const SamplerDiverged&) {
    throw;
  } catch (const NumericalError& e) {
    throw SamplerDiverged(std::string("sampler diverged: ") + e.what(), res.trace);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

namespace {

std::function<DcHook(int)> strategy_hooks(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                                          const SamplerConfig& cfg) {
  DcHook hook;
  switch (cfg.strategy) {
    case DcStrategy::DdsCg: {
      auto sys = std::make_shared<NormalSystem>(build_normal(a, y));
      const int m = cfg.cg_steps;
      hook = [sys, m](const Tensor& xh, const Tensor&, int, const NoiseLevel&) { return sys->solve(xh, m).x; };
      break;
    }
    case DcStrategy::DdsProximalCg:
      hook = [&a, &y, cfg](const Tensor& xh, const Tensor&, int, const NoiseLevel&) {
        return dds_proximal_cg_step(xh, a, y, cfg.gamma, cfg.cg_steps);
      };
      break;
    case DcStrategy::Ddnm:
      hook = [&a, &y, cfg](const Tensor& xh, const Tensor&, int, const NoiseLevel&) {
        return ddnm_step(xh, a, y, cfg.pinv_max_iters, cfg.pinv_tol, cfg.pinv_strict);
      };
      break;
    case DcStrategy::Projection:
    case DcStrategy::Gradient:
      if (cfg.target == DcTarget::Noisy) {
        hook = [](const Tensor& xh, const Tensor&, int, const NoiseLevel&) { return xh; };
      } else if (cfg.strategy == DcStrategy::Projection) {
        hook = [&a, &y, cfg](const Tensor& xh, const Tensor&, int, const NoiseLevel&) {
          return projection_dc_step(xh, a, y, cfg.pinv_max_iters, cfg.pinv_tol, cfg.pinv_strict);
        };
      } else {
        hook = [&a, &y, cfg](const Tensor& xh, const Tensor&, int, const NoiseLevel&) {
          return gradient_dc_step(xh, a, y, cfg.xi * step_scale(cfg, a, y, xh));
        };
      }
      break;
    case DcStrategy::Dps:
      if (!dynamic_cast<const AffineSubspacePrior*>(&denoiser))
        throw ConfigError("dps strategy needs an affine-subspace prior");
      hook = [&a, &y, &denoiser, cfg](const Tensor& xh, const Tensor& xt, int, const NoiseLevel& lvl) {
        return dps_dc_step(xt, lvl, denoiser, a, y, cfg.dps_step * step_scale(cfg, a, y, xh));
      };
      break;
  }
  return [hook](int) { return hook; };
}

}  // namespace

ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, const VpSchedule& sched, RngStream& rng,
                            const Tensor* ground_truth) {
  return run_sampler(a, y, denoiser, cfg, &sched, nullptr, rng, ground_truth, strategy_hooks(a, y, denoiser, cfg));
}

ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, const VeSchedule& sched, RngStream& rng,
                            const Tensor* ground_truth) {
  return run_sampler(a, y, denoiser, cfg, nullptr, &sched, rng, ground_truth, strategy_hooks(a, y, denoiser, cfg));
}

ReconResult dds_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                            const SamplerConfig& cfg, RngStream& rng, const Tensor* ground_truth) {
  cfg.validate();
  if (cfg.mode == Mode::Vp) return dds_reconstruct(a, y, denoiser, cfg, VpSchedule::linear(cfg.nfe), rng, ground_truth);
  return dds_reconstruct(a, y, denoiser, cfg, VeSchedule::geometric(cfg.nfe, cfg.sigma_min, cfg.sigma_max), rng,
                         ground_truth);
}

ReconResult rejection_wrap(const std::function<ReconResult(std::uint64_t)>& run, const LinearMap& a,
                           const Tensor& y, double tau, int max_retries, std::uint64_t seed) {
  if (!(tau >= 0.0)) throw ConfigError("rejection tau must be >= 0");
  if (max_retries < 0) throw ConfigError("max retries must be >= 0");
  std::optional<ReconResult> best;
  for (int k = 0; k <= max_retries; ++k) {
    ReconResult r = run(k == 0 ? seed : RngStream::derive_seed(seed, static_cast<std::uint64_t>(k)));
    r.residual = norm(y - a.apply(r.x0));
    r.attempts = k + 1;
    if (r.residual <= tau) {
      r.accepted = true;
      return r;
    }
    if (!best || r.residual < best->residual) best = std::move(r);
  }
  best->accepted = false;
  best->attempts = max_retries + 1;
  return *best;
}

ReconResult reconstruct_with_rejection(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                                       const SamplerConfig& cfg, const Tensor* ground_truth) {
  if (!cfg.rejection_tau) {
    RngStream rng(cfg.seed);
    return dds_reconstruct(a, y, denoiser, cfg, rng, ground_truth);
  }
  auto run = [&](std::uint64_t seed) {
    RngStream rng(seed);
    return dds_reconstruct(a, y, denoiser, cfg, rng, ground_truth);
  };
  return rejection_wrap(run, a, y, *cfg.rejection_tau, cfg.max_retries, cfg.seed);
}

}  // namespace dds
