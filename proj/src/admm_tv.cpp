#include "dds/admm_tv.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "dds/error.hpp"
#include "dds/krylov.hpp"
#include "dds/operators.hpp"

namespace dds {

Tensor soft_threshold(const Tensor& v, double kappa) {
  if (!(kappa >= 0.0)) throw ConfigError("soft threshold needs kappa >= 0");
  Tensor out = v;
  for (auto& e : out.mutable_values()) {
    const double m = std::abs(e);
    e = m <= kappa ? cplx(0.0) : e * ((m - kappa) / m);
  }
  return out;
}

AdmmState AdmmState::zeros(const Shape& volume_shape, DType dtype) {
  return {Tensor::zeros(volume_shape, dtype), Tensor::zeros(volume_shape, dtype)};
}

double TvConfig::lambda_at(int t) const {
  if (lambda_schedule.empty()) return lambda;
  if (t < 1 || static_cast<std::size_t>(t) > lambda_schedule.size())
    throw ConfigError("lambda schedule has no entry for step " + std::to_string(t));
  return lambda_schedule[static_cast<std::size_t>(t - 1)];
}

void TvConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("tv lambda must be >= 0");
  if (!(rho > 0.0)) throw ConfigError("admm rho must be > 0");
  if (cg_steps < 0) throw ConfigError("admm cg steps must be >= 0");
  for (double l : lambda_schedule)
    if (!(l >= 0.0)) throw ConfigError("tv lambda schedule entries must be >= 0");
}

namespace {

// (A*A + rho D*D, A*y + rho D*(z - w))
NormalSystem admm_x_system(const LinearMap& a, const Tensor& y, const AdmmState& s, double rho) {
  LinearMap d = diff_z_map(a.domain, a.domain_dtype);
  NormalSystem sys;
  sys.op = linear_combination(1.0, normal_map(a), rho, normal_map(d));
  sys.rhs = a.adjoint(y);
  sys.rhs.axpy(rho, d.adjoint(s.z - s.w));
  return sys;
}

void check_state(const Tensor& x, const AdmmState& s) {
  if (s.z.shape() != x.shape() || s.w.shape() != x.shape())
    throw ConfigError("admm state shape " + shape_to_string(s.z.shape()) + " does not match volume " +
                      shape_to_string(x.shape()));
}

void admm_zw_update(const Tensor& x, AdmmState& s, double lambda, double rho) {
  Tensor dx = diff_z_apply(x);
  s.z = soft_threshold(dx + s.w, lambda / rho);
  s.w += dx;
  s.w -= s.z;
}

}  // namespace

Tensor admm_tv_dc(const Tensor& x_hat, const LinearMap& a, const Tensor& y, AdmmState& state, const TvConfig& cfg,
                  int t) {
  cfg.validate();
  if (x_hat.ndim() != 3) throw ConfigError("admm-tv expects a (nz, ny, nx) volume");
  check_state(x_hat, state);
  Tensor x = admm_x_system(a, y, state, cfg.rho).solve(x_hat, cfg.cg_steps).x;
  admm_zw_update(x, state, cfg.lambda_at(t), cfg.rho);
  return x;
}

double tv_objective(const Tensor& x, const LinearMap& a, const Tensor& y, double lambda) {
  const double r = norm(y - a.apply(x));
  double tv = 0.0;
  for (auto v : diff_z_apply(x).values()) tv += std::abs(v);
  return 0.5 * r * r + lambda * tv;
}

Tensor reference_admm(const Tensor& x0, const LinearMap& a, const Tensor& y, double lambda, double rho,
                      int iterations, int cg_cap) {
  if (!(rho > 0.0) || !(lambda >= 0.0)) throw ConfigError("reference admm: need rho > 0 and lambda >= 0");
  AdmmState s = AdmmState::zeros(x0.shape(), a.domain_dtype);
  Tensor x = x0;
  for (int j = 0; j < iterations; ++j) {
    NormalSystem sys = admm_x_system(a, y, s, rho);
    x = sys.solve(x, cg_cap, 1e-12 * norm(sys.rhs)).x;
    admm_zw_update(x, s, lambda, rho);
  }
  return x;
}

std::string objective_to_csv(const std::vector<std::pair<int, double>>& objective) {
  std::ostringstream os;
  os.precision(17);
  os << "t,objective\n";
  for (const auto& [t, v] : objective) os << t << ',' << v << '\n';
  return os.str();
}

Recon3dResult dds_3d_reconstruct(const LinearMap& a, const Tensor& y, const Denoiser& denoiser,
                                 const SamplerConfig& cfg, const TvConfig& tv, RngStream& rng,
                                 const Tensor* ground_truth) {
  cfg.validate();
  tv.validate();
  if (a.domain.size() != 3) throw ConfigError("3-D reconstruction needs a volume-domain operator");
  auto state = std::make_shared<AdmmState>(AdmmState::zeros(a.domain, a.domain_dtype));
  auto objective = std::make_shared<std::vector<std::pair<int, double>>>();
  const int n = cfg.nfe;
  const bool ve = cfg.mode == Mode::Ve;

  DcHook plain = [&a, &y, m = cfg.cg_steps](const Tensor& xh, const Tensor&, int, const NoiseLevel&) {
    return dds_cg_step(xh, a, y, m);
  };
  DcHook admm = [&a, &y, tv, state, objective](const Tensor& xh, const Tensor&, int t, const NoiseLevel&) {
    Tensor x = admm_tv_dc(xh, a, y, *state, tv, t);
    objective->emplace_back(t, tv_objective(x, a, y, tv.lambda_at(t)));
    return x;
  };
  auto hooks = [&](int t) { return ve && t >= n / 2 ? plain : admm; };

  Recon3dResult out;
  if (ve) {
    VeSchedule sched = VeSchedule::geometric(n, cfg.sigma_min, cfg.sigma_max);
    out.recon = run_sampler(a, y, denoiser, cfg, nullptr, &sched, rng, ground_truth, hooks);
  } else {
    VpSchedule sched = VpSchedule::linear(n);
    out.recon = run_sampler(a, y, denoiser, cfg, &sched, nullptr, rng, ground_truth, hooks);
  }
  out.objective = std::move(*objective);
  return out;
}

}  // namespace dds
