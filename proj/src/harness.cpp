#include "dds/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dds/error.hpp"
#include "dds/fft.hpp"
#include "dds/krylov.hpp"
#include "dds/metrics.hpp"
#include "dds/operators.hpp"
#include "dds/phantoms.hpp"
#include "dds/rng.hpp"

namespace dds {

std::uint64_t problem_stream_seed(std::uint64_t seed, ProblemStream s) {
  return RngStream::derive_seed(seed, static_cast<std::uint64_t>(s));
}

namespace {

Tensor sample_prior(const Denoiser& prior, PhantomKind kind, RngStream& rng) {
  if (kind == PhantomKind::SubspaceRandom) {
    auto* p = dynamic_cast<const AffineSubspacePrior*>(&prior);
    if (!p) throw ConfigError("subspace-random phantom needs an affine subspace prior");
    return p->sample(rng);
  }
  auto* g = dynamic_cast<const GmmPrior*>(&prior);
  if (!g) throw ConfigError("gmm-draw phantom needs a gmm prior");
  return g->sample(rng);
}

const Shape& prior_shape(const Denoiser& prior) {
  if (auto* p = dynamic_cast<const AffineSubspacePrior*>(&prior)) return p->shape();
  if (auto* g = dynamic_cast<const GmmPrior*>(&prior)) return g->means().front().shape();
  throw ConfigError("prior '" + prior.name() + "' cannot be sampled");
}

std::shared_ptr<const Denoiser> make_prior(const ExperimentConfig& cfg, DType dtype) {
  const Shape shape{cfg.size, cfg.size};
  const auto seed = problem_stream_seed(cfg.problem_seed, ProblemStream::Prior);
  switch (cfg.prior) {
    case PriorKind::SmoothBump:
      return std::make_shared<AffineSubspacePrior>(smooth_bump_prior(shape, cfg.prior_dim, seed, dtype));
    case PriorKind::EllipseIndicator:
      return std::make_shared<AffineSubspacePrior>(ellipse_indicator_prior(cfg.size, dtype));
    case PriorKind::EllipseGmm:
      return std::make_shared<GmmPrior>(
          ellipse_gmm_prior(shape, cfg.prior_components, cfg.prior_tau * cfg.prior_tau, seed, dtype));
  }
  throw ConfigError("unknown prior kind");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int integral(double v, const char* what) {
  if (v != std::round(v) || v < 1.0) throw ConfigError(std::string(what) + " values must be positive integers");
  return static_cast<int>(v);
}

}  // namespace

Tensor make_phantom(PhantomKind kind, const Shape& shape, std::uint64_t seed, const Denoiser* prior) {
  switch (kind) {
    case PhantomKind::SheppLogan2d:
      if (shape.size() != 2 || shape[0] != shape[1]) throw ConfigError("shepp-logan-2d needs a square 2-D shape");
      return shepp_logan_2d(shape[0]);
    case PhantomKind::SheppLogan3d:
      if (shape.size() != 3 || shape[1] != shape[2])
        throw ConfigError("shepp-logan-3d needs a (nz, n, n) shape");
      return shepp_logan_3d(shape[0], shape[1]);
    case PhantomKind::SubspaceRandom:
    case PhantomKind::GmmDraw: {
      if (!prior) throw ConfigError("phantom kind needs a prior");
      RngStream rng(seed);
      const Shape& ps = prior_shape(*prior);
      if (shape == ps) return sample_prior(*prior, kind, rng);
      if (shape.size() == 3 && Shape(shape.begin() + 1, shape.end()) == ps) {
        std::vector<Tensor> slices;
        for (std::size_t k = 0; k < shape[0]; ++k) slices.push_back(sample_prior(*prior, kind, rng));
        return Tensor::stack(slices);
      }
      throw ConfigError("phantom shape " + shape_to_string(shape) + " does not fit prior shape " +
                        shape_to_string(ps));
    }
  }
  throw ConfigError("unknown phantom kind");
}

Problem build_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  Problem p;
  const auto phantom_seed = problem_stream_seed(cfg.problem_seed, ProblemStream::Phantom);
  RngStream noise_rng(problem_stream_seed(cfg.problem_seed, ProblemStream::Noise));

  if (cfg.problem == ProblemKind::Ct3d) {
    p.prior = make_prior(cfg, DType::Real64);
    p.denoiser = std::make_shared<SliceDenoiser>(p.prior);
    const Shape vol{cfg.slices, cfg.size, cfg.size};
    p.truth = make_phantom(cfg.phantom, vol, phantom_seed, p.prior.get());
    RadonTransform radon(RadonGeometry::uniform(cfg.size, cfg.angles, cfg.detector_bins()));
    p.a = slicewise(radon.as_map(), cfg.slices);
    p.y = p.a.apply(p.truth);
    if (cfg.noise_sigma > 0.0) p.y.axpy(cfg.noise_sigma, randn(noise_rng, p.y.shape(), DType::Real64));
    return p;
  }

  const Shape img{cfg.size, cfg.size};
  p.prior = make_prior(cfg, DType::Complex128);
  p.denoiser = p.prior;
  p.truth = make_phantom(cfg.phantom, img, phantom_seed, p.prior.get()).as_complex();
  p.mask = make_mask({cfg.mask, cfg.acceleration, cfg.acs_fraction,
                      problem_stream_seed(cfg.problem_seed, ProblemStream::Mask)},
                     img);
  p.coil_maps = make_coil_maps(cfg.coils, img, problem_stream_seed(cfg.problem_seed, ProblemStream::Coils));
  p.a = sense_operator(p.coil_maps, p.mask);
  p.y = p.a.apply(p.truth);
  if (cfg.noise_sigma > 0.0) {
    Tensor n = randn(noise_rng, p.y.shape(), DType::Complex128);
    // Zero the noise off the sampling pattern (k-space is stored unshifted).
    const Tensor um = ifftshift2(p.mask);
    auto nv = n.mutable_values();
    for (std::size_t i = 0; i < nv.size(); ++i) nv[i] *= um[i % um.size()].real();
    p.y.axpy(cfg.noise_sigma, n);
  }
  return p;
}

Reconstruction reconstruct(const Problem& p, const ExperimentConfig& cfg, std::uint64_t seed) {
  SamplerConfig sc = cfg.sampler;
  sc.seed = seed;
  Reconstruction out;
  if (cfg.problem == ProblemKind::Ct3d) {
    RngStream rng(seed);
    auto r = dds_3d_reconstruct(p.a, p.y, *p.denoiser, sc, cfg.tv, rng, &p.truth);
    out.recon = std::move(r.recon);
    out.objective = std::move(r.objective);
    return out;
  }
  out.recon = reconstruct_with_rejection(p.a, p.y, *p.denoiser, sc, &p.truth);
  return out;
}

MetricsRow metrics_row(const Tensor& x, const Tensor& truth, const LinearMap* a, const Tensor* y) {
  if (x.shape() != truth.shape())
    throw ConfigError("metrics: shape mismatch " + shape_to_string(x.shape()) + " vs " +
                      shape_to_string(truth.shape()));
  MetricsRow r;
  const Tensor xm = x.abs(), tm = truth.abs();
  r.psnr = psnr(xm, tm);
  if (xm.ndim() == 2) {
    r.ssim = ssim(xm, tm);
  } else if (xm.ndim() == 3) {
    double s = 0.0;
    for (std::size_t k = 0; k < xm.shape()[0]; ++k) s += ssim(xm.slice(k), tm.slice(k));
    r.ssim = s / static_cast<double>(xm.shape()[0]);
  } else {
    throw ConfigError("metrics need 2-D images or 3-D volumes");
  }
  r.residual = (a && y) ? norm(*y - a->apply(x)) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::string metrics_csv_header(bool timing) {
  return std::string("run_id,strategy,nfe,M,eta,lambda,psnr,ssim,residual") + (timing ? ",seconds\n" : "\n");
}

std::string metrics_csv_line(const MetricsRow& r, bool timing) {
  std::string s = r.run_id + ',' + r.strategy + ',' + std::to_string(r.nfe) + ',' + std::to_string(r.m) + ',' +
                  fmt(r.eta) + ',' + fmt(r.lambda) + ',' + fmt(r.psnr) + ',' + fmt(r.ssim) + ',' + fmt(r.residual);
  if (timing) s += ',' + fmt(r.seconds);
  return s + '\n';
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows, bool timing) {
  std::string s = metrics_csv_header(timing);
  for (const auto& r : rows) s += metrics_csv_line(r, timing);
  return s;
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "eta") return SweepAxis::Eta;
  if (s == "nfe") return SweepAxis::Nfe;
  if (s == "cg-steps") return SweepAxis::CgSteps;
  if (s == "lambda") return SweepAxis::Lambda;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Eta: return "eta";
    case SweepAxis::Nfe: return "nfe";
    case SweepAxis::CgSteps: return "cg-steps";
    case SweepAxis::Lambda: return "lambda";
  }
  return "?";
}

std::vector<MetricsRow> run_sweep(const Problem& p, const ExperimentConfig& cfg, const SweepSpec& spec,
                                  std::uint64_t seed) {
  if (spec.values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (spec.threads < 1) throw ConfigError("sweep threads must be >= 1");
  if (spec.axis == SweepAxis::Lambda && cfg.problem != ProblemKind::Ct3d)
    throw ConfigError("the lambda axis applies to ct3d only");
  const bool ct = cfg.problem == ProblemKind::Ct3d;
  std::vector<DcStrategy> strategies = spec.strategies;
  if (strategies.empty()) strategies.push_back(cfg.sampler.strategy);

  // One config per (strategy, value) point, validated before any run starts.
  std::vector<ExperimentConfig> points;
  for (auto s : strategies) {
    for (double v : spec.values) {
      ExperimentConfig c = cfg;
      c.sampler.strategy = s;
      switch (spec.axis) {
        case SweepAxis::Eta: c.sampler.eta = v; break;
        case SweepAxis::Nfe: c.sampler.nfe = integral(v, "nfe"); break;
        case SweepAxis::CgSteps:
          c.sampler.cg_steps = integral(v, "cg-steps");
          c.tv.cg_steps = c.sampler.cg_steps;
          break;
        case SweepAxis::Lambda: c.tv.lambda = v; break;
      }
      c.validate();
      points.push_back(std::move(c));
    }
  }

  const std::size_t reps = static_cast<std::size_t>(cfg.repeats);
  const std::size_t total = points.size() * reps;
  std::vector<MetricsRow> rows(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      try {
        const auto& c = points[i / reps];
        const std::size_t r = i % reps;
        const std::uint64_t run_seed = r == 0 ? seed : RngStream::derive_seed(seed, r);
        auto rec = reconstruct(p, c, run_seed);
        MetricsRow row = metrics_row(rec.recon.x0, p.truth, &p.a, &p.y);
        row.run_id = std::to_string(i);
        row.strategy = ct ? "admm-tv" : to_string(c.sampler.strategy);
        row.nfe = c.sampler.nfe;
        row.m = c.sampler.cg_steps;
        row.eta = c.sampler.resolved_eta();
        row.lambda = ct ? c.tv.lambda : 0.0;
        row.seconds = rec.recon.seconds;
        rows[i] = std::move(row);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const int n_threads = std::min<int>(spec.threads, static_cast<int>(total));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    MetricsRow mean = rows[pt * reps], sd = mean;
    mean.run_id = "mean";
    sd.run_id = "std";
    double* mfields[] = {&mean.psnr, &mean.ssim, &mean.residual, &mean.seconds};
    double* sfields[] = {&sd.psnr, &sd.ssim, &sd.residual, &sd.seconds};
    for (int f = 0; f < 4; ++f) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const MetricsRow& row = rows[pt * reps + r];
        const double v = f == 0 ? row.psnr : f == 1 ? row.ssim : f == 2 ? row.residual : row.seconds;
        s += v;
      }
      const double m = s / static_cast<double>(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        const MetricsRow& row = rows[pt * reps + r];
        const double v = f == 0 ? row.psnr : f == 1 ? row.ssim : f == 2 ? row.residual : row.seconds;
        s2 += (v - m) * (v - m);
      }
      *mfields[f] = m;
      *sfields[f] = std::sqrt(s2 / static_cast<double>(reps));
    }
    rows.push_back(mean);
    rows.push_back(sd);
  }
  return rows;
}

NoiseOffsetResult run_noise_offset_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.problem == ProblemKind::Ct3d) throw ConfigError("noise-offset runs on MRI problems");
  const std::size_t n = cfg.size;
  const Shape img{n, n};
  const auto prior = ellipse_indicator_prior(n, DType::Complex128);
  const auto& sc = cfg.sampler;
  const char* names[] = {"projection", "gradient", "dps", "ddnm", "dds-cg"};

  NoiseOffsetResult res;
  res.trials = cfg.trials;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const auto ts = RngStream::derive_seed(seed, static_cast<std::uint64_t>(trial));
    RngStream head_rng(problem_stream_seed(ts, ProblemStream::Phantom));
    RngStream noise_rng(problem_stream_seed(ts, ProblemStream::Noise));
    const Tensor mask = make_mask({cfg.mask, cfg.acceleration, cfg.acs_fraction,
                                   problem_stream_seed(ts, ProblemStream::Mask)},
                                  img);
    const Tensor maps = make_coil_maps(cfg.coils, img, problem_stream_seed(ts, ProblemStream::Coils));
    const LinearMap a = sense_operator(maps, mask);

    const Tensor xs = random_intensity_head(n, head_rng, DType::Complex128);
    Tensor x = xs;
    x.axpy(cfg.sigma_gt, randn(noise_rng, img, DType::Real64));
    Tensor y = a.apply(xs);
    if (cfg.noise_sigma > 0.0) {
      Tensor e = randn(noise_rng, y.shape(), DType::Complex128);
      const Tensor um = ifftshift2(mask);
      auto ev = e.mutable_values();
      for (std::size_t i = 0; i < ev.size(); ++i) ev[i] *= um[i % um.size()].real();
      y.axpy(cfg.noise_sigma, e);
    }

    const NoiseLevel lvl = NoiseLevel::ve(cfg.sigma_gt);
    const Tensor x_hat = prior.denoise(x, lvl);
    const Tensor resid_part = x - x_hat;
    Tensor outs[5] = {
        projection_dc_step(x, a, y, sc.pinv_max_iters, sc.pinv_tol, sc.pinv_strict),
        gradient_dc_step(x, a, y, sc.xi),
        x - sc.dps_step * mcg_dps_gradient(x, lvl, prior, a, y),
        ddnm_step(x_hat, a, y, sc.pinv_max_iters, sc.pinv_tol, sc.pinv_strict) + resid_part,
        dds_cg_step(x_hat, a, y, sc.cg_steps) + resid_part,
    };

    const double before = estimate_noise(x);
    double offs[5];
    for (int k = 0; k < 5; ++k) {
      const double after = estimate_noise(outs[k]);
      offs[k] = std::abs(after - before);
      res.rows.push_back({trial, names[k], before, after, offs[k]});
    }
    if (offs[4] < *std::min_element(offs, offs + 4)) ++res.dds_wins;
  }
  return res;
}

std::string noise_offset_to_csv(const NoiseOffsetResult& r) {
  std::ostringstream os;
  os << "trial,strategy,sigma_before,sigma_after,offset\n";
  std::vector<std::string> order;
  std::vector<double> sums;
  for (const auto& row : r.rows) {
    os << row.trial << ',' << row.strategy << ',' << fmt(row.sigma_before) << ',' << fmt(row.sigma_after) << ','
       << fmt(row.offset) << '\n';
    auto it = std::find(order.begin(), order.end(), row.strategy);
    if (it == order.end()) {
      order.push_back(row.strategy);
      sums.push_back(row.offset);
    } else {
      sums[static_cast<std::size_t>(it - order.begin())] += row.offset;
    }
  }
  os << "mean,none,,,0\n";
  const double t = r.trials > 0 ? static_cast<double>(r.trials) : 1.0;
  for (std::size_t k = 0; k < order.size(); ++k) os << "mean," << order[k] << ",,," << fmt(sums[k] / t) << '\n';
  os << "wins,dds-cg,,," << r.dds_wins << '\n';
  return os.str();
}

std::string pgm_bytes(const Tensor& image) {
  if (image.ndim() != 2) throw ConfigError("PGM output needs a 2-D image");
  if (image.is_complex()) throw ConfigError("PGM output needs a real image; take abs() or real() first");
  const std::size_t h = image.shape()[0], w = image.shape()[1];
  double lo = image[0].real(), hi = lo;
  for (auto v : image.values()) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
  }
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + h * w);
  for (auto v : image.values()) {
    long q = 128;
    if (hi > lo) q = std::lround(255.0 * (v.real() - lo) / (hi - lo));
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(q, 0L, 255L))));
  }
  return out;
}

void emit_pgm(const Tensor& image, const std::string& path) { write_text_file(path, pgm_bytes(image)); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace dds
