#pragma once

#include <cstdint>
#include <string>

#include "dds/admm_tv.hpp"
#include "dds/operators.hpp"
#include "dds/samplers.hpp"

namespace dds {

enum class ProblemKind { Mri2d, Mri2dNoisy, Ct3d };
enum class PhantomKind { SheppLogan2d, SheppLogan3d, SubspaceRandom, GmmDraw };
enum class PriorKind { SmoothBump, EllipseIndicator, EllipseGmm };

ProblemKind parse_problem_kind(const std::string& s);
std::string to_string(ProblemKind k);
PhantomKind parse_phantom_kind(const std::string& s);
std::string to_string(PhantomKind k);
PriorKind parse_prior_kind(const std::string& s);
std::string to_string(PriorKind k);

/// Everything needed to rebuild a problem and its runs. Stored as INI text:
///
///   [problem]  kind, size, slices, noise, seed
///   [phantom]  kind
///   [prior]    kind, dim, components, tau
///   [operator] mask, acceleration, acs, coils, angles, bins
///   [sampler]  nfe, eta, cg-steps, gamma, mode, strategy, target, xi,
///              dps-step, residual-step, ve-truncation, sigma-min, sigma-max,
///              rejection-tau, max-retries, pinv-iters, pinv-tol, pinv-strict
///   [tv]       lambda, rho, cg-steps
///   [experiment] repeats, trials, sigma-gt
///   [output]   dir
///
/// Keys are validated; unknown sections or keys are a ConfigError. The
/// problem seed feeds phantom, mask, coil, prior and noise draws through
/// independent derived streams; sampler seeds come from the command line.
struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Mri2d;
  std::size_t size = 32;
  std::size_t slices = 4;
  double noise_sigma = 0.0;
  std::uint64_t problem_seed = 1;

  PhantomKind phantom = PhantomKind::SubspaceRandom;

  PriorKind prior = PriorKind::SmoothBump;
  std::size_t prior_dim = 8;
  std::size_t prior_components = 4;
  double prior_tau = 0.02;

  MaskKind mask = MaskKind::Gaussian1d;
  double acceleration = 4.0;
  double acs_fraction = 0.08;
  std::size_t coils = 4;
  std::size_t angles = 8;
  /// 0 picks ceil(size * sqrt 2) + 1.
  std::size_t bins = 0;

  SamplerConfig sampler;
  TvConfig tv;

  int repeats = 1;
  int trials = 50;
  double sigma_gt = 0.07;

  std::string output_dir = ".";

  static ExperimentConfig from_ini(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  /// Applies one "section.key=value" assignment.
  void set(const std::string& dotted_key, const std::string& value);
  /// Canonical INI dump; from_ini(to_ini()) reproduces the config.
  std::string to_ini() const;
  void validate() const;

  std::size_t detector_bins() const;
};

}  // namespace dds
