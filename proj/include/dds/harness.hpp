#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dds/admm_tv.hpp"
#include "dds/config.hpp"
#include "dds/diffusion.hpp"
#include "dds/linear_map.hpp"
#include "dds/samplers.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Sub-stream indices under the problem seed.
enum class ProblemStream : std::uint64_t { Phantom = 1, Mask = 2, Coils = 3, Prior = 4, Noise = 5 };
std::uint64_t problem_stream_seed(std::uint64_t seed, ProblemStream s);

/// Synthetic ground truth. subspace-random and gmm-draw sample `prior`
/// (required for those kinds); shepp-logan kinds ignore it. For a 3-D shape
/// with a 2-D prior each slice is drawn independently.
Tensor make_phantom(PhantomKind kind, const Shape& shape, std::uint64_t seed, const Denoiser* prior = nullptr);

struct Problem {
  LinearMap a;
  Tensor truth;
  Tensor y;
  /// Denoiser handed to the sampler (slice-wise for volumes).
  std::shared_ptr<const Denoiser> denoiser;
  /// 2-D prior the denoiser is built from.
  std::shared_ptr<const Denoiser> prior;
  /// MRI only.
  Tensor mask;
  Tensor coil_maps;
};

/// MRI: complex (size, size) images, SENSE operator, complex Gaussian noise
/// of standard deviation `noise` on the sampled k-space entries only.
/// CT: real (slices, size, size) volume, slice-wise parallel-beam projector,
/// real Gaussian noise on every sinogram entry.
Problem build_problem(const ExperimentConfig& cfg);

struct Reconstruction {
  ReconResult recon;
  /// ct3d only.
  std::vector<std::pair<int, double>> objective;
};

/// One reconstruction with sampler seed `seed`: ADMM-TV for ct3d, rejection
/// sampling when rejection-tau is set, plain DDS otherwise.
Reconstruction reconstruct(const Problem& p, const ExperimentConfig& cfg, std::uint64_t seed);

struct MetricsRow {
  std::string run_id;
  std::string strategy;
  int nfe = 0;
  int m = 0;
  double eta = 0.0;
  double lambda = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double residual = 0.0;
  double seconds = 0.0;
};

/// PSNR (peak = max |truth|) and SSIM on magnitudes; volumes average SSIM
/// over slices. residual = ||y - A x||, or NaN when `a` is null.
MetricsRow metrics_row(const Tensor& x, const Tensor& truth, const LinearMap* a = nullptr, const Tensor* y = nullptr);

/// Fixed-format CSV. Wall-clock is only written when `timing` is set, since
/// it would break byte reproducibility.
std::string metrics_csv_header(bool timing = false);
std::string metrics_csv_line(const MetricsRow& r, bool timing = false);
std::string metrics_to_csv(const std::vector<MetricsRow>& rows, bool timing = false);

enum class SweepAxis { Eta, Nfe, CgSteps, Lambda };
SweepAxis parse_sweep_axis(const std::string& s);
std::string to_string(SweepAxis a);

struct SweepSpec {
  SweepAxis axis = SweepAxis::Eta;
  std::vector<double> values;
  /// Empty: the strategy in the config.
  std::vector<DcStrategy> strategies;
  int threads = 1;
};

/// Cartesian sweep strategies x values x repeats on one problem. Repeat r
/// uses sampler seed `seed` for r = 0 and derive_seed(seed, r) otherwise, so
/// every point sees the same seeds. Rows come back in run-id order whatever
/// the thread count, followed by a "mean" and a "std" row per point
/// (population std; the run_id column carries the label).
std::vector<MetricsRow> run_sweep(const Problem& p, const ExperimentConfig& cfg, const SweepSpec& spec,
                                  std::uint64_t seed);

struct NoiseOffsetRow {
  int trial = 0;
  std::string strategy;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
  double offset = 0.0;
};

struct NoiseOffsetResult {
  std::vector<NoiseOffsetRow> rows;
  /// Trials where dds-cg has the strictly smallest offset.
  int dds_wins = 0;
  int trials = 0;
};

/// Noise offset of one data-consistency step. Each trial draws a head with
/// random ellipse intensities, coil maps and a mask (problem seed derived
/// from `seed` and the trial), sets x = x* + sigma_gt n with real n, and
/// y = A x* plus measurement noise. Strategies applied to x, with
/// x_hat = projection of x onto the ellipse-indicator subspace:
///   projection  x + A^+(y - A x)
///   gradient    x - xi A*(A x - y)
///   dps         x - dps_step * mcg gradient at sigma = sigma_gt
///   ddnm        x_hat + A^+(y - A x_hat) + (x - x_hat)
///   dds-cg      cg(A*A, A*y, x_hat, M) + (x - x_hat)
/// The offset is |sigma_est(out) - sigma_est(x)|.
NoiseOffsetResult run_noise_offset_experiment(const ExperimentConfig& cfg, std::uint64_t seed);
/// Per-trial rows, then a "none" row (offset 0) and per-strategy means.
std::string noise_offset_to_csv(const NoiseOffsetResult& r);

/// 8-bit binary PGM (P5), min-max normalized, round to nearest; a constant
/// image maps to 128. Input must be a real 2-D tensor.
std::string pgm_bytes(const Tensor& image);
void emit_pgm(const Tensor& image, const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace dds
