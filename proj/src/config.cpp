#include "dds/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dds/error.hpp"
#include "dds/fft.hpp"

namespace dds {

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "mri2d") return ProblemKind::Mri2d;
  if (s == "mri2d-noisy") return ProblemKind::Mri2dNoisy;
  if (s == "ct3d") return ProblemKind::Ct3d;
  throw ConfigError("unknown problem kind '" + s + "'");
}

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Mri2d: return "mri2d";
    case ProblemKind::Mri2dNoisy: return "mri2d-noisy";
    case ProblemKind::Ct3d: return "ct3d";
  }
  return "?";
}

PhantomKind parse_phantom_kind(const std::string& s) {
  if (s == "shepp-logan-2d") return PhantomKind::SheppLogan2d;
  if (s == "shepp-logan-3d") return PhantomKind::SheppLogan3d;
  if (s == "subspace-random") return PhantomKind::SubspaceRandom;
  if (s == "gmm-draw") return PhantomKind::GmmDraw;
  throw ConfigError("unknown phantom kind '" + s + "'");
}

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::SheppLogan2d: return "shepp-logan-2d";
    case PhantomKind::SheppLogan3d: return "shepp-logan-3d";
    case PhantomKind::SubspaceRandom: return "subspace-random";
    case PhantomKind::GmmDraw: return "gmm-draw";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& s) {
  if (s == "smooth-bump") return PriorKind::SmoothBump;
  if (s == "ellipse-indicator") return PriorKind::EllipseIndicator;
  if (s == "ellipse-gmm") return PriorKind::EllipseGmm;
  throw ConfigError("unknown prior kind '" + s + "'");
}

std::string to_string(PriorKind k) {
  switch (k) {
    case PriorKind::SmoothBump: return "smooth-bump";
    case PriorKind::EllipseIndicator: return "ellipse-indicator";
    case PriorKind::EllipseGmm: return "ellipse-gmm";
  }
  return "?";
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return d;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const long long d = to_int(key, v);
  if (d < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::size_t>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem.kind", [](auto& c, auto&, auto& v) { c.problem = parse_problem_kind(v); }},
      {"problem.size", [](auto& c, auto& k, auto& v) { c.size = to_size(k, v); }},
      {"problem.slices", [](auto& c, auto& k, auto& v) { c.slices = to_size(k, v); }},
      {"problem.noise", [](auto& c, auto& k, auto& v) { c.noise_sigma = to_double(k, v); }},
      {"problem.seed", [](auto& c, auto& k, auto& v) { c.problem_seed = to_size(k, v); }},
      {"phantom.kind", [](auto& c, auto&, auto& v) { c.phantom = parse_phantom_kind(v); }},
      {"prior.kind", [](auto& c, auto&, auto& v) { c.prior = parse_prior_kind(v); }},
      {"prior.dim", [](auto& c, auto& k, auto& v) { c.prior_dim = to_size(k, v); }},
      {"prior.components", [](auto& c, auto& k, auto& v) { c.prior_components = to_size(k, v); }},
      {"prior.tau", [](auto& c, auto& k, auto& v) { c.prior_tau = to_double(k, v); }},
      {"operator.mask", [](auto& c, auto&, auto& v) { c.mask = parse_mask_kind(v); }},
      {"operator.acceleration", [](auto& c, auto& k, auto& v) { c.acceleration = to_double(k, v); }},
      {"operator.acs", [](auto& c, auto& k, auto& v) { c.acs_fraction = to_double(k, v); }},
      {"operator.coils", [](auto& c, auto& k, auto& v) { c.coils = to_size(k, v); }},
      {"operator.angles", [](auto& c, auto& k, auto& v) { c.angles = to_size(k, v); }},
      {"operator.bins", [](auto& c, auto& k, auto& v) { c.bins = to_size(k, v); }},
      {"sampler.nfe", [](auto& c, auto& k, auto& v) { c.sampler.nfe = static_cast<int>(to_int(k, v)); }},
      {"sampler.eta",
       [](auto& c, auto& k, auto& v) {
         if (v == "auto")
           c.sampler.eta.reset();
         else
           c.sampler.eta = to_double(k, v);
       }},
      {"sampler.cg-steps", [](auto& c, auto& k, auto& v) { c.sampler.cg_steps = static_cast<int>(to_int(k, v)); }},
      {"sampler.gamma", [](auto& c, auto& k, auto& v) { c.sampler.gamma = to_double(k, v); }},
      {"sampler.mode", [](auto& c, auto&, auto& v) { c.sampler.mode = parse_mode(v); }},
      {"sampler.strategy", [](auto& c, auto&, auto& v) { c.sampler.strategy = parse_strategy(v); }},
      {"sampler.target", [](auto& c, auto&, auto& v) { c.sampler.target = parse_target(v); }},
      {"sampler.xi", [](auto& c, auto& k, auto& v) { c.sampler.xi = to_double(k, v); }},
      {"sampler.dps-step", [](auto& c, auto& k, auto& v) { c.sampler.dps_step = to_double(k, v); }},
      {"sampler.residual-step", [](auto& c, auto& k, auto& v) { c.sampler.residual_step = to_bool(k, v); }},
      {"sampler.ve-truncation", [](auto& c, auto& k, auto& v) { c.sampler.ve_truncation = to_double(k, v); }},
      {"sampler.sigma-min", [](auto& c, auto& k, auto& v) { c.sampler.sigma_min = to_double(k, v); }},
      {"sampler.sigma-max", [](auto& c, auto& k, auto& v) { c.sampler.sigma_max = to_double(k, v); }},
      {"sampler.rejection-tau",
       [](auto& c, auto& k, auto& v) {
         if (v == "none")
           c.sampler.rejection_tau.reset();
         else
           c.sampler.rejection_tau = to_double(k, v);
       }},
      {"sampler.max-retries",
       [](auto& c, auto& k, auto& v) { c.sampler.max_retries = static_cast<int>(to_int(k, v)); }},
      {"sampler.pinv-iters",
       [](auto& c, auto& k, auto& v) { c.sampler.pinv_max_iters = static_cast<int>(to_int(k, v)); }},
      {"sampler.pinv-tol", [](auto& c, auto& k, auto& v) { c.sampler.pinv_tol = to_double(k, v); }},
      {"sampler.pinv-strict", [](auto& c, auto& k, auto& v) { c.sampler.pinv_strict = to_bool(k, v); }},
      {"tv.lambda", [](auto& c, auto& k, auto& v) { c.tv.lambda = to_double(k, v); }},
      {"tv.rho", [](auto& c, auto& k, auto& v) { c.tv.rho = to_double(k, v); }},
      {"tv.cg-steps", [](auto& c, auto& k, auto& v) { c.tv.cg_steps = static_cast<int>(to_int(k, v)); }},
      {"experiment.repeats", [](auto& c, auto& k, auto& v) { c.repeats = static_cast<int>(to_int(k, v)); }},
      {"experiment.trials", [](auto& c, auto& k, auto& v) { c.trials = static_cast<int>(to_int(k, v)); }},
      {"experiment.sigma-gt", [](auto& c, auto& k, auto& v) { c.sigma_gt = to_double(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(dotted_key);
  if (it == table.end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  it->second(*this, dotted_key, value);
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' is outside any section");
    for (const auto& [key, leaf] : body) cfg.set(section + "." + key, leaf.get_value<std::string>());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_ini(ss.str());
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream os;
  const auto& s = sampler;
  os << "[problem]\nkind=" << to_string(problem) << "\nsize=" << size << "\nslices=" << slices
     << "\nnoise=" << num(noise_sigma) << "\nseed=" << problem_seed << "\n\n";
  os << "[phantom]\nkind=" << to_string(phantom) << "\n\n";
  os << "[prior]\nkind=" << to_string(prior) << "\ndim=" << prior_dim << "\ncomponents=" << prior_components
     << "\ntau=" << num(prior_tau) << "\n\n";
  os << "[operator]\nmask=" << to_string(mask) << "\nacceleration=" << num(acceleration)
     << "\nacs=" << num(acs_fraction) << "\ncoils=" << coils << "\nangles=" << angles << "\nbins=" << bins
     << "\n\n";
  os << "[sampler]\nnfe=" << s.nfe << "\neta=" << (s.eta ? num(*s.eta) : std::string("auto"))
     << "\ncg-steps=" << s.cg_steps << "\ngamma=" << num(s.gamma) << "\nmode=" << to_string(s.mode)
     << "\nstrategy=" << to_string(s.strategy) << "\ntarget=" << to_string(s.target) << "\nxi=" << num(s.xi)
     << "\ndps-step=" << num(s.dps_step) << "\nresidual-step=" << (s.residual_step ? "true" : "false")
     << "\nve-truncation=" << num(s.ve_truncation)
     << "\nsigma-min=" << num(s.sigma_min) << "\nsigma-max=" << num(s.sigma_max)
     << "\nrejection-tau=" << (s.rejection_tau ? num(*s.rejection_tau) : std::string("none"))
     << "\nmax-retries=" << s.max_retries << "\npinv-iters=" << s.pinv_max_iters
     << "\npinv-tol=" << num(s.pinv_tol) << "\npinv-strict=" << (s.pinv_strict ? "true" : "false") << "\n\n";
  os << "[tv]\nlambda=" << num(tv.lambda) << "\nrho=" << num(tv.rho) << "\ncg-steps=" << tv.cg_steps << "\n\n";
  os << "[experiment]\nrepeats=" << repeats << "\ntrials=" << trials << "\nsigma-gt=" << num(sigma_gt) << "\n\n";
  os << "[output]\ndir=" << output_dir << "\n";
  return os.str();
}

void ExperimentConfig::validate() const {
  if (size < 2 || (problem != ProblemKind::Ct3d && !is_power_of_two(size)))
    throw ConfigError("problem.size must be a power of two >= 2 for MRI problems");
  if (problem == ProblemKind::Ct3d && slices < 2) throw ConfigError("problem.slices must be >= 2 for ct3d");
  if (!(noise_sigma >= 0.0)) throw ConfigError("problem.noise must be >= 0");
  if (problem == ProblemKind::Mri2dNoisy && !(noise_sigma > 0.0))
    throw ConfigError("mri2d-noisy needs problem.noise > 0");
  if (problem == ProblemKind::Ct3d) {
    if (phantom == PhantomKind::SheppLogan2d) throw ConfigError("ct3d needs a volume phantom");
    if (angles == 0) throw ConfigError("operator.angles must be >= 1");
  } else {
    if (phantom == PhantomKind::SheppLogan3d) throw ConfigError("shepp-logan-3d phantom needs problem ct3d");
    if (coils == 0) throw ConfigError("operator.coils must be >= 1");
    if (!(acceleration >= 1.0)) throw ConfigError("operator.acceleration must be >= 1");
    if (!(acs_fraction >= 0.0 && acs_fraction <= 1.0)) throw ConfigError("operator.acs must lie in [0, 1]");
  }
  if (phantom == PhantomKind::SubspaceRandom && prior == PriorKind::EllipseGmm)
    throw ConfigError("subspace-random phantom needs an affine prior");
  if (phantom == PhantomKind::GmmDraw && prior != PriorKind::EllipseGmm)
    throw ConfigError("gmm-draw phantom needs prior ellipse-gmm");
  if (prior_dim == 0 || prior_components == 0) throw ConfigError("prior.dim and prior.components must be >= 1");
  if (!(prior_tau > 0.0)) throw ConfigError("prior.tau must be > 0");
  if (repeats < 1 || trials < 1) throw ConfigError("experiment.repeats and experiment.trials must be >= 1");
  if (!(sigma_gt > 0.0)) throw ConfigError("experiment.sigma-gt must be > 0");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  sampler.validate();
  tv.validate();
}

std::size_t ExperimentConfig::detector_bins() const {
  if (bins) return bins;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(size) * std::sqrt(2.0))) + 1;
}

}  // namespace dds
