#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "varinfer/cli/config.hpp"
#include "varinfer/cli/output.hpp"

namespace varinfer::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitIo = 3,
};

/// Largest tolerated gradient-check error before training is refused.
inline constexpr double kGradientCheckLimit = 1e-3;

struct GmmOptions {
  std::uint64_t seed = 0;
  std::size_t k = 3;
  std::size_t n_per_component = 1000;
  double sigma2 = 25.0;
  std::size_t max_iters = 1000;
  double tol = 1e-6;
  std::size_t grid_points = 400;
  std::size_t bins = 60;
};

struct KlProjOptions {
  std::uint64_t seed = 0;
  std::string target = "0.5:-3:1,0.5:3:1";  ///< weight:mean:var per component
  double init_a = -2.0;
  double init_b = 2.0;
  double init_var = 1.0;
  std::size_t steps = 2000;
  double step_size = 0.05;
  double grid_min = -10.0;
  double grid_max = 10.0;
  std::size_t grid_points = 401;
};

struct VaeOptions {
  std::uint64_t seed = 0;
  std::size_t n_data = 200;
  double flip = 0.05;
  std::size_t hidden = 32;
  std::size_t latent = 2;
  std::string likelihood = "bernoulli";
  std::size_t epochs = 200;
  std::size_t batch_size = 20;
  std::size_t samples = 1;
  double beta = 1.0;
  double capacity = 0.0;
  double lr = 1e-3;
  std::size_t n_generate = 16;
  std::size_t n_reconstruct = 16;
};

struct VaeGanOptions {
  std::uint64_t seed = 0;
  std::size_t n_data = 256;
  double noise = 0.1;
  std::size_t hidden = 32;
  std::size_t latent = 2;
  std::size_t dis_hidden = 32;
  std::size_t feature_layer = 1;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  double gamma = 1.0;
  double lr_encoder = 1e-3;
  double lr_decoder = 1e-3;
  double lr_discriminator = 1e-3;
  std::size_t n_generate = 256;
  std::size_t n_reconstruct = 64;
};

struct IdentityOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 200;
  std::size_t conjugate_trials = 200;
  std::size_t max_z = 8;
  std::size_t max_x = 6;
};

/// Key/value echo of every option, in a form parse_config_text reads back.
ConfigEntries echo(const GmmOptions& o);
ConfigEntries echo(const KlProjOptions& o);
ConfigEntries echo(const VaeOptions& o);
ConfigEntries echo(const VaeGanOptions& o);
ConfigEntries echo(const IdentityOptions& o);

/// Each command writes its artifacts plus config.txt and returns an exit code;
/// validation, numerical and I/O failures propagate as exceptions.
int cmd_gmm(const GmmOptions& o, const OutputDir& out, std::ostream& log);
int cmd_klproj(const KlProjOptions& o, const OutputDir& out, std::ostream& log);
int cmd_vae(const VaeOptions& o, const OutputDir& out, std::ostream& log);
int cmd_vaegan(const VaeGanOptions& o, const OutputDir& out, std::ostream& log);
int cmd_identity_check(const IdentityOptions& o, const OutputDir& out, std::ostream& log);

/// Parses argv (argv[0] is the program name), dispatches, and maps exceptions
/// to exit codes. Messages go to `err`, progress to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace varinfer::cli
