#include "varinfer/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <memory>
#include <sstream>
#include <variant>

#include "CLI11.hpp"

#include "varinfer/cavi_gmm.hpp"
#include "varinfer/checkpoint.hpp"
#include "varinfer/divergence.hpp"
#include "varinfer/errors.hpp"
#include "varinfer/oracle.hpp"
#include "varinfer/toy_data.hpp"
#include "varinfer/vae.hpp"
#include "varinfer/vaegan.hpp"

namespace varinfer::cli {

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

double mixture_density(double x, const MixtureParams& m) { return std::exp(mixture_logpdf(x, m)); }

double number_field(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ArgumentError("target: '" + text + "' is not a number in " + field);
  }
  return v;
}

/// "w:mean:var,w:mean:var,...".
MixtureParams parse_target(const std::string& text) {
  std::vector<double> weights;
  std::vector<GaussianParams> comps;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ',')) {
    std::vector<std::string> fields;
    std::stringstream one(item);
    std::string f;
    while (std::getline(one, f, ':')) fields.push_back(f);
    if (fields.size() != 3) throw ArgumentError("target: component '" + item + "' is not weight:mean:var");
    const double w = number_field(fields[0], item);
    const double var = number_field(fields[2], item);
    if (w <= 0.0) throw ArgumentError("target: weights must be positive");
    if (var <= 0.0) throw ArgumentError("target: variances must be positive");
    weights.push_back(w);
    comps.push_back(GaussianParams::scalar(number_field(fields[1], item), var));
  }
  if (comps.empty()) throw ArgumentError("target: no components");
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return MixtureParams(std::move(weights), std::move(comps));
}

Likelihood parse_likelihood(const std::string& s) {
  if (s == "bernoulli") return Likelihood::kBernoulli;
  if (s == "gaussian") return Likelihood::kGaussianUnitVar;
  throw ArgumentError("likelihood must be bernoulli or gaussian, got '" + s + "'");
}

Matrix first_rows(const Matrix& m, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, m.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return gather_rows(m, idx);
}

json gaussian_json(const GaussianParams& g) { return json{{"mean", g.mean()[0]}, {"var", g.var()[0]}}; }

json gradcheck_json(double err, std::size_t rows) {
  return json{{"max_relative_error", err},
              {"limit", kGradientCheckLimit},
              {"batch_rows", rows},
              {"passed", err <= kGradientCheckLimit}};
}

}  // namespace

ConfigEntries echo(const GmmOptions& o) {
  return {{"seed", std::to_string(o.seed)},       {"k", num(o.k)},
          {"n_per_component", num(o.n_per_component)}, {"sigma2", num(o.sigma2)},
          {"max_iters", num(o.max_iters)},        {"tol", num(o.tol)},
          {"grid_points", num(o.grid_points)},    {"bins", num(o.bins)}};
}

ConfigEntries echo(const KlProjOptions& o) {
  return {{"seed", std::to_string(o.seed)}, {"target", o.target},
          {"init_a", num(o.init_a)},         {"init_b", num(o.init_b)},
          {"init_var", num(o.init_var)},     {"steps", num(o.steps)},
          {"step_size", num(o.step_size)},   {"grid_min", num(o.grid_min)},
          {"grid_max", num(o.grid_max)},     {"grid_points", num(o.grid_points)}};
}

ConfigEntries echo(const VaeOptions& o) {
  return {{"seed", std::to_string(o.seed)},
          {"n_data", num(o.n_data)},
          {"flip", num(o.flip)},
          {"hidden", num(o.hidden)},
          {"latent", num(o.latent)},
          {"likelihood", o.likelihood},
          {"epochs", num(o.epochs)},
          {"batch_size", num(o.batch_size)},
          {"samples", num(o.samples)},
          {"beta", num(o.beta)},
          {"capacity", num(o.capacity)},
          {"lr", num(o.lr)},
          {"n_generate", num(o.n_generate)},
          {"n_reconstruct", num(o.n_reconstruct)}};
}

ConfigEntries echo(const VaeGanOptions& o) {
  return {{"seed", std::to_string(o.seed)},
          {"n_data", num(o.n_data)},
          {"noise", num(o.noise)},
          {"hidden", num(o.hidden)},
          {"latent", num(o.latent)},
          {"dis_hidden", num(o.dis_hidden)},
          {"feature_layer", num(o.feature_layer)},
          {"epochs", num(o.epochs)},
          {"batch_size", num(o.batch_size)},
          {"gamma", num(o.gamma)},
          {"lr_encoder", num(o.lr_encoder)},
          {"lr_decoder", num(o.lr_decoder)},
          {"lr_discriminator", num(o.lr_discriminator)},
          {"n_generate", num(o.n_generate)},
          {"n_reconstruct", num(o.n_reconstruct)}};
}

ConfigEntries echo(const IdentityOptions& o) {
  return {{"seed", std::to_string(o.seed)},
          {"trials", num(o.trials)},
          {"conjugate_trials", num(o.conjugate_trials)},
          {"max_z", num(o.max_z)},
          {"max_x", num(o.max_x)}};
}

int cmd_gmm(const GmmOptions& o, const OutputDir& out, std::ostream& log) {
  if (o.k == 0 || o.k > 8) throw ArgumentError("k must be in 1..8");
  if (o.n_per_component == 0) throw ArgumentError("n_per_component must be positive");
  if (!(o.sigma2 > 0.0) || !std::isfinite(o.sigma2)) throw ArgumentError("sigma2 must be positive");
  if (o.max_iters == 0) throw ArgumentError("max_iters must be positive");
  if (!(o.tol >= 0.0)) throw ArgumentError("tol must be non-negative");
  if (o.grid_points < 2 || o.bins == 0) throw ArgumentError("grid_points must be >= 2 and bins >= 1");
  out.write("config.txt", format_config("gmm", echo(o)));
  Stopwatch clock;

  Rng master(o.seed);
  Rng data_rng = master.split();
  Rng fit_rng = master.split();
  const GmmDataset d = generate_gmm(data_rng, o.k, o.n_per_component, o.sigma2);
  const CaviResult fit = cavi_fit(d.x, o.k, o.sigma2, {o.max_iters, o.tol}, fit_rng);
  const VariationalState& s = fit.state;

  CsvWriter dataset({"x", "true_cluster"});
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double row[] = {d.x[i], static_cast<double>(d.true_assignments[i])};
    dataset.row(row);
  }
  out.write("dataset.csv", dataset.str());

  CsvWriter trace({"iteration", "elbo"});
  for (std::size_t t = 0; t < fit.trace.elbo_per_iter.size(); ++t) {
    const double row[] = {fit.trace.elbo_per_iter[t]};
    trace.row(static_cast<long long>(t + 1), row);
  }
  out.write("elbo_trace.csv", trace.str());

  const auto perm = match_clusters(s.m, d.true_means);
  double max_error = 0.0;
  for (std::size_t j = 0; j < o.k; ++j) max_error = std::max(max_error, std::abs(s.m[j] - d.true_means[perm[j]]));
  const auto assignments = hard_assignments(s.phi);
  json fitj;
  fitj["k"] = o.k;
  fitj["sigma2"] = o.sigma2;
  fitj["iterations"] = fit.trace.iterations_run;
  fitj["converged"] = fit.trace.converged;
  fitj["final_elbo"] = fit.trace.elbo_per_iter.empty() ? 0.0 : fit.trace.elbo_per_iter.back();
  fitj["m"] = s.m;
  fitj["s2"] = s.s2;
  fitj["true_means"] = d.true_means;
  fitj["matched_true_index"] = perm;
  fitj["max_matched_mean_error"] = max_error;
  fitj["assignments"] = assignments;
  out.write_json("fit.json", fitj);

  const auto [lo_it, hi_it] = std::minmax_element(d.x.begin(), d.x.end());
  const double lo = *lo_it, hi = *hi_it;
  const double n = static_cast<double>(d.x.size());
  const double width = (hi - lo) / static_cast<double>(o.bins);
  std::vector<std::size_t> counts(o.bins, 0);
  for (double x : d.x) {
    auto b = width > 0.0 ? static_cast<std::size_t>((x - lo) / width) : 0;
    counts[std::min(b, o.bins - 1)]++;
  }
  CsvWriter hist({"bin_left", "bin_right", "count", "density"});
  for (std::size_t b = 0; b < o.bins; ++b) {
    const double left = lo + width * static_cast<double>(b);
    const double c = static_cast<double>(counts[b]);
    const double row[] = {left, left + width, c, width > 0.0 ? c / (n * width) : 0.0};
    hist.row(row);
  }
  out.write("histogram.csv", hist.str());

  // Fitted curves use the known unit observation variance and equal weights.
  std::vector<std::string> header{"x"};
  for (const auto& c : numbered_columns("component_", o.k)) header.push_back(c);
  header.push_back("mixture");
  CsvWriter density(header);
  std::vector<double> row(o.k + 2);
  for (double x : linspace(lo - 1.0, hi + 1.0, o.grid_points)) {
    row[0] = x;
    double total = 0.0;
    for (std::size_t j = 0; j < o.k; ++j) {
      row[j + 1] = normal_pdf(x, s.m[j], 1.0) / static_cast<double>(o.k);
      total += row[j + 1];
    }
    row[o.k + 1] = total;
    density.row(row);
  }
  out.write("density.csv", density.str());

  log << "gmm: " << fit.trace.iterations_run << " iterations, " << (fit.trace.converged ? "converged" : "not converged")
      << ", final elbo " << fitj["final_elbo"].get<double>() << ", max matched mean error " << max_error << " ("
      << clock.seconds() << " s)\n";
  return kExitOk;
}

int cmd_klproj(const KlProjOptions& o, const OutputDir& out, std::ostream& log) {
  const MixtureParams target = parse_target(o.target);
  if (!(o.init_var > 0.0) || !std::isfinite(o.init_var)) throw ArgumentError("init_var must be positive");
  if (!std::isfinite(o.init_a) || !std::isfinite(o.init_b)) throw ArgumentError("inits must be finite");
  if (!(o.step_size > 0.0)) throw ArgumentError("step_size must be positive");
  if (!(o.grid_max > o.grid_min) || o.grid_points < 2) throw ArgumentError("grid needs grid_max > grid_min, >= 2 points");
  out.write("config.txt", format_config("klproj", echo(o)));
  Stopwatch clock;

  const GaussianParams m_fit = m_projection(target);
  const IProjectionOptions iopt{o.steps, o.step_size};
  const GaussianParams init_a = GaussianParams::scalar(o.init_a, o.init_var);
  const GaussianParams init_b = GaussianParams::scalar(o.init_b, o.init_var);
  const GaussianParams i_a = i_projection(target, init_a, iopt);
  const GaussianParams i_b = i_projection(target, init_b, iopt);

  const auto grid = linspace(o.grid_min, o.grid_max, o.grid_points);
  CsvWriter target_csv({"x", "density"});
  CsvWriter fits({"x", "target", "m_projection", "i_projection_a", "i_projection_b"});
  for (double x : grid) {
    const double p = mixture_density(x, target);
    const double t_row[] = {x, p};
    target_csv.row(t_row);
    const double f_row[] = {x, p, std::exp(gaussian_logpdf(x, m_fit)), std::exp(gaussian_logpdf(x, i_a)),
                            std::exp(gaussian_logpdf(x, i_b))};
    fits.row(f_row);
  }
  out.write("target_density.csv", target_csv.str());
  out.write("fits.csv", fits.str());

  auto fit_json = [&](const GaussianParams& g) {
    json j = gaussian_json(g);
    j["reverse_kl"] = reverse_kl_quadrature(g, target);
    j["forward_kl"] = forward_kl_quadrature(target, g);
    return j;
  };
  json components = json::array();
  for (std::size_t k = 0; k < target.size(); ++k) {
    json c = gaussian_json(target.components()[k]);
    c["weight"] = target.weights()[k];
    components.push_back(c);
  }
  json summary;
  summary["target"] = components;
  summary["m_projection"] = fit_json(m_fit);
  json ia = fit_json(i_a), ib = fit_json(i_b);
  ia["init"] = gaussian_json(init_a);
  ib["init"] = gaussian_json(init_b);
  summary["i_projection_a"] = ia;
  summary["i_projection_b"] = ib;
  out.write_json("summary.json", summary);

  log << "klproj: m-projection N(" << m_fit.mean()[0] << ", " << m_fit.var()[0] << "), i-projections N("
      << i_a.mean()[0] << ", " << i_a.var()[0] << ") and N(" << i_b.mean()[0] << ", " << i_b.var()[0] << ") ("
      << clock.seconds() << " s)\n";
  return kExitOk;
}

int cmd_vae(const VaeOptions& o, const OutputDir& out, std::ostream& log) {
  const VaeArchitecture arch{64, o.hidden, o.latent, parse_likelihood(o.likelihood)};
  if (o.n_data == 0 || o.hidden == 0 || o.latent == 0) throw ArgumentError("n_data, hidden and latent must be positive");
  if (!(o.flip >= 0.0 && o.flip <= 1.0)) throw ArgumentError("flip must be in [0, 1]");
  if (o.batch_size == 0 || o.samples == 0) throw ArgumentError("batch_size and samples must be positive");
  if (!(o.beta >= 0.0) || !std::isfinite(o.beta)) throw ArgumentError("beta must be non-negative");
  if (!(o.capacity >= 0.0) || !std::isfinite(o.capacity)) throw ArgumentError("capacity must be non-negative");
  if (!(o.lr >= 0.0) || !std::isfinite(o.lr)) throw ArgumentError("lr must be non-negative");
  out.write("config.txt", format_config("vae", echo(o)));
  Stopwatch clock;

  Rng master(o.seed);
  Rng data_rng = master.split();
  Rng check_rng = master.split();
  Rng eval_rng = master.split();
  const std::uint64_t train_seed = master.next_u64();
  const Matrix data = two_pattern_images(data_rng, o.n_data, o.flip);
  const VaeModel init = initial_vae(arch, train_seed);
  const SgvbConfig sgvb{o.samples, o.beta, o.capacity};

  const Matrix check_x = first_rows(data, 4);
  std::vector<Matrix> noise;
  for (std::size_t l = 0; l < o.samples; ++l) {
    Matrix eps(check_x.rows(), o.latent);
    for (double& v : eps.data()) v = check_rng.normal();
    noise.push_back(std::move(eps));
  }
  const double err = vae_gradient_check(init, check_x, noise, sgvb);
  out.write_json("gradcheck.json", gradcheck_json(err, check_x.rows()));
  if (!(err <= kGradientCheckLimit)) {
    log << "vae: gradient check failed, max relative error " << err << "; not training\n";
    return kExitNumerical;
  }

  const VaeTrainConfig cfg{o.epochs, o.batch_size, o.samples, o.beta, o.capacity, train_seed, o.lr};
  const VaeTrainResult res = train_vae(init, data, cfg);

  out.write("data.csv", matrix_csv(data, "pixel_", "row"));
  out.write("trace.csv", trace_csv(res.trace, "epoch", {"recon", "kl", "total_elbo", "loss"}));
  std::ostringstream ckpt;
  write_vae(ckpt, res.model);
  out.write("checkpoint.txt", ckpt.str());
  out.write("samples.csv", matrix_csv(generate(res.model, eval_rng, o.n_generate), "pixel_", "sample"));
  const Matrix recon = reconstruct(res.model, eval_rng, first_rows(data, o.n_reconstruct));
  out.write("reconstructions.csv", matrix_csv(recon, "pixel_", "row"));

  log << "vae: gradient check " << err << ", " << res.trace.records.size() << " epochs";
  if (!res.trace.records.empty()) log << ", final loss " << *res.trace.records.back().metric("loss");
  log << " (" << clock.seconds() << " s)\n";
  return kExitOk;
}

int cmd_vaegan(const VaeGanOptions& o, const OutputDir& out, std::ostream& log) {
  const VaeGanArchitecture arch{2, o.hidden, o.latent, o.dis_hidden, o.feature_layer};
  if (o.n_data == 0 || o.hidden == 0 || o.latent == 0 || o.dis_hidden == 0) {
    throw ArgumentError("n_data, hidden, latent and dis_hidden must be positive");
  }
  if (o.feature_layer < 1 || o.feature_layer > 2) throw ArgumentError("feature_layer must be 1 or 2");
  if (!(o.noise >= 0.0) || !std::isfinite(o.noise)) throw ArgumentError("noise must be non-negative");
  if (o.batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (!(o.gamma >= 0.0) || !std::isfinite(o.gamma)) throw ArgumentError("gamma must be non-negative");
  for (double lr : {o.lr_encoder, o.lr_decoder, o.lr_discriminator}) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rates must be non-negative");
  }
  out.write("config.txt", format_config("vaegan", echo(o)));
  Stopwatch clock;

  Rng master(o.seed);
  Rng data_rng = master.split();
  Rng check_rng = master.split();
  Rng eval_rng = master.split();
  const std::uint64_t train_seed = master.next_u64();
  const Matrix data = two_moons(data_rng, o.n_data, o.noise);
  const VaeGanModel init = initial_vaegan(arch, train_seed);

  const Matrix check_x = first_rows(data, 8);
  const VaeGanNoise noise = draw_vaegan_noise(check_rng, check_x.rows(), o.latent);
  const double err = vaegan_gradient_check(init, check_x, noise, o.gamma);
  out.write_json("gradcheck.json", gradcheck_json(err, check_x.rows()));
  if (!(err <= kGradientCheckLimit)) {
    log << "vaegan: gradient check failed, max relative error " << err << "; not training\n";
    return kExitNumerical;
  }

  VaeGanTrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.gamma = o.gamma;
  cfg.seed = train_seed;
  cfg.lrs = {o.lr_encoder, o.lr_decoder, o.lr_discriminator};
  const VaeGanTrainResult res = train_vaegan(init, data, cfg);

  out.write("data.csv", matrix_csv(data, "x", "row"));
  out.write("trace.csv", trace_csv(res.trace, "epoch",
                                   {"l_prior", "l_llike_disl", "l_gan", "dis_real", "dis_recon", "dis_prior"}));
  std::ostringstream ckpt;
  write_vaegan(ckpt, {res.model, o.gamma});
  out.write("checkpoint.txt", ckpt.str());
  out.write("samples.csv", matrix_csv(generate(res.model, eval_rng, o.n_generate), "x", "sample"));
  const Matrix recon = reconstruct(res.model, eval_rng, first_rows(data, o.n_reconstruct));
  out.write("reconstructions.csv", matrix_csv(recon, "x", "row"));

  log << "vaegan: gradient check " << err << ", " << res.trace.records.size() << " epochs";
  if (!res.trace.records.empty()) log << ", final l_gan " << *res.trace.records.back().metric("l_gan");
  log << " (" << clock.seconds() << " s)\n";
  return kExitOk;
}

int cmd_identity_check(const IdentityOptions& o, const OutputDir& out, std::ostream& log) {
  if (o.max_z < 2 || o.max_x < 1) throw ArgumentError("max_z must be >= 2 and max_x >= 1");
  out.write("config.txt", format_config("identity-check", echo(o)));
  Stopwatch clock;

  Rng rng(o.seed);
  Rng discrete_rng = rng.split();
  Rng conjugate_rng = rng.split();

  json trials = json::array();
  double max_residual = 0.0;
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t nz = 2 + discrete_rng.below(o.max_z - 1);
    const std::size_t nx = 1 + discrete_rng.below(o.max_x);
    std::vector<double> table(nz * nx);
    for (double& v : table) v = discrete_rng.uniform() + 1e-3;
    double total = 0.0;
    for (double v : table) total += v;
    for (double& v : table) v /= total;
    const DiscreteJoint joint(nz, nx, std::move(table));
    const std::size_t x = discrete_rng.below(nx);
    std::vector<double> qw(nz);
    for (double& v : qw) v = discrete_rng.uniform() + 1e-3;
    const auto q = CategoricalParams::from_weights(qw);
    const ElboKlResult r = elbo_kl_identity(joint, x, q);
    const double residual = std::abs(r.elbo + r.kl - r.log_evidence);
    max_residual = std::max(max_residual, std::isfinite(residual) ? residual : kInfiniteKl);
    trials.push_back(json{{"trial", t},
                          {"num_z", nz},
                          {"num_x", nx},
                          {"x", x},
                          {"elbo", r.elbo},
                          {"kl", r.kl},
                          {"log_evidence", r.log_evidence},
                          {"residual", residual}});
  }

  std::size_t violations = 0;
  double min_gap = kInfiniteKl;
  double max_posterior_gap = 0.0;
  for (std::size_t t = 0; t < o.conjugate_trials; ++t) {
    const ConjugateModel model(0.1 + 10.0 * conjugate_rng.uniform());
    std::vector<double> data(1 + conjugate_rng.below(20));
    const double mu = std::sqrt(model.prior_var) * conjugate_rng.normal();
    for (double& v : data) v = mu + conjugate_rng.normal();
    const double evidence = conjugate_log_evidence(model, data);
    const auto q = GaussianParams::scalar(3.0 * conjugate_rng.normal(), std::exp(-4.0 + 6.0 * conjugate_rng.uniform()));
    const double gap = evidence - conjugate_elbo(model, data, q);
    if (!(gap >= 0.0)) ++violations;
    min_gap = std::min(min_gap, gap);
    const double posterior_gap = std::abs(evidence - conjugate_elbo(model, data, conjugate_posterior(model, data)));
    max_posterior_gap = std::max(max_posterior_gap, posterior_gap);
  }

  const bool passed = max_residual < 1e-10 && violations == 0 && max_posterior_gap < 1e-10;
  json report;
  report["passed"] = passed;
  report["max_residual"] = max_residual;
  report["residual_limit"] = 1e-10;
  report["trials"] = trials;
  json conj;
  conj["trials"] = o.conjugate_trials;
  conj["violations"] = violations;
  conj["min_gap"] = o.conjugate_trials == 0 ? 0.0 : min_gap;
  conj["max_gap_at_posterior"] = max_posterior_gap;
  report["conjugate"] = conj;
  out.write_json("identity_report.json", report);

  log << "identity-check: " << (passed ? "PASS" : "FAIL") << ", max residual " << max_residual << ", "
      << violations << " bound violations, posterior gap " << max_posterior_gap << " (" << clock.seconds()
      << " s)\n";
  return passed ? kExitOk : kExitNumerical;
}

namespace {

struct Parsed {
  std::string seed;
  std::string out_dir = "varinfer_out";
  std::string config;
  GmmOptions gmm;
  KlProjOptions klproj;
  VaeOptions vae;
  VaeGanOptions vaegan;
  IdentityOptions identity;
};

CLI::App* add_common(CLI::App& app, const std::string& name, const std::string& description, Parsed& p) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--seed", p.seed, "Seed (falls back to VARINFER_SEED, then 0)");
  sub->add_option("--out-dir", p.out_dir, "Directory for output files")->capture_default_str();
  sub->add_option("--config", p.config, "Flat key = value config file");
  return sub;
}

void build_app(CLI::App& app, Parsed& p) {
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* g = add_common(app, "gmm", "CAVI for a Bayesian Gaussian mixture", p);
  g->add_option("--k", p.gmm.k)->capture_default_str();
  g->add_option("--n-per-component", p.gmm.n_per_component)->capture_default_str();
  g->add_option("--sigma2", p.gmm.sigma2)->capture_default_str();
  g->add_option("--max-iters", p.gmm.max_iters)->capture_default_str();
  g->add_option("--tol", p.gmm.tol)->capture_default_str();
  g->add_option("--grid-points", p.gmm.grid_points)->capture_default_str();
  g->add_option("--bins", p.gmm.bins)->capture_default_str();

  auto* k = add_common(app, "klproj", "Forward and reverse KL projections of a mixture", p);
  k->add_option("--target", p.klproj.target, "weight:mean:var,...")->capture_default_str();
  k->add_option("--init-a", p.klproj.init_a)->capture_default_str();
  k->add_option("--init-b", p.klproj.init_b)->capture_default_str();
  k->add_option("--init-var", p.klproj.init_var)->capture_default_str();
  k->add_option("--steps", p.klproj.steps)->capture_default_str();
  k->add_option("--step-size", p.klproj.step_size)->capture_default_str();
  k->add_option("--grid-min", p.klproj.grid_min)->capture_default_str();
  k->add_option("--grid-max", p.klproj.grid_max)->capture_default_str();
  k->add_option("--grid-points", p.klproj.grid_points)->capture_default_str();

  auto* v = add_common(app, "vae", "Train a VAE on 8x8 two-pattern images", p);
  v->add_option("--n-data", p.vae.n_data)->capture_default_str();
  v->add_option("--flip", p.vae.flip)->capture_default_str();
  v->add_option("--hidden", p.vae.hidden)->capture_default_str();
  v->add_option("--latent", p.vae.latent)->capture_default_str();
  v->add_option("--likelihood", p.vae.likelihood)
      ->check(CLI::IsMember({"bernoulli", "gaussian"}))
      ->capture_default_str();
  v->add_option("--epochs", p.vae.epochs)->capture_default_str();
  v->add_option("--batch-size", p.vae.batch_size)->capture_default_str();
  v->add_option("--samples", p.vae.samples)->capture_default_str();
  v->add_option("--beta", p.vae.beta)->capture_default_str();
  v->add_option("--capacity", p.vae.capacity)->capture_default_str();
  v->add_option("--lr", p.vae.lr)->capture_default_str();
  v->add_option("--n-generate", p.vae.n_generate)->capture_default_str();
  v->add_option("--n-reconstruct", p.vae.n_reconstruct)->capture_default_str();

  auto* vg = add_common(app, "vaegan", "Train a VAE-GAN on two moons", p);
  vg->add_option("--n-data", p.vaegan.n_data)->capture_default_str();
  vg->add_option("--noise", p.vaegan.noise)->capture_default_str();
  vg->add_option("--hidden", p.vaegan.hidden)->capture_default_str();
  vg->add_option("--latent", p.vaegan.latent)->capture_default_str();
  vg->add_option("--dis-hidden", p.vaegan.dis_hidden)->capture_default_str();
  vg->add_option("--feature-layer", p.vaegan.feature_layer)->capture_default_str();
  vg->add_option("--epochs", p.vaegan.epochs)->capture_default_str();
  vg->add_option("--batch-size", p.vaegan.batch_size)->capture_default_str();
  vg->add_option("--gamma", p.vaegan.gamma)->capture_default_str();
  vg->add_option("--lr-encoder", p.vaegan.lr_encoder)->capture_default_str();
  vg->add_option("--lr-decoder", p.vaegan.lr_decoder)->capture_default_str();
  vg->add_option("--lr-discriminator", p.vaegan.lr_discriminator)->capture_default_str();
  vg->add_option("--n-generate", p.vaegan.n_generate)->capture_default_str();
  vg->add_option("--n-reconstruct", p.vaegan.n_reconstruct)->capture_default_str();

  auto* ic = add_common(app, "identity-check", "ELBO + KL = log evidence and ELBO <= evidence checks", p);
  ic->add_option("--trials", p.identity.trials)->capture_default_str();
  ic->add_option("--conjugate-trials", p.identity.conjugate_trials)->capture_default_str();
  ic->add_option("--max-z", p.identity.max_z)->capture_default_str();
  ic->add_option("--max-x", p.identity.max_x)->capture_default_str();
}

CLI::App* chosen(const CLI::App& app) {
  const auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.front();
}

std::string option_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Re-parses with config-file entries placed ahead of the user's own flags,
/// so that with TakeLast the flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& sub_name,
                                      CLI::App& sub, const std::string& config_path) {
  const ConfigEntries entries = read_config_file(config_path);
  std::vector<std::string> merged;
  auto it = std::find(args.begin(), args.end(), sub_name);
  merged.assign(args.begin(), it + 1);
  for (const auto& [key, value] : entries) {
    const std::string flag = option_name(key);
    if (flag == "--config" || sub.get_option_no_throw(flag) == nullptr) {
      throw ArgumentError("config: unknown key '" + key + "' for " + sub_name);
    }
    merged.push_back(flag + "=" + value);
  }
  merged.insert(merged.end(), it + 1, args.end());
  return merged;
}

void parse_into(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  args.pop_back();  // program name
  app.parse(args);
}

/// Parses args into p. Returns an exit code when parsing already decided the
/// outcome (help or a CLI error), otherwise the chosen subcommand name.
std::variant<int, std::string> parse_args(const std::vector<std::string>& args, std::unique_ptr<Parsed>& p,
                                          std::ostream& out, std::ostream& err) {
  std::vector<std::string> effective = args;
  for (int pass = 0; pass < 2; ++pass) {
    CLI::App app("Variational inference experiments", "varinfer");
    p = std::make_unique<Parsed>();
    build_app(app, *p);
    try {
      parse_into(app, effective);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? static_cast<int>(kExitOk) : static_cast<int>(kExitValidation);
    }
    CLI::App* sub = chosen(app);
    if (pass == 1 || p->config.empty()) return sub->get_name();
    effective = merge_config(args, sub->get_name(), *sub, p->config);
  }
  return kExitValidation;
}

int dispatch(const std::string& name, Parsed& p, std::ostream& out) {
  std::uint64_t seed = 0;
  if (!p.seed.empty()) {
    seed = parse_seed(p.seed);
  } else if (const auto env = seed_from_environment()) {
    seed = *env;
  }
  const OutputDir dir(p.out_dir);
  if (name == "gmm") {
    p.gmm.seed = seed;
    return cmd_gmm(p.gmm, dir, out);
  }
  if (name == "klproj") {
    p.klproj.seed = seed;
    return cmd_klproj(p.klproj, dir, out);
  }
  if (name == "vae") {
    p.vae.seed = seed;
    return cmd_vae(p.vae, dir, out);
  }
  if (name == "vaegan") {
    p.vaegan.seed = seed;
    return cmd_vaegan(p.vaegan, dir, out);
  }
  p.identity.seed = seed;
  return cmd_identity_check(p.identity, dir, out);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = args_in;
  if (args.empty()) args.push_back("varinfer");
  try {
    std::unique_ptr<Parsed> p;
    const auto parsed = parse_args(args, p, out, err);
    if (const int* code = std::get_if<int>(&parsed)) return *code;
    return dispatch(std::get<std::string>(parsed), *p, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace varinfer::cli
