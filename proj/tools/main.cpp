// Command-line front end: meshing, sampling, correlation and spectra between
// artifacts on disk, plus fitting, prediction, nugget estimation, and the
// dense-baseline comparison. Every artifact embeds the invocation hash, the
// seed, and the library version so reruns are reproducible byte for byte.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgmrf/errors.hpp"
#include "mgmrf/fem.hpp"
#include "mgmrf/gmrf.hpp"
#include "mgmrf/inference.hpp"
#include "mgmrf/io.hpp"
#include "mgmrf/matern.hpp"
#include "mgmrf/mesh.hpp"
#include "mgmrf/nugget.hpp"
#include "mgmrf/precision.hpp"
#include "mgmrf/spectral.hpp"
#include "mgmrf/version.hpp"

namespace {

using namespace mgmrf;
using nlohmann::json;

json meta_block(std::uint64_t hash, std::uint64_t seed) {
  return {{"config_hash", hash_hex(hash)}, {"seed", seed}, {"version", version}};
}

// Invocation hash: the command, the full config text, and every resolved
// option value, in a fixed order.
std::uint64_t invocation_hash(const std::string& command, const std::string& config_text,
                              const std::string& options) {
  return fnv1a_hash(command + "\n" + config_text + "\n" + options);
}

TriangulatedDomain load_mesh(const std::string& path) {
  return mesh_from_json(read_text_file(path));
}

int nearest_to_centroid(const TriangulatedDomain& mesh) {
  double cx = 0.0, cy = 0.0;
  for (const auto& v : mesh.vertices) {
    cx += v[0];
    cy += v[1];
  }
  cx /= mesh.n_vertices();
  cy /= mesh.n_vertices();
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    const double dx = mesh.vertices[i][0] - cx, dy = mesh.vertices[i][1] - cy;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

struct MeshArgs {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double edge = 0.1, margin = 0.0;
  std::string out = "mesh.json";
};

void run_mesh(const MeshArgs& a) {
  if (!(a.x1 > a.x0) || !(a.y1 > a.y0))
    throw config_error("mesh: region must have positive width and height");
  if (!(a.edge > 0.0)) throw config_error("mesh: edge length must be positive");
  if (a.margin < 0.0) throw config_error("mesh: margin must be >= 0");

  const TriangulatedDomain mesh =
      build_mesh(Rectangle{a.x0, a.y0, a.x1, a.y1}, a.edge, a.margin);
  std::ostringstream opts;
  opts << a.x0 << " " << a.y0 << " " << a.x1 << " " << a.y1 << " " << a.edge << " "
       << a.margin;
  const std::uint64_t hash = invocation_hash("mesh", "", opts.str());

  json j = json::parse(mesh_to_json(mesh));
  j["meta"] = meta_block(hash, 0);
  write_text_file(a.out, j.dump(2) + "\n");
  std::cout << "wrote " << a.out << ": " << mesh.n_vertices() << " vertices, "
            << mesh.n_triangles() << " triangles\n";
}

struct SampleArgs {
  std::string config, mesh, out = "samples.csv", dump_precision;
  int n = 1;
  std::uint64_t seed = 0;
};

void run_sample(const SampleArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  const TriangulatedDomain mesh = load_mesh(a.mesh);
  if (a.n < 1) throw config_error("sample: need n >= 1 draws");

  const SpdeSystemSpec& spec = setup.config.base;
  const FemMatrices fem = assemble_fem(mesh);
  const MultivariateGmrf gmrf = build_precision(spec, fem);
  const CholeskyFactor factor(gmrf.q);
  const Mat draws = sample_many(factor, Vec::Zero(gmrf.q.rows()), a.n, a.seed);

  std::ostringstream opts;
  opts << a.mesh << " " << a.n << " " << a.seed;
  const std::uint64_t hash = invocation_hash("sample", config_text, opts.str());

  const int n_vert = mesh.n_vertices();
  std::ostringstream out;
  out << artifact_header(hash, a.seed);
  out << "draw,field,vertex,x,y,value\n";
  for (int d = 0; d < a.n; ++d)
    for (int f = 0; f < spec.field_count; ++f)
      for (int v = 0; v < n_vert; ++v)
        out << d << "," << f << "," << v << "," << format_double(mesh.vertices[v][0]) << ","
            << format_double(mesh.vertices[v][1]) << ","
            << format_double(draws(f * n_vert + v, d)) << "\n";
  write_text_file(a.out, out.str());
  std::cout << "wrote " << a.out << ": " << a.n << " draws of " << spec.field_count
            << " fields on " << n_vert << " vertices\n";

  if (!a.dump_precision.empty()) {
    write_matrix_market(a.dump_precision, gmrf.q);
    std::cout << "wrote " << a.dump_precision << "\n";
  }
}

struct CorrArgs {
  std::string config, mesh, out = "corr.csv";
  int reference = -1;  // -1: vertex nearest the mesh centroid
};

void run_corr(const CorrArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  const TriangulatedDomain mesh = load_mesh(a.mesh);

  const FemMatrices fem = assemble_fem(mesh);
  const MultivariateGmrf gmrf = build_precision(setup.config.base, fem);
  const int ref = (a.reference >= 0) ? a.reference : nearest_to_centroid(mesh);
  if (ref >= mesh.n_vertices())
    throw config_error("corr: reference vertex out of range");
  const CorrelationSurfaces cs = correlation_surfaces(gmrf, ref);

  std::ostringstream opts;
  opts << a.mesh << " " << ref;
  const std::uint64_t hash = invocation_hash("corr", config_text, opts.str());

  const int p = gmrf.field_count;
  const int n_vert = mesh.n_vertices();
  std::ostringstream out;
  out << artifact_header(hash, 0);
  out << "# reference_vertex=" << ref << "\n";
  out << "vertex,x,y";
  for (const auto& pr : cs.pairs) out << ",corr_" << pr[0] << "_" << pr[1];
  for (int f = 0; f < p; ++f) out << ",sd_" << f;
  out << "\n";
  for (int v = 0; v < n_vert; ++v) {
    out << v << "," << format_double(mesh.vertices[v][0]) << ","
        << format_double(mesh.vertices[v][1]);
    for (size_t q = 0; q < cs.pairs.size(); ++q) out << "," << format_double(cs.corr[q][v]);
    for (int f = 0; f < p; ++f) out << "," << format_double(cs.marginal_sd[f * n_vert + v]);
    out << "\n";
  }
  write_text_file(a.out, out.str());
  std::cout << "wrote " << a.out << ": " << cs.pairs.size() << " correlation surfaces\n";
}

struct SpectraArgs {
  std::string config, out = "spectra.csv";
  double kmin = 0.01, kmax = 100.0;
  int nk = 200;
  bool with_matern = false;
};

void run_spectra(const SpectraArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  const SpdeSystemSpec& spec = setup.config.base;
  if (spec.field_count != 2) throw config_error("spectra: bivariate models only");
  if (!(a.kmin > 0.0) || !(a.kmax > a.kmin))
    throw config_error("spectra: need 0 < kmin < kmax");
  if (a.nk < 2) throw config_error("spectra: need at least 2 frequencies");

  MatchedMaternParams matched;
  if (a.with_matern) matched = match_parameters(spec);

  std::ostringstream opts;
  opts << a.kmin << " " << a.kmax << " " << a.nk << " " << a.with_matern;
  const std::uint64_t hash = invocation_hash("spectra", config_text, opts.str());

  std::ostringstream out;
  out << artifact_header(hash, 0);
  out << "k,s11,s12,s22";
  if (a.with_matern) out << ",m11,m12,m22";
  out << "\n";
  const double ratio = a.kmax / a.kmin;
  for (int t = 0; t < a.nk; ++t) {
    const double k = a.kmin * std::pow(ratio, static_cast<double>(t) / (a.nk - 1));
    const Eigen::Matrix2d s = power_spectrum_full(spec, k, 0.0);
    out << format_double(k) << "," << format_double(s(0, 0)) << "," << format_double(s(0, 1))
        << "," << format_double(s(1, 1));
    if (a.with_matern) {
      const double m11 =
          matern_spectrum(matched.sigma1 * matched.sigma1, matched.nu11, matched.a, 2, k);
      const double m12 = matched.rho12 * matched.sigma1 * matched.sigma2 *
                         matern_spectrum(1.0, matched.nu12, matched.a, 2, k);
      const double m22 =
          matern_spectrum(matched.sigma2 * matched.sigma2, matched.nu22, matched.a, 2, k);
      out << "," << format_double(m11) << "," << format_double(m12) << ","
          << format_double(m22);
    }
    out << "\n";
  }
  write_text_file(a.out, out.str());
  std::cout << "wrote " << a.out << ": " << a.nk << " frequencies\n";
}

struct FitArgs {
  std::string config, mesh, obs, out = "fit.json";
};

void run_fit(const FitArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  if (setup.nugget_variance.size() == 0)
    throw config_error("fit: config must set nugget_variance");
  const TriangulatedDomain mesh = load_mesh(a.mesh);
  const IngestResult ingest = ingest_observations(a.obs, mesh, setup.config.base.field_count,
                                                  setup.nugget_variance);
  if (!ingest.rejected_rows.empty())
    std::cout << "dropped " << ingest.rejected_rows.size()
              << " observations outside the mesh\n";

  const FemMatrices fem = assemble_fem(mesh);
  const FitResult fr = fit(setup.config, fem, ingest.obs);

  std::ostringstream opts;
  opts << a.mesh << " " << a.obs;
  const std::uint64_t hash = invocation_hash("fit", config_text, opts.str());

  json j;
  j["meta"] = meta_block(hash, 0);
  j["model"] = json::parse(spec_to_json(fr.estimate));
  j["free_kappa"] = json::array();
  j["kappa_hat"] = json::array();
  j["kappa_sd"] = json::array();
  for (size_t i = 0; i < setup.config.free_kappa.size(); ++i) {
    const auto& e = setup.config.free_kappa[i];
    j["free_kappa"].push_back({e[0], e[1]});
    j["kappa_hat"].push_back(fr.estimate.kappa(e[0], e[1]));
    j["kappa_sd"].push_back(fr.kappa_sd[i]);
  }
  j["free_b"] = json::array();
  j["b_hat"] = json::array();
  j["b_sd"] = json::array();
  for (size_t i = 0; i < setup.config.free_b.size(); ++i) {
    const auto& e = setup.config.free_b[i];
    j["free_b"].push_back({e[0], e[1]});
    j["b_hat"].push_back(fr.estimate.b(e[0], e[1]));
    j["b_sd"].push_back(fr.b_sd[i]);
  }
  j["log_posterior"] = fr.log_posterior;
  j["iterations"] = fr.iterations;
  j["grad_norm"] = fr.grad_norm;
  j["converged"] = fr.converged;
  j["sd_reliable"] = fr.sd_reliable;
  j["ascent"] = fr.ascent;
  j["rejected_rows"] = ingest.rejected_rows;
  write_text_file(a.out, j.dump(2) + "\n");
  std::cout << "wrote " << a.out << (fr.converged ? "" : " (optimizer did not converge)")
            << "\n";
}

struct PredictArgs {
  std::string config, mesh, obs, targets, out = "predictions.csv";
};

void run_predict(const PredictArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  if (setup.nugget_variance.size() == 0)
    throw config_error("predict: config must set nugget_variance");
  const TriangulatedDomain mesh = load_mesh(a.mesh);
  const int p = setup.config.base.field_count;
  const IngestResult ingest = ingest_observations(a.obs, mesh, p, setup.nugget_variance);
  const ObservationTable targets = read_observation_csv(a.targets, p);
  if (targets.size() == 0) throw config_error(a.targets + ": no target rows");

  const FemMatrices fem = assemble_fem(mesh);
  const MultivariateGmrf gmrf = build_precision(setup.config.base, fem);
  const ConditionedGmrf cond = condition(gmrf, ingest.obs);
  const PredictionResult pred =
      predict(cond, mesh, targets.x, targets.y, targets.field_of, targets.value);

  std::ostringstream opts;
  opts << a.mesh << " " << a.obs << " " << a.targets;
  const std::uint64_t hash = invocation_hash("predict", config_text, opts.str());

  std::ostringstream out;
  out << artifact_header(hash, 0);
  for (int f = 0; f < p; ++f)
    out << "# relative_error_field" << f << "=" << format_double(pred.relative_error[f])
        << "\n";
  out << "x,y,field,actual,predicted\n";
  for (int r = 0; r < targets.size(); ++r)
    out << format_double(targets.x[r]) << "," << format_double(targets.y[r]) << ","
        << targets.field_of[r] << "," << format_double(targets.value[r]) << ","
        << format_double(pred.predicted[r]) << "\n";
  write_text_file(a.out, out.str());
  std::cout << "wrote " << a.out << "\n";
}

struct NuggetArgs {
  std::string config, mesh, obs, out = "nugget_trajectory.csv";
  std::vector<double> tau2_init;
  int max_iters = 50;
  double tol = 1e-3;
  bool plug_in = false;
};

int run_nugget(const NuggetArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  const TriangulatedDomain mesh = load_mesh(a.mesh);
  const int p = setup.config.base.field_count;

  Vec init;
  if (!a.tau2_init.empty()) {
    if (static_cast<int>(a.tau2_init.size()) != p)
      throw config_error("nugget: --tau2-init needs one value per field");
    init = Eigen::Map<const Vec>(a.tau2_init.data(), p);
  } else if (setup.nugget_variance.size() == p) {
    init = setup.nugget_variance;
  } else {
    throw config_error("nugget: set --tau2-init or nugget_variance in the config");
  }

  const IngestResult ingest = ingest_observations(a.obs, mesh, p, init);
  NuggetOptions options;
  options.tol = a.tol;
  options.max_iters = a.max_iters;
  options.leave_one_out = !a.plug_in;
  const NuggetState state =
      run_bias_correction(ingest.obs, mesh, setup.config, init, options);

  std::ostringstream opts;
  opts << a.mesh << " " << a.obs << " " << a.max_iters << " " << a.tol << " " << a.plug_in;
  const std::uint64_t hash = invocation_hash("nugget", config_text, opts.str());

  std::ostringstream out;
  out << artifact_header(hash, 0);
  out << "# converged=" << (state.converged ? 1 : 0) << "\n";
  out << "# clamped=" << (state.clamped ? 1 : 0) << "\n";
  out << "# aborted=" << (state.aborted ? 1 : 0) << "\n";
  out << "iteration";
  for (int f = 0; f < p; ++f) out << ",tau2_field" << f;
  out << "\n";
  for (size_t it = 0; it < state.history.size(); ++it) {
    out << it;
    for (int f = 0; f < p; ++f) out << "," << format_double(state.history[it][f]);
    out << "\n";
  }
  write_text_file(a.out, out.str());
  std::cout << "wrote " << a.out << ": " << state.iteration << " iterations"
            << (state.converged ? ", converged" : "") << "\n";
  if (state.aborted) {
    std::cerr << "bias correction aborted: " << state.diagnostic << "\n";
    return 3;
  }
  return 0;
}

struct MatchArgs {
  std::string config, out = "match.json";
};

void run_match(const MatchArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  const MatchedMaternParams m = match_parameters(setup.config.base);
  const std::uint64_t hash = invocation_hash("match", config_text, "");

  json j;
  j["meta"] = meta_block(hash, 0);
  j["sigma1"] = m.sigma1;
  j["sigma2"] = m.sigma2;
  j["rho12"] = m.rho12;
  j["nu11"] = m.nu11;
  j["nu12"] = m.nu12;
  j["nu22"] = m.nu22;
  j["a"] = m.a;
  j["effective_range_11"] = effective_range(m.nu11, m.a);
  write_text_file(a.out, j.dump(2) + "\n");
  std::cout << "wrote " << a.out << "\n";
}

struct CompareArgs {
  std::string config, mesh, obs, out = "comparison.json";
  double holdout = 0.25;
  std::uint64_t seed = 0;
  std::vector<double> nu;
};

void run_compare(const CompareArgs& a) {
  const std::string config_text = read_text_file(a.config);
  const RunSetup setup = run_setup_from_json(config_text);
  if (setup.nugget_variance.size() == 0)
    throw config_error("compare: config must set nugget_variance");
  const TriangulatedDomain mesh = load_mesh(a.mesh);
  const int p = setup.config.base.field_count;
  const IngestResult ingest = ingest_observations(a.obs, mesh, p, setup.nugget_variance);

  Vec nu = Vec::Ones(p);
  if (!a.nu.empty()) {
    if (static_cast<int>(a.nu.size()) != p)
      throw config_error("compare: --nu needs one value per field");
    nu = Eigen::Map<const Vec>(a.nu.data(), p);
  }

  const ComparisonReport report =
      compare_models(ingest.obs, mesh, setup.config, nu, a.holdout, a.seed);

  std::ostringstream opts;
  opts << a.mesh << " " << a.obs << " " << a.holdout << " " << a.seed;
  for (double v : a.nu) opts << " " << v;
  const std::uint64_t hash = invocation_hash("compare", config_text, opts.str());
  write_text_file(a.out, comparison_to_json(report, hash) + "\n");
  std::cout << "wrote " << a.out << "\n";
  for (int f = 0; f < p; ++f)
    std::cout << "field " << f << ": sparse " << format_double(report.spde_error[f])
              << " dense " << format_double(report.dense_error[f]) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate Gaussian Markov random field toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  MeshArgs mesh_args;
  auto* mesh_cmd = app.add_subcommand("mesh", "Triangulate a rectangle");
  mesh_cmd->add_option("--x0", mesh_args.x0, "Left edge");
  mesh_cmd->add_option("--y0", mesh_args.y0, "Bottom edge");
  mesh_cmd->add_option("--x1", mesh_args.x1, "Right edge");
  mesh_cmd->add_option("--y1", mesh_args.y1, "Top edge");
  mesh_cmd->add_option("--edge", mesh_args.edge, "Target edge length");
  mesh_cmd->add_option("--margin", mesh_args.margin, "Extension margin on every side");
  mesh_cmd->add_option("-o,--out", mesh_args.out, "Output mesh JSON");
  mesh_cmd->callback([&] { run_mesh(mesh_args); });

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw field realizations");
  sample_cmd->add_option("-c,--config", sample_args.config, "Model config JSON")->required();
  sample_cmd->add_option("-m,--mesh", sample_args.mesh, "Mesh JSON")->required();
  sample_cmd->add_option("-n,--draws", sample_args.n, "Number of draws");
  sample_cmd->add_option("-s,--seed", sample_args.seed, "RNG seed");
  sample_cmd->add_option("-o,--out", sample_args.out, "Output CSV");
  sample_cmd->add_option("--dump-precision", sample_args.dump_precision,
                         "Also write the precision matrix (Matrix Market)");
  sample_cmd->callback([&] { run_sample(sample_args); });

  CorrArgs corr_args;
  auto* corr_cmd = app.add_subcommand("corr", "Correlation surfaces from a reference vertex");
  corr_cmd->add_option("-c,--config", corr_args.config, "Model config JSON")->required();
  corr_cmd->add_option("-m,--mesh", corr_args.mesh, "Mesh JSON")->required();
  corr_cmd->add_option("-r,--reference", corr_args.reference,
                       "Reference vertex (default: nearest the centroid)");
  corr_cmd->add_option("-o,--out", corr_args.out, "Output CSV");
  corr_cmd->callback([&] { run_corr(corr_args); });

  SpectraArgs spectra_args;
  auto* spectra_cmd = app.add_subcommand("spectra", "Power spectra along a frequency ray");
  spectra_cmd->add_option("-c,--config", spectra_args.config, "Model config JSON")->required();
  spectra_cmd->add_option("--kmin", spectra_args.kmin, "Smallest frequency magnitude");
  spectra_cmd->add_option("--kmax", spectra_args.kmax, "Largest frequency magnitude");
  spectra_cmd->add_option("--nk", spectra_args.nk, "Number of log-spaced frequencies");
  spectra_cmd->add_flag("--matern", spectra_args.with_matern,
                        "Include the matched Matern spectra");
  spectra_cmd->add_option("-o,--out", spectra_args.out, "Output CSV");
  spectra_cmd->callback([&] { run_spectra(spectra_args); });

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Maximum a posteriori parameter estimation");
  fit_cmd->add_option("-c,--config", fit_args.config, "Fit config JSON")->required();
  fit_cmd->add_option("-m,--mesh", fit_args.mesh, "Mesh JSON")->required();
  fit_cmd->add_option("--obs", fit_args.obs, "Observations CSV")->required();
  fit_cmd->add_option("-o,--out", fit_args.out, "Output report JSON");
  fit_cmd->callback([&] { run_fit(fit_args); });

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Kriging at target locations");
  predict_cmd->add_option("-c,--config", predict_args.config, "Fit config JSON")->required();
  predict_cmd->add_option("-m,--mesh", predict_args.mesh, "Mesh JSON")->required();
  predict_cmd->add_option("--obs", predict_args.obs, "Observations CSV")->required();
  predict_cmd->add_option("--targets", predict_args.targets, "Targets CSV")->required();
  predict_cmd->add_option("-o,--out", predict_args.out, "Output CSV");
  predict_cmd->callback([&] { run_predict(predict_args); });

  NuggetArgs nugget_args;
  auto* nugget_cmd = app.add_subcommand("nugget", "Iterative nugget variance estimation");
  nugget_cmd->add_option("-c,--config", nugget_args.config, "Fit config JSON")->required();
  nugget_cmd->add_option("-m,--mesh", nugget_args.mesh, "Mesh JSON")->required();
  nugget_cmd->add_option("--obs", nugget_args.obs, "Observations CSV")->required();
  nugget_cmd->add_option("--tau2-init", nugget_args.tau2_init,
                         "Initial nugget variances, one per field");
  nugget_cmd->add_option("--max-iters", nugget_args.max_iters, "Iteration cap");
  nugget_cmd->add_option("--tol", nugget_args.tol, "Relative convergence tolerance");
  nugget_cmd->add_flag("--plug-in", nugget_args.plug_in,
                       "Use in-sample residuals instead of leave-one-out");
  nugget_cmd->add_option("-o,--out", nugget_args.out, "Trajectory CSV");
  nugget_cmd->callback([&] { exit_code = run_nugget(nugget_args); });

  MatchArgs match_args;
  auto* match_cmd = app.add_subcommand("match", "Matched Matern parameters");
  match_cmd->add_option("-c,--config", match_args.config, "Model config JSON")->required();
  match_cmd->add_option("-o,--out", match_args.out, "Output JSON");
  match_cmd->callback([&] { run_match(match_args); });

  CompareArgs compare_args;
  auto* compare_cmd =
      app.add_subcommand("compare", "Hold-out comparison against the dense baseline");
  compare_cmd->add_option("-c,--config", compare_args.config, "Fit config JSON")->required();
  compare_cmd->add_option("-m,--mesh", compare_args.mesh, "Mesh JSON")->required();
  compare_cmd->add_option("--obs", compare_args.obs, "Observations CSV")->required();
  compare_cmd->add_option("--holdout", compare_args.holdout, "Held-out fraction per field");
  compare_cmd->add_option("-s,--seed", compare_args.seed, "Split seed");
  compare_cmd->add_option("--nu", compare_args.nu, "Baseline smoothness, one per field");
  compare_cmd->add_option("-o,--out", compare_args.out, "Output report JSON");
  compare_cmd->callback([&] { run_compare(compare_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return exit_code;
}
