#include "mgmrf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "mgmrf/errors.hpp"
#include "mgmrf/fem.hpp"
#include "mgmrf/precision.hpp"
#include "mgmrf/rng.hpp"
#include "mgmrf/version.hpp"

namespace mgmrf {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string artifact_header(std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream out;
  out << "# config_hash=" << hash_hex(config_hash) << "\n";
  out << "# seed=" << seed << "\n";
  out << "# version=" << version << "\n";
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path);
  out << content;
  if (!out) throw config_error("write failed for " + path);
}

std::string mesh_to_json(const TriangulatedDomain& mesh) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v[0], v[1]});
  j["triangles"] = json::array();
  for (const auto& t : mesh.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  json b = json::array();
  for (bool f : mesh.boundary) b.push_back(f ? 1 : 0);
  j["boundary"] = std::move(b);
  j["extension_margin"] = mesh.extension_margin;
  return j.dump(2);
}

namespace {

// Boundary vertices sit on an edge used by exactly one triangle.
std::vector<bool> boundary_from_triangles(const TriangulatedDomain& mesh) {
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int u = t[e], v = t[(e + 1) % 3];
      edge_count[{std::min(u, v), std::max(u, v)}]++;
    }
  std::vector<bool> out(mesh.vertices.size(), false);
  for (const auto& [edge, count] : edge_count)
    if (count == 1) {
      out[edge.first] = true;
      out[edge.second] = true;
    }
  return out;
}

}  // namespace

TriangulatedDomain mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("mesh: invalid JSON: ") + e.what());
  }
  if (!j.contains("vertices") || !j["vertices"].is_array())
    throw config_error("mesh: missing vertices array");
  if (!j.contains("triangles") || !j["triangles"].is_array())
    throw config_error("mesh: missing triangles array");

  TriangulatedDomain mesh;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != 2) throw config_error("mesh: vertices must be [x, y]");
    mesh.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  const int n = mesh.n_vertices();
  for (const auto& t : j["triangles"]) {
    if (!t.is_array() || t.size() != 3)
      throw config_error("mesh: triangles must be index triples");
    std::array<int, 3> tri{t[0].get<int>(), t[1].get<int>(), t[2].get<int>()};
    for (int k : tri)
      if (k < 0 || k >= n) throw config_error("mesh: triangle index out of range");
    mesh.triangles.push_back(tri);
  }
  if (j.contains("boundary")) {
    const auto& b = j["boundary"];
    if (!b.is_array() || static_cast<int>(b.size()) != n)
      throw config_error("mesh: boundary must have one flag per vertex");
    mesh.boundary.resize(n);
    for (int i = 0; i < n; ++i) mesh.boundary[i] = b[i].get<int>() != 0;
  } else {
    mesh.boundary = boundary_from_triangles(mesh);
  }
  if (j.contains("extension_margin")) mesh.extension_margin = j["extension_margin"].get<double>();
  return mesh;
}

void write_matrix_market(const std::string& path, const SparseMat& m) {
  SparseMat c = m;
  c.makeCompressed();
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << c.rows() << " " << c.cols() << " " << c.nonZeros() << "\n";
  for (int k = 0; k < c.outerSize(); ++k)
    for (SparseMat::InnerIterator it(c, k); it; ++it)
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << format_double(it.value())
          << "\n";
  write_text_file(path, out.str());
}

SparseMat read_matrix_market(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw config_error(path + ": not a Matrix Market file");
  const bool symmetric = line.find("symmetric") != std::string::npos;
  if (line.find("coordinate") == std::string::npos || line.find("real") == std::string::npos)
    throw config_error(path + ": only coordinate real matrices are supported");

  do {
    if (!std::getline(in, line)) throw config_error(path + ": missing size line");
  } while (!line.empty() && line[0] == '%');

  std::istringstream sizes(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    throw config_error(path + ": malformed size line");

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    long i = 0, jj = 0;
    double v = 0.0;
    if (!(in >> i >> jj >> v))
      throw config_error(path + ": truncated at entry " + std::to_string(k + 1));
    if (i < 1 || i > rows || jj < 1 || jj > cols)
      throw config_error(path + ": index out of range at entry " + std::to_string(k + 1));
    trips.emplace_back(static_cast<int>(i - 1), static_cast<int>(jj - 1), v);
    if (symmetric && i != jj)
      trips.emplace_back(static_cast<int>(jj - 1), static_cast<int>(i - 1), v);
  }
  SparseMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, ',')) out.push_back(trim(tok));
  return out;
}

double parse_double(const std::string& tok, const std::string& path, int line_no,
                    const char* column) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != tok.size())
    throw config_error(path + ": line " + std::to_string(line_no) + ": bad " + column +
                       " value '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, const std::string& path, int line_no,
              const char* column) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != tok.size())
    throw config_error(path + ": line " + std::to_string(line_no) + ": bad " + column +
                       " value '" + tok + "'");
  return v;
}

}  // namespace

ObservationTable read_observation_csv(const std::string& path, int field_count) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  ObservationTable table;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      auto cols = split_csv_row(t);
      if (cols.size() != 4 || cols[0] != "x" || cols[1] != "y" || cols[2] != "field" ||
          cols[3] != "value")
        throw config_error(path + ": line " + std::to_string(line_no) +
                           ": expected header 'x,y,field,value'");
      header_seen = true;
      continue;
    }
    auto cols = split_csv_row(t);
    if (cols.size() != 4)
      throw config_error(path + ": line " + std::to_string(line_no) + ": expected 4 columns, got " +
                         std::to_string(cols.size()));
    table.x.push_back(parse_double(cols[0], path, line_no, "x"));
    table.y.push_back(parse_double(cols[1], path, line_no, "y"));
    const int f = parse_int(cols[2], path, line_no, "field");
    if (f < 0 || f >= field_count)
      throw config_error(path + ": line " + std::to_string(line_no) + ": field index " +
                         std::to_string(f) + " out of range [0, " +
                         std::to_string(field_count) + ")");
    table.field_of.push_back(f);
    values.push_back(parse_double(cols[3], path, line_no, "value"));
  }
  if (!header_seen) throw config_error(path + ": missing 'x,y,field,value' header");
  table.value = Eigen::Map<Vec>(values.data(), static_cast<int>(values.size()));
  return table;
}

void write_observation_csv(const std::string& path, const ObservationTable& table,
                           const std::string& header_comment) {
  std::ostringstream out;
  out << header_comment;
  out << "x,y,field,value\n";
  for (int r = 0; r < table.size(); ++r)
    out << format_double(table.x[r]) << "," << format_double(table.y[r]) << ","
        << table.field_of[r] << "," << format_double(table.value[r]) << "\n";
  write_text_file(path, out.str());
}

IngestResult ingest_observations(const std::string& path, const TriangulatedDomain& mesh,
                                 int field_count, const Vec& nugget_variance) {
  ObservationTable table = read_observation_csv(path, field_count);
  if (table.size() == 0) throw config_error(path + ": no data rows");
  IngestResult out;
  out.obs = make_observations(mesh, field_count, table.x, table.y, table.field_of,
                              table.value, nugget_variance, &out.rejected_rows);
  return out;
}

RunSetup run_setup_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("run config: invalid JSON: ") + e.what());
  }
  if (!j.contains("model")) throw config_error("run config: missing model block");

  RunSetup setup;
  setup.config.base = spec_from_json(j["model"].dump());
  const int p = setup.config.base.field_count;

  auto read_pairs = [&](const char* key) {
    std::vector<std::array<int, 2>> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array())
      throw config_error(std::string("run config: ") + key + " must be an array of [i, j]");
    for (const auto& e : j[key]) {
      if (!e.is_array() || e.size() != 2)
        throw config_error(std::string("run config: ") + key + " entries must be [i, j]");
      out.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return out;
  };
  setup.config.free_kappa = read_pairs("free_kappa");
  setup.config.free_b = read_pairs("free_b");
  setup.config.tie_noise_kappa = j.value("tie_noise_kappa", true);
  setup.config.prior_kappa_log_sd = j.value("prior_kappa_log_sd", 10.0);
  setup.config.prior_b_sd = j.value("prior_b_sd", 10.0);
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    setup.config.optimizer.max_iters = o.value("max_iters", 500);
    setup.config.optimizer.grad_tol = o.value("grad_tol", 1e-5);
    setup.config.optimizer.fd_step = o.value("fd_step", 1e-5);
    setup.config.optimizer.hess_step = o.value("hess_step", 1e-3);
    setup.config.optimizer.n_starts = o.value("n_starts", 3);
  }
  setup.config.validate();

  if (j.contains("nugget_variance")) {
    auto nv = j["nugget_variance"].get<std::vector<double>>();
    if (static_cast<int>(nv.size()) != p)
      throw config_error("run config: nugget_variance must have one entry per field");
    setup.nugget_variance = Eigen::Map<Vec>(nv.data(), p);
    for (int i = 0; i < p; ++i)
      if (!(setup.nugget_variance[i] > 0.0))
        throw config_error("run config: nugget_variance entries must be positive");
  }
  return setup;
}

std::string run_setup_to_json(const RunSetup& setup) {
  json j;
  j["model"] = json::parse(spec_to_json(setup.config.base));
  j["free_kappa"] = json::array();
  for (const auto& e : setup.config.free_kappa) j["free_kappa"].push_back({e[0], e[1]});
  j["free_b"] = json::array();
  for (const auto& e : setup.config.free_b) j["free_b"].push_back({e[0], e[1]});
  j["tie_noise_kappa"] = setup.config.tie_noise_kappa;
  j["prior_kappa_log_sd"] = setup.config.prior_kappa_log_sd;
  j["prior_b_sd"] = setup.config.prior_b_sd;
  j["optimizer"] = {{"max_iters", setup.config.optimizer.max_iters},
                    {"grad_tol", setup.config.optimizer.grad_tol},
                    {"fd_step", setup.config.optimizer.fd_step},
                    {"hess_step", setup.config.optimizer.hess_step},
                    {"n_starts", setup.config.optimizer.n_starts}};
  if (setup.nugget_variance.size() > 0)
    j["nugget_variance"] = std::vector<double>(
        setup.nugget_variance.data(), setup.nugget_variance.data() + setup.nugget_variance.size());
  return j.dump(2);
}

namespace {

std::vector<double> per_field_relative_error(int field_count, const Vec& predicted,
                                             const std::vector<int>& field_of,
                                             const Vec& actual) {
  std::vector<double> out(field_count, 0.0);
  for (int f = 0; f < field_count; ++f) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < predicted.size(); ++r) {
      if (field_of[r] != f) continue;
      num += (predicted[r] - actual[r]) * (predicted[r] - actual[r]);
      den += predicted[r] * predicted[r];
    }
    out[f] = (den > 0.0) ? std::sqrt(num / den) : 0.0;
  }
  return out;
}

ObservationSet subset_observations(const ObservationSet& obs, const TriangulatedDomain& mesh,
                                   const std::vector<int>& rows) {
  std::vector<double> x, y;
  std::vector<int> f;
  Vec v(static_cast<int>(rows.size()));
  int k = 0;
  for (int r : rows) {
    x.push_back(obs.x[r]);
    y.push_back(obs.y[r]);
    f.push_back(obs.field_of[r]);
    v[k++] = obs.value[r];
  }
  return make_observations(mesh, obs.field_count, x, y, f, v, obs.nugget_variance);
}

}  // namespace

ComparisonReport compare_models(const ObservationSet& obs, const TriangulatedDomain& mesh,
                                const FitConfig& fit_config, const Vec& dense_nu,
                                double holdout_fraction, std::uint64_t seed) {
  const int p = obs.field_count;
  if (dense_nu.size() != p)
    throw config_error("compare: one baseline smoothness per field required");
  for (int f = 0; f < p; ++f)
    if (!(dense_nu[f] > 0.0)) throw config_error("compare: baseline smoothness must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw config_error("compare: holdout fraction must be in [0, 1) so training data remains");

  ComparisonReport report;
  report.field_count = p;
  report.seed = seed;
  report.holdout_fraction = holdout_fraction;
  report.dense_nu = dense_nu;

  // Seeded per-field split; shuffling each field separately keeps the holdout
  // balanced the way the source data is.
  std::vector<int> train_rows, holdout_rows;
  PhiloxRng rng(seed);
  for (int f = 0; f < p; ++f) {
    std::vector<int> rows;
    for (int r = 0; r < obs.size(); ++r)
      if (obs.field_of[r] == f) rows.push_back(r);
    for (int i = static_cast<int>(rows.size()) - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform() * (i + 1));
      if (j > i) j = i;
      std::swap(rows[i], rows[j]);
    }
    const int h = static_cast<int>(std::floor(holdout_fraction * rows.size()));
    holdout_rows.insert(holdout_rows.end(), rows.begin(), rows.begin() + h);
    train_rows.insert(train_rows.end(), rows.begin() + h, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(holdout_rows.begin(), holdout_rows.end());
  report.in_sample = holdout_rows.empty();
  report.holdout_rows = holdout_rows;
  const std::vector<int>& eval_rows = report.in_sample ? train_rows : holdout_rows;
  if (train_rows.empty()) throw config_error("compare: no training observations");

  const ObservationSet train = subset_observations(obs, mesh, train_rows);

  std::vector<double> ex, ey;
  std::vector<int> ef;
  Vec ev(static_cast<int>(eval_rows.size()));
  std::vector<std::array<double, 2>> eloc;
  int k = 0;
  for (int r : eval_rows) {
    ex.push_back(obs.x[r]);
    ey.push_back(obs.y[r]);
    ef.push_back(obs.field_of[r]);
    eloc.push_back({obs.x[r], obs.y[r]});
    ev[k++] = obs.value[r];
  }

  const FemMatrices fem = assemble_fem(mesh);
  const FitResult fitted = fit(fit_config, fem, train);
  report.spde_converged = fitted.converged;
  const MultivariateGmrf gmrf = build_precision(fitted.estimate, fem);
  const ConditionedGmrf cond = condition(gmrf, train);
  const PredictionResult pred = predict(cond, mesh, ex, ey, ef, ev);
  report.spde_error = per_field_relative_error(p, pred.predicted, ef, ev);

  // Dense baseline: common scale, fixed smoothness, maximum likelihood over
  // (log a, log sigma_f, atanh rho_ij).
  Vec sigma0(p);
  for (int f = 0; f < p; ++f) {
    double sum = 0.0, sum2 = 0.0;
    int cnt = 0;
    for (int r = 0; r < train.size(); ++r) {
      if (train.field_of[r] != f) continue;
      sum += train.value[r];
      sum2 += train.value[r] * train.value[r];
      ++cnt;
    }
    const double var = (cnt > 1) ? (sum2 - sum * sum / cnt) / (cnt - 1) : 1.0;
    sigma0[f] = (var > 0.0) ? std::sqrt(var) : 1.0;
  }
  double xmin = ex[0], xmax = ex[0], ymin = ey[0], ymax = ey[0];
  for (int r = 0; r < train.size(); ++r) {
    xmin = std::min(xmin, train.x[r]);
    xmax = std::max(xmax, train.x[r]);
    ymin = std::min(ymin, train.y[r]);
    ymax = std::max(ymax, train.y[r]);
  }
  const double diam = std::hypot(xmax - xmin, ymax - ymin);
  const double nu_mean = dense_nu.mean();
  const double a0 = (diam > 0.0) ? std::sqrt(8.0 * nu_mean) / (0.25 * diam) : 1.0;

  const int n_rho = p * (p - 1) / 2;
  Vec theta0(1 + p + n_rho);
  theta0[0] = std::log(a0);
  for (int f = 0; f < p; ++f) theta0[1 + f] = std::log(sigma0[f]);
  for (int i = 0; i < n_rho; ++i) theta0[1 + p + i] = 0.0;

  auto unpack_dense = [&](const Vec& th) {
    const double a = std::exp(th[0]);
    Vec sigma(p);
    for (int f = 0; f < p; ++f) sigma[f] = std::exp(th[1 + f]);
    Mat rho = Mat::Identity(p, p);
    int idx = 1 + p;
    for (int i = 0; i < p; ++i)
      for (int jj = i + 1; jj < p; ++jj) {
        rho(i, jj) = rho(jj, i) = std::tanh(th[idx++]);
      }
    return parsimonious_matern(sigma, dense_nu, a, rho);
  };
  const Objective neg_loglik = [&](const Vec& th) {
    try {
      return -matern_log_likelihood(unpack_dense(th), train);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  OptimizerOptions dense_opts;
  const OptimizeResult opt = minimize_bfgs(neg_loglik, theta0, dense_opts);
  const MaternCrossCovariance dense = unpack_dense(opt.x);
  report.dense_converged = opt.converged;
  report.dense_a = dense.a(0, 0);
  report.dense_sigma = dense.sigma;
  report.dense_rho = dense.rho;
  report.dense_log_likelihood = -opt.f;

  const KrigeResult krige = dense_krige(dense, train, eloc, ef);
  report.dense_error = per_field_relative_error(p, krige.mean, ef, ev);
  return report;
}

std::string comparison_to_json(const ComparisonReport& report, std::uint64_t config_hash) {
  json j;
  j["meta"] = {{"config_hash", hash_hex(config_hash)},
               {"seed", report.seed},
               {"version", version}};
  j["field_count"] = report.field_count;
  j["holdout_fraction"] = report.holdout_fraction;
  j["in_sample"] = report.in_sample;
  j["holdout_rows"] = report.holdout_rows;
  j["spde"] = {{"relative_error", report.spde_error}, {"converged", report.spde_converged}};
  json rho = json::array();
  for (int i = 0; i < report.dense_rho.rows(); ++i) {
    json row = json::array();
    for (int jj = 0; jj < report.dense_rho.cols(); ++jj) row.push_back(report.dense_rho(i, jj));
    rho.push_back(row);
  }
  j["dense"] = {
      {"relative_error", report.dense_error},
      {"converged", report.dense_converged},
      {"a", report.dense_a},
      {"sigma", std::vector<double>(report.dense_sigma.data(),
                                    report.dense_sigma.data() + report.dense_sigma.size())},
      {"rho", std::move(rho)},
      {"nu", std::vector<double>(report.dense_nu.data(),
                                 report.dense_nu.data() + report.dense_nu.size())},
      {"log_likelihood", report.dense_log_likelihood}};
  return j.dump(2);
}

}  // namespace mgmrf
