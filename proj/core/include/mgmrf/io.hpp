#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgmrf/inference.hpp"
#include "mgmrf/matern.hpp"
#include "mgmrf/mesh.hpp"

namespace mgmrf {

// 17 significant digits, enough to reproduce any double exactly.
std::string format_double(double v);

// FNV-1a over the bytes of a canonical config string.
std::uint64_t fnv1a_hash(const std::string& text);
std::string hash_hex(std::uint64_t h);

// Provenance comment lines placed at the top of every CSV artifact.
std::string artifact_header(std::uint64_t config_hash, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::string mesh_to_json(const TriangulatedDomain& mesh);
TriangulatedDomain mesh_from_json(const std::string& text);

// Matrix Market coordinate format, general real, 1-based indices on disk.
void write_matrix_market(const std::string& path, const SparseMat& m);
SparseMat read_matrix_market(const std::string& path);

// Raw rows of an x,y,field,value CSV before any mesh binding.
struct ObservationTable {
  std::vector<double> x, y;
  std::vector<int> field_of;
  Vec value;

  int size() const { return static_cast<int>(value.size()); }
};

// Parse failures carry the 1-based line number of the offending row.
ObservationTable read_observation_csv(const std::string& path, int field_count);
void write_observation_csv(const std::string& path, const ObservationTable& table,
                           const std::string& header_comment);

struct IngestResult {
  ObservationSet obs;
  std::vector<int> rejected_rows;  // 0-based data-row indices outside the mesh
};

IngestResult ingest_observations(const std::string& path, const TriangulatedDomain& mesh,
                                 int field_count, const Vec& nugget_variance);

// A fit configuration file: the model block plus free-parameter lists, priors,
// optimizer settings, and the per-field observation nugget.
struct RunSetup {
  FitConfig config;
  Vec nugget_variance;
};

RunSetup run_setup_from_json(const std::string& text);
std::string run_setup_to_json(const RunSetup& setup);

struct ComparisonReport {
  int field_count = 0;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.0;
  bool in_sample = false;          // no holdout: errors are computed on the training rows
  std::vector<int> holdout_rows;   // 0-based observation rows left out, sorted
  std::vector<double> spde_error;  // per field, ||y_hat - y|| / ||y_hat||
  std::vector<double> dense_error;
  bool spde_converged = false;
  // Fitted dense baseline (common scale, fixed smoothness, estimated
  // sigmas and cross-correlations).
  double dense_a = 0.0;
  Vec dense_sigma;
  Mat dense_rho;
  Vec dense_nu;
  double dense_log_likelihood = 0.0;
  bool dense_converged = false;
};

// Hold out a seeded fraction of each field's observations, fit both the
// sparse model and the dense baseline on the rest, and score both on the
// holdout. dense_nu fixes the baseline's per-field smoothness.
ComparisonReport compare_models(const ObservationSet& obs, const TriangulatedDomain& mesh,
                                const FitConfig& fit_config, const Vec& dense_nu,
                                double holdout_fraction, std::uint64_t seed);

std::string comparison_to_json(const ComparisonReport& report, std::uint64_t config_hash);

}  // namespace mgmrf
