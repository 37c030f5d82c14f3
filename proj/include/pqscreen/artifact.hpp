#pragma once

#include "pqscreen/cohort.hpp"
#include "pqscreen/model.hpp"
#include "pqscreen/select.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pqscreen {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr const char* kPublishedModelId = "paper-eq1";

struct TrainingMetadata {
  std::uint64_t seed = 0;
  Hyperparameters hyperparameters;
  std::string data_fingerprint;  // 16 hex digits, empty when unknown
  std::string data_path;  // training CSV, empty when unknown
  std::size_t n_train = 0;
  nlohmann::json run_config = nlohmann::json::object();
};

/// A fitted pipeline: the selector maps the named input features to the
/// model's inputs.
struct ModelArtifact {
  std::string model_id;
  std::vector<std::string> feature_names;
  Selector selector;
  Model model;
  TrainingMetadata training;

  ModelKind kind() const { return kind_of(model); }
  /// Throws Error("invalid_model") on any inconsistency.
  void validate() const;
};

/// The published questionnaire model: raw canonical features, coefficients
/// and intercept as printed.
ModelArtifact published_pq_artifact();

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
ModelArtifact artifact_from_json(const nlohmann::json& doc);

/// `name_or_path` may be the built-in id "paper-eq1" or a JSON file.
ModelArtifact load_artifact(const std::string& name_or_path);
void save_artifact(const std::string& path, const ModelArtifact& artifact);

/// FNV-1a of the canonical CSV rendering, as 16 hex digits.
std::string cohort_fingerprint(const Cohort& cohort);

struct Contribution {
  std::string feature;
  double value = 0.0;
  double contribution = 0.0;
};

struct ArtifactScore {
  double probability = 0.0;
  /// Logistic: f(x). Forest: vote fraction. Boost: normalised margin.
  /// SVM: decision value.
  double linear_score = 0.0;
  double raw_score = 0.0;  // predict_score output
  int predicted_label = 0;
  /// Linear models only (empty otherwise); sums to linear_score - intercept.
  std::vector<Contribution> contributions;
  std::optional<double> intercept;
};

/// Scores one observation given as the 22 canonical feature values.
ArtifactScore score_artifact(const ModelArtifact& artifact, std::span<const double> canonical_features);

/// Input columns of the artifact pulled from a canonical n x 22 matrix.
Matrix artifact_inputs(const ModelArtifact& artifact, const Matrix& canonical);

}  // namespace pqscreen
