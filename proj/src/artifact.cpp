#include "pqscreen/artifact.hpp"

#include "pqscreen/cohort.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pqscreen {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_rows_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix matrix_rows_from(const json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error("schema", "matrix row has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row[c];
  }
  return m;
}

json tree_json(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       vote = json::array(), fraction = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    vote.push_back(n.vote);
    fraction.push_back(n.pd_fraction);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"vote", vote},           {"pd_fraction", fraction}};
}

DecisionTree tree_from(const json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto vote = j.at("vote").get<std::vector<int>>();
  const auto fraction = j.at("pd_fraction").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || vote.size() != n || fraction.size() != n) {
    throw Error("schema", "tree arrays differ in length");
  }
  DecisionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tree.nodes[i] = TreeNode{feature[i], threshold[i], left[i], right[i], vote[i], fraction[i]};
  }
  return tree;
}

json selector_json(const Selector& selector, const std::vector<std::string>& names) {
  if (const auto* mask = std::get_if<FeatureMask>(&selector)) {
    json selected_names = json::array();
    for (auto i : mask->selected) selected_names.push_back(i < names.size() ? names[i] : std::string());
    return {{"type", "mask"}, {"selected", mask->selected}, {"selected_names", selected_names}};
  }
  const auto& pca = std::get<PcaTransform>(selector);
  return {{"type", "pca"},
          {"mean", vector_json(pca.mean)},
          {"components", matrix_rows_json(pca.components)},
          {"eigenvalues", vector_json(pca.eigenvalues)},
          {"explained_fraction", vector_json(pca.explained_fraction)}};
}

Selector selector_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "mask") return FeatureMask{j.at("selected").get<std::vector<std::size_t>>()};
  if (type == "pca") {
    PcaTransform pca;
    pca.mean = vector_from(j.at("mean"));
    const auto& comps = j.at("components");
    const Eigen::Index r = comps.empty() ? 0 : static_cast<Eigen::Index>(comps[0].size());
    pca.components = matrix_rows_from(comps, r);
    pca.eigenvalues = vector_from(j.at("eigenvalues"));
    pca.explained_fraction = vector_from(j.at("explained_fraction"));
    return pca;
  }
  throw Error("schema", "unknown selector type '" + type + "'");
}

std::size_t selector_output_dimension(const Selector& selector) {
  if (const auto* mask = std::get_if<FeatureMask>(&selector)) return mask->selected.size();
  return std::get<PcaTransform>(selector).retained();
}

json model_json(const Model& model) {
  struct Visitor {
    json operator()(const LogisticModel& m) const {
      return {{"intercept", m.intercept},
              {"coefficients", vector_json(m.coefficients)},
              {"separation_warning", m.separation_warning},
              {"iterations", m.iterations}};
    }
    json operator()(const ForestModel& m) const {
      json trees = json::array();
      for (const auto& t : m.trees) trees.push_back(tree_json(t));
      return {{"n_trees", m.params.n_trees},
              {"max_features", m.params.max_features},
              {"min_leaf", m.params.min_leaf},
              {"seed", m.params.seed},
              {"oob_error", m.oob_error},
              {"mean_oob_fraction", m.mean_oob_fraction},
              {"n_train", m.n_train},
              {"n_features", m.n_features},
              {"bootstrap_seeds", m.bootstrap_seeds},
              {"trees", trees}};
    }
    json operator()(const BoostModel& m) const {
      json trees = json::array();
      for (const auto& t : m.weak_learners) trees.push_back(tree_json(t));
      return {{"n_rounds", m.params.n_rounds}, {"max_depth", m.params.max_depth},
              {"seed", m.params.seed},         {"n_features", m.n_features},
              {"learner_weights", m.learner_weights}, {"weak_learners", trees}};
    }
    json operator()(const SvmModel& m) const {
      return {{"mean", vector_json(m.mean)},
              {"scale", vector_json(m.scale)},
              {"support_vectors", matrix_rows_json(m.support_vectors)},
              {"dual_coefficients", vector_json(m.dual_coefficients)},
              {"support_indices", m.support_indices},
              {"bias", m.bias},
              {"gamma", m.gamma},
              {"c", m.c}};
    }
  };
  return std::visit(Visitor{}, model);
}

Model model_from(ModelKind kind, const json& j, const std::vector<std::string>& names) {
  switch (kind) {
    case ModelKind::Logistic: {
      LogisticModel m;
      m.intercept = j.at("intercept").get<double>();
      m.coefficients = vector_from(j.at("coefficients"));
      m.separation_warning = j.value("separation_warning", false);
      m.iterations = j.value("iterations", 0);
      m.feature_names = names;
      return m;
    }
    case ModelKind::Forest: {
      ForestModel m;
      m.params.n_trees = j.at("n_trees").get<std::size_t>();
      m.params.max_features = j.at("max_features").get<std::size_t>();
      m.params.min_leaf = j.at("min_leaf").get<std::size_t>();
      m.params.seed = j.at("seed").get<std::uint64_t>();
      m.oob_error = j.at("oob_error").get<double>();
      m.mean_oob_fraction = j.value("mean_oob_fraction", 0.0);
      m.n_train = j.at("n_train").get<std::size_t>();
      m.n_features = j.at("n_features").get<std::size_t>();
      m.bootstrap_seeds = j.at("bootstrap_seeds").get<std::vector<std::uint64_t>>();
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t));
      return m;
    }
    case ModelKind::Boost: {
      BoostModel m;
      m.params.n_rounds = j.at("n_rounds").get<std::size_t>();
      m.params.max_depth = j.at("max_depth").get<int>();
      m.params.seed = j.at("seed").get<std::uint64_t>();
      m.n_features = j.at("n_features").get<std::size_t>();
      m.learner_weights = j.at("learner_weights").get<std::vector<double>>();
      for (const auto& t : j.at("weak_learners")) m.weak_learners.push_back(tree_from(t));
      return m;
    }
    case ModelKind::Svm: {
      SvmModel m;
      m.mean = vector_from(j.at("mean"));
      m.scale = vector_from(j.at("scale"));
      m.support_vectors = matrix_rows_from(j.at("support_vectors"), m.mean.size());
      m.dual_coefficients = vector_from(j.at("dual_coefficients"));
      m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
      m.bias = j.at("bias").get<double>();
      m.gamma = j.at("gamma").get<double>();
      m.c = j.at("c").get<double>();
      return m;
    }
  }
  throw Error("internal", "unhandled model kind");
}

void validate_tree(const DecisionTree& tree, std::size_t features) {
  const int count = static_cast<int>(tree.nodes.size());
  if (count == 0) throw Error("invalid_model", "empty tree");
  for (int i = 0; i < count; ++i) {
    const auto& n = tree.nodes[i];
    if (n.feature < 0) continue;
    if (static_cast<std::size_t>(n.feature) >= features || n.left <= i || n.right <= i || n.left >= count ||
        n.right >= count || !std::isfinite(n.threshold)) {
      throw Error("invalid_model", "malformed tree node " + std::to_string(i));
    }
  }
}

}  // namespace

void ModelArtifact::validate() const {
  if (feature_names.empty()) throw Error("invalid_model", "artifact lists no features");
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    if (!feature_index(name)) throw Error("invalid_model", "unknown feature '" + name + "'");
    if (!seen.insert(name).second) throw Error("invalid_model", "duplicate feature '" + name + "'");
  }
  if (const auto* mask = std::get_if<FeatureMask>(&selector)) {
    try {
      mask->validate(feature_names.size());
    } catch (const Error& e) {
      throw Error("invalid_model", std::string("selector: ") + e.what());
    }
  } else {
    const auto& pca = std::get<PcaTransform>(selector);
    const auto p = static_cast<Eigen::Index>(feature_names.size());
    if (pca.mean.size() != p || pca.components.rows() != p || pca.components.cols() == 0 ||
        !pca.components.allFinite() || !pca.mean.allFinite()) {
      throw Error("invalid_model", "PCA selector shape does not match the feature list");
    }
  }
  if (selector_output_dimension(selector) != model_input_dimension(model)) {
    throw Error("invalid_model", "selector output dimension " + std::to_string(selector_output_dimension(selector)) +
                                     " differs from model input dimension " +
                                     std::to_string(model_input_dimension(model)));
  }
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          if (!m.coefficients.allFinite() || !std::isfinite(m.intercept)) {
            throw Error("invalid_model", "logistic model has non-finite parameters");
          }
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          if (m.trees.empty() || m.bootstrap_seeds.size() != m.trees.size()) {
            throw Error("invalid_model", "forest trees and bootstrap seeds disagree");
          }
          for (const auto& t : m.trees) validate_tree(t, m.n_features);
        } else if constexpr (std::is_same_v<T, BoostModel>) {
          m.validate();
          for (const auto& t : m.weak_learners) validate_tree(t, m.n_features);
        } else {
          m.validate();
        }
      },
      model);
}

ModelArtifact published_pq_artifact() {
  ModelArtifact a;
  a.model_id = kPublishedModelId;
  for (auto name : feature_names()) a.feature_names.emplace_back(name);
  a.selector = FeatureMask::all(kFeatureCount);
  a.model = published_pq_model();
  return a;
}

json artifact_to_json(const ModelArtifact& artifact) {
  json training = {{"seed", artifact.training.seed},
                   {"hyperparameters", artifact.training.hyperparameters},
                   {"data_fingerprint", artifact.training.data_fingerprint},
                   {"data_path", artifact.training.data_path},
                   {"n_train", artifact.training.n_train},
                   {"run_config", artifact.training.run_config}};
  return {{"schema_version", kArtifactSchemaVersion},
          {"model_id", artifact.model_id},
          {"model_type", model_kind_name(artifact.kind())},
          {"feature_names", artifact.feature_names},
          {"selector", selector_json(artifact.selector, artifact.feature_names)},
          {"model", model_json(artifact.model)},
          {"training", training},
          {"toolkit_version", kVersion}};
}

ModelArtifact artifact_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw Error("schema", "artifact must be a JSON object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kArtifactSchemaVersion) {
      throw Error("schema", "unsupported schema_version " + std::to_string(version) + " (expected " +
                                std::to_string(kArtifactSchemaVersion) + ")");
    }
    ModelArtifact a;
    a.model_id = doc.value("model_id", std::string());
    a.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    a.selector = selector_from(doc.at("selector"));
    const ModelKind kind = parse_model_kind(doc.at("model_type").get<std::string>());
    std::vector<std::string> model_names;
    if (const auto* mask = std::get_if<FeatureMask>(&a.selector)) {
      for (auto i : mask->selected) model_names.push_back(i < a.feature_names.size() ? a.feature_names[i] : "");
    } else {
      for (std::size_t k = 0; k < std::get<PcaTransform>(a.selector).retained(); ++k) {
        model_names.push_back("PC" + std::to_string(k + 1));
      }
    }
    a.model = model_from(kind, doc.at("model"), model_names);
    if (doc.contains("training")) {
      const auto& t = doc.at("training");
      a.training.seed = t.value("seed", std::uint64_t{0});
      if (t.contains("hyperparameters")) a.training.hyperparameters = t.at("hyperparameters").get<Hyperparameters>();
      a.training.data_fingerprint = t.value("data_fingerprint", std::string());
      a.training.data_path = t.value("data_path", std::string());
      a.training.n_train = t.value("n_train", std::size_t{0});
      if (t.contains("run_config")) a.training.run_config = t.at("run_config");
    }
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw Error("schema", std::string("malformed artifact: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == "schema" || e.code() == "invalid_model") throw;
    throw Error("schema", e.what());
  }
}

ModelArtifact load_artifact(const std::string& name_or_path) {
  if (name_or_path == kPublishedModelId) return published_pq_artifact();
  std::ifstream in(name_or_path);
  if (!in) throw Error("io", "cannot open model artifact '" + name_or_path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("schema", "artifact '" + name_or_path + "' is not valid JSON: " + e.what());
  }
  return artifact_from_json(doc);
}

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << artifact_to_json(artifact).dump(2) << '\n';
  if (!out) throw Error("io", "write to '" + path + "' failed");
}

std::string cohort_fingerprint(const Cohort& cohort) {
  std::ostringstream s;
  write_cohort(s, cohort);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

Matrix artifact_inputs(const ModelArtifact& artifact, const Matrix& canonical) {
  if (canonical.cols() != kFeatureCount) throw Error("dimension", "expected the 22 canonical feature columns");
  Matrix out(canonical.rows(), static_cast<Eigen::Index>(artifact.feature_names.size()));
  for (std::size_t k = 0; k < artifact.feature_names.size(); ++k) {
    const auto idx = feature_index(artifact.feature_names[k]);
    if (!idx) throw Error("invalid_model", "unknown feature '" + artifact.feature_names[k] + "'");
    out.col(static_cast<Eigen::Index>(k)) = canonical.col(static_cast<Eigen::Index>(*idx));
  }
  return out;
}

ArtifactScore score_artifact(const ModelArtifact& artifact, std::span<const double> canonical_features) {
  if (canonical_features.size() != kFeatureCount) {
    throw Error("dimension", "expected " + std::to_string(kFeatureCount) + " feature values, got " +
                                 std::to_string(canonical_features.size()));
  }
  const std::size_t p = artifact.feature_names.size();
  Vector inputs(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) inputs(static_cast<Eigen::Index>(k)) = canonical_features[*feature_index(artifact.feature_names[k])];

  ArtifactScore out;
  const ModelKind kind = artifact.kind();
  if (kind == ModelKind::Logistic) {
    const auto& m = std::get<LogisticModel>(artifact.model);
    double intercept = m.intercept;
    if (const auto* mask = std::get_if<FeatureMask>(&artifact.selector)) {
      double sum = 0.0;
      for (std::size_t k = 0; k < mask->selected.size(); ++k) {
        const auto col = mask->selected[k];
        const double value = inputs(static_cast<Eigen::Index>(col));
        const double c = m.coefficients(static_cast<Eigen::Index>(k)) * value + 0.0;  // no negative zero
        out.contributions.push_back({artifact.feature_names[col], value, c});
        sum += c;
      }
      out.linear_score = intercept + sum;
    } else {
      // A linear model on principal components is linear in the raw inputs.
      const auto& pca = std::get<PcaTransform>(artifact.selector);
      const Vector w = pca.components * m.coefficients;
      intercept -= w.dot(pca.mean);
      double sum = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        const double value = inputs(static_cast<Eigen::Index>(k));
        const double c = w(static_cast<Eigen::Index>(k)) * value + 0.0;
        out.contributions.push_back({artifact.feature_names[k], value, c});
        sum += c;
      }
      out.linear_score = intercept + sum;
    }
    out.intercept = intercept;
    out.probability = sigmoid(out.linear_score);
    out.raw_score = out.probability;
  } else {
    Vector z;
    if (const auto* mask = std::get_if<FeatureMask>(&artifact.selector)) {
      z.resize(static_cast<Eigen::Index>(mask->selected.size()));
      for (std::size_t k = 0; k < mask->selected.size(); ++k) {
        z(static_cast<Eigen::Index>(k)) = inputs(static_cast<Eigen::Index>(mask->selected[k]));
      }
    } else {
      z = std::get<PcaTransform>(artifact.selector).apply(inputs);
    }
    const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
    out.raw_score = predict_score(artifact.model, zs);
    switch (kind) {
      case ModelKind::Forest:
        out.probability = out.raw_score;
        out.linear_score = out.raw_score;
        break;
      case ModelKind::Boost: {
        const auto& b = std::get<BoostModel>(artifact.model);
        double total = 0.0;
        for (double a : b.learner_weights) total += a;
        out.linear_score = boost_margin(b, zs) / total;
        out.probability = out.raw_score;
        break;
      }
      default:
        out.linear_score = out.raw_score;
        out.probability = sigmoid(out.raw_score);
        break;
    }
  }
  out.predicted_label = out.raw_score >= decision_threshold(kind) ? 1 : 0;
  return out;
}

}  // namespace pqscreen
