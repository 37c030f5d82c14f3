#include "pqscreen/model.hpp"

#include <cmath>

namespace pqscreen {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Forest: return "forest";
    case ModelKind::Boost: return "boost";
    case ModelKind::Svm: return "svm";
  }
  return "logistic";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "logistic") return ModelKind::Logistic;
  if (text == "forest") return ModelKind::Forest;
  if (text == "boost") return ModelKind::Boost;
  if (text == "svm") return ModelKind::Svm;
  throw Error("invalid_argument", "unknown model type '" + std::string(text) + "' (logistic, forest, boost, svm)");
}

ModelKind kind_of(const Model& model) { return static_cast<ModelKind>(model.index()); }

Hyperparameters default_hyperparameters(ModelKind kind, std::size_t features) {
  switch (kind) {
    case ModelKind::Logistic: return {};
    case ModelKind::Forest: return {{"n_trees", 100}, {"min_leaf", 1}};
    case ModelKind::Boost: return {{"n_rounds", 100}, {"max_depth", 2}};
    case ModelKind::Svm:
      return {{"c", 1.0}, {"gamma", features > 0 ? 1.0 / static_cast<double>(features) : 1.0}};
  }
  return {};
}

namespace {

double get(const Hyperparameters& hp, const char* name, double fallback) {
  const auto it = hp.find(name);
  if (it == hp.end()) return fallback;
  if (!std::isfinite(it->second)) throw Error("invalid_argument", std::string("hyperparameter ") + name + " is not finite");
  return it->second;
}

std::size_t get_count(const Hyperparameters& hp, const char* name, double fallback) {
  const double v = std::round(get(hp, name, fallback));
  if (v < 1) throw Error("invalid_argument", std::string("hyperparameter ") + name + " must be at least 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

Model fit_model(ModelKind kind, const Matrix& x, std::span<const int> y, const Hyperparameters& hp,
                std::uint64_t seed) {
  const auto defaults = default_hyperparameters(kind, static_cast<std::size_t>(x.cols()));
  auto fallback = [&](const char* name) { return defaults.at(name); };
  switch (kind) {
    case ModelKind::Logistic:
      return fit_logistic(x, y);
    case ModelKind::Forest: {
      ForestParams p;
      p.n_trees = get_count(hp, "n_trees", fallback("n_trees"));
      p.min_leaf = get_count(hp, "min_leaf", fallback("min_leaf"));
      p.max_features = hp.count("max_features") ? get_count(hp, "max_features", 0) : 0;
      p.seed = seed;
      return fit_random_forest(x, y, p);
    }
    case ModelKind::Boost: {
      BoostParams p;
      p.n_rounds = get_count(hp, "n_rounds", fallback("n_rounds"));
      p.max_depth = static_cast<int>(get_count(hp, "max_depth", fallback("max_depth")));
      p.seed = seed;
      return fit_boosted(x, y, p);
    }
    case ModelKind::Svm: {
      SvmParams p;
      p.c = get(hp, "c", fallback("c"));
      p.gamma = get(hp, "gamma", fallback("gamma"));
      p.seed = seed;
      return fit_svm(x, y, p);
    }
  }
  throw Error("internal", "unhandled model kind");
}

double predict_score(const Model& model, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    double operator()(const LogisticModel& m) const { return logistic_score(m, x).probability; }
    double operator()(const ForestModel& m) const { return forest_score(m, x); }
    double operator()(const BoostModel& m) const { return boost_score(m, x); }
    double operator()(const SvmModel& m) const { return svm_decision(m, x); }
  };
  return std::visit(Visitor{x}, model);
}

Vector predict_scores(const Model& model, const Matrix& x) {
  struct Visitor {
    const Matrix& x;
    Vector operator()(const LogisticModel& m) const {
      if (x.cols() != m.coefficients.size()) throw Error("dimension", "column count mismatch");
      Vector eta = (x * m.coefficients).array() + m.intercept;
      for (auto& v : eta) v = sigmoid(v);
      return eta;
    }
    Vector operator()(const ForestModel& m) const { return forest_scores(m, x); }
    Vector operator()(const BoostModel& m) const { return boost_scores(m, x); }
    Vector operator()(const SvmModel& m) const { return svm_decisions(m, x); }
  };
  return std::visit(Visitor{x}, model);
}

double decision_threshold(ModelKind kind) { return kind == ModelKind::Svm ? 0.0 : 0.5; }

std::size_t model_input_dimension(const Model& model) {
  struct Visitor {
    std::size_t operator()(const LogisticModel& m) const { return static_cast<std::size_t>(m.coefficients.size()); }
    std::size_t operator()(const ForestModel& m) const { return m.n_features; }
    std::size_t operator()(const BoostModel& m) const { return m.n_features; }
    std::size_t operator()(const SvmModel& m) const { return static_cast<std::size_t>(m.mean.size()); }
  };
  return std::visit(Visitor{}, model);
}

}  // namespace pqscreen
