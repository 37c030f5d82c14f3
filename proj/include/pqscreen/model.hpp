#pragma once

#include "pqscreen/boost.hpp"
#include "pqscreen/forest.hpp"
#include "pqscreen/logistic.hpp"
#include "pqscreen/svm.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace pqscreen {

enum class ModelKind { Logistic, Forest, Boost, Svm };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

using Model = std::variant<LogisticModel, ForestModel, BoostModel, SvmModel>;
using Hyperparameters = std::map<std::string, double>;

ModelKind kind_of(const Model& model);

/// Untuned settings: forest 100 trees / min_leaf 1, boost 100 rounds of
/// depth 2, SVM c = 1 and gamma = 1 / features. Logistic has none.
Hyperparameters default_hyperparameters(ModelKind kind, std::size_t features);

Model fit_model(ModelKind kind, const Matrix& x, std::span<const int> y, const Hyperparameters& hp,
                std::uint64_t seed);

/// Monotone PD-risk score: probability (logistic), PD vote fraction (forest),
/// logistic of the normalised margin (boost), decision value (SVM).
double predict_score(const Model& model, std::span<const double> x);
Vector predict_scores(const Model& model, const Matrix& x);

/// Score at or above which a row is called PD: 0 for SVM, 0.5 otherwise.
double decision_threshold(ModelKind kind);

std::size_t model_input_dimension(const Model& model);

}  // namespace pqscreen
