#include "atomic_li/model.hpp"

#include <fstream>
#include <string>

#include "atomic_li/errors.hpp"

namespace ali {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "L";
    case ModelKind::quadratic: return "Q";
    case ModelKind::cubic: return "C";
    case ModelKind::nn0: return "NN0";
    case ModelKind::nn1: return "NN1";
    case ModelKind::nn2: return "NN2";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind kind : kAllModels)
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown model '" + std::string(name) + "' (expected L, Q, C, NN0, NN1 or NN2)");
}

ModelKind CdfModel::kind() const noexcept {
  if (const auto* poly = std::get_if<PolynomialModel>(&impl_)) {
    if (poly->degree == 1) return ModelKind::linear;
    if (poly->degree == 2) return ModelKind::quadratic;
    return ModelKind::cubic;
  }
  switch (std::get<NeuralModel>(impl_).hidden_layers()) {
    case 0: return ModelKind::nn0;
    case 1: return ModelKind::nn1;
    default: return ModelKind::nn2;
  }
}

CdfModel train_model(ModelKind kind, const SortedTable& table, const TrainConfig& nn_config, TrainSummary* summary) {
  switch (kind) {
    case ModelKind::linear: return fit_polynomial(table, 1);
    case ModelKind::quadratic: return fit_polynomial(table, 2);
    case ModelKind::cubic: return fit_polynomial(table, 3);
    case ModelKind::nn0: return train_nn(table, 0, nn_config, summary);
    case ModelKind::nn1: return train_nn(table, 1, nn_config, summary);
    case ModelKind::nn2: return train_nn(table, 2, nn_config, summary);
  }
  throw InvalidArgument("unknown model kind");
}

void write_model(std::ostream& out, const CdfModel& model) {
  model.visit([&](const auto& m) {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, PolynomialModel>)
      write_polynomial(out, m);
    else
      write_neural(out, m);
  });
}

CdfModel read_model(std::istream& in) {
  std::string tag;
  if (!(in >> tag)) throw LoadError(LoadErrorKind::malformed_header, "empty model file");
  if (tag == "poly") return read_polynomial(in);
  if (tag == "nn") return read_neural(in);
  throw LoadError(LoadErrorKind::malformed_header, "unknown model tag '" + tag + "'");
}

void save_model(const CdfModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::io, "cannot write " + path.string());
  write_model(out, model);
  if (!out) throw LoadError(LoadErrorKind::io, "write failed for " + path.string());
}

CdfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadErrorKind::io, "cannot open " + path.string());
  return read_model(in);
}

}  // namespace ali
