#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <variant>

#include "atomic_li/neural.hpp"
#include "atomic_li/regress.hpp"

namespace ali {

enum class ModelKind { linear, quadratic, cubic, nn0, nn1, nn2 };

inline constexpr ModelKind kAllModels[] = {ModelKind::nn0,    ModelKind::nn1,       ModelKind::nn2,
                                           ModelKind::linear, ModelKind::quadratic, ModelKind::cubic};

/// "L", "Q", "C", "NN0", "NN1", "NN2".
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

constexpr bool is_neural(ModelKind kind) {
  return kind == ModelKind::nn0 || kind == ModelKind::nn1 || kind == ModelKind::nn2;
}

/// A trained CDF predictor of either family.
class CdfModel {
 public:
  using Variant = std::variant<PolynomialModel, NeuralModel>;

  CdfModel(PolynomialModel model) : impl_(std::move(model)) {}  // NOLINT(google-explicit-constructor)
  CdfModel(NeuralModel model) : impl_(std::move(model)) {}      // NOLINT(google-explicit-constructor)

  ModelKind kind() const noexcept;
  std::string_view name() const noexcept { return to_string(kind()); }

  double predict(std::uint64_t key) const {
    return std::visit([key](const auto& m) { return m.predict(key); }, impl_);
  }

  const Variant& variant() const noexcept { return impl_; }

  /// Calls `fn` with the concrete model, so hot loops avoid per-call dispatch.
  template <typename Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), impl_);
  }

  friend bool operator==(const CdfModel&, const CdfModel&) = default;

 private:
  Variant impl_;
};

/// Fits the closed-form models or trains the neural ones.
CdfModel train_model(ModelKind kind, const SortedTable& table, const TrainConfig& nn_config = TrainConfig::desk(),
                     TrainSummary* summary = nullptr);

void write_model(std::ostream& out, const CdfModel& model);
CdfModel read_model(std::istream& in);
void save_model(const CdfModel& model, const std::filesystem::path& path);
CdfModel load_model(const std::filesystem::path& path);

}  // namespace ali
