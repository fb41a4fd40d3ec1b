#include "atomic_li/index.hpp"

#include "atomic_li/errors.hpp"

namespace ali {

AtomicIndex::AtomicIndex(std::shared_ptr<const SortedTable> table, CdfModel model, SearchKind search)
    : table_(std::move(table)), model_(std::move(model)), search_(search), epsilon_(0) {
  if (!table_) throw InvalidArgument("index requires a table");
  epsilon_ = model_.visit([&](const auto& m) { return compute_epsilon(m, *table_); });
}

AtomicIndex::AtomicIndex(std::shared_ptr<const SortedTable> table, CdfModel model, SearchKind search,
                         std::size_t epsilon)
    : table_(std::move(table)), model_(std::move(model)), search_(search), epsilon_(epsilon) {
  if (!table_) throw InvalidArgument("index requires a table");
}

}  // namespace ali
