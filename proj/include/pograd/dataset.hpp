#ifndef POGRAD_DATASET_HPP
#define POGRAD_DATASET_HPP

#include "pograd/hard_likelihood.hpp"
#include "pograd/poset.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pograd {

inline constexpr const char* kDatasetSchema = "pograd-dataset-1";

enum class Split { kTrain, kTest };

/// Observed traces over a named item universe, with optional ground truth.
struct Dataset {
  std::vector<std::string> items;
  std::vector<Trace> traces;
  std::vector<Split> splits;  // parallel to traces
  std::optional<PartialOrder> ground_truth;
  nlohmann::json meta = nlohmann::json::object();

  Eigen::Index n_items() const { return static_cast<Eigen::Index>(items.size()); }
  std::vector<Trace> train() const { return select(Split::kTrain); }
  std::vector<Trace> test() const { return select(Split::kTest); }
  void add(Trace t, Split s) {
    traces.push_back(std::move(t));
    splits.push_back(s);
  }

  // Throws DataError naming the offending trace.
  void validate() const;

  static std::vector<std::string> default_item_names(Eigen::Index n);

 private:
  std::vector<Trace> select(Split s) const;
};

nlohmann::json dataset_to_json(const Dataset& ds);
// Throws DataError on schema or invariant violations.
Dataset dataset_from_json(const nlohmann::json& j);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace pograd

#endif  // POGRAD_DATASET_HPP
