#include "pograd/dataset.hpp"

#include "pograd/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace pograd {

using nlohmann::json;

std::vector<Trace> Dataset::select(Split s) const {
  std::vector<Trace> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (splits[i] == s) out.push_back(traces[i]);
  }
  return out;
}

std::vector<std::string> Dataset::default_item_names(Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("item" + std::to_string(i));
  return names;
}

void Dataset::validate() const {
  if (splits.size() != traces.size()) throw DataError("dataset: split tags do not match traces");
  std::set<std::string> seen;
  for (const auto& name : items) {
    if (!seen.insert(name).second) throw DataError("dataset: duplicate item name '" + name + "'");
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    try {
      traces[i].validate(n_items());
    } catch (const std::invalid_argument& e) {
      throw DataError("trace " + std::to_string(i) + ": " + e.what());
    }
  }
  if (ground_truth && ground_truth->size() != n_items()) {
    throw DataError("dataset: ground truth has " + std::to_string(ground_truth->size()) +
                    " items, expected " + std::to_string(n_items()));
  }
}

json dataset_to_json(const Dataset& ds) {
  ds.validate();
  json j;
  j["schema"] = kDatasetSchema;
  j["items"] = ds.items;
  j["traces"] = json::array();
  for (std::size_t i = 0; i < ds.traces.size(); ++i) {
    j["traces"].push_back({{"choice_set", ds.traces[i].choice_set},
                           {"order", ds.traces[i].order},
                           {"split", ds.splits[i] == Split::kTrain ? "train" : "test"}});
  }
  if (ds.ground_truth) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < ds.ground_truth->size(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < ds.ground_truth->size(); ++c) {
        row.push_back(ds.ground_truth->precedes(static_cast<int>(r), static_cast<int>(c)) ? 1 : 0);
      }
      rows.push_back(std::move(row));
    }
    j["ground_truth_closure"] = std::move(rows);
  }
  if (!ds.meta.empty()) j["meta"] = ds.meta;
  return j;
}

namespace {

std::vector<int> int_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + " must be an array of item indices");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw DataError(where + " must contain integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

Dataset dataset_from_json(const json& j) {
  if (!j.is_object()) throw DataError("dataset: top level must be an object");
  if (j.value("schema", std::string()) != kDatasetSchema) {
    throw DataError(std::string("dataset: expected schema \"") + kDatasetSchema + "\"");
  }
  Dataset ds;
  if (!j.contains("items") || !j["items"].is_array()) throw DataError("dataset: missing items array");
  for (const auto& v : j["items"]) {
    if (!v.is_string()) throw DataError("dataset: item names must be strings");
    ds.items.push_back(v.get<std::string>());
  }
  if (!j.contains("traces") || !j["traces"].is_array()) throw DataError("dataset: missing traces array");
  for (std::size_t i = 0; i < j["traces"].size(); ++i) {
    const json& t = j["traces"][i];
    const std::string where = "trace " + std::to_string(i);
    if (!t.is_object() || !t.contains("order")) throw DataError(where + ": missing order");
    Trace tr;
    tr.order = int_list(t["order"], where + " order");
    tr.choice_set = t.contains("choice_set") ? int_list(t["choice_set"], where + " choice_set") : tr.order;
    const std::string split = t.value("split", std::string("train"));
    if (split != "train" && split != "test") throw DataError(where + ": split must be train or test");
    ds.add(std::move(tr), split == "train" ? Split::kTrain : Split::kTest);
  }
  if (j.contains("ground_truth_closure") && !j["ground_truth_closure"].is_null()) {
    const json& g = j["ground_truth_closure"];
    const auto n = static_cast<std::size_t>(ds.n_items());
    if (!g.is_array() || g.size() != n) throw DataError("ground_truth_closure must be an M x M matrix");
    BoolMatrix m(ds.n_items(), ds.n_items());
    for (std::size_t r = 0; r < n; ++r) {
      if (!g[r].is_array() || g[r].size() != n) throw DataError("ground_truth_closure must be an M x M matrix");
      for (std::size_t c = 0; c < n; ++c) {
        const json& v = g[r][c];
        if (!(v.is_number_integer() || v.is_boolean())) throw DataError("ground_truth_closure entries must be 0 or 1");
        const int b = v.is_boolean() ? v.get<bool>() : v.get<int>();
        if (b != 0 && b != 1) throw DataError("ground_truth_closure entries must be 0 or 1");
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = b == 1;
      }
    }
    try {
      ds.ground_truth = PartialOrder::from_closure(m);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("ground_truth_closure: ") + e.what());
    }
  }
  if (j.contains("meta")) ds.meta = j["meta"];
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("dataset " + path.string() + " is not valid JSON: " + e.what());
  }
  return dataset_from_json(j);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_json(ds).dump(2) + "\n");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace pograd
