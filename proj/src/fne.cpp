#include "mdg/fne.hpp"

#include <fstream>

#include "json.hpp"
#include "mdg/rng.hpp"

namespace mdg {

FneTable load_fne_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding table: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw BadTable("embedding table " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) {
    throw BadTable("embedding table " + path.string() + ": expected a JSON object");
  }
  FneTable table;
  for (const auto& [name, value] : j.items()) {
    std::vector<double> vec;
    try {
      vec = value.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw BadTable("embedding table entry '" + name + "': " + e.what());
    }
    if (vec.size() != kFneDim) {
      throw BadTable("embedding table entry '" + name + "' has width " +
                     std::to_string(vec.size()) + ", expected " + std::to_string(kFneDim));
    }
    table.vectors.emplace(name, std::move(vec));
  }
  return table;
}

std::vector<double> fne_fallback(const std::string& name, std::uint64_t seed) {
  std::mt19937_64 rng(substream_seed(seed, "fne-fallback") ^ fnv1a64(name));
  std::vector<double> vec(kFneDim);
  for (auto& x : vec) x = uniform(rng, -1.0, 1.0);
  return vec;
}

FneResult ingest_fne(const std::vector<std::string>& names, const FneTable& table,
                     std::uint64_t seed) {
  FneResult result;
  result.features = Mat(names.size(), kFneDim);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = table.vectors.find(names[i]);
    if (it != table.vectors.end() && it->second.size() != kFneDim) {
      throw BadTable("embedding for '" + names[i] + "' has width " +
                     std::to_string(it->second.size()));
    }
    const std::vector<double> vec =
        it != table.vectors.end() ? it->second : fne_fallback(names[i], seed);
    if (it == table.vectors.end()) {
      ++result.unknown_count;
      result.unknown_names.push_back(names[i]);
    }
    std::copy(vec.begin(), vec.end(), result.features.row(i).begin());
  }
  return result;
}

}  // namespace mdg
