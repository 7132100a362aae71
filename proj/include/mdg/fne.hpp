#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdg/matrix.hpp"

namespace mdg {

struct BadTable : DataError {
  using DataError::DataError;
};

inline constexpr std::size_t kFneDim = 384;

// Precomputed function-name embeddings: a JSON object mapping each name to
// a 384-dim vector.
struct FneTable {
  std::unordered_map<std::string, std::vector<double>> vectors;
};

FneTable load_fne_table(const std::filesystem::path& path);

// Deterministic pseudo-embedding in [-1,1]^384 for names missing from the
// table, keyed by the name's hash mixed with `seed`.
std::vector<double> fne_fallback(const std::string& name, std::uint64_t seed);

struct FneResult {
  Mat features;               // one 384-wide row per input name
  std::size_t unknown_count = 0;
  std::vector<std::string> unknown_names;
};

FneResult ingest_fne(const std::vector<std::string>& names, const FneTable& table,
                     std::uint64_t seed = 0);

}  // namespace mdg
