#pragma once

#include "json.hpp"
#include "mdg/dense.hpp"

namespace mdg {

inline nlohmann::json dense_to_json(const DenseLayer& l) {
  return {{"rows", l.weight.rows},
          {"cols", l.weight.cols},
          {"weight", l.weight.data},
          {"bias", l.bias}};
}

inline DenseLayer dense_from_json(const nlohmann::json& j) {
  DenseLayer l;
  l.weight.rows = j.at("rows").get<std::size_t>();
  l.weight.cols = j.at("cols").get<std::size_t>();
  l.weight.data = j.at("weight").get<std::vector<double>>();
  l.bias = j.at("bias").get<std::vector<double>>();
  if (l.weight.data.size() != l.weight.rows * l.weight.cols ||
      l.bias.size() != l.weight.rows) {
    throw DataError("checkpoint: layer shape header disagrees with data length");
  }
  return l;
}

}  // namespace mdg
