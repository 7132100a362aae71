#pragma once

#include <filesystem>

#include "mdg/gcn.hpp"

namespace mdg {

// Binary classification metrics with malicious (label 1) as the positive
// class. Zero-denominator conventions: precision = 0 when TP+FP = 0,
// recall = 0 when TP+FN = 0, f1 = 0 when precision+recall = 0.
struct Metrics {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics metrics_from_counts(long tp, long fp, long tn, long fn);

int predict_label(const GcnModel& m, const AttrGraph& g, const Mat& x);

Metrics evaluate(const GcnModel& m, const std::vector<AttrGraph>& graphs,
                 const std::vector<Mat>& features, int jobs = 1);

// CSV columns: accuracy,f1,precision,recall,tp,fp,tn,fn
void write_metrics_csv(const Metrics& m, const std::filesystem::path& path);

}  // namespace mdg
