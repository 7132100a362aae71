#include "mdg/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "mdg/parallel.hpp"

namespace mdg {

Metrics metrics_from_counts(long tp, long fp, long tn, long fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const long total = tp + fp + tn + fn;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

int predict_label(const GcnModel& m, const AttrGraph& g, const Mat& x) {
  const auto probs = gcn_forward(m, g, x, /*train_mode=*/false, /*seed=*/0);
  return probs[1] > probs[0] ? 1 : 0;
}

Metrics evaluate(const GcnModel& m, const std::vector<AttrGraph>& graphs,
                 const std::vector<Mat>& features, int jobs) {
  if (graphs.size() != features.size()) {
    throw ShapeMismatch("evaluate: graph/feature count mismatch");
  }
  std::vector<int> predicted(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    predicted[i] = predict_label(m, graphs[i], features[i]);
  });
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].label) {
      throw DataError("evaluate: unlabeled graph '" + graphs[i].graph_id + "'");
    }
    const int truth = *graphs[i].label;
    if (predicted[i] == 1 && truth == 1) ++tp;
    else if (predicted[i] == 1 && truth == 0) ++fp;
    else if (predicted[i] == 0 && truth == 0) ++tn;
    else ++fn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

void write_metrics_csv(const Metrics& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%ld,%ld,%ld,%ld", m.accuracy, m.f1,
                m.precision, m.recall, m.tp, m.fp, m.tn, m.fn);
  out << "accuracy,f1,precision,recall,tp,fp,tn,fn\n" << buf << '\n';
}

}  // namespace mdg
