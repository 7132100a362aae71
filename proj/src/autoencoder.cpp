#include "mdg/autoencoder.hpp"

#include <cmath>
#include <fstream>

#include "json_util.hpp"
#include "mdg/rng.hpp"

namespace mdg {

AutoencoderModel init_autoencoder(const AeConfig& cfg) {
  AutoencoderModel m;
  m.enc1 = init_dense(cfg.hidden, cfg.in_dim, substream_seed(cfg.seed, "ae-enc1"));
  m.enc2 = init_dense(cfg.code, cfg.hidden, substream_seed(cfg.seed, "ae-enc2"));
  m.dec1 = init_dense(cfg.hidden, cfg.code, substream_seed(cfg.seed, "ae-dec1"));
  m.dec2 = init_dense(cfg.in_dim, cfg.hidden, substream_seed(cfg.seed, "ae-dec2"));
  return m;
}

namespace {

struct AeCache {
  Mat z1, h1, z2, h2, z3, h3, out;
};

Mat ae_forward(const AutoencoderModel& m, const Mat& x, AeCache& c) {
  c.z1 = dense_forward(m.enc1, x);
  c.h1 = relu(c.z1);
  c.z2 = dense_forward(m.enc2, c.h1);
  c.h2 = relu(c.z2);
  c.z3 = dense_forward(m.dec1, c.h2);
  c.h3 = relu(c.z3);
  c.out = dense_forward(m.dec2, c.h3);
  return c.out;
}

}  // namespace

double reconstruction_mse(const AutoencoderModel& m, const Mat& x) {
  AeCache c;
  const Mat out = ae_forward(m, x, c);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = out.data[i] - x.data[i];
    sum += d * d;
  }
  return out.data.empty() ? 0.0 : sum / static_cast<double>(out.data.size());
}

double ae_loss_and_grads(const AutoencoderModel& m, const Mat& x, AeGrads& grads) {
  AeCache c;
  const Mat out = ae_forward(m, x, c);
  const double scale = 2.0 / static_cast<double>(out.data.size());
  double loss = 0.0;
  Mat dout(out.rows, out.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = out.data[i] - x.data[i];
    loss += d * d;
    dout.data[i] = scale * d;
  }
  loss /= static_cast<double>(out.data.size());
  Mat dh3 = dense_backward(m.dec2, c.h3, dout, grads.dec2);
  Mat dz3 = relu_backward(c.z3, dh3);
  Mat dh2 = dense_backward(m.dec1, c.h2, dz3, grads.dec1);
  Mat dz2 = relu_backward(c.z2, dh2);
  Mat dh1 = dense_backward(m.enc2, c.h1, dz2, grads.enc2);
  Mat dz1 = relu_backward(c.z1, dh1);
  dense_backward(m.enc1, x, dz1, grads.enc1);
  return loss;
}

AeTrainResult train_autoencoder(const Mat& benign_features, const AeConfig& cfg) {
  if (benign_features.rows == 0) {
    throw DataError("train_autoencoder: empty training corpus");
  }
  if (benign_features.cols != cfg.in_dim) {
    throw ShapeMismatch("train_autoencoder: feature width " +
                        std::to_string(benign_features.cols) + " != configured in_dim " +
                        std::to_string(cfg.in_dim));
  }
  AeTrainResult result;
  result.model = init_autoencoder(cfg);
  auto& m = result.model;

  AdamOpt opt;
  opt.lr = cfg.lr;
  auto rng = make_rng(cfg.seed, "ae-shuffle");
  std::vector<std::size_t> order(benign_features.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_vec(order, rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Mat x(end - start, benign_features.cols);
      for (std::size_t r = start; r < end; ++r) {
        auto src = benign_features.row(order[r]);
        std::copy(src.begin(), src.end(), x.row(r - start).begin());
      }
      AeGrads grads{zero_grad(m.enc1), zero_grad(m.enc2), zero_grad(m.dec1),
                    zero_grad(m.dec2)};
      const double loss = ae_loss_and_grads(m, x, grads);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("autoencoder loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      ++n_batches;
      opt.step({m.enc1.weight.data, m.enc1.bias, m.enc2.weight.data, m.enc2.bias,
                m.dec1.weight.data, m.dec1.bias, m.dec2.weight.data, m.dec2.bias},
               {grads.enc1.dweight.data, grads.enc1.dbias, grads.enc2.dweight.data,
                grads.enc2.dbias, grads.dec1.dweight.data, grads.dec1.dbias,
                grads.dec2.dweight.data, grads.dec2.dbias});
    }
    result.epoch_mse.push_back(epoch_loss / static_cast<double>(n_batches));
  }
  return result;
}

Mat encode64(const AutoencoderModel& m, const Mat& x) {
  return relu(dense_forward(m.enc2, relu(dense_forward(m.enc1, x))));
}

std::vector<double> encode64(const AutoencoderModel& m, std::span<const double> row) {
  Mat x(1, row.size());
  std::copy(row.begin(), row.end(), x.data.begin());
  const Mat code = encode64(m, x);
  return code.data;
}

void save_autoencoder(const AutoencoderModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["kind"] = "autoencoder";
  j["enc1"] = dense_to_json(m.enc1);
  j["enc2"] = dense_to_json(m.enc2);
  j["dec1"] = dense_to_json(m.dec1);
  j["dec2"] = dense_to_json(m.dec2);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

AutoencoderModel load_autoencoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("kind") != "autoencoder") {
      throw DataError("checkpoint " + path.string() + " is not an autoencoder");
    }
    AutoencoderModel m;
    m.enc1 = dense_from_json(j.at("enc1"));
    m.enc2 = dense_from_json(j.at("enc2"));
    m.dec1 = dense_from_json(j.at("dec1"));
    m.dec2 = dense_from_json(j.at("dec2"));
    // decoder must mirror the encoder
    if (m.dec1.in_dim() != m.enc2.out_dim() || m.dec1.out_dim() != m.enc2.in_dim() ||
        m.dec2.in_dim() != m.enc1.out_dim() || m.dec2.out_dim() != m.enc1.in_dim()) {
      throw DataError("checkpoint " + path.string() + ": decoder does not mirror encoder");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mdg
