#include "scf/train.hpp"

#include "scf/errors.hpp"
#include "scf/pnm.hpp"
#include "scf/rng.hpp"
#include "scf/scenegen.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace scf {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning_rate must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
  if (max_steps < 0) throw ConfigError("train: max_steps must be >= 0");
}

TrainConfig TrainConfig::from_keys(KeyValues& kv) {
  TrainConfig c;
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.batch_size = kv.get_int("batch_size", c.batch_size);
  c.epochs = kv.get_int("epochs", c.epochs);
  c.seed = kv.get_u64("seed", c.seed);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.epsilon = kv.get_double("epsilon", c.epsilon);
  c.max_steps = kv.get_int("max_steps", static_cast<int>(c.max_steps));
  c.max_samples = kv.get_u64("max_samples", c.max_samples);
  return c;
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "learning_rate = " << format_double(learning_rate) << "\n"
    << "batch_size = " << batch_size << "\n"
    << "epochs = " << epochs << "\n"
    << "seed = " << seed << "\n"
    << "beta1 = " << format_double(beta1) << "\n"
    << "beta2 = " << format_double(beta2) << "\n"
    << "epsilon = " << format_double(epsilon) << "\n"
    << "max_steps = " << max_steps << "\n"
    << "max_samples = " << max_samples << "\n";
  return o.str();
}

DatasetReader::DatasetReader(const std::filesystem::path& dir) : dir_(dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir, "dataset directory not found");
  const DatasetManifest m = read_manifest(dir);
  if (m.count == 0) throw ConfigError(dir.string() + ": empty dataset");
  count_ = m.count;
  spec_ = m.config.grid;
}

void DatasetReader::load(std::uint64_t index, net::Matrix<float>& input, net::Matrix<float>& label) const {
  const std::string stem = sample_stem(index);
  const auto in_path = dir_ / (stem + ".in.ppm");
  const auto lbl_path = dir_ / (stem + ".lbl.pgm");
  const pnm::Image in = pnm::read(in_path);
  const pnm::Image lbl = pnm::read(lbl_path);
  if (in.channels != 3 || in.width != spec_.cells_x || in.height != spec_.cells_y)
    throw FormatError(FormatError::Kind::malformed_header, in_path.string() + ": input does not match dataset grid");
  if (lbl.channels != 1 || lbl.width != spec_.cells_x || lbl.height != spec_.cells_y)
    throw FormatError(FormatError::Kind::malformed_header, lbl_path.string() + ": label does not match dataset grid");
  const Eigen::Index hw = Eigen::Index(spec_.cells_x) * spec_.cells_y;
  input.resize(2, hw);
  label.resize(1, hw);
  for (Eigen::Index i = 0; i < hw; ++i) {
    input(0, i) = in.pixels[3 * i] >= 128 ? 1.0f : 0.0f;
    input(1, i) = in.pixels[3 * i + 1] >= 128 ? 1.0f : 0.0f;
    label(0, i) = static_cast<float>(lbl.pixels[i] / 255.0);
  }
}

Adam::Adam(const net::Model<float>& model, const TrainConfig& cfg)
    : lr(cfg.learning_rate),
      beta1(cfg.beta1),
      beta2(cfg.beta2),
      eps(cfg.epsilon),
      m(net::zero_gradients(model)),
      v(net::zero_gradients(model)) {}

void Adam::step(net::Model<float>& model, const net::Gradients<float>& grads) {
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  const float b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2);
  const float step = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float e = static_cast<float>(eps);
  auto update = [&](auto&& param, auto&& g, auto&& mm, auto&& vv) {
    mm = b1 * mm + (1.0f - b1) * g;
    vv = b2 * vv + (1.0f - b2) * g.cwiseProduct(g);
    param -= (step * mm.array() / ((vv.array() * inv_c2).sqrt() + e)).matrix();
  };
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (model.params[i].weight.size() == 0) continue;
    update(model.params[i].weight, grads[i].weight, m[i].weight, v[i].weight);
    update(model.params[i].bias, grads[i].bias, m[i].bias, v[i].bias);
  }
}

TrainResult train(net::Model<float> model, const DatasetReader& data, const TrainConfig& cfg,
                  const std::function<void(const LossRecord&)>& on_step) {
  cfg.validate();
  if (model.input.height != data.spec().cells_y || model.input.width != data.spec().cells_x ||
      model.input.channels != 2)
    throw ConfigError("train: model input does not match the dataset grid");
  const std::uint64_t n = cfg.max_samples ? std::min(cfg.max_samples, data.size()) : data.size();

  TrainResult result{std::move(model), {}};
  net::Model<float>& m = result.model;
  Adam adam(m, cfg);
  net::Workspace<float> ws;
  net::Gradients<float> grads = net::zero_gradients(m);
  net::Matrix<float> x, y;
  std::vector<std::uint64_t> order(n);
  std::int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::uint64_t{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    for (std::uint64_t begin = 0; begin < n; begin += static_cast<std::uint64_t>(cfg.batch_size)) {
      if (cfg.max_steps && step >= cfg.max_steps) return result;
      const std::uint64_t end = std::min(n, begin + static_cast<std::uint64_t>(cfg.batch_size));
      const float scale = 1.0f / static_cast<float>(end - begin);
      for (auto& g : grads) {
        g.weight.setZero();
        g.bias.setZero();
      }
      double loss = 0.0;
      for (std::uint64_t k = begin; k < end; ++k) {
        data.load(order[k], x, y);
        const auto& out = ws.forward(m, x, m.input.height, m.input.width);
        net::Tensor<float> pred(1, 1, m.input.height, m.input.width), label(1, 1, m.input.height, m.input.width);
        pred.sample(0) = out;
        label.sample(0) = y;
        const auto l = net::loss_bce(pred, label);
        loss += l.loss;
        const net::Matrix<float> g = l.grad.sample(0) * scale;
        ws.backward(m, g, grads, false);
      }
      adam.step(m, grads);
      ++step;
      LossRecord rec{epoch, step, loss / static_cast<double>(end - begin)};
      result.log.push_back(rec);
      if (on_step) on_step(rec);
    }
  }
  return result;
}

net::Model<float> initial_model(const GridSpec& grid, std::uint64_t seed) {
  const net::InputShape shape{2, grid.cells_y, grid.cells_x, grid.resolution};
  return net::make_model<float>(net::reference_architecture(), shape, derive_seed(seed, UINT64_MAX));
}

void write_loss_log(const std::vector<LossRecord>& log, std::ostream& out) {
  out << "epoch,step,loss\n";
  char buf[96];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%lld,%.8f\n", r.epoch, static_cast<long long>(r.step), r.loss);
    out << buf;
  }
}

}  // namespace scf
