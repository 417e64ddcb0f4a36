#pragma once

// Adam training of the cost network on a dataset directory written by write_dataset.

#include "scf/config.hpp"
#include "scf/net.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace scf {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 3;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t max_steps = 0;    ///< 0 = no limit
  std::uint64_t max_samples = 0; ///< use only the first N samples; 0 = all

  /// Throws ConfigError.
  void validate() const;
  static TrainConfig from_keys(KeyValues& kv);
  std::string to_text() const;
};

/// Random access to (input, label) pairs of a dataset directory.
class DatasetReader {
 public:
  /// Throws IoError for a missing directory or manifest, ConfigError for an empty dataset.
  explicit DatasetReader(const std::filesystem::path& dir);

  std::uint64_t size() const { return count_; }
  const GridSpec& spec() const { return spec_; }

  /// Input as 2 x (h * w) and label as 1 x (h * w). Errors name the offending file.
  void load(std::uint64_t index, net::Matrix<float>& input, net::Matrix<float>& label) const;

 private:
  std::filesystem::path dir_;
  std::uint64_t count_ = 0;
  GridSpec spec_{};
};

struct LossRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double loss = 0.0;
};

struct Adam {
  double lr, beta1, beta2, eps;
  std::int64_t t = 0;
  net::Gradients<float> m, v;

  Adam(const net::Model<float>& model, const TrainConfig& cfg);
  /// grads are averaged gradients for one step.
  void step(net::Model<float>& model, const net::Gradients<float>& grads);
};

struct TrainResult {
  net::Model<float> model;
  std::vector<LossRecord> log;
};

/// Trains `model` in place semantics: returns the updated copy and the per-step loss log.
/// Sample order per epoch is a Fisher-Yates shuffle seeded by derive_seed(seed, epoch).
/// on_step (optional) is invoked after each optimizer step.
TrainResult train(net::Model<float> model, const DatasetReader& data, const TrainConfig& cfg,
                  const std::function<void(const LossRecord&)>& on_step = {});

/// Reference architecture over the grid, initialized from derive_seed(seed, UINT64_MAX).
net::Model<float> initial_model(const GridSpec& grid, std::uint64_t seed);

/// "epoch,step,loss" lines.
void write_loss_log(const std::vector<LossRecord>& log, std::ostream& out);

}  // namespace scf
