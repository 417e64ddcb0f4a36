#pragma once

// Convolutional encoder-decoder mapping a social grid map (people, goal) to a
// social cost map. Layers: 3x3 conv + ReLU, 1x1 conv, 2x2 max pooling,
// nearest x2 upsampling and a sigmoid output. Templated on the scalar type;
// production code runs in float, gradient checks in double.

#include "scf/raster.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

namespace scf::net {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// (batch, channels, height, width), row-major.
template <typename Scalar>
class Tensor {
 public:
  using SampleMap = Eigen::Map<Matrix<Scalar>>;
  using ConstSampleMap = Eigen::Map<const Matrix<Scalar>>;

  Tensor() = default;
  Tensor(int batch, int channels, int height, int width, Scalar fill = Scalar(0))
      : shape_{batch, channels, height, width},
        data_(Eigen::Array<Scalar, Eigen::Dynamic, 1>::Constant(Eigen::Index(batch) * channels * height * width, fill)) {}

  int batch() const { return shape_[0]; }
  int channels() const { return shape_[1]; }
  int height() const { return shape_[2]; }
  int width() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }

  Scalar& at(int b, int c, int y, int x) { return data_[offset(b, c, y, x)]; }
  Scalar at(int b, int c, int y, int x) const { return data_[offset(b, c, y, x)]; }

  /// One batch entry viewed as a channels x (height * width) matrix.
  SampleMap sample(int b) {
    return SampleMap(data_.data() + Eigen::Index(b) * sample_size(), channels(), Eigen::Index(height()) * width());
  }
  ConstSampleMap sample(int b) const {
    return ConstSampleMap(data_.data() + Eigen::Index(b) * sample_size(), channels(),
                          Eigen::Index(height()) * width());
  }

  Eigen::Array<Scalar, Eigen::Dynamic, 1>& data() { return data_; }
  const Eigen::Array<Scalar, Eigen::Dynamic, 1>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  Eigen::Index sample_size() const { return Eigen::Index(channels()) * height() * width(); }
  Eigen::Index offset(int b, int c, int y, int x) const {
    return ((Eigen::Index(b) * channels() + c) * height() + y) * width() + x;
  }

  std::array<int, 4> shape_{0, 0, 0, 0};
  Eigen::Array<Scalar, Eigen::Dynamic, 1> data_;
};

struct Conv {
  int kernel = 3;  ///< odd; stride 1, zero padding kernel / 2
  int in_channels = 1;
  int out_channels = 1;
  bool relu = true;
};
struct MaxPool {};   ///< 2x2, stride 2
struct Upsample {};  ///< nearest, x2
struct Sigmoid {};

using LayerSpec = std::variant<Conv, MaxPool, Upsample, Sigmoid>;

/// The 3-stage symmetric encoder-decoder (2 -> 1 channels, 337,441 parameters).
std::vector<LayerSpec> reference_architecture();

std::size_t param_count(const std::vector<LayerSpec>& layers);

struct InputShape {
  int channels = 2;
  int height = 120;
  int width = 120;
  double resolution = 0.2;
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

template <typename Scalar>
struct ConvParams {
  Matrix<Scalar> weight;  ///< out x (in * k * k), column index (in * k + ky) * k + kx
  Vector<Scalar> bias;
};

template <typename Scalar>
struct Model {
  InputShape input{};
  std::vector<LayerSpec> layers;
  std::vector<ConvParams<Scalar>> params;  ///< one entry per layer; empty for parameter-free layers

  std::size_t param_count() const { return net::param_count(layers); }
};

/// Throws std::invalid_argument if channel counts do not chain or pooling does not divide the input.
void validate(const std::vector<LayerSpec>& layers, const InputShape& input);

/// Uniform fan-in initialization, bound sqrt(6 / fan_in); biases zero.
template <typename Scalar>
Model<Scalar> make_model(std::vector<LayerSpec> layers, const InputShape& input, std::uint64_t seed);

/// All weights and biases zero.
template <typename Scalar>
Model<Scalar> zero_model(std::vector<LayerSpec> layers, const InputShape& input);

template <typename Scalar>
using Gradients = std::vector<ConvParams<Scalar>>;

template <typename Scalar>
Gradients<Scalar> zero_gradients(const Model<Scalar>& model);

/// Throws std::invalid_argument on a shape mismatch.
template <typename Scalar>
Tensor<Scalar> forward(const Model<Scalar>& model, const Tensor<Scalar>& input);

template <typename Scalar>
struct BackwardResult {
  Gradients<Scalar> params;
  Tensor<Scalar> input_grad;
};

/// Parameter and input gradients of sum(grad_out * forward(input)).
template <typename Scalar>
BackwardResult<Scalar> backward(const Model<Scalar>& model, const Tensor<Scalar>& input,
                                const Tensor<Scalar>& grad_out);

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Tensor<Scalar> grad;  ///< d loss / d pred
};

/// Mean per-cell binary cross-entropy. Throws std::invalid_argument for labels
/// outside [0, 1] or mismatched shapes.
template <typename Scalar>
LossResult<Scalar> loss_bce(const Tensor<Scalar>& pred, const Tensor<Scalar>& label);

/// Single-sample activations kept between a forward and a backward pass.
template <typename Scalar>
class Workspace {
 public:
  /// Runs the model on x (channels x (h * w)) and records what backward needs.
  const Matrix<Scalar>& forward(const Model<Scalar>& model, const Matrix<Scalar>& x, int height, int width);
  /// Accumulates parameter gradients into grads given d/d(output). Returns the
  /// input gradient when want_input_grad, else an empty matrix.
  Matrix<Scalar> backward(const Model<Scalar>& model, const Matrix<Scalar>& grad_out, Gradients<Scalar>& grads,
                          bool want_input_grad);

  const Matrix<Scalar>& output() const { return acts_.back(); }
  std::array<int, 3> output_dims() const { return dims_.back(); }

 private:
  std::vector<Matrix<Scalar>> acts_;
  std::vector<std::array<int, 3>> dims_;  // channels, height, width per activation
  std::vector<Matrix<Scalar>> cols_;
  std::vector<std::vector<int>> argmax_;
  Matrix<Scalar> grad_a_, grad_b_;
};

/// Cost map prediction; throws std::invalid_argument when the map spec does not
/// match the model input.
CostMap predict(const Model<float>& model, const SocialGridMap& map);
Tensor<float> to_tensor(const SocialGridMap& map);

/// "SCF1" | u32 version | input shape | layer table | little-endian f32 parameters.
void save_weights(const Model<float>& model, const std::filesystem::path& path);
/// Throws FormatError (bad_magic, version_mismatch, truncated, malformed_header).
Model<float> load_weights(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_weights(const Model<float>& model);
Model<float> decode_weights(const std::vector<std::uint8_t>& bytes);

constexpr std::uint32_t kWeightFormatVersion = 1;

}  // namespace scf::net
