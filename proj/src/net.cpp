#include "scf/net.hpp"

#include "scf/errors.hpp"
#include "scf/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace scf::net {
namespace {

// Logits are clamped so float outputs stay strictly inside (0, 1).
constexpr double kLogitClamp = 16.0;

template <typename Scalar>
void im2col(const Matrix<Scalar>& x, int height, int width, int k, Matrix<Scalar>& col) {
  const int channels = static_cast<int>(x.rows());
  const int pad = k / 2;
  const Eigen::Index hw = Eigen::Index(height) * width;
  col.resize(Eigen::Index(channels) * k * k, hw);
  for (int c = 0; c < channels; ++c) {
    const Scalar* src = x.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = col.row((Eigen::Index(c) * k + ky) * k + kx).data();
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(width, width - dx);
        for (int y = 0; y < height; ++y) {
          Scalar* d = dst + Eigen::Index(y) * width;
          const int sy = y + dy;
          if (sy < 0 || sy >= height) {
            std::fill(d, d + width, Scalar(0));
            continue;
          }
          const Scalar* s = src + Eigen::Index(sy) * width + dx;
          std::fill(d, d + x0, Scalar(0));
          std::copy(s + x0, s + x1, d + x0);
          std::fill(d + x1, d + width, Scalar(0));
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Matrix<Scalar>& col, int channels, int height, int width, int k, Matrix<Scalar>& x) {
  const int pad = k / 2;
  x.setZero(channels, Eigen::Index(height) * width);
  for (int c = 0; c < channels; ++c) {
    Scalar* dst = x.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* src = col.row((Eigen::Index(c) * k + ky) * k + kx).data();
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(width, width - dx);
        for (int y = 0; y < height; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= height) continue;
          const Scalar* s = src + Eigen::Index(y) * width;
          Scalar* d = dst + Eigen::Index(sy) * width + dx;
          for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
        }
      }
    }
  }
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  const Scalar clamped = std::clamp(z, Scalar(-kLogitClamp), Scalar(kLogitClamp));
  return Scalar(1) / (Scalar(1) + std::exp(-clamped));
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::vector<LayerSpec> reference_architecture() {
  return {Conv{3, 2, 32, true},    MaxPool{},  Conv{3, 32, 64, true},  MaxPool{},
          Conv{3, 64, 128, true},  MaxPool{},  Conv{3, 128, 128, true}, Upsample{},
          Conv{3, 128, 64, true},  Upsample{}, Conv{3, 64, 32, true},  Upsample{},
          Conv{3, 32, 16, true},   Conv{1, 16, 1, false}, Sigmoid{}};
}

std::size_t param_count(const std::vector<LayerSpec>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (const auto* c = std::get_if<Conv>(&l))
      n += std::size_t(c->kernel) * c->kernel * c->in_channels * c->out_channels + c->out_channels;
  }
  return n;
}

void validate(const std::vector<LayerSpec>& layers, const InputShape& input) {
  int channels = input.channels, h = input.height, w = input.width;
  if (channels <= 0 || h <= 0 || w <= 0) throw std::invalid_argument("model: input shape must be positive");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "model layer " + std::to_string(i) + ": ";
    std::visit(Overloaded{[&](const Conv& c) {
                            if (c.kernel <= 0 || c.kernel % 2 == 0) throw std::invalid_argument(where + "kernel must be odd");
                            if (c.in_channels != channels)
                              throw std::invalid_argument(where + "expects " + std::to_string(c.in_channels) +
                                                          " channels, got " + std::to_string(channels));
                            channels = c.out_channels;
                          },
                          [&](const MaxPool&) {
                            if (h % 2 || w % 2) throw std::invalid_argument(where + "pooling needs even spatial size");
                            h /= 2;
                            w /= 2;
                          },
                          [&](const Upsample&) {
                            h *= 2;
                            w *= 2;
                          },
                          [&](const Sigmoid&) {}},
               layers[i]);
  }
}

template <typename Scalar>
Model<Scalar> zero_model(std::vector<LayerSpec> layers, const InputShape& input) {
  validate(layers, input);
  Model<Scalar> m;
  m.input = input;
  m.layers = std::move(layers);
  m.params.resize(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (const auto* c = std::get_if<Conv>(&m.layers[i])) {
      m.params[i].weight = Matrix<Scalar>::Zero(c->out_channels, Eigen::Index(c->in_channels) * c->kernel * c->kernel);
      m.params[i].bias = Vector<Scalar>::Zero(c->out_channels);
    }
  }
  return m;
}

template <typename Scalar>
Model<Scalar> make_model(std::vector<LayerSpec> layers, const InputShape& input, std::uint64_t seed) {
  Model<Scalar> m = zero_model<Scalar>(std::move(layers), input);
  Rng rng(seed);
  for (auto& p : m.params) {
    if (p.weight.size() == 0) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(p.weight.cols()));
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = Scalar(rng.uniform(-bound, bound));
  }
  return m;
}

template <typename Scalar>
Gradients<Scalar> zero_gradients(const Model<Scalar>& model) {
  Gradients<Scalar> g(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    g[i].weight = Matrix<Scalar>::Zero(model.params[i].weight.rows(), model.params[i].weight.cols());
    g[i].bias = Vector<Scalar>::Zero(model.params[i].bias.size());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Workspace

template <typename Scalar>
const Matrix<Scalar>& Workspace<Scalar>::forward(const Model<Scalar>& model, const Matrix<Scalar>& x, int height,
                                                 int width) {
  const std::size_t n = model.layers.size();
  acts_.resize(n + 1);
  dims_.resize(n + 1);
  cols_.resize(n);
  argmax_.resize(n);
  acts_[0] = x;
  dims_[0] = {static_cast<int>(x.rows()), height, width};

  for (std::size_t i = 0; i < n; ++i) {
    const Matrix<Scalar>& in = acts_[i];
    Matrix<Scalar>& out = acts_[i + 1];
    const auto [c, h, w] = dims_[i];
    std::visit(Overloaded{[&](const Conv& conv) {
                            const auto& p = model.params[i];
                            if (conv.kernel == 1) {
                              out.noalias() = p.weight * in;
                            } else {
                              im2col(in, h, w, conv.kernel, cols_[i]);
                              out.noalias() = p.weight * cols_[i];
                            }
                            out.colwise() += p.bias;
                            if (conv.relu) out = out.cwiseMax(Scalar(0));
                            dims_[i + 1] = {conv.out_channels, h, w};
                          },
                          [&](const MaxPool&) {
                            const int oh = h / 2, ow = w / 2;
                            out.resize(c, Eigen::Index(oh) * ow);
                            auto& arg = argmax_[i];
                            arg.resize(static_cast<std::size_t>(c) * oh * ow);
                            for (int ch = 0; ch < c; ++ch) {
                              const Scalar* src = in.row(ch).data();
                              for (int y = 0; y < oh; ++y) {
                                for (int xx = 0; xx < ow; ++xx) {
                                  int best = (2 * y) * w + 2 * xx;
                                  for (int dy = 0; dy < 2; ++dy) {
                                    for (int dx = 0; dx < 2; ++dx) {
                                      const int idx = (2 * y + dy) * w + 2 * xx + dx;
                                      if (src[idx] > src[best]) best = idx;
                                    }
                                  }
                                  const int o = y * ow + xx;
                                  out(ch, o) = src[best];
                                  arg[static_cast<std::size_t>(ch) * oh * ow + o] = best;
                                }
                              }
                            }
                            dims_[i + 1] = {c, oh, ow};
                          },
                          [&](const Upsample&) {
                            const int oh = h * 2, ow = w * 2;
                            out.resize(c, Eigen::Index(oh) * ow);
                            for (int ch = 0; ch < c; ++ch) {
                              const Scalar* src = in.row(ch).data();
                              Scalar* dst = out.row(ch).data();
                              for (int y = 0; y < oh; ++y) {
                                for (int xx = 0; xx < ow; ++xx) dst[y * ow + xx] = src[(y / 2) * w + xx / 2];
                              }
                            }
                            dims_[i + 1] = {c, oh, ow};
                          },
                          [&](const Sigmoid&) {
                            out = in.unaryExpr([](Scalar z) { return sigmoid(z); });
                            dims_[i + 1] = dims_[i];
                          }},
               model.layers[i]);
  }
  return acts_.back();
}

template <typename Scalar>
Matrix<Scalar> Workspace<Scalar>::backward(const Model<Scalar>& model, const Matrix<Scalar>& grad_out,
                                           Gradients<Scalar>& grads, bool want_input_grad) {
  const std::size_t n = model.layers.size();
  grad_a_ = grad_out;
  for (std::size_t li = n; li-- > 0;) {
    if (li == 0 && !want_input_grad && std::holds_alternative<Conv>(model.layers[0])) {
      // Parameter gradients only; skip the input-gradient product.
      const auto& conv = std::get<Conv>(model.layers[0]);
      if (conv.relu) grad_a_ = (acts_[1].array() > Scalar(0)).select(grad_a_, Scalar(0));
      const Matrix<Scalar>& basis = conv.kernel == 1 ? acts_[0] : cols_[0];
      grads[0].weight.noalias() += grad_a_ * basis.transpose();
      grads[0].bias += grad_a_.rowwise().sum();
      return {};
    }
    const auto [c, h, w] = dims_[li];
    const Matrix<Scalar>& in = acts_[li];
    const Matrix<Scalar>& out = acts_[li + 1];
    Matrix<Scalar>& g_in = grad_b_;
    std::visit(Overloaded{[&](const Conv& conv) {
                            const auto& p = model.params[li];
                            if (conv.relu) grad_a_ = (out.array() > Scalar(0)).select(grad_a_, Scalar(0));
                            grads[li].bias += grad_a_.rowwise().sum();
                            if (conv.kernel == 1) {
                              grads[li].weight.noalias() += grad_a_ * in.transpose();
                              g_in.noalias() = p.weight.transpose() * grad_a_;
                            } else {
                              grads[li].weight.noalias() += grad_a_ * cols_[li].transpose();
                              Matrix<Scalar> gcol = p.weight.transpose() * grad_a_;
                              col2im(gcol, c, h, w, conv.kernel, g_in);
                            }
                          },
                          [&](const MaxPool&) {
                            const int oh = h / 2, ow = w / 2;
                            g_in.setZero(c, Eigen::Index(h) * w);
                            const auto& arg = argmax_[li];
                            for (int ch = 0; ch < c; ++ch) {
                              for (int o = 0; o < oh * ow; ++o)
                                g_in(ch, arg[static_cast<std::size_t>(ch) * oh * ow + o]) += grad_a_(ch, o);
                            }
                          },
                          [&](const Upsample&) {
                            const int ow = w * 2;
                            g_in.setZero(c, Eigen::Index(h) * w);
                            for (int ch = 0; ch < c; ++ch) {
                              const Scalar* src = grad_a_.row(ch).data();
                              Scalar* dst = g_in.row(ch).data();
                              for (int y = 0; y < 2 * h; ++y) {
                                for (int xx = 0; xx < ow; ++xx) dst[(y / 2) * w + xx / 2] += src[y * ow + xx];
                              }
                            }
                          },
                          [&](const Sigmoid&) {
                            const Scalar lim = Scalar(kLogitClamp);
                            g_in = grad_a_.array() * out.array() * (Scalar(1) - out.array()) *
                                   (in.array().abs() <= lim).template cast<Scalar>();
                          }},
               model.layers[li]);
    std::swap(grad_a_, grad_b_);
  }
  return grad_a_;
}

// ---------------------------------------------------------------------------
// Batch API

template <typename Scalar>
Tensor<Scalar> forward(const Model<Scalar>& model, const Tensor<Scalar>& input) {
  if (input.channels() != model.input.channels || input.height() != model.input.height ||
      input.width() != model.input.width)
    throw std::invalid_argument("forward: input shape does not match the model");
  Workspace<Scalar> ws;
  Tensor<Scalar> out;
  for (int b = 0; b < input.batch(); ++b) {
    const Matrix<Scalar> x = input.sample(b);
    const auto& y = ws.forward(model, x, input.height(), input.width());
    if (b == 0) {
      const auto d = ws.output_dims();
      out = Tensor<Scalar>(input.batch(), d[0], d[1], d[2]);
    }
    out.sample(b) = y;
  }
  return out;
}

template <typename Scalar>
BackwardResult<Scalar> backward(const Model<Scalar>& model, const Tensor<Scalar>& input,
                                const Tensor<Scalar>& grad_out) {
  if (input.channels() != model.input.channels || input.height() != model.input.height ||
      input.width() != model.input.width)
    throw std::invalid_argument("backward: input shape does not match the model");
  if (grad_out.batch() != input.batch()) throw std::invalid_argument("backward: batch size mismatch");
  BackwardResult<Scalar> r{zero_gradients(model), Tensor<Scalar>(input.batch(), input.channels(), input.height(),
                                                                 input.width())};
  Workspace<Scalar> ws;
  for (int b = 0; b < input.batch(); ++b) {
    const Matrix<Scalar> x = input.sample(b);
    ws.forward(model, x, input.height(), input.width());
    const auto d = ws.output_dims();
    if (grad_out.channels() != d[0] || grad_out.height() != d[1] || grad_out.width() != d[2])
      throw std::invalid_argument("backward: grad_out shape does not match the model output");
    const Matrix<Scalar> g = grad_out.sample(b);
    r.input_grad.sample(b) = ws.backward(model, g, r.params, true);
  }
  return r;
}

template <typename Scalar>
LossResult<Scalar> loss_bce(const Tensor<Scalar>& pred, const Tensor<Scalar>& label) {
  if (!pred.same_shape(label)) throw std::invalid_argument("loss_bce: shape mismatch");
  if (!((label.data() >= Scalar(0)).all() && (label.data() <= Scalar(1)).all()))
    throw std::invalid_argument("loss_bce: labels must lie in [0, 1]");
  constexpr double eps = 1e-7;
  const double n = static_cast<double>(pred.size());
  LossResult<Scalar> r{0.0, Tensor<Scalar>(pred.batch(), pred.channels(), pred.height(), pred.width())};
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pred.data()[i]), eps, 1.0 - eps);
    const double y = label.data()[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    r.grad.data()[i] = static_cast<Scalar>((p - y) / (p * (1.0 - p)) / n);
  }
  r.loss = total / n;
  return r;
}

// ---------------------------------------------------------------------------
// Inference

Tensor<float> to_tensor(const SocialGridMap& map) {
  Tensor<float> t(1, 2, map.spec.cells_y, map.spec.cells_x);
  auto s = t.sample(0);
  s.row(0) = Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>(map.people.data(), map.people.size())
                 .cast<float>();
  s.row(1) =
      Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>(map.goal.data(), map.goal.size()).cast<float>();
  return t;
}

CostMap predict(const Model<float>& model, const SocialGridMap& map) {
  if (map.spec.cells_x != model.input.width || map.spec.cells_y != model.input.height ||
      std::abs(map.spec.resolution - model.input.resolution) > 1e-6 || model.input.channels != 2)
    throw std::invalid_argument("predict: social grid map does not match the model input spec");
  const Tensor<float> out = forward(model, to_tensor(map));
  if (out.channels() != 1) throw std::invalid_argument("predict: model must produce one channel");
  CostMap cost(map.spec);
  cost.values = Eigen::Map<const Raster<float>>(out.data().data(), map.spec.cells_y, map.spec.cells_x);
  return cost;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint32_t u32() {
    if (pos_ + 4 > bytes_.size()) throw FormatError(FormatError::Kind::truncated, "weights: file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

enum LayerKind : std::uint32_t { kConv = 0, kMaxPool = 1, kUpsample = 2, kSigmoid = 3 };

}  // namespace

std::vector<std::uint8_t> encode_weights(const Model<float>& model) {
  ByteWriter w;
  for (char ch : {'S', 'C', 'F', '1'}) w.bytes.push_back(static_cast<std::uint8_t>(ch));
  w.u32(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.input.channels));
  w.u32(static_cast<std::uint32_t>(model.input.height));
  w.u32(static_cast<std::uint32_t>(model.input.width));
  w.f32(static_cast<float>(model.input.resolution));
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    std::visit(Overloaded{[&](const Conv& c) {
                            w.u32(kConv);
                            w.u32(static_cast<std::uint32_t>(c.kernel));
                            w.u32(static_cast<std::uint32_t>(c.in_channels));
                            w.u32(static_cast<std::uint32_t>(c.out_channels));
                            w.u32(c.relu ? 1u : 0u);
                          },
                          [&](const MaxPool&) { w.u32(kMaxPool); }, [&](const Upsample&) { w.u32(kUpsample); },
                          [&](const Sigmoid&) { w.u32(kSigmoid); }},
               l);
  }
  for (const auto& p : model.params) {
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) w.f32(p.weight.data()[i]);
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) w.f32(p.bias[i]);
  }
  return std::move(w.bytes);
}

Model<float> decode_weights(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SCF1", 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic, "weights: bad magic (expected SCF1)");
  const std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  ByteReader r(body);
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion)
    throw FormatError(FormatError::Kind::version_mismatch, "weights: unsupported format version " +
                                                               std::to_string(version));
  InputShape input;
  input.channels = static_cast<int>(r.u32());
  input.height = static_cast<int>(r.u32());
  input.width = static_cast<int>(r.u32());
  input.resolution = r.f32();
  const std::uint32_t count = r.u32();
  if (count > 4096) throw FormatError(FormatError::Kind::malformed_header, "weights: implausible layer count");
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    switch (r.u32()) {
      case kConv: {
        Conv c;
        c.kernel = static_cast<int>(r.u32());
        c.in_channels = static_cast<int>(r.u32());
        c.out_channels = static_cast<int>(r.u32());
        c.relu = r.u32() != 0;
        if (c.kernel <= 0 || c.in_channels <= 0 || c.out_channels <= 0 || c.kernel > 15 || c.in_channels > 65536 ||
            c.out_channels > 65536)
          throw FormatError(FormatError::Kind::malformed_header, "weights: bad conv layer");
        layers.push_back(c);
        break;
      }
      case kMaxPool: layers.push_back(MaxPool{}); break;
      case kUpsample: layers.push_back(Upsample{}); break;
      case kSigmoid: layers.push_back(Sigmoid{}); break;
      default: throw FormatError(FormatError::Kind::malformed_header, "weights: unknown layer kind");
    }
  }
  Model<float> m;
  try {
    m = zero_model<float>(layers, input);
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatError::Kind::malformed_header, std::string("weights: ") + e.what());
  }
  for (auto& p : m.params) {
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = r.f32();
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = r.f32();
  }
  if (!r.done()) throw FormatError(FormatError::Kind::malformed_header, "weights: trailing bytes after parameters");
  return m;
}

void save_weights(const Model<float>& model, const std::filesystem::path& path) {
  const auto bytes = encode_weights(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

Model<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open weights");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

#define SCF_INSTANTIATE(S)                                                                                \
  template Model<S> make_model<S>(std::vector<LayerSpec>, const InputShape&, std::uint64_t);              \
  template Model<S> zero_model<S>(std::vector<LayerSpec>, const InputShape&);                             \
  template Gradients<S> zero_gradients<S>(const Model<S>&);                                               \
  template Tensor<S> forward<S>(const Model<S>&, const Tensor<S>&);                                       \
  template BackwardResult<S> backward<S>(const Model<S>&, const Tensor<S>&, const Tensor<S>&);            \
  template LossResult<S> loss_bce<S>(const Tensor<S>&, const Tensor<S>&);                                 \
  template class Workspace<S>;

SCF_INSTANTIATE(float)
SCF_INSTANTIATE(double)
#undef SCF_INSTANTIATE

}  // namespace scf::net
