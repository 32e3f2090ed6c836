#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sigman/errors.hpp"
#include "sigman/tape.hpp"
#include "sigman/tensor.hpp"

namespace sigman {

struct LayerShape {
  Index fan_out = 0;
  Index fan_in = 0;
};

/// Neural field architecture for one modality: Fourier embedding, then
/// `n_hidden_layers` ReLU layers of width `hidden_dim`, then a linear output.
struct FieldArch {
  int coord_dim = 2;
  int embed_dim = 512;
  int n_hidden_layers = 3;
  int hidden_dim = 512;
  int out_dim = 1;

  void validate() const {
    if (coord_dim < 1) throw ConfigError("field: coord_dim must be >= 1");
    if (embed_dim < 2 || embed_dim % (2 * coord_dim) != 0) {
      throw ConfigError("field: embed_dim " + std::to_string(embed_dim) + " is not divisible by 2*coord_dim = " +
                        std::to_string(2 * coord_dim));
    }
    if (n_hidden_layers < 1) throw ConfigError("field: n_hidden_layers must be >= 1");
    if (hidden_dim < 1) throw ConfigError("field: hidden_dim must be >= 1");
    if (out_dim < 1) throw ConfigError("field: out_dim must be >= 1");
  }

  int frequencies() const { return embed_dim / (2 * coord_dim); }
  int num_layers() const { return n_hidden_layers + 1; }

  LayerShape layer(int l) const {
    const Index in = l == 0 ? embed_dim : hidden_dim;
    const Index out = l == n_hidden_layers ? out_dim : hidden_dim;
    return {out, in};
  }
};

/// Hypernetwork trunk and factorization settings.
struct HyperArch {
  int latent_dim = 1024;
  int trunk_hidden = 512;
  int trunk_layers = 3;
  int rank = 10;

  void validate() const {
    if (latent_dim < 1) throw ConfigError("hypernet: latent_dim must be >= 1");
    if (trunk_hidden < 1 || trunk_layers < 1) throw ConfigError("hypernet: trunk must have >= 1 layer of width >= 1");
    if (rank < 1) throw ConfigError("hypernet: rank must be >= 1");
  }
};

/// Where each field layer's factors and bias live inside one row of a
/// modality head's output.
struct HeadLayout {
  struct Block {
    LayerShape shape;
    Index rank = 0;
    Index a_offset = 0;     // fan_out x rank
    Index b_offset = 0;     // rank x fan_in
    Index bias_offset = 0;  // fan_out
  };
  std::vector<Block> layers;
  Index width = 0;
};

inline HeadLayout head_layout(const FieldArch& field, const HyperArch& hyper) {
  HeadLayout out;
  for (int l = 0; l < field.num_layers(); ++l) {
    HeadLayout::Block b;
    b.shape = field.layer(l);
    b.rank = std::min<Index>({hyper.rank, b.shape.fan_out, b.shape.fan_in});
    b.a_offset = out.width;
    out.width += b.shape.fan_out * b.rank;
    b.b_offset = out.width;
    out.width += b.rank * b.shape.fan_in;
    b.bias_offset = out.width;
    out.width += b.shape.fan_out;
    out.layers.push_back(b);
  }
  return out;
}

/// Decoded per-signal field weights. weights[l] is fan_out x fan_in,
/// biases[l] is 1 x fan_out.
template <typename Scalar>
struct FieldParams {
  std::vector<Tensor<Scalar>> weights;
  std::vector<Tensor<Scalar>> biases;
};

template <typename Scalar>
struct ModalityHead {
  Tensor<Scalar> weight;              // head width x trunk_hidden
  Tensor<Scalar> bias;                // 1 x head width
  std::vector<Tensor<Scalar>> gates;  // shared W_s per field layer
};

/// Shared hypernetwork state: one trunk, one head (plus gates) per modality.
template <typename Scalar>
struct HypernetParams {
  HyperArch arch;
  std::vector<FieldArch> fields;
  std::vector<Tensor<Scalar>> trunk_weights;  // out x in
  std::vector<Tensor<Scalar>> trunk_biases;   // 1 x out
  std::vector<ModalityHead<Scalar>> heads;

  /// Visits every parameter in a fixed order with a stable name.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t l = 0; l < trunk_weights.size(); ++l) {
      f("trunk." + std::to_string(l) + ".weight", trunk_weights[l]);
      f("trunk." + std::to_string(l) + ".bias", trunk_biases[l]);
    }
    for (std::size_t m = 0; m < heads.size(); ++m) {
      f("head." + std::to_string(m) + ".weight", heads[m].weight);
      f("head." + std::to_string(m) + ".bias", heads[m].bias);
      for (std::size_t l = 0; l < heads[m].gates.size(); ++l) {
        f("gate." + std::to_string(m) + "." + std::to_string(l), heads[m].gates[l]);
      }
    }
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<HypernetParams*>(this)->for_each(
        [&](const std::string& name, Tensor<Scalar>& t) { f(name, static_cast<const Tensor<Scalar>&>(t)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor<Scalar>& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }
};

namespace detail {

template <typename Scalar, typename Rng>
Tensor<Scalar> uniform(Index rows, Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Scalar> t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
  return t;
}

}  // namespace detail

/// Fan-in scaled uniform initialization. Gates are drawn at twice the usual
/// bound so that gate * sigmoid(0) starts at the usual scale.
template <typename Scalar, typename Rng>
HypernetParams<Scalar> init_hypernet(const HyperArch& arch, std::span<const FieldArch> fields, Rng& rng) {
  arch.validate();
  if (fields.empty()) throw ConfigError("hypernet: at least one modality is required");
  HypernetParams<Scalar> h;
  h.arch = arch;
  h.fields.assign(fields.begin(), fields.end());
  Index in = arch.latent_dim;
  for (int l = 0; l < arch.trunk_layers; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    h.trunk_weights.push_back(detail::uniform<Scalar>(arch.trunk_hidden, in, bound, rng));
    h.trunk_biases.push_back(detail::uniform<Scalar>(1, arch.trunk_hidden, bound, rng));
    in = arch.trunk_hidden;
  }
  for (const auto& field : fields) {
    field.validate();
    const HeadLayout layout = head_layout(field, arch);
    ModalityHead<Scalar> head;
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.trunk_hidden));
    head.weight = detail::uniform<Scalar>(layout.width, arch.trunk_hidden, bound, rng);
    head.bias = Tensor<Scalar>::Zero(1, layout.width);
    for (const auto& block : layout.layers) {
      const double gate_bound = 2.0 / std::sqrt(static_cast<double>(block.shape.fan_in));
      head.gates.push_back(detail::uniform<Scalar>(block.shape.fan_out, block.shape.fan_in, gate_bound, rng));
    }
    h.heads.push_back(std::move(head));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Coordinates and embedding
// ---------------------------------------------------------------------------

/// Center of cell `m` on an axis of extent `d`: -1 + (2m + 1)/d. Endpoints
/// are excluded because sin/cos at multiples of pi cannot tell x = -1 from
/// x = 1.
inline double axis_coordinate(Index m, Index d) {
  return -1.0 + static_cast<double>(2 * m + 1) / static_cast<double>(d);
}

/// Coordinates of every cell of a row-major grid, one row per cell.
template <typename Scalar>
Tensor<Scalar> grid_coordinates(std::span<const Index> shape) {
  Index cells = 1;
  for (Index d : shape) cells *= d;
  const Index k = static_cast<Index>(shape.size());
  Tensor<Scalar> out(cells, k);
  for (Index c = 0; c < cells; ++c) {
    Index rem = c;
    for (Index axis = k - 1; axis >= 0; --axis) {
      const Index d = shape[axis];
      out(c, axis) = static_cast<Scalar>(axis_coordinate(rem % d, d));
      rem /= d;
    }
  }
  return out;
}

/// sin/cos features at frequencies 2^f * pi, f = 0..F-1. For each coordinate
/// axis the block is [sin(2^0 pi x), cos(2^0 pi x), sin(2^1 pi x), ...].
template <typename Scalar>
Tensor<Scalar> fourier_embed(const Tensor<Scalar>& coords, const FieldArch& arch) {
  arch.validate();
  if (coords.cols() != arch.coord_dim) {
    throw ShapeError("fourier_embed: coordinates " + shape_str(coords) + " do not have " +
                     std::to_string(arch.coord_dim) + " columns");
  }
  if ((coords.array().abs() > Scalar(1)).any()) throw DataError("fourier_embed: coordinate outside [-1, 1]");
  const int freqs = arch.frequencies();
  Tensor<Scalar> out(coords.rows(), arch.embed_dim);
  for (Index p = 0; p < coords.rows(); ++p) {
    for (int d = 0; d < arch.coord_dim; ++d) {
      const double x = static_cast<double>(coords(p, d));
      for (int f = 0; f < freqs; ++f) {
        const double angle = std::ldexp(std::numbers::pi, f) * x;
        const Index col = static_cast<Index>(d) * 2 * freqs + 2 * f;
        out(p, col) = static_cast<Scalar>(std::sin(angle));
        out(p, col + 1) = static_cast<Scalar>(std::cos(angle));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tape-bound decode / eval
// ---------------------------------------------------------------------------

template <typename Scalar>
struct FieldVars {
  std::vector<Var<Scalar>> weights;
  std::vector<Var<Scalar>> biases;
};

template <typename Scalar>
struct HeadVars {
  Var<Scalar> weight;
  Var<Scalar> bias;
  std::vector<Var<Scalar>> gates;
};

template <typename Scalar>
struct HypernetVars {
  const HypernetParams<Scalar>* params = nullptr;
  std::vector<Var<Scalar>> trunk_weights;
  std::vector<Var<Scalar>> trunk_biases;
  std::vector<HeadVars<Scalar>> heads;

  /// Visits the bound variables in the same order as HypernetParams::for_each.
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t l = 0; l < trunk_weights.size(); ++l) {
      f(trunk_weights[l]);
      f(trunk_biases[l]);
    }
    for (const auto& h : heads) {
      f(h.weight);
      f(h.bias);
      for (const auto& g : h.gates) f(g);
    }
  }
};

/// Places the hypernetwork on `tape`, as leaves when `trainable`, otherwise
/// as constants.
template <typename Scalar>
HypernetVars<Scalar> bind(Tape<Scalar>& tape, const HypernetParams<Scalar>& p, bool trainable) {
  auto put = [&](const Tensor<Scalar>& t) { return trainable ? tape.leaf(t) : tape.constant(t); };
  HypernetVars<Scalar> v;
  v.params = &p;
  for (std::size_t l = 0; l < p.trunk_weights.size(); ++l) {
    v.trunk_weights.push_back(put(p.trunk_weights[l]));
    v.trunk_biases.push_back(put(p.trunk_biases[l]));
  }
  for (const auto& h : p.heads) {
    HeadVars<Scalar> hv;
    hv.weight = put(h.weight);
    hv.bias = put(h.bias);
    for (const auto& g : h.gates) hv.gates.push_back(put(g));
    v.heads.push_back(std::move(hv));
  }
  return v;
}

/// Trunk features for a batch of latents (one latent per row).
template <typename Scalar>
Var<Scalar> hyper_features(const HypernetVars<Scalar>& h, Var<Scalar> latents) {
  if (latents.cols() != h.params->arch.latent_dim) {
    throw ShapeError("decode_field: latent " + shape_str(latents.value()) + " does not have dimension " +
                     std::to_string(h.params->arch.latent_dim));
  }
  Var<Scalar> x = latents;
  for (std::size_t l = 0; l < h.trunk_weights.size(); ++l) {
    x = relu(add_row(matmul_nt(x, h.trunk_weights[l]), h.trunk_biases[l]));
  }
  return x;
}

/// Raw head output for one modality: one row of factors per latent.
template <typename Scalar>
Var<Scalar> head_output(const HypernetVars<Scalar>& h, Var<Scalar> features, std::size_t modality) {
  const auto& head = h.heads.at(modality);
  return add_row(matmul_nt(features, head.weight), head.bias);
}

/// Field weights for row `row` of a head output:
/// W = W_s (.) sigmoid(A * B), with A, B and the bias read from the row.
template <typename Scalar>
FieldVars<Scalar> field_from_head(const HypernetVars<Scalar>& h, Var<Scalar> head_out, Index row,
                                  std::size_t modality) {
  const HeadLayout layout = head_layout(h.params->fields.at(modality), h.params->arch);
  const Index idx[] = {row};
  Var<Scalar> r = head_out.rows() == 1 ? head_out : gather_rows(head_out, std::span<const Index>(idx));
  FieldVars<Scalar> out;
  for (std::size_t l = 0; l < layout.layers.size(); ++l) {
    const auto& b = layout.layers[l];
    auto a_fac = reshape(slice_cols(r, b.a_offset, b.shape.fan_out * b.rank), b.shape.fan_out, b.rank);
    auto b_fac = reshape(slice_cols(r, b.b_offset, b.rank * b.shape.fan_in), b.rank, b.shape.fan_in);
    out.weights.push_back(hadamard(h.heads[modality].gates[l], sigmoid(matmul(a_fac, b_fac))));
    out.biases.push_back(slice_cols(r, b.bias_offset, b.shape.fan_out));
  }
  return out;
}

/// Decodes every latent row into per-modality field weights:
/// result[row][modality].
template <typename Scalar>
std::vector<std::vector<FieldVars<Scalar>>> decode_fields(const HypernetVars<Scalar>& h, Var<Scalar> latents) {
  auto features = hyper_features(h, latents);
  std::vector<std::vector<FieldVars<Scalar>>> out(static_cast<std::size_t>(latents.rows()));
  for (std::size_t m = 0; m < h.heads.size(); ++m) {
    auto head_out = head_output(h, features, m);
    for (Index row = 0; row < latents.rows(); ++row) {
      out[static_cast<std::size_t>(row)].push_back(field_from_head(h, head_out, row, m));
    }
  }
  return out;
}

/// Runs the field MLP over an embedded coordinate batch (P x embed_dim),
/// returning P x out_dim.
template <typename Scalar>
Var<Scalar> eval_field(const FieldVars<Scalar>& field, Var<Scalar> embedded) {
  Var<Scalar> x = embedded;
  const std::size_t n = field.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    x = add_row(matmul_nt(x, field.weights[l]), field.biases[l]);
    if (l + 1 < n) x = relu(x);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Value-level convenience wrappers
// ---------------------------------------------------------------------------

template <typename Scalar>
FieldParams<Scalar> decode_field(const Tensor<Scalar>& z, const HypernetParams<Scalar>& h, std::size_t modality = 0) {
  Tape<Scalar> tape;
  auto hv = bind(tape, h, false);
  auto features = hyper_features(hv, tape.constant(z));
  auto fv = field_from_head(hv, head_output(hv, features, modality), 0, modality);
  FieldParams<Scalar> out;
  for (std::size_t l = 0; l < fv.weights.size(); ++l) {
    out.weights.push_back(fv.weights[l].value());
    out.biases.push_back(fv.biases[l].value());
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> eval_field(const FieldParams<Scalar>& p, const Tensor<Scalar>& coords, const FieldArch& arch) {
  if (static_cast<int>(p.weights.size()) != arch.num_layers()) {
    throw ShapeError("eval_field: parameter layer count does not match architecture");
  }
  for (int l = 0; l < arch.num_layers(); ++l) {
    const auto s = arch.layer(l);
    if (p.weights[l].rows() != s.fan_out || p.weights[l].cols() != s.fan_in || p.biases[l].rows() != 1 ||
        p.biases[l].cols() != s.fan_out) {
      throw ShapeError("eval_field: layer " + std::to_string(l) + " has shape " + shape_str(p.weights[l]));
    }
  }
  Tensor<Scalar> x = fourier_embed(coords, arch);
  for (int l = 0; l < arch.num_layers(); ++l) {
    Tensor<Scalar> y = (x * p.weights[l].transpose()).rowwise() + p.biases[l].row(0);
    x = l + 1 < arch.num_layers() ? Tensor<Scalar>(y.cwiseMax(Scalar(0))) : y;
  }
  return x;
}

}  // namespace sigman
