// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ganom/kernels.hpp"
#include "ganom/tensor.hpp"

namespace ganom::nn {

enum class Direction { FrameToFlow, FlowToFrame };

const char* direction_name(Direction d);
Direction direction_from_name(const std::string& name);

// Source of the generator noise z: dropout driven by a fixed stream. With
// the same seed the drawn masks are bit-identical, which makes repeated
// forward passes reproducible.
struct NoiseSource {
  bool dropout = false;
  std::uint64_t seed = 0;
};

struct GenConfig {
  int resolution = 256;
  int base_channels = 64;  // encoder width; doubled per stage, capped at 8x
  double dropout_rate = 0.5;
};

struct DiscConfig {
  int resolution = 256;
  int base_channels = 64;
};

// Parameters live in one flat vector; slices describe how layers address
// it. Deconvolution weights are stored as [in][out][k][k] and run through
// the conv kernels with the roles of the channel axes swapped.
struct ConvSlice {
  core::ConvSpec spec;
  int bias_c = 0;
  std::size_t w_off = 0;
  std::size_t b_off = 0;
};

struct NormSlice {
  int channels = 0;  // 0 = stage has no norm
  std::size_t gamma_off = 0;
  std::size_t beta_off = 0;
};

// U-net: log2(resolution) - 2 encoder stages, mirrored decoder with skip
// concatenations, dropout on the three innermost decoder stages.
struct GenTopology {
  int stages = 0;
  std::vector<ConvSlice> enc;
  std::vector<NormSlice> enc_norm;
  std::vector<ConvSlice> dec;
  std::vector<NormSlice> dec_norm;
  std::vector<bool> dec_dropout;
  std::size_t param_count = 0;
};

struct GeneratorState {
  Direction direction = Direction::FrameToFlow;
  GenConfig cfg;
  GenTopology topo;
  std::vector<double> params;
};

// Patch discriminator on the 6-channel (condition, candidate) stack. The
// number of stride-2 layers scales with resolution; two trailing stride-1
// convs shrink the grid to resolution/2^d - 2 per side.
struct DiscTopology {
  std::vector<ConvSlice> convs;
  std::vector<NormSlice> norms;
  std::size_t param_count = 0;
  int grid_h = 0;
  int grid_w = 0;
};

struct DiscriminatorState {
  DiscConfig cfg;
  DiscTopology topo;
  std::vector<double> params;
};

GenTopology make_generator_topology(const GenConfig& cfg);
DiscTopology make_discriminator_topology(const DiscConfig& cfg);
GeneratorState make_generator(Direction dir, const GenConfig& cfg,
                              std::uint64_t seed);
DiscriminatorState make_discriminator(const DiscConfig& cfg,
                                      std::uint64_t seed);

// Forward caches consumed by the corresponding backward pass.
struct NormCache {
  Tensor xhat;
  std::vector<double> invstd;
};

struct GenTape {
  std::vector<Tensor> enc_conv_in, enc_conv_out, enc_out;
  std::vector<NormCache> enc_norm;
  std::vector<Tensor> dec_relu_in, dec_conv_in, dec_conv_out;
  std::vector<NormCache> dec_norm;
  std::vector<Tensor> dec_dropout_mask, dec_out;
  Tensor out;  // tanh output
};

struct DiscTape {
  std::vector<Tensor> conv_in, conv_out;
  std::vector<NormCache> norms;
  std::vector<Tensor> act_out;
  Tensor out;  // sigmoid patch map
  int cond_channels = 0;
};

// p = G(x, z). Output spatial dims equal input dims; 3 channels in, 3 out.
Tensor generator_forward(const GeneratorState& g, const Tensor& x,
                         const NoiseSource& noise, GenTape* tape = nullptr);

// Backpropagates dLoss/dOutput; accumulates parameter gradients (+=) and
// returns dLoss/dInput.
Tensor generator_backward(const GeneratorState& g, const GenTape& tape,
                          const Tensor& dout, std::vector<double>& grads);

// Patch probability map for (condition x, candidate y-or-p).
Tensor discriminator_forward(const DiscriminatorState& d, const Tensor& x,
                             const Tensor& candidate, DiscTape* tape = nullptr);

// Returns (d/dx, d/dcandidate); grads may be null to skip the parameter
// gradients when only the input gradient is wanted.
std::pair<Tensor, Tensor> discriminator_backward(const DiscriminatorState& d,
                                                 const DiscTape& tape,
                                                 const Tensor& dout,
                                                 std::vector<double>* grads);

// Mean absolute difference. The mean convention keeps the value comparable
// across resolutions; the weighting constant is absorbed by lambda_l1.
double l1_loss(const Tensor& y, const Tensor& p);
Tensor l1_loss_grad_p(const Tensor& y, const Tensor& p);

inline constexpr double kLogEps = 1e-7;

struct CganLoss {
  double loss_d = 0;      // -mean log D(x,y) - mean log(1 - D(x,G(x,z)))
  double loss_g_adv = 0;  // non-saturating -mean log D(x,G(x,z))
};

CganLoss cgan_loss(const Tensor& d_real, const Tensor& d_fake);
Tensor cgan_loss_d_grad_real(const Tensor& d_real);
Tensor cgan_loss_d_grad_fake(const Tensor& d_fake);
Tensor cgan_loss_g_grad_fake(const Tensor& d_fake);

}  // namespace ganom::nn
