// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/gan.hpp"

#include <algorithm>
#include <cmath>

#include "ganom/error.hpp"
#include "ganom/rng.hpp"

namespace ganom::nn {

namespace {

constexpr double kLeakSlope = 0.2;
constexpr double kNormEps = 1e-5;

int int_log2(int v) {
  int l = 0;
  while ((1 << (l + 1)) <= v) ++l;
  return l;
}

void check_resolution(int res) {
  if (res < 8 || (res & (res - 1)) != 0)
    fail(ErrorKind::Config,
         "network resolution must be a power of two >= 8, got " +
             std::to_string(res));
}

Tensor lrelu_fwd(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = v > 0 ? v : kLeakSlope * v;
  return y;
}

Tensor lrelu_bwd(const Tensor& dy, const Tensor& x) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    if (x.v[i] <= 0) dx.v[i] *= kLeakSlope;
  return dx;
}

Tensor relu_fwd(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = v > 0 ? v : 0.0;
  return y;
}

Tensor relu_bwd(const Tensor& dy, const Tensor& x) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    if (x.v[i] <= 0) dx.v[i] = 0.0;
  return dx;
}

Tensor tanh_fwd(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = std::tanh(v);
  return y;
}

Tensor tanh_bwd(const Tensor& dy, const Tensor& y) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    dx.v[i] *= 1.0 - y.v[i] * y.v[i];
  return dx;
}

Tensor sigmoid_fwd(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

Tensor sigmoid_bwd(const Tensor& dy, const Tensor& y) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    dx.v[i] *= y.v[i] * (1.0 - y.v[i]);
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.h != b.h || a.w != b.w)
    fail(ErrorKind::Shape, "concat: spatial dims differ");
  Tensor out(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& d, int ca) {
  Tensor a(ca, d.h, d.w), b(d.c - ca, d.h, d.w);
  std::copy(d.v.begin(), d.v.begin() + a.v.size(), a.v.begin());
  std::copy(d.v.begin() + a.v.size(), d.v.end(), b.v.begin());
  return {std::move(a), std::move(b)};
}

// Instance norm over the spatial extent of each channel (biased variance).
Tensor inorm_fwd(const Tensor& x, const double* gamma, const double* beta,
                 NormCache& cache) {
  const int n = x.h * x.w;
  Tensor y(x.c, x.h, x.w);
  cache.xhat = Tensor(x.c, x.h, x.w);
  cache.invstd.assign(x.c, 0.0);
  for (int c = 0; c < x.c; ++c) {
    const double* xp = x.plane(c);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += xp[i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (xp[i] - mean) * (xp[i] - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.invstd[c] = inv;
    double* xh = cache.xhat.plane(c);
    double* yp = y.plane(c);
    for (int i = 0; i < n; ++i) {
      xh[i] = (xp[i] - mean) * inv;
      yp[i] = gamma[c] * xh[i] + beta[c];
    }
  }
  return y;
}

Tensor inorm_bwd(const Tensor& dy, const NormCache& cache, const double* gamma,
                 double* dgamma, double* dbeta) {
  const int n = dy.h * dy.w;
  Tensor dx(dy.c, dy.h, dy.w);
  for (int c = 0; c < dy.c; ++c) {
    const double* dyp = dy.plane(c);
    const double* xh = cache.xhat.plane(c);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int i = 0; i < n; ++i) {
      sum_dy += dyp[i];
      sum_dy_xh += dyp[i] * xh[i];
    }
    if (dgamma) dgamma[c] += sum_dy_xh;
    if (dbeta) dbeta[c] += sum_dy;
    const double g = gamma[c];
    const double inv = cache.invstd[c];
    const double mean_dy = sum_dy / n;
    const double mean_dy_xh = sum_dy_xh / n;
    double* dxp = dx.plane(c);
    for (int i = 0; i < n; ++i)
      dxp[i] = g * inv * (dyp[i] - mean_dy - xh[i] * mean_dy_xh);
  }
  return dx;
}

// Inverted dropout with a mask drawn from a stream fixed by (seed, stage).
Tensor dropout_mask(int c, int h, int w, double rate, std::uint64_t seed,
                    int stage) {
  Tensor mask(c, h, w);
  Rng rng(mix_seed(seed, "dropout", static_cast<std::uint64_t>(stage)));
  const double keep = 1.0 - rate;
  for (double& m : mask.v) m = rng.next_double() < keep ? 1.0 / keep : 0.0;
  return mask;
}

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask.v[i];
  return y;
}

std::size_t add_conv(std::vector<ConvSlice>& out, std::size_t& off, int in_c,
                     int out_c, int stride, int bias_c) {
  ConvSlice s;
  s.spec = core::ConvSpec{in_c, out_c, 4, stride, 1};
  s.bias_c = bias_c;
  s.w_off = off;
  off += static_cast<std::size_t>(in_c) * out_c * 16;
  s.b_off = off;
  off += static_cast<std::size_t>(bias_c);
  out.push_back(s);
  return out.size() - 1;
}

NormSlice add_norm(std::size_t& off, int channels) {
  NormSlice s;
  s.channels = channels;
  s.gamma_off = off;
  off += static_cast<std::size_t>(channels);
  s.beta_off = off;
  off += static_cast<std::size_t>(channels);
  return s;
}

void conv_fwd(const ConvSlice& s, const std::vector<double>& params,
              const Tensor& x, Tensor& y) {
  y = Tensor(s.spec.out_c, core::conv_out_dim(x.h, s.spec.k, s.spec.stride, s.spec.pad),
             core::conv_out_dim(x.w, s.spec.k, s.spec.stride, s.spec.pad));
  core::conv2d_forward(x, s.spec, params.data() + s.w_off,
                       params.data() + s.b_off, y);
}

// Transposed convolution; weights viewed as conv weights with swapped
// channel roles (spec.out_c = deconv input channels).
void deconv_fwd(const ConvSlice& s, const std::vector<double>& params,
                const Tensor& x, Tensor& y) {
  const int oh = core::deconv_out_dim(x.h, s.spec.k, s.spec.stride, s.spec.pad);
  const int ow = core::deconv_out_dim(x.w, s.spec.k, s.spec.stride, s.spec.pad);
  y = Tensor(s.spec.in_c, oh, ow);
  core::conv2d_backward_input(x, s.spec, params.data() + s.w_off, y);
  const double* b = params.data() + s.b_off;
  for (int c = 0; c < y.c; ++c) {
    double* p = y.plane(c);
    const std::size_t n = static_cast<std::size_t>(y.h) * y.w;
    for (std::size_t i = 0; i < n; ++i) p[i] += b[c];
  }
}

Tensor conv_bwd(const ConvSlice& s, const std::vector<double>& params,
                const Tensor& x, const Tensor& dy, std::vector<double>* grads) {
  if (grads) {
    core::conv2d_backward_weights(x, dy, s.spec, grads->data() + s.w_off,
                                  grads->data() + s.b_off);
  }
  Tensor dx(x.c, x.h, x.w);
  core::conv2d_backward_input(dy, s.spec, params.data() + s.w_off, dx);
  return dx;
}

Tensor deconv_bwd(const ConvSlice& s, const std::vector<double>& params,
                  const Tensor& x, const Tensor& dy, std::vector<double>* grads) {
  if (grads) {
    // Weight gradient: same kernel with the input playing the "dout" role.
    core::conv2d_backward_weights(dy, x, s.spec, grads->data() + s.w_off,
                                  nullptr);
    double* db = grads->data() + s.b_off;
    for (int c = 0; c < dy.c; ++c) {
      const double* p = dy.plane(c);
      const std::size_t n = static_cast<std::size_t>(dy.h) * dy.w;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += p[i];
      db[c] += acc;
    }
  }
  Tensor dx(x.c, x.h, x.w);
  core::conv2d_forward(dy, s.spec, params.data() + s.w_off, nullptr, dx);
  return dx;
}

void init_params(std::vector<double>& params,
                 const std::vector<ConvSlice>& convs,
                 const std::vector<NormSlice>& norms, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "init"));
  for (const ConvSlice& s : convs) {
    const std::size_t n = static_cast<std::size_t>(s.spec.in_c) * s.spec.out_c * 16;
    for (std::size_t i = 0; i < n; ++i)
      params[s.w_off + i] = rng.normal(0.0, 0.02);
    for (int i = 0; i < s.bias_c; ++i) params[s.b_off + i] = 0.0;
  }
  for (const NormSlice& s : norms) {
    for (int i = 0; i < s.channels; ++i) {
      params[s.gamma_off + i] = rng.normal(1.0, 0.02);
      params[s.beta_off + i] = 0.0;
    }
  }
}

}  // namespace

const char* direction_name(Direction d) {
  return d == Direction::FrameToFlow ? "F2O" : "O2F";
}

Direction direction_from_name(const std::string& name) {
  if (name == "F2O" || name == "f2o") return Direction::FrameToFlow;
  if (name == "O2F" || name == "o2f") return Direction::FlowToFrame;
  fail(ErrorKind::Config, "unknown direction: " + name + " (want F2O or O2F)");
}

GenTopology make_generator_topology(const GenConfig& cfg) {
  check_resolution(cfg.resolution);
  GenTopology t;
  t.stages = int_log2(cfg.resolution) - 2;
  const int ngf = cfg.base_channels;
  auto ch = [&](int i) { return std::min(ngf << i, 8 * ngf); };

  std::size_t off = 0;
  for (int i = 0; i < t.stages; ++i) {
    const int in_c = i == 0 ? 3 : ch(i - 1);
    add_conv(t.enc, off, in_c, ch(i), 2, ch(i));
    // First and innermost encoder stages carry no norm.
    t.enc_norm.push_back(i > 0 && i < t.stages - 1 ? add_norm(off, ch(i))
                                                   : NormSlice{});
  }
  for (int i = 0; i < t.stages; ++i) {
    const int in_c = i == t.stages - 1 ? ch(i) : 2 * ch(i);
    const int out_c = i == 0 ? 3 : ch(i - 1);
    // Deconv weights are [in][out][k][k]; the conv-view spec swaps roles.
    ConvSlice s;
    s.spec = core::ConvSpec{out_c, in_c, 4, 2, 1};
    s.bias_c = out_c;
    s.w_off = off;
    off += static_cast<std::size_t>(in_c) * out_c * 16;
    s.b_off = off;
    off += static_cast<std::size_t>(out_c);
    t.dec.push_back(s);
    t.dec_norm.push_back(i > 0 ? add_norm(off, out_c) : NormSlice{});
    t.dec_dropout.push_back(i >= 1 && i >= t.stages - 3);
  }
  t.param_count = off;
  return t;
}

DiscTopology make_discriminator_topology(const DiscConfig& cfg) {
  check_resolution(cfg.resolution);
  DiscTopology t;
  const int ndf = cfg.base_channels;
  const int d_layers = std::clamp(int_log2(cfg.resolution) - 5, 1, 3);
  auto ch = [&](int j) { return std::min(ndf << j, 8 * ndf); };

  std::size_t off = 0;
  int cur = 6;
  for (int j = 0; j < d_layers; ++j) {
    add_conv(t.convs, off, cur, ch(j), 2, ch(j));
    t.norms.push_back(j > 0 ? add_norm(off, ch(j)) : NormSlice{});
    cur = ch(j);
  }
  add_conv(t.convs, off, cur, ch(d_layers), 1, ch(d_layers));
  t.norms.push_back(add_norm(off, ch(d_layers)));
  cur = ch(d_layers);
  add_conv(t.convs, off, cur, 1, 1, 1);
  t.norms.push_back(NormSlice{});
  t.param_count = off;

  int g = cfg.resolution;
  for (const ConvSlice& s : t.convs)
    g = core::conv_out_dim(g, s.spec.k, s.spec.stride, s.spec.pad);
  t.grid_h = t.grid_w = g;
  return t;
}

GeneratorState make_generator(Direction dir, const GenConfig& cfg,
                              std::uint64_t seed) {
  GeneratorState g;
  g.direction = dir;
  g.cfg = cfg;
  g.topo = make_generator_topology(cfg);
  g.params.assign(g.topo.param_count, 0.0);
  std::vector<ConvSlice> convs = g.topo.enc;
  convs.insert(convs.end(), g.topo.dec.begin(), g.topo.dec.end());
  std::vector<NormSlice> norms = g.topo.enc_norm;
  norms.insert(norms.end(), g.topo.dec_norm.begin(), g.topo.dec_norm.end());
  init_params(g.params, convs, norms, mix_seed(seed, direction_name(dir)));
  return g;
}

DiscriminatorState make_discriminator(const DiscConfig& cfg,
                                      std::uint64_t seed) {
  DiscriminatorState d;
  d.cfg = cfg;
  d.topo = make_discriminator_topology(cfg);
  d.params.assign(d.topo.param_count, 0.0);
  init_params(d.params, d.topo.convs, d.topo.norms, mix_seed(seed, "disc"));
  return d;
}

Tensor generator_forward(const GeneratorState& g, const Tensor& x,
                         const NoiseSource& noise, GenTape* tape) {
  if (x.c != 3 || x.h != g.cfg.resolution || x.w != g.cfg.resolution)
    fail(ErrorKind::Shape, "generator input must be 3x" +
                               std::to_string(g.cfg.resolution) + "x" +
                               std::to_string(g.cfg.resolution));
  const GenTopology& t = g.topo;
  const int L = t.stages;
  GenTape local;
  GenTape& tp = tape ? *tape : local;
  tp = GenTape{};
  tp.enc_conv_in.resize(L);
  tp.enc_conv_out.resize(L);
  tp.enc_out.resize(L);
  tp.enc_norm.resize(L);
  tp.dec_relu_in.resize(L);
  tp.dec_conv_in.resize(L);
  tp.dec_conv_out.resize(L);
  tp.dec_norm.resize(L);
  tp.dec_dropout_mask.resize(L);
  tp.dec_out.resize(L);

  Tensor cur = x;
  for (int i = 0; i < L; ++i) {
    tp.enc_conv_in[i] = i == 0 ? cur : lrelu_fwd(cur);
    conv_fwd(t.enc[i], g.params, tp.enc_conv_in[i], tp.enc_conv_out[i]);
    if (t.enc_norm[i].channels) {
      tp.enc_out[i] =
          inorm_fwd(tp.enc_conv_out[i], g.params.data() + t.enc_norm[i].gamma_off,
                    g.params.data() + t.enc_norm[i].beta_off, tp.enc_norm[i]);
    } else {
      tp.enc_out[i] = tp.enc_conv_out[i];
    }
    cur = tp.enc_out[i];
  }

  for (int i = L - 1; i >= 0; --i) {
    tp.dec_relu_in[i] = i == L - 1 ? tp.enc_out[L - 1]
                                   : concat_channels(tp.dec_out[i + 1],
                                                     tp.enc_out[i]);
    tp.dec_conv_in[i] = relu_fwd(tp.dec_relu_in[i]);
    Tensor z;
    deconv_fwd(t.dec[i], g.params, tp.dec_conv_in[i], z);
    tp.dec_conv_out[i] = z;
    if (i == 0) {
      tp.out = tanh_fwd(z);
      break;
    }
    Tensor n = t.dec_norm[i].channels
                   ? inorm_fwd(z, g.params.data() + t.dec_norm[i].gamma_off,
                               g.params.data() + t.dec_norm[i].beta_off,
                               tp.dec_norm[i])
                   : z;
    if (t.dec_dropout[i] && noise.dropout) {
      tp.dec_dropout_mask[i] =
          dropout_mask(n.c, n.h, n.w, g.cfg.dropout_rate, noise.seed, i);
      tp.dec_out[i] = apply_mask(n, tp.dec_dropout_mask[i]);
    } else {
      tp.dec_out[i] = n;
    }
  }
  return tp.out;
}

Tensor generator_backward(const GeneratorState& g, const GenTape& tape,
                          const Tensor& dout, std::vector<double>& grads) {
  const GenTopology& t = g.topo;
  const int L = t.stages;
  if (grads.size() != g.params.size())
    fail(ErrorKind::Shape, "gradient buffer size mismatch");

  // Gradients w.r.t. each encoder output, fed by the skip concatenations.
  std::vector<Tensor> d_enc_out(L);

  // Decoder, outermost stage first.
  Tensor d = tanh_bwd(dout, tape.out);
  for (int i = 0; i < L; ++i) {
    if (i > 0) {
      if (!tape.dec_dropout_mask[i].v.empty())
        d = apply_mask(d, tape.dec_dropout_mask[i]);
      if (t.dec_norm[i].channels)
        d = inorm_bwd(d, tape.dec_norm[i],
                      g.params.data() + t.dec_norm[i].gamma_off,
                      grads.data() + t.dec_norm[i].gamma_off,
                      grads.data() + t.dec_norm[i].beta_off);
    }
    Tensor dz = deconv_bwd(t.dec[i], g.params, tape.dec_conv_in[i], d, &grads);
    dz = relu_bwd(dz, tape.dec_relu_in[i]);
    if (i == L - 1) {
      d_enc_out[L - 1] = std::move(dz);
    } else {
      auto [da, db] = split_channels(dz, tape.dec_out[i + 1].c);
      d_enc_out[i] = std::move(db);
      d = std::move(da);
    }
  }

  // Encoder, innermost first.
  Tensor dcur;
  for (int i = L - 1; i >= 0; --i) {
    Tensor de = std::move(d_enc_out[i]);
    if (i < L - 1) {
      for (std::size_t k = 0; k < de.v.size(); ++k) de.v[k] += dcur.v[k];
    }
    if (t.enc_norm[i].channels)
      de = inorm_bwd(de, tape.enc_norm[i],
                     g.params.data() + t.enc_norm[i].gamma_off,
                     grads.data() + t.enc_norm[i].gamma_off,
                     grads.data() + t.enc_norm[i].beta_off);
    Tensor dx = conv_bwd(t.enc[i], g.params, tape.enc_conv_in[i], de, &grads);
    if (i == 0) return dx;
    dcur = lrelu_bwd(dx, tape.enc_out[i - 1]);
  }
  return Tensor{};
}

Tensor discriminator_forward(const DiscriminatorState& d, const Tensor& x,
                             const Tensor& candidate, DiscTape* tape) {
  require_same_shape(x, candidate, "discriminator inputs");
  if (x.h != d.cfg.resolution || x.w != d.cfg.resolution || x.c != 3)
    fail(ErrorKind::Shape, "discriminator expects 3x" +
                               std::to_string(d.cfg.resolution) + "x" +
                               std::to_string(d.cfg.resolution) + " inputs");
  const DiscTopology& t = d.topo;
  DiscTape local;
  DiscTape& tp = tape ? *tape : local;
  tp = DiscTape{};
  tp.cond_channels = x.c;
  const std::size_t n_layers = t.convs.size();
  tp.conv_in.resize(n_layers);
  tp.conv_out.resize(n_layers);
  tp.norms.resize(n_layers);
  tp.act_out.resize(n_layers);

  Tensor cur = concat_channels(x, candidate);
  for (std::size_t i = 0; i < n_layers; ++i) {
    tp.conv_in[i] = cur;
    conv_fwd(t.convs[i], d.params, cur, tp.conv_out[i]);
    if (i + 1 == n_layers) {
      tp.out = sigmoid_fwd(tp.conv_out[i]);
      return tp.out;
    }
    Tensor z = t.norms[i].channels
                   ? inorm_fwd(tp.conv_out[i],
                               d.params.data() + t.norms[i].gamma_off,
                               d.params.data() + t.norms[i].beta_off,
                               tp.norms[i])
                   : tp.conv_out[i];
    cur = lrelu_fwd(z);
    tp.act_out[i] = std::move(z);  // pre-activation, for the leaky backward
  }
  return tp.out;
}

std::pair<Tensor, Tensor> discriminator_backward(const DiscriminatorState& d,
                                                 const DiscTape& tape,
                                                 const Tensor& dout,
                                                 std::vector<double>* grads) {
  const DiscTopology& t = d.topo;
  const int n_layers = static_cast<int>(t.convs.size());
  Tensor cur = sigmoid_bwd(dout, tape.out);
  for (int i = n_layers - 1; i >= 0; --i) {
    if (i + 1 < n_layers) {
      cur = lrelu_bwd(cur, tape.act_out[i]);
      if (t.norms[i].channels)
        cur = inorm_bwd(cur, tape.norms[i],
                        d.params.data() + t.norms[i].gamma_off,
                        grads ? grads->data() + t.norms[i].gamma_off : nullptr,
                        grads ? grads->data() + t.norms[i].beta_off : nullptr);
    }
    // Parameter gradients only when a buffer is supplied.
    if (grads) {
      cur = conv_bwd(t.convs[i], d.params, tape.conv_in[i], cur, grads);
    } else {
      Tensor dx(tape.conv_in[i].c, tape.conv_in[i].h, tape.conv_in[i].w);
      core::conv2d_backward_input(cur, t.convs[i].spec,
                                  d.params.data() + t.convs[i].w_off, dx);
      cur = std::move(dx);
    }
  }
  auto [dx, dcand] = split_channels(cur, tape.cond_channels);
  return {std::move(dx), std::move(dcand)};
}

double l1_loss(const Tensor& y, const Tensor& p) {
  require_same_shape(y, p, "l1_loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.v.size(); ++i)
    acc += std::abs(y.v[i] - p.v[i]);
  return acc / static_cast<double>(y.v.size());
}

Tensor l1_loss_grad_p(const Tensor& y, const Tensor& p) {
  require_same_shape(y, p, "l1_loss");
  Tensor g(p.c, p.h, p.w);
  const double inv = 1.0 / static_cast<double>(p.v.size());
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    const double diff = p.v[i] - y.v[i];
    g.v[i] = diff > 0 ? inv : (diff < 0 ? -inv : 0.0);
  }
  return g;
}

CganLoss cgan_loss(const Tensor& d_real, const Tensor& d_fake) {
  CganLoss out;
  double acc_real = 0.0;
  for (double v : d_real.v) acc_real += std::log(std::max(kLogEps, v));
  double acc_fake = 0.0, acc_g = 0.0;
  for (double v : d_fake.v) {
    acc_fake += std::log(std::max(kLogEps, 1.0 - v));
    acc_g += std::log(std::max(kLogEps, v));
  }
  out.loss_d = -acc_real / static_cast<double>(d_real.v.size()) -
               acc_fake / static_cast<double>(d_fake.v.size());
  out.loss_g_adv = -acc_g / static_cast<double>(d_fake.v.size());
  return out;
}

Tensor cgan_loss_d_grad_real(const Tensor& d_real) {
  Tensor g(d_real.c, d_real.h, d_real.w);
  const double inv = 1.0 / static_cast<double>(d_real.v.size());
  for (std::size_t i = 0; i < g.v.size(); ++i)
    g.v[i] = d_real.v[i] > kLogEps ? -inv / d_real.v[i] : 0.0;
  return g;
}

Tensor cgan_loss_d_grad_fake(const Tensor& d_fake) {
  Tensor g(d_fake.c, d_fake.h, d_fake.w);
  const double inv = 1.0 / static_cast<double>(d_fake.v.size());
  for (std::size_t i = 0; i < g.v.size(); ++i)
    g.v[i] = (1.0 - d_fake.v[i]) > kLogEps ? inv / (1.0 - d_fake.v[i]) : 0.0;
  return g;
}

Tensor cgan_loss_g_grad_fake(const Tensor& d_fake) {
  Tensor g(d_fake.c, d_fake.h, d_fake.w);
  const double inv = 1.0 / static_cast<double>(d_fake.v.size());
  for (std::size_t i = 0; i < g.v.size(); ++i)
    g.v[i] = d_fake.v[i] > kLogEps ? -inv / d_fake.v[i] : 0.0;
  return g;
}

}  // namespace ganom::nn
