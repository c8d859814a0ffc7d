// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ganom/error.hpp"
#include "ganom/gan.hpp"
#include "ganom/rng.hpp"
#include "oracles.hpp"

using namespace ganom;

namespace {

nn::GenConfig gen_cfg(int res, int ch) { return nn::GenConfig{res, ch, 0.5}; }
nn::DiscConfig disc_cfg(int res, int ch) { return nn::DiscConfig{res, ch}; }

}  // namespace

TEST_CASE("generator output shape equals input shape at 64/128/256") {
  for (int res : {64, 128, 256}) {
    nn::GeneratorState g = nn::make_generator(nn::Direction::FrameToFlow,
                                              gen_cfg(res, 2), 1);
    Tensor x = oracles::random_tensor(3, res, res, 10 + res);
    Tensor y = nn::generator_forward(g, x, nn::NoiseSource{});
    CHECK(y.c == 3);
    CHECK(y.h == res);
    CHECK(y.w == res);
    for (double v : y.v) {
      CHECK(v < 1.0);
      CHECK(v > -1.0);
    }
  }
}

TEST_CASE("generator rejects mismatched input resolution") {
  nn::GeneratorState g =
      nn::make_generator(nn::Direction::FrameToFlow, gen_cfg(64, 2), 1);
  Tensor x = oracles::random_tensor(3, 32, 32, 3);
  try {
    nn::generator_forward(g, x, nn::NoiseSource{});
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("generator is deterministic: fixed seed, dropout on") {
  nn::GeneratorState g =
      nn::make_generator(nn::Direction::FlowToFrame, gen_cfg(32, 4), 9);
  Tensor x = oracles::random_tensor(3, 32, 32, 4);
  nn::NoiseSource noise{true, 12345};
  Tensor a = nn::generator_forward(g, x, noise);
  Tensor b = nn::generator_forward(g, x, noise);
  CHECK(a.v == b.v);

  // Different noise seeds change the output (dropout actually acts).
  Tensor c = nn::generator_forward(g, x, nn::NoiseSource{true, 999});
  CHECK(a.v != c.v);

  // Dropout off: pure function of (params, x).
  Tensor d1 = nn::generator_forward(g, x, nn::NoiseSource{false, 1});
  Tensor d2 = nn::generator_forward(g, x, nn::NoiseSource{false, 2});
  CHECK(d1.v == d2.v);
}

TEST_CASE("same seed builds identical parameters") {
  nn::GeneratorState a =
      nn::make_generator(nn::Direction::FrameToFlow, gen_cfg(32, 4), 77);
  nn::GeneratorState b =
      nn::make_generator(nn::Direction::FrameToFlow, gen_cfg(32, 4), 77);
  CHECK(a.params == b.params);
  nn::GeneratorState c =
      nn::make_generator(nn::Direction::FrameToFlow, gen_cfg(32, 4), 78);
  CHECK(a.params != c.params);
}

TEST_CASE("discriminator grid shape follows the stride arithmetic") {
  // Grid side = res / 2^(#stride-2 layers) - 2, one pixel per trailing
  // stride-1 conv. Recomputed here from the layer specs.
  for (int res : {8, 32, 64, 128, 256}) {
    nn::DiscTopology t = nn::make_discriminator_topology(disc_cfg(res, 2));
    int side = res;
    int s2 = 0;
    for (const nn::ConvSlice& s : t.convs) {
      side = core::conv_out_dim(side, s.spec.k, s.spec.stride, s.spec.pad);
      if (s.spec.stride == 2) ++s2;
    }
    CHECK(t.grid_h == side);
    CHECK(t.grid_h == res / (1 << s2) - 2);

    nn::DiscriminatorState d = nn::make_discriminator(disc_cfg(res, 2), 3);
    Tensor x = oracles::random_tensor(3, res, res, res);
    Tensor y = oracles::random_tensor(3, res, res, res + 1);
    Tensor out = nn::discriminator_forward(d, x, y);
    CHECK(out.c == 1);
    CHECK(out.h == t.grid_h);
    CHECK(out.w == t.grid_w);
  }
}

TEST_CASE("256x256 discriminator has the documented 30x30 patch grid") {
  nn::DiscTopology t = nn::make_discriminator_topology(disc_cfg(256, 4));
  CHECK(t.grid_h == 30);
  CHECK(t.grid_w == 30);
}

TEST_CASE("untrained discriminator outputs sit near 0.5") {
  // Zero biases and N(0, 0.02) weights keep the pre-sigmoid activations
  // small, so outputs stay inside a narrow band around 0.5.
  nn::DiscriminatorState d = nn::make_discriminator(disc_cfg(64, 8), 4);
  double lo = 1.0, hi = 0.0, mean = 0.0;
  std::size_t n = 0;
  for (int trial = 0; trial < 4; ++trial) {
    Tensor x = oracles::random_tensor(3, 64, 64, 50 + trial);
    Tensor y = oracles::random_tensor(3, 64, 64, 60 + trial);
    Tensor out = nn::discriminator_forward(d, x, y);
    for (double v : out.v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mean += v;
      ++n;
    }
  }
  mean /= static_cast<double>(n);
  CHECK(mean > 0.45);
  CHECK(mean < 0.55);
  CHECK(lo > 0.25);
  CHECK(hi < 0.75);
}

TEST_CASE("discriminator rejects mismatched inputs") {
  nn::DiscriminatorState d = nn::make_discriminator(disc_cfg(32, 4), 5);
  Tensor x = oracles::random_tensor(3, 32, 32, 1);
  Tensor y = oracles::random_tensor(3, 16, 16, 2);
  try {
    nn::discriminator_forward(d, x, y);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("l1 loss basics") {
  Tensor y = oracles::random_tensor(3, 8, 8, 1);
  CHECK(nn::l1_loss(y, y) == 0.0);

  Tensor ones(3, 5, 7), zeros(3, 5, 7);
  ones.fill(1.0);
  CHECK(nn::l1_loss(ones, zeros) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor p = oracles::random_tensor(3, 8, 8, 2);
  double oracle = 0.0;
  for (std::size_t i = 0; i < y.v.size(); ++i)
    oracle += std::abs(y.v[i] - p.v[i]);
  oracle /= static_cast<double>(y.v.size());
  CHECK(nn::l1_loss(y, p) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(nn::l1_loss(y, p) == nn::l1_loss(p, y));

  for (int k = 0; k < 10; ++k) {
    Tensor a = oracles::random_tensor(2, 4, 4, 100 + k);
    Tensor b = oracles::random_tensor(2, 4, 4, 200 + k);
    Tensor c = oracles::random_tensor(2, 4, 4, 300 + k);
    CHECK(nn::l1_loss(a, c) <= nn::l1_loss(a, b) + nn::l1_loss(b, c) + 1e-12);
  }

  Tensor bad(3, 4, 4);
  CHECK_THROWS_AS(nn::l1_loss(y, bad), Error);
}

TEST_CASE("cGAN loss closed forms") {
  Tensor half(1, 4, 4), halfb(1, 4, 4);
  half.fill(0.5);
  halfb.fill(0.5);
  nn::CganLoss l = nn::cgan_loss(half, halfb);
  CHECK(std::abs(l.loss_d - 2.0 * std::log(2.0)) <= 1e-9);
  CHECK(std::abs(l.loss_g_adv - std::log(2.0)) <= 1e-9);

  // Perfect-discriminator limit: loss_D -> 0 as eps -> 0.
  double prev = 1e9;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    Tensor real(1, 2, 2), fake(1, 2, 2);
    real.fill(1.0 - eps);
    fake.fill(eps);
    nn::CganLoss ll = nn::cgan_loss(real, fake);
    CHECK(ll.loss_d < prev);
    prev = ll.loss_d;
  }
  CHECK(prev <= 3e-6);

  // Values at exactly 0 and 1 are clamped, not infinite.
  Tensor zero(1, 2, 2), one(1, 2, 2);
  one.fill(1.0);
  nn::CganLoss lc = nn::cgan_loss(one, zero);
  CHECK(std::isfinite(lc.loss_d));
  CHECK(std::isfinite(lc.loss_g_adv));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient oracles. 32x32 exercises every layer kind
// (conv, deconv, instance norm, dropout, skip concat); 8x8 covers the
// minimal depth-1 topology.

namespace {

oracles::FdResult run_fd_generator_l1(int res, int ch, std::uint64_t seed) {
  nn::GeneratorState g = nn::make_generator(nn::Direction::FrameToFlow,
                                            gen_cfg(res, ch), seed);
  Tensor x = oracles::random_tensor(3, res, res, seed + 1);
  Tensor y = oracles::random_tensor(3, res, res, seed + 2);
  nn::NoiseSource noise{true, seed + 3};

  std::vector<double> analytic(g.params.size(), 0.0);
  nn::GenTape tape;
  Tensor p = nn::generator_forward(g, x, noise, &tape);
  nn::generator_backward(g, tape, nn::l1_loss_grad_p(y, p), analytic);

  return oracles::fd_check(
      g.params,
      [&] { return nn::l1_loss(y, nn::generator_forward(g, x, noise)); },
      analytic, 1e-5);
}

oracles::FdResult run_fd_discriminator(int res, int ch, std::uint64_t seed) {
  nn::DiscriminatorState d = nn::make_discriminator(disc_cfg(res, ch), seed);
  Tensor x = oracles::random_tensor(3, res, res, seed + 1);
  Tensor y = oracles::random_tensor(3, res, res, seed + 2);
  Tensor fake = oracles::random_tensor(3, res, res, seed + 3);

  std::vector<double> analytic(d.params.size(), 0.0);
  nn::DiscTape tr, tf;
  Tensor d_real = nn::discriminator_forward(d, x, y, &tr);
  Tensor d_fake = nn::discriminator_forward(d, x, fake, &tf);
  nn::discriminator_backward(d, tr, nn::cgan_loss_d_grad_real(d_real),
                             &analytic);
  nn::discriminator_backward(d, tf, nn::cgan_loss_d_grad_fake(d_fake),
                             &analytic);

  return oracles::fd_check(
      d.params,
      [&] {
        return nn::cgan_loss(nn::discriminator_forward(d, x, y),
                             nn::discriminator_forward(d, x, fake))
            .loss_d;
      },
      analytic, 1e-5);
}

oracles::FdResult run_fd_generator_adv(int res, int gch, int dch, std::uint64_t seed) {
  nn::GeneratorState g = nn::make_generator(nn::Direction::FrameToFlow,
                                            gen_cfg(res, gch), seed);
  nn::DiscriminatorState d =
      nn::make_discriminator(disc_cfg(res, dch), seed + 100);
  Tensor x = oracles::random_tensor(3, res, res, seed + 1);
  nn::NoiseSource noise{true, seed + 2};

  std::vector<double> analytic(g.params.size(), 0.0);
  nn::GenTape gt;
  Tensor p = nn::generator_forward(g, x, noise, &gt);
  nn::DiscTape dt;
  Tensor d_fake = nn::discriminator_forward(d, x, p, &dt);
  Tensor dp = nn::discriminator_backward(
                  d, dt, nn::cgan_loss_g_grad_fake(d_fake), nullptr)
                  .second;
  nn::generator_backward(g, gt, dp, analytic);

  return oracles::fd_check(
      g.params,
      [&] {
        Tensor pp = nn::generator_forward(g, x, noise);
        Tensor df = nn::discriminator_forward(d, x, pp);
        return nn::cgan_loss(df, df).loss_g_adv;
      },
      analytic, 1e-5);
}

}  // namespace

namespace {
void check_fd(const oracles::FdResult& r) {
  INFO("worst rel " << r.worst_rel << ", checked " << r.checked << ", skipped "
                    << r.skipped);
  CHECK(r.worst_rel <= 1e-4);
  // Kink-straddling parameters must stay a small minority.
  CHECK(r.skipped * 50 <= r.checked);
}
}  // namespace

TEST_CASE("L1 gradients through the generator match finite differences") {
  check_fd(run_fd_generator_l1(8, 4, 41));
  check_fd(run_fd_generator_l1(32, 3, 42));
}

TEST_CASE("discriminator loss gradients match finite differences") {
  check_fd(run_fd_discriminator(8, 4, 43));
  check_fd(run_fd_discriminator(32, 3, 44));
}

TEST_CASE("adversarial generator gradients (through D) match finite "
          "differences") {
  check_fd(run_fd_generator_adv(8, 4, 4, 45));
  check_fd(run_fd_generator_adv(32, 3, 3, 46));
}

