/* Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "imce/zoo/trainer.h"

#include <cmath>
#include <random>

#include "imce/compiler/reference.h"
#include "imce/zoo/models.h"

namespace imce {

namespace {

struct Param {
  std::vector<float> w, g, m, v;

  explicit Param(std::vector<float> init)
      : w(std::move(init)), g(w.size()), m(w.size()), v(w.size()) {}

  void adam(double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<float>(b1 * m[i] + (1 - b1) * g[i]);
      v[i] = static_cast<float>(b2 * v[i] + (1 - b2) * g[i] * g[i]);
      w[i] -= static_cast<float>(lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps));
      g[i] = 0.0f;
    }
  }
};

// Square-kernel convolution with ReLU, NCHW single sample.
struct ConvLayer {
  int cin, cout, k, stride, pad, h, w, oh, ow;
  Param weight, bias;
  std::vector<float> x, y; // cached input and post-ReLU output

  ConvLayer(const TensorValue &wv, const TensorValue &bv, int h_, int w_,
            int stride_, int pad_)
      : cin(static_cast<int>(wv.shape()[1])),
        cout(static_cast<int>(wv.shape()[0])), k(static_cast<int>(wv.shape()[2])),
        stride(stride_), pad(pad_), h(h_), w(w_),
        oh((h_ + 2 * pad_ - k) / stride_ + 1), ow((w_ + 2 * pad_ - k) / stride_ + 1),
        weight(std::vector<float>(wv.data<float>().begin(), wv.data<float>().end())),
        bias(std::vector<float>(bv.data<float>().begin(), bv.data<float>().end())) {}

  const std::vector<float> &forward(const std::vector<float> &in) {
    x = in;
    y.assign(static_cast<size_t>(cout) * oh * ow, 0.0f);
    for (int o = 0; o < cout; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          float acc = bias.w[o];
          for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h)
                continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= w)
                  continue;
                acc += weight.w[((o * cin + c) * k + ky) * k + kx] *
                       x[(c * h + iy) * w + ix];
              }
            }
          y[(o * oh + oy) * ow + ox] = acc > 0.0f ? acc : 0.0f;
        }
    return y;
  }

  std::vector<float> backward(std::vector<float> dy) {
    std::vector<float> dx(x.size(), 0.0f);
    for (size_t i = 0; i < dy.size(); ++i)
      if (y[i] <= 0.0f)
        dy[i] = 0.0f;
    for (int o = 0; o < cout; ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const float d = dy[(o * oh + oy) * ow + ox];
          if (d == 0.0f)
            continue;
          bias.g[o] += d;
          for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h)
                continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= w)
                  continue;
                const size_t wi = ((o * cin + c) * k + ky) * k + kx;
                const size_t xi = (c * h + iy) * w + ix;
                weight.g[wi] += d * x[xi];
                dx[xi] += d * weight.w[wi];
              }
            }
        }
    return dx;
  }
};

struct Net {
  ConvLayer c1, c2, c3;
  Param fc_w, fc_b;
  std::vector<float> pooled;
  static constexpr int kClasses = 10;

  explicit Net(const ModelGraph &g)
      : c1(g.initializers.at("conv1.w"), g.initializers.at("conv1.b"), 12, 12, 1, 1),
        c2(g.initializers.at("conv2.w"), g.initializers.at("conv2.b"), 12, 12, 2, 1),
        c3(g.initializers.at("conv3.w"), g.initializers.at("conv3.b"), 6, 6, 1, 1),
        fc_w(init(g, "fc.w")), fc_b(init(g, "fc.b")) {}

  static std::vector<float> init(const ModelGraph &g, const std::string &name) {
    auto d = g.initializers.at(name).data<float>();
    return {d.begin(), d.end()};
  }

  // 2x2 average pool over c3's 16x6x6 output.
  std::vector<float> logits(const std::vector<float> &img) {
    const auto &a = c3.forward(c2.forward(c1.forward(img)));
    const int C = c3.cout, H = c3.oh / 2, W = c3.ow / 2;
    pooled.assign(static_cast<size_t>(C) * H * W, 0.0f);
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          float s = 0.0f;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              s += a[(c * c3.oh + 2 * y + dy) * c3.ow + 2 * x + dx];
          pooled[(c * H + y) * W + x] = s / 4.0f;
        }
    std::vector<float> z(kClasses);
    const size_t n = pooled.size();
    for (int o = 0; o < kClasses; ++o) {
      float acc = fc_b.w[o];
      for (size_t i = 0; i < n; ++i)
        acc += fc_w.w[o * n + i] * pooled[i];
      z[o] = acc;
    }
    return z;
  }

  // Returns the cross-entropy loss and accumulates gradients.
  double step(const std::vector<float> &img, int label) {
    auto z = logits(img);
    float mx = z[0];
    for (float v : z)
      mx = std::max(mx, v);
    double sum = 0.0;
    for (float v : z)
      sum += std::exp(static_cast<double>(v - mx));
    std::vector<float> dz(kClasses);
    for (int o = 0; o < kClasses; ++o)
      dz[o] = static_cast<float>(std::exp(static_cast<double>(z[o] - mx)) / sum) -
              (o == label ? 1.0f : 0.0f);
    const double loss = -(z[label] - mx - std::log(sum));

    const size_t n = pooled.size();
    std::vector<float> dp(n, 0.0f);
    for (int o = 0; o < kClasses; ++o) {
      fc_b.g[o] += dz[o];
      for (size_t i = 0; i < n; ++i) {
        fc_w.g[o * n + i] += dz[o] * pooled[i];
        dp[i] += dz[o] * fc_w.w[o * n + i];
      }
    }
    const int C = c3.cout, H = c3.oh / 2, W = c3.ow / 2;
    std::vector<float> da(static_cast<size_t>(C) * c3.oh * c3.ow, 0.0f);
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              da[(c * c3.oh + 2 * y + dy) * c3.ow + 2 * x + dx] =
                  dp[(c * H + y) * W + x] / 4.0f;
    c1.backward(c2.backward(c3.backward(std::move(da))));
    return loss;
  }

  void update(double lr, int t, int batch) {
    for (Param *p : {&c1.weight, &c1.bias, &c2.weight, &c2.bias, &c3.weight,
                     &c3.bias, &fc_w, &fc_b}) {
      for (auto &g : p->g)
        g /= static_cast<float>(batch);
      p->adam(lr, t);
    }
  }
};

} // namespace

ModelGraph train_digits(const Dataset &train, const TrainOptions &opts,
                        TrainLog *log) {
  ModelGraph g = digits_cnn(opts.seed);
  Net net(g);
  std::mt19937_64 rng(opts.seed ^ 0x5eedULL);
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  int t = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(uniform01(rng) * i)]);
    // Step decay over the last third of training.
    const double lr =
        epoch >= (2 * opts.epochs) / 3 ? opts.learning_rate * 0.3 : opts.learning_rate;
    double total = 0.0;
    for (size_t start = 0; start < order.size(); start += opts.batch) {
      const size_t end = std::min(order.size(), start + opts.batch);
      for (size_t i = start; i < end; ++i)
        total += net.step(train.images[order[i]], train.labels[order[i]]);
      net.update(lr, ++t, static_cast<int>(end - start));
    }
    if (log)
      log->epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  auto put = [&](const std::string &name, const std::vector<float> &v) {
    auto &tv = g.initializers.at(name);
    tv = TensorValue::fp32(name, tv.shape(), v);
  };
  put("conv1.w", net.c1.weight.w);
  put("conv1.b", net.c1.bias.w);
  put("conv2.w", net.c2.weight.w);
  put("conv2.b", net.c2.bias.w);
  put("conv3.w", net.c3.weight.w);
  put("conv3.b", net.c3.bias.w);
  put("fc.w", net.fc_w.w);
  put("fc.b", net.fc_b.w);
  return g;
}

double fp32_accuracy(const ModelGraph &g, const Dataset &ds) {
  if (ds.size() == 0)
    return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < ds.size(); ++i)
    if (argmax(run_fp32(g, ds.images[i]).at(0)) == ds.labels[i])
      ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

} // namespace imce
