#include "diagnet/layers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace diagnet {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool2: return "maxpool2";
    case LayerKind::Relu: return "relu";
    case LayerKind::Linear: return "linear";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

namespace {

// Four independent partial sums; fixed order keeps results reproducible.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

[[noreturn]] void no_forward(const char* layer) {
  throw std::logic_error(std::string(layer) + ": backward called before forward");
}

}  // namespace

// ---- Conv2d ---------------------------------------------------------------

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels)
    : in_(in_channels), out_(out_channels), weight_({out_channels, in_channels, 3, 3}),
      bias_({out_channels}) {}

namespace {

// {C, H, W} -> {C, H + 2, W + 2} with a zero border.
void pad_into(const Tensor& x, Tensor& out) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), pw = w + 2;
  if (out.shape() != Shape{c, h + 2, w + 2}) out = Tensor({c, h + 2, w + 2});
  const double* in = x.data().data();
  double* o = out.data().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double* plane = o + ch * (h + 2) * pw;
    std::fill(plane, plane + pw, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      double* row = plane + (y + 1) * pw;
      row[0] = 0.0;
      std::copy(in + (ch * h + y) * w, in + (ch * h + y + 1) * w, row + 1);
      row[w + 1] = 0.0;
    }
    std::fill(plane + (h + 1) * pw, plane + (h + 2) * pw, 0.0);
  }
}

constexpr std::size_t kChunk = 16;

// Four doubles; GCC and Clang lower this to whatever SIMD width is available.
typedef double Vec __attribute__((vector_size(32)));

Vec splat(double v) { return Vec{v, v, v, v}; }
Vec load(const double* p) {
  Vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
void store(double* p, Vec v) { std::memcpy(p, &v, sizeof v); }

// out[o, y, x] = bias[o] + sum_{c, ky, kx} k[(o * cin + c) * 9 + ky * 3 + kx] * pad[c, y + ky, x + kx]
// where pad is {cin, h + 2, w + 2}. Each output row is built in chunks that
// stay in registers across all channels and taps.
void correlate3x3(const double* pad, std::size_t cin, std::size_t h, std::size_t w, const double* k,
                  const double* bias, std::size_t cout, double* out) {
  const std::size_t pw = w + 2, pplane = (h + 2) * pw;
  for (std::size_t o = 0; o < cout; ++o) {
    const double b = bias != nullptr ? bias[o] : 0.0;
    const double* ko = k + o * cin * 9;
    for (std::size_t y = 0; y < h; ++y) {
      double* orow = out + (o * h + y) * w;
      std::size_t x0 = 0;
      for (; x0 + kChunk <= w; x0 += kChunk) {
        Vec a0 = splat(b), a1 = a0, a2 = a0, a3 = a0;
        for (std::size_t c = 0; c < cin; ++c) {
          const double* kc = ko + c * 9;
          const double* base = pad + c * pplane + y * pw + x0;
          for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const Vec kv = splat(kc[ky * 3 + kx]);
              const double* src = base + ky * pw + kx;
              a0 += kv * load(src);
              a1 += kv * load(src + 4);
              a2 += kv * load(src + 8);
              a3 += kv * load(src + 12);
            }
          }
        }
        store(orow + x0, a0);
        store(orow + x0 + 4, a1);
        store(orow + x0 + 8, a2);
        store(orow + x0 + 12, a3);
      }
      if (x0 < w) {
        const std::size_t n = w - x0;
        double acc[kChunk];
        for (std::size_t j = 0; j < n; ++j) acc[j] = b;
        for (std::size_t c = 0; c < cin; ++c) {
          const double* kc = ko + c * 9;
          const double* base = pad + c * pplane + y * pw + x0;
          for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const double kv = kc[ky * 3 + kx];
              const double* src = base + ky * pw + kx;
              for (std::size_t j = 0; j < n; ++j) acc[j] += kv * src[j];
            }
          }
        }
        std::copy(acc, acc + n, orow + x0);
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) != in_) {
    throw ShapeError("conv2d: expected shape [" + std::to_string(in_) + "xHxW], got " +
                     shape_string(x.shape()));
  }
  const std::size_t h = x.dim(1), w = x.dim(2);
  pad_into(x, padded_);
  Tensor y({out_, h, w});
  correlate3x3(padded_.data().data(), in_, h, w, weight_.value.data().data(), bias_.value.data().data(), out_,
               y.data().data());
  cached_ = true;
  return y;
}

Tensor Conv2d::backward(const Tensor& upstream, bool need_input_grad) {
  if (!cached_) no_forward("conv2d");
  const std::size_t h = padded_.dim(1) - 2, w = padded_.dim(2) - 2, plane = h * w, pw = w + 2;
  const std::size_t pplane = (h + 2) * pw;
  require_shape(upstream, {out_, h, w}, "conv2d backward");
  const double* in = padded_.data().data();
  const double* g = upstream.data().data();
  double* gw = weight_.grad.data().data();

  for (std::size_t o = 0; o < out_; ++o) {
    const double* gp = g + o * plane;
    double bsum = 0;
    for (std::size_t i = 0; i < plane; ++i) bsum += gp[i];
    bias_.grad[o] += bsum;
    for (std::size_t c = 0; c < in_; ++c) {
      const double* ip = in + c * pplane;
      // Nine tap sums at once, four lanes each; lanes are added in a fixed
      // order at the end.
      Vec acc[9];
      for (auto& a : acc) a = splat(0.0);
      double tail[9] = {};
      const std::size_t wv = w - w % 4;
      for (std::size_t yy = 0; yy < h; ++yy) {
        const double* grow = gp + yy * w;
        for (std::size_t x = 0; x < wv; x += 4) {
          const Vec gv = load(grow + x);
          for (std::size_t t = 0; t < 9; ++t) acc[t] += gv * load(ip + (yy + t / 3) * pw + t % 3 + x);
        }
        for (std::size_t x = wv; x < w; ++x) {
          for (std::size_t t = 0; t < 9; ++t) tail[t] += grow[x] * ip[(yy + t / 3) * pw + t % 3 + x];
        }
      }
      for (std::size_t t = 0; t < 9; ++t) {
        gw[(o * in_ + c) * 9 + t] += ((acc[t][0] + acc[t][1]) + (acc[t][2] + acc[t][3])) + tail[t];
      }
    }
  }
  if (!need_input_grad) return {};

  // The input gradient is a correlation of the padded upstream gradient with
  // the kernel flipped in both axes and with in/out channels swapped.
  const double* wt = weight_.value.data().data();
  flipped_.resize(in_ * out_ * 9);
  for (std::size_t o = 0; o < out_; ++o) {
    for (std::size_t c = 0; c < in_; ++c) {
      for (std::size_t t = 0; t < 9; ++t) flipped_[(c * out_ + o) * 9 + (8 - t)] = wt[(o * in_ + c) * 9 + t];
    }
  }
  Tensor gpad;
  pad_into(upstream, gpad);
  Tensor grad_in({in_, h, w});
  correlate3x3(gpad.data().data(), out_, h, w, flipped_.data(), nullptr, in_, grad_in.data().data());
  return grad_in;
}

// ---- MaxPool2 -------------------------------------------------------------

Tensor MaxPool2::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    throw ShapeError("maxpool2: expected shape [CxHxW] with even H and W, got " +
                     shape_string(x.shape()));
  }
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor y({c, oh, ow});
  argmax_.assign(y.size(), 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t base = ch * h * w + (2 * i) * w + 2 * j;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (int k = 1; k < 4; ++k) {
          if (x[cand[k]] > x[best]) best = cand[k];
        }
        const std::size_t oi = (ch * oh + i) * ow + j;
        y[oi] = x[best];
        argmax_[oi] = best;
      }
    }
  }
  input_shape_ = x.shape();
  cached_ = true;
  return y;
}

Tensor MaxPool2::backward(const Tensor& upstream, bool need_input_grad) {
  if (!cached_) no_forward("maxpool2");
  if (upstream.size() != argmax_.size()) {
    throw ShapeError("maxpool2 backward: expected " + std::to_string(argmax_.size()) +
                     " values, got shape " + shape_string(upstream.shape()));
  }
  if (!need_input_grad) return {};
  Tensor g(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) g[argmax_[i]] += upstream[i];
  return g;
}

// ---- Relu -----------------------------------------------------------------

Tensor Relu::forward(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
  input_ = x;
  return y;
}

Tensor Relu::backward(const Tensor& upstream, bool need_input_grad) {
  if (!input_) no_forward("relu");
  require_shape(upstream, input_->shape(), "relu backward");
  if (!need_input_grad) return {};
  Tensor g = upstream;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!((*input_)[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

// ---- Linear ---------------------------------------------------------------

Linear::Linear(std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_({out, in}), bias_({out}) {}

Tensor Linear::forward(const Tensor& x) {
  require_shape(x, {in_}, "linear");
  Tensor y({out_});
  const double* wt = weight_.value.data().data();
  for (std::size_t o = 0; o < out_; ++o) {
    y[o] = bias_.value[o] + dot(wt + o * in_, x.data().data(), in_);
  }
  input_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& upstream, bool need_input_grad) {
  if (!input_) no_forward("linear");
  require_shape(upstream, {out_}, "linear backward");
  const double* x = input_->data().data();
  const double* wt = weight_.value.data().data();
  double* gw = weight_.grad.data().data();
  Tensor gx;
  if (need_input_grad) gx = Tensor({in_});
  for (std::size_t o = 0; o < out_; ++o) {
    const double g = upstream[o];
    bias_.grad[o] += g;
    if (g == 0.0) continue;
    axpy(g, x, gw + o * in_, in_);
    if (need_input_grad) axpy(g, wt + o * in_, gx.data().data(), in_);
  }
  return gx;
}

// ---- Flatten --------------------------------------------------------------

Tensor Flatten::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return x.reshaped({x.size()});
}

Tensor Flatten::backward(const Tensor& upstream, bool need_input_grad) {
  if (!input_shape_) no_forward("flatten");
  if (upstream.size() != shape_size(*input_shape_)) {
    throw ShapeError("flatten backward: expected " + std::to_string(shape_size(*input_shape_)) +
                     " values, got shape " + shape_string(upstream.shape()));
  }
  if (!need_input_grad) return {};
  return upstream.reshaped(*input_shape_);
}

// ---- Layer dispatch -------------------------------------------------------

LayerKind kind_of(const Layer& l) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Conv2d>) return LayerKind::Conv2d;
        else if constexpr (std::is_same_v<T, MaxPool2>) return LayerKind::MaxPool2;
        else if constexpr (std::is_same_v<T, Relu>) return LayerKind::Relu;
        else if constexpr (std::is_same_v<T, Linear>) return LayerKind::Linear;
        else return LayerKind::Flatten;
      },
      l);
}

Tensor forward(Layer& l, const Tensor& x) {
  return std::visit([&](auto& v) { return v.forward(x); }, l);
}

Tensor backward(Layer& l, const Tensor& upstream, bool need_input_grad) {
  return std::visit([&](auto& v) { return v.backward(upstream, need_input_grad); }, l);
}

std::vector<Param*> params_of(Layer& l) {
  if (auto* c = std::get_if<Conv2d>(&l)) return {&c->weight(), &c->bias()};
  if (auto* f = std::get_if<Linear>(&l)) return {&f->weight(), &f->bias()};
  return {};
}

void init_params(Layer& l, Rng& rng) {
  std::size_t fan_in = 0;
  if (auto* c = std::get_if<Conv2d>(&l)) fan_in = c->fan_in();
  if (auto* f = std::get_if<Linear>(&l)) fan_in = f->fan_in();
  auto ps = params_of(l);
  if (ps.empty()) return;
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : ps[0]->value.data()) v = rng.uniform(-s, s);
  ps[1]->value.fill(0.0);
}

// ---- Sequential -----------------------------------------------------------

Tensor Sequential::forward(const Tensor& x) {
  Tensor cur = x;
  for (auto& l : layers_) cur = diagnet::forward(l, cur);
  return cur;
}

Tensor Sequential::backward(const Tensor& upstream, bool need_input_grad) {
  Tensor cur = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    cur = diagnet::backward(layers_[i], cur, i > 0 || need_input_grad);
  }
  return cur;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (Param* p : params_of(l)) out.push_back(p);
  }
  return out;
}

void Sequential::zero_grad() {
  for (Param* p : params()) p->grad.fill(0.0);
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) init_params(l, rng);
}

// ---- Loss -----------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  double mx = logits[0];
  for (double v : logits.data()) mx = std::max(mx, v);
  double sum = 0;
  for (auto& v : p.data()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p.data()) v /= sum;
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1 || logits.size() < 2) {
    throw std::invalid_argument("softmax_cross_entropy needs at least 2 logits, got shape " +
                                shape_string(logits.shape()));
  }
  if (target >= logits.size()) {
    throw std::invalid_argument("target class " + std::to_string(target) + " out of range for " +
                                std::to_string(logits.size()) + " logits");
  }
  double mx = logits[0];
  for (double v : logits.data()) mx = std::max(mx, v);
  double sum = 0;
  for (double v : logits.data()) sum += std::exp(v - mx);
  LossResult r;
  // log-sum-exp form keeps the loss accurate when p[target] underflows.
  r.loss = std::log(sum) - (logits[target] - mx);
  r.probs = softmax(logits);
  r.grad = r.probs;
  r.grad[target] -= 1.0;
  return r;
}

// ---- Optimizer ------------------------------------------------------------

void SgdMomentum::step(std::span<Param* const> params, double grad_scale) {
  if (velocity_.empty()) {
    for (Param* p : params) velocity_.emplace_back(p->value.shape());
  }
  if (velocity_.size() != params.size()) {
    throw std::invalid_argument("optimizer parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Tensor& v = velocity_[i];
    require_shape(p.grad, v.shape(), "sgd step");
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = momentum_ * v[k] + grad_scale * p.grad[k];
      p.value[k] -= lr_ * v[k];
    }
  }
}

// ---- Checkpoints ----------------------------------------------------------

std::string write_params(std::span<Param* const> params) {
  std::string out = "diagnet-params 1\n" + std::to_string(params.size()) + "\n";
  char buf[32];
  for (Param* p : params) {
    const Shape& s = p->value.shape();
    out += std::to_string(s.size());
    for (auto d : s) out += " " + std::to_string(d);
    out += "\n";
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p->value[i]);
      if (i) out += ' ';
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void read_params(std::string_view text, std::span<Param* const> params) {
  std::istringstream is{std::string(text)};
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> magic >> version) || magic != "diagnet-params" || version != 1) {
    throw std::runtime_error("not a parameter checkpoint");
  }
  if (!(is >> count) || count != params.size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(count) + " tensors, model needs " +
                             std::to_string(params.size()));
  }
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t rank = 0;
    if (!(is >> rank)) throw std::runtime_error("truncated checkpoint");
    Shape s(rank);
    for (auto& d : s) {
      if (!(is >> d)) throw std::runtime_error("truncated checkpoint");
    }
    if (s != params[t]->value.shape()) {
      throw std::runtime_error("checkpoint tensor " + std::to_string(t) + " has shape " +
                               shape_string(s) + ", model expects " +
                               shape_string(params[t]->value.shape()));
    }
    for (auto& v : params[t]->value.data()) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("truncated checkpoint");
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("bad number in checkpoint: " + tok);
      }
    }
  }
}

}  // namespace diagnet
