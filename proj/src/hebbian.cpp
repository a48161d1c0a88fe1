#include "hebb/hebbian.hpp"

#include <cmath>
#include <stdexcept>

#include "hebb/errors.hpp"
#include "hebb/random.hpp"

namespace hebb {

std::string_view to_string(HebbRule rule) {
  switch (rule) {
    case HebbRule::PlainHebb: return "hebb";
    case HebbRule::Instar: return "instar";
    case HebbRule::Oja: return "oja";
  }
  throw std::logic_error("unknown HebbRule");
}

std::optional<HebbRule> parse_hebb_rule(std::string_view text) {
  if (text == "hebb" || text == "plain") return HebbRule::PlainHebb;
  if (text == "instar") return HebbRule::Instar;
  if (text == "oja") return HebbRule::Oja;
  return std::nullopt;
}

void check_batch(const PlasticityBatch& batch, const WeightTensor& w) {
  const Shape4& x = batch.x.shape();
  const Shape4& p = batch.preact.shape();
  if (x.c != w.in_channels()) {
    throw ShapeError("plasticity batch: input has " + std::to_string(x.c) + " channels, weights expect " +
                     std::to_string(w.in_channels()));
  }
  const Shape4 expected{x.n, w.out_channels(), x.h - w.kernel_h() + 1, x.w - w.kernel_w() + 1};
  if (p != expected) {
    throw ShapeError("plasticity batch: preact " + p.str() + " != expected " + expected.str());
  }
  if (batch.y_real.shape() != p) {
    throw ShapeError("plasticity batch: y_real " + batch.y_real.shape().str() + " != preact " + p.str());
  }
}

namespace {

std::vector<double> half_squared_norms(const WeightTensor& w) {
  std::vector<double> out(w.out_channels());
  for (int o = 0; o < w.out_channels(); ++o) {
    const double n = w.filter_norm(o);
    out[o] = 0.5 * n * n;
  }
  return out;
}

}  // namespace

Tensor4 surrogate_value(HebbRule rule, const Tensor4& preact, const WeightTensor& w, const Tensor4& y_real) {
  if (preact.channels() != w.out_channels() || y_real.shape() != preact.shape()) {
    throw ShapeError("surrogate_value: preact " + preact.shape().str() + ", y_real " + y_real.shape().str() +
                     ", weights with " + std::to_string(w.out_channels()) + " filters");
  }
  Tensor4 out = preact;
  if (rule == HebbRule::PlainHebb) return out;
  const std::vector<double> half_sq = half_squared_norms(w);
  const Shape4& s = preact.shape();
  for (int b = 0; b < s.n; ++b) {
    for (int o = 0; o < s.c; ++o) {
      for (int i = 0; i < s.h; ++i) {
        for (int j = 0; j < s.w; ++j) {
          const double scale = rule == HebbRule::Oja ? y_real(b, o, i, j) : 1.0;
          out(b, o, i, j) = static_cast<float>(preact(b, o, i, j) - half_sq[o] * scale);
        }
      }
    }
  }
  return out;
}

WeightTensor hebbian_update_direct(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w) {
  check_batch(batch, w);
  const Tensor4 patches = unfold(batch.x, w.kernel_h(), w.kernel_w());
  const Shape4& s = batch.y_real.shape();
  const int fan_in = static_cast<int>(w.fan_in());

  std::vector<double> acc(w.size(), 0.0);
  std::vector<double> patch(fan_in);
  for (int b = 0; b < s.n; ++b) {
    for (int i = 0; i < s.h; ++i) {
      for (int j = 0; j < s.w; ++j) {
        for (int k = 0; k < fan_in; ++k) patch[k] = patches(b, k, i, j);
        for (int o = 0; o < s.c; ++o) {
          const double y = batch.y_real(b, o, i, j);
          const auto wo = w.filter(o);
          double* dst = &acc[static_cast<std::size_t>(o) * fan_in];
          for (int k = 0; k < fan_in; ++k) {
            switch (rule) {
              case HebbRule::PlainHebb: dst[k] += y * patch[k]; break;
              case HebbRule::Instar: dst[k] += y * (patch[k] - wo[k]); break;
              case HebbRule::Oja: dst[k] += y * (patch[k] - y * wo[k]); break;
            }
          }
        }
      }
    }
  }
  WeightTensor delta(w.shape());
  for (std::size_t k = 0; k < acc.size(); ++k) delta.data()[k] = static_cast<float>(acc[k]);
  return delta;
}

HebbianAccumulator::HebbianAccumulator(const WeightTensor& w)
    : grad(w.size(), 0.0), norm_coeff(static_cast<std::size_t>(w.out_channels()), 0.0) {}

void HebbianAccumulator::add(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w) {
  check_batch(batch, w);
  if (grad.size() != w.size() || norm_coeff.size() != static_cast<std::size_t>(w.out_channels())) {
    throw ShapeError("HebbianAccumulator: sized for different weights than " + w.shape().str());
  }
  const Shape4& s = batch.y_real.shape();
  const int cin = w.in_channels();
  const int kh = w.kernel_h();
  const int kw = w.kernel_w();
  const int fan_in = static_cast<int>(w.fan_in());

  // dL/ds with L = -1/2 sum s^2, evaluated at the overwritten value s = y_real.
  // Only nonzero entries contribute, so iterate over those.
  const std::size_t plane = s.plane();
  const std::size_t x_plane = batch.x.shape().plane();
  const int x_w = batch.x.width();
  for (int b = 0; b < s.n; ++b) {
    const float* y_b = batch.y_real.item(b).data();
    const float* x_b = batch.x.item(b).data();
    for (int o = 0; o < s.c; ++o) {
      double* g_o = &grad[static_cast<std::size_t>(o) * fan_in];
      const float* y_o = y_b + o * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const double y_hat = y_o[p];
        if (y_hat == 0.0) continue;
        const int i = static_cast<int>(p / s.w);
        const int j = static_cast<int>(p % s.w);
        const double upstream = -y_hat;
        // Through the convolution: ds/dw[o,c,u,v] = x[b,c,i+u,j+v].
        for (int c = 0; c < cin; ++c) {
          for (int u = 0; u < kh; ++u) {
            const float* row = x_b + c * x_plane + static_cast<std::size_t>(i + u) * x_w + j;
            double* g = g_o + (c * kh + u) * kw;
            for (int v = 0; v < kw; ++v) g[v] += upstream * row[v];
          }
        }
        // Through -|w_o|^2/2 (times the detached y_real for Oja): ds/dw_o = -w_o * scale.
        if (rule == HebbRule::Instar) norm_coeff[o] -= upstream;
        if (rule == HebbRule::Oja) norm_coeff[o] -= upstream * y_hat;
      }
    }
  }
}

WeightTensor HebbianAccumulator::delta(const WeightTensor& w) const {
  WeightTensor out(w.shape());
  const int fan_in = static_cast<int>(w.fan_in());
  for (int o = 0; o < w.out_channels(); ++o) {
    const auto wo = w.filter(o);
    auto dst = out.filter(o);
    const double* g_o = &grad[static_cast<std::size_t>(o) * fan_in];
    for (int k = 0; k < fan_in; ++k) {
      const double dl_dw = g_o[k] + norm_coeff[o] * wo[k];
      dst[k] = static_cast<float>(-dl_dw);
    }
  }
  return out;
}

WeightTensor hebbian_update_via_gradient(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w) {
  HebbianAccumulator acc(w);
  acc.add(rule, batch, w);
  return acc.delta(w);
}

std::vector<double> oja_fixed_point_demo(const std::vector<std::vector<double>>& data, int steps, double lr,
                                         std::uint64_t seed) {
  if (data.empty() || data.front().empty()) throw DataError("oja_fixed_point_demo: empty data");
  const std::size_t dim = data.front().size();
  for (const auto& x : data) {
    if (x.size() != dim) throw ShapeError("oja_fixed_point_demo: ragged data");
  }
  Rng rng(seed);
  std::vector<double> w(dim);
  double sq = 0.0;
  for (double& v : w) {
    v = rng.normal();
    sq += v * v;
  }
  for (double& v : w) v /= std::sqrt(sq);

  for (int t = 0; t < steps; ++t) {
    const auto& x = data[static_cast<std::size_t>(t) % data.size()];
    double y = 0.0;
    for (std::size_t k = 0; k < dim; ++k) y += w[k] * x[k];
    for (std::size_t k = 0; k < dim; ++k) w[k] += lr * y * (x[k] - y * w[k]);
  }
  return w;
}

}  // namespace hebb
