#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gamkit/types.hpp"

namespace gamkit::nn {

// Deterministic RNG used for weight init, shuffling and probe sampling.
// Normal variates go through an explicit Box-Muller so streams are stable
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() {
    // 53-bit mantissa uniform in [0,1)
    return (gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, n)
  int below(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Mutable view over one parameter tensor and its gradient buffer.
template <class S>
struct ParamView {
  S* value;
  S* grad;
  Eigen::Index size;
};

// ---------------------------------------------------------------------------
// 2-D convolution, im2col + GEMM. Weight layout: out_ch x (in_ch*k*k), the
// column index runs (channel, kernel-row, kernel-col).

template <class S>
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 3, stride = 1, pad = 1;
  Mat<S> weight;
  Vec<S> bias;
  Mat<S> grad_weight;
  Vec<S> grad_bias;

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int ksize, int stride_, int pad_)
      : in_ch(in_channels), out_ch(out_channels), k(ksize), stride(stride_), pad(pad_) {
    weight = Mat<S>::Zero(out_ch, in_ch * k * k);
    bias = Vec<S>::Zero(out_ch);
    grad_weight = Mat<S>::Zero(out_ch, in_ch * k * k);
    grad_bias = Vec<S>::Zero(out_ch);
  }

  int out_rows(int r) const { return (r + 2 * pad - k) / stride + 1; }
  int out_cols(int c) const { return (c + 2 * pad - k) / stride + 1; }

  void init_he(Rng& rng) {
    const double sd = std::sqrt(2.0 / double(in_ch * k * k));
    for (Eigen::Index i = 0; i < weight.size(); ++i)
      weight.data()[i] = S(rng.normal() * sd);
    bias.setZero();
  }

  Mat<S> im2col(const Tensor3<S>& x) const {
    const int oh = out_rows(x.rows());
    const int ow = out_cols(x.cols());
    Mat<S> cols = Mat<S>::Zero(in_ch * k * k, oh * ow);
    for (int ci = 0; ci < in_ch; ++ci) {
      const Mat<S>& xm = x[ci];
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          const int row = (ci * k + ki) * k + kj;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride - pad + ki;
            if (ii < 0 || ii >= x.rows()) continue;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride - pad + kj;
              if (jj < 0 || jj >= x.cols()) continue;
              cols(row, oi * ow + oj) = xm(ii, jj);
            }
          }
        }
    }
    return cols;
  }

  Tensor3<S> forward(const Tensor3<S>& x, Mat<S>* cols_cache = nullptr) const {
    if (x.channels() != in_ch)
      throw ShapeError("Conv2d: input channel mismatch");
    const int oh = out_rows(x.rows());
    const int ow = out_cols(x.cols());
    Mat<S> cols = im2col(x);
    Mat<S> y = weight * cols;
    y.colwise() += bias;
    Tensor3<S> out(out_ch, oh, ow);
    for (int o = 0; o < out_ch; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) out[o](i, j) = y(o, i * ow + j);
    if (cols_cache) *cols_cache = std::move(cols);
    return out;
  }

  Tensor3<S> backward_input(const Tensor3<S>& dy, int in_rows, int in_cols) const {
    const int oh = dy.rows();
    const int ow = dy.cols();
    Mat<S> dym(out_ch, oh * ow);
    for (int o = 0; o < out_ch; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) dym(o, i * ow + j) = dy[o](i, j);
    Mat<S> dcols = weight.transpose() * dym;
    // col2im scatter-add
    Tensor3<S> dx(in_ch, in_rows, in_cols);
    for (int ci = 0; ci < in_ch; ++ci) {
      Mat<S>& dxm = dx[ci];
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          const int row = (ci * k + ki) * k + kj;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride - pad + ki;
            if (ii < 0 || ii >= in_rows) continue;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride - pad + kj;
              if (jj < 0 || jj >= in_cols) continue;
              dxm(ii, jj) += dcols(row, oi * ow + oj);
            }
          }
        }
    }
    return dx;
  }

  void accumulate_param_grads(const Tensor3<S>& dy, const Mat<S>& cols) {
    const int oh = dy.rows();
    const int ow = dy.cols();
    Mat<S> dym(out_ch, oh * ow);
    for (int o = 0; o < out_ch; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) dym(o, i * ow + j) = dy[o](i, j);
    grad_weight.noalias() += dym * cols.transpose();
    grad_bias.noalias() += dym.rowwise().sum();
  }

  void collect_params(std::vector<ParamView<S>>& out) {
    out.push_back({weight.data(), grad_weight.data(), weight.size()});
    out.push_back({bias.data(), grad_bias.data(), bias.size()});
  }
};

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2; trailing odd rows/cols are dropped.

template <class S>
struct MaxPool2 {
  using ArgMax = std::vector<Eigen::MatrixXi>;  // flat in-index per output cell

  static Tensor3<S> forward(const Tensor3<S>& x, ArgMax& argmax) {
    const int oh = x.rows() / 2;
    const int ow = x.cols() / 2;
    Tensor3<S> out(x.channels(), oh, ow);
    argmax.assign(x.channels(), Eigen::MatrixXi(oh, ow));
    for (int c = 0; c < x.channels(); ++c) {
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          S best = x[c](2 * i, 2 * j);
          int bi = 2 * i, bj = 2 * j;
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const S v = x[c](2 * i + di, 2 * j + dj);
              if (v > best) {
                best = v;
                bi = 2 * i + di;
                bj = 2 * j + dj;
              }
            }
          out[c](i, j) = best;
          argmax[c](i, j) = bi * x.cols() + bj;
        }
    }
    return out;
  }

  static Tensor3<S> backward(const Tensor3<S>& dy, const ArgMax& argmax,
                             int in_rows, int in_cols) {
    Tensor3<S> dx(dy.channels(), in_rows, in_cols);
    for (int c = 0; c < dy.channels(); ++c)
      for (int i = 0; i < dy.rows(); ++i)
        for (int j = 0; j < dy.cols(); ++j) {
          const int flat = argmax[c](i, j);
          dx[c](flat / in_cols, flat % in_cols) += dy[c](i, j);
        }
    return dx;
  }
};

// ---------------------------------------------------------------------------

template <class S>
struct Dense {
  Mat<S> weight;  // out x in
  Vec<S> bias;
  Mat<S> grad_weight;
  Vec<S> grad_bias;

  Dense() = default;
  Dense(int in_dim, int out_dim) {
    weight = Mat<S>::Zero(out_dim, in_dim);
    bias = Vec<S>::Zero(out_dim);
    grad_weight = Mat<S>::Zero(out_dim, in_dim);
    grad_bias = Vec<S>::Zero(out_dim);
  }

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  void init_he(Rng& rng) {
    const double sd = std::sqrt(2.0 / double(weight.cols()));
    for (Eigen::Index i = 0; i < weight.size(); ++i)
      weight.data()[i] = S(rng.normal() * sd);
    bias.setZero();
  }

  Vec<S> forward(const Vec<S>& v) const { return weight * v + bias; }
  Vec<S> backward_input(const Vec<S>& dout) const { return weight.transpose() * dout; }

  void accumulate_param_grads(const Vec<S>& dout, const Vec<S>& in) {
    grad_weight.noalias() += dout * in.transpose();
    grad_bias.noalias() += dout;
  }

  void collect_params(std::vector<ParamView<S>>& out) {
    out.push_back({weight.data(), grad_weight.data(), weight.size()});
    out.push_back({bias.data(), grad_bias.data(), bias.size()});
  }
};

}  // namespace gamkit::nn
