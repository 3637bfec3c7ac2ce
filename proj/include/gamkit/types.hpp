#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "gamkit/errors.hpp"

namespace gamkit {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using Vecd = Vec<double>;
using Matf = Mat<float>;

// Dense channels x rows x cols tensor, stored as one Eigen matrix per channel.
template <class S>
struct Tensor3 {
  std::vector<Mat<S>> chan;

  Tensor3() = default;
  Tensor3(int channels, int rows, int cols)
      : chan(channels, Mat<S>::Zero(rows, cols)) {}

  int channels() const { return static_cast<int>(chan.size()); }
  int rows() const { return chan.empty() ? 0 : static_cast<int>(chan[0].rows()); }
  int cols() const { return chan.empty() ? 0 : static_cast<int>(chan[0].cols()); }

  Mat<S>& operator[](int k) { return chan[k]; }
  const Mat<S>& operator[](int k) const { return chan[k]; }

  void setZero() {
    for (auto& m : chan) m.setZero();
  }

  bool sameShape(const Tensor3& o) const {
    return channels() == o.channels() && rows() == o.rows() && cols() == o.cols();
  }

  bool allFinite() const {
    for (const auto& m : chan)
      if (!m.allFinite()) return false;
    return true;
  }

  S minCoeff() const {
    S v = chan.at(0).minCoeff();
    for (const auto& m : chan) v = std::min(v, m.minCoeff());
    return v;
  }

  S maxCoeff() const {
    S v = chan.at(0).maxCoeff();
    for (const auto& m : chan) v = std::max(v, m.maxCoeff());
    return v;
  }

  template <class T>
  Tensor3<T> cast() const {
    Tensor3<T> out;
    out.chan.reserve(chan.size());
    for (const auto& m : chan) out.chan.push_back(m.template cast<T>());
    return out;
  }
};

using Tensor3d = Tensor3<double>;
using Tensor3f = Tensor3<float>;

// Input image as a channels x height x width grid. `normalized` tracks whether
// the values are raw pixels in [0,1] or already model-normalized floats.
template <class S>
struct ImageTensor {
  Tensor3<S> data;
  bool normalized = false;

  ImageTensor() = default;
  explicit ImageTensor(Tensor3<S> t, bool norm = false)
      : data(std::move(t)), normalized(norm) {
    validate();
  }

  int channels() const { return data.channels(); }
  int rows() const { return data.rows(); }
  int cols() const { return data.cols(); }

  void validate() const {
    if (data.channels() < 1 || data.rows() < 1 || data.cols() < 1)
      throw InputShapeError("image tensor must have positive dimensions");
    if (!data.allFinite())
      throw InputShapeError("image tensor contains non-finite values");
  }
};

// A capturable block output: 1-based position in the model's eligible list
// plus the backend's label for it.
struct LayerId {
  int index = 0;
  std::string name;

  friend bool operator==(const LayerId& a, const LayerId& b) {
    return a.index == b.index && a.name == b.name;
  }
};

template <class S>
struct ActivationStack {
  std::vector<std::pair<LayerId, Tensor3<S>>> entries;

  const Tensor3<S>* find(int layer_index) const {
    for (const auto& [id, t] : entries)
      if (id.index == layer_index) return &t;
    return nullptr;
  }
};

template <class S>
struct GradientStack {
  std::vector<std::pair<LayerId, Tensor3<S>>> entries;

  const Tensor3<S>* find(int layer_index) const {
    for (const auto& [id, t] : entries)
      if (id.index == layer_index) return &t;
    return nullptr;
  }
};

template <class S>
using Embedding = Vec<S>;

}  // namespace gamkit
