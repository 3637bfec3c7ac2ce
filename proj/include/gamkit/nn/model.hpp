#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gamkit/nn/layers.hpp"
#include "gamkit/types.hpp"

namespace gamkit::nn {

// One capturable unit: conv, optional relu, optional 2x2 max pool. Block
// outputs are the activations the saliency methods consume.
template <class S>
struct Block {
  std::string name;
  Conv2d<S> conv;
  bool relu = true;
  bool pool = false;

  bool relu_terminated() const { return relu; }  // pooling preserves sign
};

// Embedding head op. The chain starts from the last block output (a tensor)
// and must begin with a Gap or Flatten; everything after is vector-valued.
template <class S>
struct EmbedOp {
  enum class Kind { Gap, Flatten, Dense, Relu };
  Kind kind = Kind::Gap;
  std::string name;  // tap name of this op's output
  nn::Dense<S> dense;

  static EmbedOp gap() { return {Kind::Gap, "gap", {}}; }
  static EmbedOp flatten() { return {Kind::Flatten, "flatten", {}}; }
  static EmbedOp fc(std::string name, int in_dim, int out_dim) {
    return {Kind::Dense, std::move(name), Dense<S>(in_dim, out_dim)};
  }
  static EmbedOp relu(std::string name) { return {Kind::Relu, std::move(name), {}}; }
};

template <class S>
struct ForwardTrace {
  struct BlockTrace {
    Mat<S> cols;  // im2col cache, populated only when training
    Tensor3<S> preact;
    typename MaxPool2<S>::ArgMax argmax;
    Tensor3<S> out;
  };
  Tensor3<S> input;
  std::vector<BlockTrace> blocks;
  std::vector<Vec<S>> embed_values;  // value after each embed op
  Vec<S> logits;                     // empty if no classifier
};

// Result of re-running the network from a block output onward. The relu sign
// pattern lets a finite-difference probe detect that it crossed a kink.
template <class S>
struct SuffixRun {
  Vec<S> tap_value;
  std::vector<uint8_t> relu_pattern;
};

template <class S>
struct Model {
  std::string arch;
  int in_ch = 0, in_rows = 0, in_cols = 0;
  std::vector<Block<S>> blocks;
  std::vector<EmbedOp<S>> embed;
  int embed_tap = -1;  // default embedding point (index into embed)
  std::optional<Dense<S>> classifier;
  std::vector<std::string> class_names;

  int num_classes() const {
    return classifier ? classifier->out_dim() : 0;
  }

  int tap_index(const std::string& name) const {
    for (size_t i = 0; i < embed.size(); ++i)
      if (embed[i].name == name) return static_cast<int>(i);
    throw ConfigError("unknown embedding point '" + name + "' for arch " + arch);
  }

  int last_tap() const { return static_cast<int>(embed.size()) - 1; }

  void init_random(uint64_t seed) {
    Rng rng(seed);
    for (auto& b : blocks) b.conv.init_he(rng);
    for (auto& e : embed)
      if (e.kind == EmbedOp<S>::Kind::Dense) e.dense.init_he(rng);
    if (classifier) classifier->init_he(rng);
  }

  // -------------------------------------------------------------------------

  ForwardTrace<S> forward(const Tensor3<S>& x, bool keep_cols = false) const {
    if (x.channels() != in_ch || x.rows() != in_rows || x.cols() != in_cols)
      throw InputShapeError("model " + arch + " expects " + shape_string() +
                            " input");
    ForwardTrace<S> tr;
    tr.input = x;
    Tensor3<S> cur = x;
    tr.blocks.resize(blocks.size());
    for (size_t b = 0; b < blocks.size(); ++b) {
      auto& bt = tr.blocks[b];
      bt.preact = blocks[b].conv.forward(cur, keep_cols ? &bt.cols : nullptr);
      Tensor3<S> t = bt.preact;
      if (blocks[b].relu)
        for (auto& m : t.chan) m = m.cwiseMax(S(0));
      if (blocks[b].pool) t = MaxPool2<S>::forward(t, bt.argmax);
      bt.out = std::move(t);
      cur = bt.out;
    }
    tr.embed_values.reserve(embed.size());
    Vec<S> v;
    for (size_t i = 0; i < embed.size(); ++i) {
      const auto& op = embed[i];
      switch (op.kind) {
        case EmbedOp<S>::Kind::Gap: {
          v.resize(cur.channels());
          for (int c = 0; c < cur.channels(); ++c) v[c] = cur[c].mean();
          break;
        }
        case EmbedOp<S>::Kind::Flatten: {
          v.resize(Eigen::Index(cur.channels()) * cur.rows() * cur.cols());
          Eigen::Index p = 0;
          for (int c = 0; c < cur.channels(); ++c)
            for (int r = 0; r < cur.rows(); ++r)
              for (int cc = 0; cc < cur.cols(); ++cc) v[p++] = cur[c](r, cc);
          break;
        }
        case EmbedOp<S>::Kind::Dense:
          v = op.dense.forward(v);
          break;
        case EmbedOp<S>::Kind::Relu:
          v = v.cwiseMax(S(0));
          break;
      }
      tr.embed_values.push_back(v);
    }
    if (classifier) tr.logits = classifier->forward(tr.embed_values.back());
    return tr;
  }

  // Gradient of a scalar with respect to every block output, given its
  // gradient at the embedding tap. Entry b of the result matches blocks[b].
  std::vector<Tensor3<S>> backward_blocks(const ForwardTrace<S>& tr,
                                          const Vec<S>& dtap, int tap) const {
    Tensor3<S> dH = embed_backward(tr, dtap, tap, nullptr);
    std::vector<Tensor3<S>> grads(blocks.size());
    Tensor3<S> g = std::move(dH);
    for (int b = static_cast<int>(blocks.size()) - 1; b >= 0; --b) {
      grads[b] = g;
      if (b == 0) break;
      g = block_backward_input(b, tr, g, tr.blocks[b - 1].out.rows(),
                               tr.blocks[b - 1].out.cols());
    }
    return grads;
  }

  // Training backward: cross-entropy style gradient at the logits, parameter
  // gradients accumulated in place. Requires a trace built with keep_cols.
  void backward_train(const ForwardTrace<S>& tr, const Vec<S>& dlogits) {
    Vec<S> dv = dlogits;
    if (classifier) {
      classifier->accumulate_param_grads(dv, tr.embed_values.back());
      dv = classifier->backward_input(dv);
    }
    Tensor3<S> dH = embed_backward(tr, dv, last_tap(), this);
    Tensor3<S> g = std::move(dH);
    for (int b = static_cast<int>(blocks.size()) - 1; b >= 0; --b) {
      // undo pool/relu to reach the conv output, then split into the
      // parameter gradient and the input gradient
      Tensor3<S> d = g;
      if (blocks[b].pool)
        d = MaxPool2<S>::backward(d, tr.blocks[b].argmax, tr.blocks[b].preact.rows(),
                                  tr.blocks[b].preact.cols());
      if (blocks[b].relu)
        for (int c = 0; c < d.channels(); ++c)
          d[c] = d[c].cwiseProduct(
              (tr.blocks[b].preact[c].array() > S(0)).template cast<S>().matrix());
      blocks[b].conv.accumulate_param_grads(d, tr.blocks[b].cols);
      if (b == 0) break;
      g = blocks[b].conv.backward_input(d, tr.blocks[b - 1].out.rows(),
                                        tr.blocks[b - 1].out.cols());
    }
  }

  // Re-run from block `from` (0-based) onward with a replacement activation,
  // recording every downstream relu sign pattern.
  SuffixRun<S> forward_suffix(int from, const Tensor3<S>& h, int tap) const {
    SuffixRun<S> run;
    Tensor3<S> cur = h;
    for (size_t b = from + 1; b < blocks.size(); ++b) {
      Tensor3<S> t = blocks[b].conv.forward(cur);
      if (blocks[b].relu) {
        for (auto& m : t.chan) {
          for (Eigen::Index i = 0; i < m.size(); ++i)
            run.relu_pattern.push_back(m.data()[i] > S(0) ? 1 : 0);
          m = m.cwiseMax(S(0));
        }
      }
      if (blocks[b].pool) {
        typename MaxPool2<S>::ArgMax am;
        t = MaxPool2<S>::forward(t, am);
      }
      cur = std::move(t);
    }
    Vec<S> v;
    for (int i = 0; i <= tap; ++i) {
      const auto& op = embed[i];
      switch (op.kind) {
        case EmbedOp<S>::Kind::Gap: {
          v.resize(cur.channels());
          for (int c = 0; c < cur.channels(); ++c) v[c] = cur[c].mean();
          break;
        }
        case EmbedOp<S>::Kind::Flatten: {
          v.resize(Eigen::Index(cur.channels()) * cur.rows() * cur.cols());
          Eigen::Index p = 0;
          for (int c = 0; c < cur.channels(); ++c)
            for (int r = 0; r < cur.rows(); ++r)
              for (int cc = 0; cc < cur.cols(); ++cc) v[p++] = cur[c](r, cc);
          break;
        }
        case EmbedOp<S>::Kind::Dense:
          v = op.dense.forward(v);
          break;
        case EmbedOp<S>::Kind::Relu:
          for (Eigen::Index i2 = 0; i2 < v.size(); ++i2)
            run.relu_pattern.push_back(v[i2] > S(0) ? 1 : 0);
          v = v.cwiseMax(S(0));
          break;
      }
    }
    run.tap_value = std::move(v);
    return run;
  }

  std::vector<ParamView<S>> params() {
    std::vector<ParamView<S>> out;
    for (auto& b : blocks) b.conv.collect_params(out);
    for (auto& e : embed)
      if (e.kind == EmbedOp<S>::Kind::Dense) e.dense.collect_params(out);
    if (classifier) classifier->collect_params(out);
    return out;
  }

  void zero_grad() {
    for (auto p : params())
      for (Eigen::Index i = 0; i < p.size; ++i) p.grad[i] = S(0);
  }

  std::string shape_string() const {
    return std::to_string(in_ch) + "x" + std::to_string(in_rows) + "x" +
           std::to_string(in_cols);
  }

 private:
  // Backward through the embed chain from `tap` down to the tensor entering
  // it. When `train` is set, dense parameter gradients are accumulated too.
  Tensor3<S> embed_backward(const ForwardTrace<S>& tr, const Vec<S>& dtap,
                            int tap, Model<S>* train) const {
    Vec<S> dv = dtap;
    const Tensor3<S>& head_in =
        blocks.empty() ? tr.input : tr.blocks.back().out;
    for (int i = tap; i >= 0; --i) {
      const auto& op = embed[i];
      switch (op.kind) {
        case EmbedOp<S>::Kind::Gap: {
          Tensor3<S> dH(head_in.channels(), head_in.rows(), head_in.cols());
          const S inv = S(1) / S(head_in.rows() * head_in.cols());
          for (int c = 0; c < dH.channels(); ++c)
            dH[c].setConstant(dv[c] * inv);
          return dH;
        }
        case EmbedOp<S>::Kind::Flatten: {
          Tensor3<S> dH(head_in.channels(), head_in.rows(), head_in.cols());
          Eigen::Index p = 0;
          for (int c = 0; c < dH.channels(); ++c)
            for (int r = 0; r < dH.rows(); ++r)
              for (int cc = 0; cc < dH.cols(); ++cc) dH[c](r, cc) = dv[p++];
          return dH;
        }
        case EmbedOp<S>::Kind::Dense: {
          const Vec<S>& in = (i == 0) ? Vec<S>() : tr.embed_values[i - 1];
          if (train) train->embed[i].dense.accumulate_param_grads(dv, in);
          dv = op.dense.backward_input(dv);
          break;
        }
        case EmbedOp<S>::Kind::Relu: {
          const Vec<S>& in = tr.embed_values[i - 1];
          for (Eigen::Index j = 0; j < dv.size(); ++j)
            if (!(in[j] > S(0))) dv[j] = S(0);
          break;
        }
      }
    }
    throw ConfigError("embed chain must start with gap or flatten");
  }

  // Gradient at block b's input given the gradient at its output.
  Tensor3<S> block_backward_input(int b, const ForwardTrace<S>& tr,
                                  const Tensor3<S>& dout, int in_rows_,
                                  int in_cols_) const {
    Tensor3<S> d = dout;
    if (blocks[b].pool)
      d = MaxPool2<S>::backward(d, tr.blocks[b].argmax, tr.blocks[b].preact.rows(),
                                tr.blocks[b].preact.cols());
    if (blocks[b].relu)
      for (int c = 0; c < d.channels(); ++c)
        d[c] = d[c].cwiseProduct(
            (tr.blocks[b].preact[c].array() > S(0)).template cast<S>().matrix());
    return blocks[b].conv.backward_input(d, in_rows_, in_cols_);
  }
};

using Modeld = Model<double>;

// ---------------------------------------------------------------------------
// Architecture registry: the adapter table mapping an arch name to its block
// layout and declared embedding taps.

struct ModelOptions {
  int in_ch = 1;
  int in_rows = 0;  // 0 = arch default
  int in_cols = 0;
  int classes = 10;
  std::string embedding_point;  // empty = arch default
};

template <class S>
Model<S> build_model(const std::string& arch, const ModelOptions& opt = {}) {
  Model<S> m;
  m.arch = arch;
  m.in_ch = opt.in_ch;

  auto add_block = [&](const std::string& name, int in_c, int out_c, int k,
                       int pad, bool pool) {
    Block<S> b;
    b.name = name;
    b.conv = Conv2d<S>(in_c, out_c, k, 1, pad);
    b.relu = true;
    b.pool = pool;
    m.blocks.push_back(std::move(b));
  };

  if (arch == "toycnn") {
    m.in_rows = opt.in_rows ? opt.in_rows : 8;
    m.in_cols = opt.in_cols ? opt.in_cols : 8;
    add_block("block1", opt.in_ch, 4, 3, 1, false);
    add_block("block2", 4, 8, 3, 1, false);
    m.embed.push_back(EmbedOp<S>::gap());
    m.classifier = Dense<S>(8, opt.classes);
  } else if (arch == "deep4") {
    m.in_rows = opt.in_rows ? opt.in_rows : 16;
    m.in_cols = opt.in_cols ? opt.in_cols : 16;
    add_block("block1", opt.in_ch, 4, 3, 1, false);
    add_block("block2", 4, 8, 3, 1, true);
    add_block("block3", 8, 8, 3, 1, true);
    add_block("block4", 8, 8, 3, 1, true);
    m.embed.push_back(EmbedOp<S>::gap());
    m.classifier = Dense<S>(8, opt.classes);
  } else if (arch == "lenet") {
    m.in_rows = opt.in_rows ? opt.in_rows : 28;
    m.in_cols = opt.in_cols ? opt.in_cols : 28;
    add_block("block1", opt.in_ch, 8, 5, 2, true);
    add_block("block2", 8, 16, 5, 2, true);
    const int flat = 16 * (m.in_rows / 4) * (m.in_cols / 4);
    m.embed.push_back(EmbedOp<S>::flatten());
    m.embed.push_back(EmbedOp<S>::fc("fc1", flat, 120));
    m.embed.push_back(EmbedOp<S>::relu("fc1_relu"));
    m.embed.push_back(EmbedOp<S>::fc("fc2", 120, 84));
    m.embed.push_back(EmbedOp<S>::relu("fc2_relu"));
    m.classifier = Dense<S>(84, opt.classes);
  } else if (arch == "mlp") {
    m.in_rows = opt.in_rows ? opt.in_rows : 8;
    m.in_cols = opt.in_cols ? opt.in_cols : 8;
    const int flat = opt.in_ch * m.in_rows * m.in_cols;
    m.embed.push_back(EmbedOp<S>::flatten());
    m.embed.push_back(EmbedOp<S>::fc("fc1", flat, 32));
    m.embed.push_back(EmbedOp<S>::relu("fc1_relu"));
    m.classifier = Dense<S>(32, opt.classes);
  } else {
    throw ConfigError("unknown architecture '" + arch + "'");
  }

  m.embed_tap = opt.embedding_point.empty() ? m.last_tap()
                                            : m.tap_index(opt.embedding_point);
  m.class_names.resize(opt.classes);
  for (int i = 0; i < opt.classes; ++i) m.class_names[i] = std::to_string(i);
  return m;
}

inline std::vector<std::string> registered_archs() {
  return {"toycnn", "deep4", "lenet", "mlp"};
}

// ---------------------------------------------------------------------------
// Weight files, format GWTS/1: a header naming the arch and its dimensions
// followed by every parameter tensor flattened to f64 in params() order.

namespace detail {
inline void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IOError("truncated weight file");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}
inline void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_str(std::istream& is) {
  uint32_t n = get_u32(is);
  if (n > (1u << 20)) throw IOError("corrupt weight file: oversized string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw IOError("truncated weight file");
  return s;
}
}  // namespace detail

template <class S>
void save_weights(Model<S>& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open '" + path + "' for writing");
  os.write("GWTS", 4);
  detail::put_u32(os, 1);
  detail::put_str(os, m.arch);
  detail::put_u32(os, static_cast<uint32_t>(m.in_ch));
  detail::put_u32(os, static_cast<uint32_t>(m.in_rows));
  detail::put_u32(os, static_cast<uint32_t>(m.in_cols));
  detail::put_u32(os, static_cast<uint32_t>(m.num_classes()));
  detail::put_str(os, m.embed[m.embed_tap].name);
  auto ps = m.params();
  detail::put_u32(os, static_cast<uint32_t>(ps.size()));
  for (auto& p : ps) {
    detail::put_u32(os, static_cast<uint32_t>(p.size));
    for (Eigen::Index i = 0; i < p.size; ++i) {
      double v = static_cast<double>(p.value[i]);
      os.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
  if (!os) throw IOError("short write to '" + path + "'");
}

template <class S>
Model<S> load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "GWTS")
    throw IOError("'" + path + "' is not a GWTS weight file");
  if (detail::get_u32(is) != 1)
    throw IOError("unsupported weight file version in '" + path + "'");
  ModelOptions opt;
  const std::string arch = detail::get_str(is);
  opt.in_ch = static_cast<int>(detail::get_u32(is));
  opt.in_rows = static_cast<int>(detail::get_u32(is));
  opt.in_cols = static_cast<int>(detail::get_u32(is));
  opt.classes = static_cast<int>(detail::get_u32(is));
  opt.embedding_point = detail::get_str(is);
  Model<S> m = build_model<S>(arch, opt);
  auto ps = m.params();
  const uint32_t count = detail::get_u32(is);
  if (count != ps.size())
    throw IOError("weight file '" + path + "' does not match arch " + arch);
  for (auto& p : ps) {
    const uint32_t n = detail::get_u32(is);
    if (static_cast<Eigen::Index>(n) != p.size)
      throw IOError("weight tensor size mismatch in '" + path + "'");
    for (Eigen::Index i = 0; i < p.size; ++i) {
      double v;
      is.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!is) throw IOError("truncated weight file");
      p.value[i] = static_cast<S>(v);
    }
  }
  return m;
}

}  // namespace gamkit::nn
