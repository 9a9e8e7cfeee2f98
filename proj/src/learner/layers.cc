#include "ccil/learner/layers.h"

#include <cmath>
#include <stdexcept>

namespace ccil::nn {

Var ParameterStore::Create(const std::string& name, std::vector<int> shape,
                           int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (auto& v : t.values()) v = rng.Uniform(-bound, bound);
  Var leaf = Leaf(std::move(t));
  entries_.emplace_back(name, leaf);
  return leaf;
}

Var ParameterStore::CreateFilled(const std::string& name, std::vector<int> shape,
                                 double fill) {
  Var leaf = Leaf(Tensor(std::move(shape), fill));
  entries_.emplace_back(name, leaf);
  return leaf;
}

Var ParameterStore::Find(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  return nullptr;
}

size_t ParameterStore::ParameterCount() const {
  size_t n = 0;
  for (const auto& [_, v] : entries_) n += v->value.size();
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& [_, v] : entries_) {
    if (!v->grad.empty()) v->grad.Fill(0.0);
  }
}

Var ParameterStore::SquaredNorm() const {
  std::vector<Var> parts;
  parts.reserve(entries_.size());
  for (const auto& [_, v] : entries_) parts.push_back(SumSquares(v));
  return AddScalars(parts);
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out,
               Rng& rng)
    : in_(in), out_(out) {
  weight_ = store.Create(name + ".weight", {in, out}, in, rng);
  bias_ = store.Create(name + ".bias", {1, out}, in, rng);
}

Var Linear::Forward(const Var& x) const {
  return AddRowBroadcast(MatMul(x, weight_), bias_);
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, int dim) {
  gain_ = store.CreateFilled(name + ".gain", {1, dim}, 1.0);
  bias_ = store.CreateFilled(name + ".bias", {1, dim}, 0.0);
}

Mlp::Mlp(ParameterStore& store, const std::string& name,
         const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need >= 2 sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), sizes[i],
                         sizes[i + 1], rng);
  }
}

Var Mlp::Forward(const Var& x) const {
  Var h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].Forward(h);
    if (i + 1 < layers_.size()) h = Relu(h);
  }
  return h;
}

AttentionMask BuildAttentionMask(const std::vector<uint8_t>& valid, bool causal) {
  const size_t n = valid.size();
  AttentionMask mask;
  mask.allowed.assign(n * n, 0);
  for (size_t i = 0; i < n; ++i) {
    bool any = false;
    for (size_t j = 0; j < n; ++j) {
      const bool ok = valid[i] && valid[j] && (!causal || j <= i);
      mask.allowed[i * n + j] = ok;
      any = any || ok;
    }
    if (valid[i] && !any) ++mask.fully_masked_rows;
  }
  return mask;
}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store,
                                       const std::string& name, int dim,
                                       int heads, Rng& rng)
    : dim_(dim), heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("attention heads must divide the feature size");
  }
  query_ = Linear(store, name + ".query", dim, dim, rng);
  key_ = Linear(store, name + ".key", dim, dim, rng);
  value_ = Linear(store, name + ".value", dim, dim, rng);
  output_ = Linear(store, name + ".output", dim, dim, rng);
}

Var MultiHeadAttention::Forward(const Var& x, const std::vector<uint8_t>& valid,
                                bool causal,
                                const std::vector<int>& segments) const {
  const int n = x->value.rows();
  if (x->value.cols() != dim_ || valid.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("MultiHeadAttention: shape mismatch");
  }
  std::vector<int> blocks = segments;
  if (blocks.empty()) blocks.push_back(n);
  int total = 0;
  for (int b : blocks) {
    if (b <= 0) throw std::invalid_argument("attention segment must be non-empty");
    total += b;
  }
  if (total != n) throw std::invalid_argument("attention segments do not cover x");

  const Var q = query_.Forward(x);
  const Var k = key_.Forward(x);
  const Var v = value_.Forward(x);
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<uint8_t> has_key(n, 0);
  std::vector<Var> outputs;
  int offset = 0;
  for (int len : blocks) {
    std::vector<uint8_t> block_valid(valid.begin() + offset,
                                     valid.begin() + offset + len);
    const AttentionMask mask = BuildAttentionMask(block_valid, causal);
    for (int i = 0; i < len; ++i) {
      for (int j = 0; j < len; ++j) {
        if (mask.allowed[i * len + j]) has_key[offset + i] = 1;
      }
    }
    Var qb = q, kb = k, vb = v;
    if (len != n) {
      std::vector<int> rows(len);
      for (int i = 0; i < len; ++i) rows[i] = offset + i;
      qb = SelectRows(q, rows);
      kb = SelectRows(k, rows);
      vb = SelectRows(v, rows);
    }
    std::vector<Var> heads;
    for (int h = 0; h < heads_; ++h) {
      const Var qh = heads_ == 1 ? qb : SliceCols(qb, h * head_dim, head_dim);
      const Var kh = heads_ == 1 ? kb : SliceCols(kb, h * head_dim, head_dim);
      const Var vh = heads_ == 1 ? vb : SliceCols(vb, h * head_dim, head_dim);
      const Var weights =
          MaskedSoftmaxRows(Scale(MatMulBT(qh, kh), scale), mask.allowed);
      heads.push_back(MatMul(weights, vh));
    }
    outputs.push_back(heads.size() == 1 ? heads[0] : ConcatCols(heads));
    offset += len;
  }
  const Var merged = outputs.size() == 1 ? outputs[0] : ConcatRows(outputs);
  return MaskRows(output_.Forward(merged), has_key);
}

EncoderLayer::EncoderLayer(ParameterStore& store, const std::string& name,
                           int dim, int heads, double dropout, Rng& rng)
    : dropout_(dropout) {
  norm1_ = LayerNorm(store, name + ".norm1", dim);
  attention_ = MultiHeadAttention(store, name + ".attention", dim, heads, rng);
  norm2_ = LayerNorm(store, name + ".norm2", dim);
  feed_forward_ = Mlp(store, name + ".ffn",
                      {dim, kFeedForwardMultiplier * dim, dim}, rng);
}

Var EncoderLayer::Forward(const Var& x, const std::vector<uint8_t>& valid,
                          bool causal, Rng& dropout_rng, bool training,
                          const std::vector<int>& segments) const {
  Var attended = attention_.Forward(norm1_.Forward(x), valid, causal, segments);
  Var h = Add(x, Dropout(attended, dropout_, dropout_rng, training));
  Var ff = feed_forward_.Forward(norm2_.Forward(h));
  Var y = Add(h, Dropout(ff, dropout_, dropout_rng, training));
  return MaskRows(y, valid);
}

Encoder::Encoder(ParameterStore& store, const std::string& name, int layers,
                 int dim, int heads, double dropout, Rng& rng) {
  for (int i = 0; i < layers; ++i) {
    layers_.emplace_back(store, name + ".layer" + std::to_string(i), dim, heads,
                         dropout, rng);
  }
  final_norm_ = LayerNorm(store, name + ".final_norm", dim);
}

Var Encoder::Forward(const Var& x, const std::vector<uint8_t>& valid, bool causal,
                     Rng& dropout_rng, bool training,
                     const std::vector<int>& segments) const {
  Var h = x;
  for (const auto& layer : layers_) {
    h = layer.Forward(h, valid, causal, dropout_rng, training, segments);
  }
  return MaskRows(final_norm_.Forward(h), valid);
}

}  // namespace ccil::nn
