#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccil/learner/ops.h"
#include "ccil/rng.h"

namespace ccil::nn {

// Named, ordered collection of trainable leaves.
class ParameterStore {
 public:
  // Fan-in uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Var Create(const std::string& name, std::vector<int> shape, int fan_in,
             Rng& rng);
  Var CreateFilled(const std::string& name, std::vector<int> shape, double fill);

  const std::vector<std::pair<std::string, Var>>& entries() const {
    return entries_;
  }
  Var Find(const std::string& name) const;
  size_t ParameterCount() const;
  void ZeroGrad();
  Var SquaredNorm() const;  // sum of squares of every parameter, as a graph node

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng);
  Var Forward(const Var& x) const;
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Var weight_;
  Var bias_;
  int in_ = 0;
  int out_ = 0;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, int dim);
  Var Forward(const Var& x) const { return LayerNormRows(x, gain_, bias_); }

 private:
  Var gain_;
  Var bias_;
};

// Feed-forward stack with ReLU between layers (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, const std::vector<int>& sizes,
      Rng& rng);
  Var Forward(const Var& x) const;

 private:
  std::vector<Linear> layers_;
};

struct AttentionMask {
  std::vector<uint8_t> allowed;  // n x n, row = query
  int fully_masked_rows = 0;     // valid queries with no key to attend to
};

// allowed(i, j) = valid[i] && valid[j] && (!causal || j <= i).
AttentionMask BuildAttentionMask(const std::vector<uint8_t>& valid, bool causal);

// Multi-head scaled dot-product self-attention over the rows of x. Rows
// that are padded or have no admissible key come out as zeros. When
// `segments` is given (row counts summing to the row total), attention is
// restricted to each contiguous block of rows.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& name, int dim,
                     int heads, Rng& rng);
  Var Forward(const Var& x, const std::vector<uint8_t>& valid, bool causal,
              const std::vector<int>& segments = {}) const;
  int heads() const { return heads_; }

 private:
  Linear query_;
  Linear key_;
  Linear value_;
  Linear output_;
  int dim_ = 0;
  int heads_ = 1;
};

// Pre-norm encoder block: x + MHA(LN(x)), then h + FFN(LN(h)).
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(ParameterStore& store, const std::string& name, int dim, int heads,
               double dropout, Rng& rng);
  Var Forward(const Var& x, const std::vector<uint8_t>& valid, bool causal,
              Rng& dropout_rng, bool training,
              const std::vector<int>& segments = {}) const;

 private:
  LayerNorm norm1_;
  MultiHeadAttention attention_;
  LayerNorm norm2_;
  Mlp feed_forward_;
  double dropout_ = 0.0;
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(ParameterStore& store, const std::string& name, int layers, int dim,
          int heads, double dropout, Rng& rng);
  Var Forward(const Var& x, const std::vector<uint8_t>& valid, bool causal,
              Rng& dropout_rng, bool training,
              const std::vector<int>& segments = {}) const;

 private:
  std::vector<EncoderLayer> layers_;
  LayerNorm final_norm_;
};

constexpr int kFeedForwardMultiplier = 2;

}  // namespace ccil::nn
