#pragma once

#include <cstdint>
#include <vector>

#include "ccil/learner/autodiff.h"
#include "ccil/rng.h"

namespace ccil::nn {

// All ops view their operands as matrices (see Tensor::rows/cols).

Var MatMul(const Var& a, const Var& b);    // [n,k] x [k,m]
Var MatMulBT(const Var& a, const Var& b);  // [n,k] x [m,k]^T
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var AddRowBroadcast(const Var& x, const Var& row);  // x[n,m] + row[1,m]
Var Scale(const Var& a, double s);
Var Relu(const Var& a);

// Row-wise normalization with learned gain and bias ([1, cols] each).
Var LayerNormRows(const Var& x, const Var& gain, const Var& bias,
                  double eps = 1e-5);

// Softmax over the allowed entries of each row; rows with nothing allowed
// produce zeros. `allowed` is row-major with the shape of `scores`.
Var MaskedSoftmaxRows(const Var& scores, std::vector<uint8_t> allowed);

Var SliceCols(const Var& a, int start, int count);
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);
Var SelectRows(const Var& a, const std::vector<int>& rows);
Var Reshape(const Var& a, std::vector<int> shape);

// Rows with keep[r] == 0 are zeroed.
Var MaskRows(const Var& x, const std::vector<uint8_t>& keep);

// Element-wise max over each group of rows; the gradient goes to the
// arg-max member (first one on ties). Throws on an empty group.
Var GroupMaxPool(const Var& x, const std::vector<std::vector<int>>& groups);

// Inverted dropout: kept units are scaled by 1 / (1 - rate). Identity when
// not training or rate == 0.
Var Dropout(const Var& x, double rate, Rng& rng, bool training);

// sum_i w_i |pred_i - target_i| as a [1,1] tensor.
Var WeightedL1(const Var& pred, const Tensor& target, const Tensor& weights);
Var SumSquares(const Var& x);
Var AddScalars(const std::vector<Var>& xs);

}  // namespace ccil::nn
