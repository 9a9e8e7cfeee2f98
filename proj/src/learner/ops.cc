#include "ccil/learner/ops.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ccil::nn {
namespace {

void Require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

void Accumulate(const Var& v, const Tensor& g) {
  if (!v->requires_grad) return;
  auto dst = v->Grad().AsMatrix();
  dst += g.AsMatrix();
}

}  // namespace

Var MatMul(const Var& a, const Var& b) {
  Require(a->value.cols() == b->value.rows(), "MatMul");
  Tensor out = Tensor::Matrix(a->value.rows(), b->value.cols());
  out.AsMatrix().noalias() = a->value.AsMatrix() * b->value.AsMatrix();
  return MakeNode(std::move(out), {a, b}, [a, b](Node& n) {
    const auto g = n.grad.AsMatrix();
    if (a->requires_grad) {
      a->Grad().AsMatrix().noalias() += g * b->value.AsMatrix().transpose();
    }
    if (b->requires_grad) {
      b->Grad().AsMatrix().noalias() += a->value.AsMatrix().transpose() * g;
    }
  });
}

Var MatMulBT(const Var& a, const Var& b) {
  Require(a->value.cols() == b->value.cols(), "MatMulBT");
  Tensor out = Tensor::Matrix(a->value.rows(), b->value.rows());
  out.AsMatrix().noalias() = a->value.AsMatrix() * b->value.AsMatrix().transpose();
  return MakeNode(std::move(out), {a, b}, [a, b](Node& n) {
    const auto g = n.grad.AsMatrix();
    if (a->requires_grad) a->Grad().AsMatrix().noalias() += g * b->value.AsMatrix();
    if (b->requires_grad) {
      b->Grad().AsMatrix().noalias() += g.transpose() * a->value.AsMatrix();
    }
  });
}

Var Add(const Var& a, const Var& b) {
  Require(a->value.size() == b->value.size(), "Add");
  Tensor out = a->value;
  out.AsMatrix() += b->value.Reshaped(a->value.shape()).AsMatrix();
  return MakeNode(std::move(out), {a, b}, [a, b](Node& n) {
    Accumulate(a, n.grad);
    if (b->requires_grad) Accumulate(b, n.grad.Reshaped(b->value.shape()));
  });
}

Var Sub(const Var& a, const Var& b) { return Add(a, Scale(b, -1.0)); }

Var AddRowBroadcast(const Var& x, const Var& row) {
  Require(row->value.size() == static_cast<size_t>(x->value.cols()),
          "AddRowBroadcast");
  Tensor out = x->value;
  const Eigen::Map<const Eigen::RowVectorXd> r(row->value.data(), x->value.cols());
  out.AsMatrix().rowwise() += r;
  return MakeNode(std::move(out), {x, row}, [x, row](Node& n) {
    Accumulate(x, n.grad);
    if (row->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd> rg(row->Grad().data(), x->value.cols());
      rg += n.grad.AsMatrix().colwise().sum();
    }
  });
}

Var Scale(const Var& a, double s) {
  Tensor out = a->value;
  out.AsMatrix() *= s;
  return MakeNode(std::move(out), {a}, [a, s](Node& n) {
    if (a->requires_grad) a->Grad().AsMatrix() += s * n.grad.AsMatrix();
  });
}

Var Relu(const Var& a) {
  Tensor out = a->value;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return MakeNode(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    Tensor& g = a->Grad();
    for (size_t i = 0; i < g.size(); ++i) {
      if (a->value[i] > 0.0) g[i] += n.grad[i];
    }
  });
}

Var LayerNormRows(const Var& x, const Var& gain, const Var& bias, double eps) {
  const int rows = x->value.rows();
  const int cols = x->value.cols();
  Require(gain->value.size() == static_cast<size_t>(cols) &&
              bias->value.size() == static_cast<size_t>(cols),
          "LayerNormRows");
  Tensor normalized = Tensor::Matrix(rows, cols);
  std::vector<double> inv_std(rows);
  Tensor out = Tensor::Matrix(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += x->value.at(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double d = x->value.at(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c) {
      const double xh = (x->value.at(r, c) - mean) * inv_std[r];
      normalized.at(r, c) = xh;
      out.at(r, c) = gain->value[c] * xh + bias->value[c];
    }
  }
  return MakeNode(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normalized = std::move(normalized),
       inv_std = std::move(inv_std), rows, cols](Node& n) {
        for (int r = 0; r < rows; ++r) {
          double mean_g = 0.0;
          double mean_gx = 0.0;
          for (int c = 0; c < cols; ++c) {
            const double dy = n.grad.at(r, c);
            if (gain->requires_grad) gain->Grad()[c] += dy * normalized.at(r, c);
            if (bias->requires_grad) bias->Grad()[c] += dy;
            const double g = dy * gain->value[c];
            mean_g += g;
            mean_gx += g * normalized.at(r, c);
          }
          if (!x->requires_grad) continue;
          mean_g /= cols;
          mean_gx /= cols;
          Tensor& xg = x->Grad();
          for (int c = 0; c < cols; ++c) {
            const double g = n.grad.at(r, c) * gain->value[c];
            xg.at(r, c) +=
                inv_std[r] * (g - mean_g - normalized.at(r, c) * mean_gx);
          }
        }
      });
}

Var MaskedSoftmaxRows(const Var& scores, std::vector<uint8_t> allowed) {
  const int rows = scores->value.rows();
  const int cols = scores->value.cols();
  Require(allowed.size() == scores->value.size(), "MaskedSoftmaxRows");
  Tensor out = Tensor::Matrix(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) {
      if (allowed[r * cols + c]) mx = std::max(mx, scores->value.at(r, c));
    }
    if (std::isinf(mx)) continue;  // nothing allowed: zeros
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      if (!allowed[r * cols + c]) continue;
      const double e = std::exp(scores->value.at(r, c) - mx);
      out.at(r, c) = e;
      z += e;
    }
    for (int c = 0; c < cols; ++c) out.at(r, c) /= z;
  }
  return MakeNode(out, {scores}, [scores, out, rows, cols](Node& n) {
    if (!scores->requires_grad) return;
    Tensor& sg = scores->Grad();
    for (int r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += out.at(r, c) * n.grad.at(r, c);
      for (int c = 0; c < cols; ++c) {
        sg.at(r, c) += out.at(r, c) * (n.grad.at(r, c) - dot);
      }
    }
  });
}

Var SliceCols(const Var& a, int start, int count) {
  Require(start >= 0 && start + count <= a->value.cols(), "SliceCols");
  const int rows = a->value.rows();
  Tensor out = Tensor::Matrix(rows, count);
  out.AsMatrix() = a->value.AsMatrix().middleCols(start, count);
  return MakeNode(std::move(out), {a}, [a, start, count](Node& n) {
    if (a->requires_grad) {
      a->Grad().AsMatrix().middleCols(start, count) += n.grad.AsMatrix();
    }
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  Require(!parts.empty(), "ConcatCols: empty");
  const int rows = parts[0]->value.rows();
  int cols = 0;
  for (const auto& p : parts) {
    Require(p->value.rows() == rows, "ConcatCols");
    cols += p->value.cols();
  }
  Tensor out = Tensor::Matrix(rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    out.AsMatrix().middleCols(offset, p->value.cols()) = p->value.AsMatrix();
    offset += p->value.cols();
  }
  return MakeNode(std::move(out), parts, [parts](Node& n) {
    int off = 0;
    for (const auto& p : parts) {
      const int c = p->value.cols();
      if (p->requires_grad) {
        p->Grad().AsMatrix() += n.grad.AsMatrix().middleCols(off, c);
      }
      off += c;
    }
  });
}

Var ConcatRows(const std::vector<Var>& parts) {
  Require(!parts.empty(), "ConcatRows: empty");
  const int cols = parts[0]->value.cols();
  int rows = 0;
  for (const auto& p : parts) {
    Require(p->value.cols() == cols, "ConcatRows");
    rows += p->value.rows();
  }
  Tensor out = Tensor::Matrix(rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    out.AsMatrix().middleRows(offset, p->value.rows()) = p->value.AsMatrix();
    offset += p->value.rows();
  }
  return MakeNode(std::move(out), parts, [parts](Node& n) {
    int off = 0;
    for (const auto& p : parts) {
      const int r = p->value.rows();
      if (p->requires_grad) {
        p->Grad().AsMatrix() += n.grad.AsMatrix().middleRows(off, r);
      }
      off += r;
    }
  });
}

Var SelectRows(const Var& a, const std::vector<int>& rows) {
  const int cols = a->value.cols();
  Tensor out = Tensor::Matrix(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i] >= 0 && rows[i] < a->value.rows(), "SelectRows");
    out.AsMatrix().row(i) = a->value.AsMatrix().row(rows[i]);
  }
  return MakeNode(std::move(out), {a}, [a, rows](Node& n) {
    if (!a->requires_grad) return;
    auto g = a->Grad().AsMatrix();
    for (size_t i = 0; i < rows.size(); ++i) {
      g.row(rows[i]) += n.grad.AsMatrix().row(i);
    }
  });
}

Var Reshape(const Var& a, std::vector<int> shape) {
  Tensor out = a->value.Reshaped(std::move(shape));
  return MakeNode(std::move(out), {a}, [a](Node& n) {
    if (a->requires_grad) Accumulate(a, n.grad.Reshaped(a->value.shape()));
  });
}

Var MaskRows(const Var& x, const std::vector<uint8_t>& keep) {
  Require(keep.size() == static_cast<size_t>(x->value.rows()), "MaskRows");
  Tensor out = x->value;
  for (int r = 0; r < out.rows(); ++r) {
    if (!keep[r]) out.AsMatrix().row(r).setZero();
  }
  return MakeNode(std::move(out), {x}, [x, keep](Node& n) {
    if (!x->requires_grad) return;
    auto g = x->Grad().AsMatrix();
    for (int r = 0; r < g.rows(); ++r) {
      if (keep[r]) g.row(r) += n.grad.AsMatrix().row(r);
    }
  });
}

Var GroupMaxPool(const Var& x, const std::vector<std::vector<int>>& groups) {
  const int cols = x->value.cols();
  Tensor out = Tensor::Matrix(static_cast<int>(groups.size()), cols);
  std::vector<int> argmax(groups.size() * cols);
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    if (groups[gi].empty()) {
      throw std::invalid_argument("GroupMaxPool: empty group");
    }
    for (int c = 0; c < cols; ++c) {
      int best = groups[gi][0];
      for (int r : groups[gi]) {
        Require(r >= 0 && r < x->value.rows(), "GroupMaxPool: row index");
        if (x->value.at(r, c) > x->value.at(best, c)) best = r;
      }
      argmax[gi * cols + c] = best;
      out.at(static_cast<int>(gi), c) = x->value.at(best, c);
    }
  }
  return MakeNode(std::move(out), {x}, [x, argmax, cols](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->Grad();
    for (size_t i = 0; i < argmax.size(); ++i) {
      const int gi = static_cast<int>(i) / cols;
      const int c = static_cast<int>(i) % cols;
      g.at(argmax[i], c) += n.grad.at(gi, c);
    }
  });
}

Var Dropout(const Var& x, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("Dropout: rate must be < 1");
  Tensor mask(x->value.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask.values()) m = rng.Uniform() >= rate ? keep_scale : 0.0;
  Tensor out = x->value;
  out.AsMatrix().array() *= mask.AsMatrix().array();
  return MakeNode(std::move(out), {x}, [x, mask = std::move(mask)](Node& n) {
    if (!x->requires_grad) return;
    x->Grad().AsMatrix().array() += n.grad.AsMatrix().array() * mask.AsMatrix().array();
  });
}

Var WeightedL1(const Var& pred, const Tensor& target, const Tensor& weights) {
  Require(pred->value.size() == target.size() && target.size() == weights.size(),
          "WeightedL1");
  double loss = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    loss += weights[i] * std::abs(pred->value[i] - target[i]);
  }
  return MakeNode(Tensor::Scalar(loss), {pred}, [pred, target, weights](Node& n) {
    if (!pred->requires_grad) return;
    const double g = n.grad[0];
    Tensor& pg = pred->Grad();
    for (size_t i = 0; i < target.size(); ++i) {
      const double d = pred->value[i] - target[i];
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      pg[i] += g * weights[i] * sign;
    }
  });
}

Var SumSquares(const Var& x) {
  return MakeNode(Tensor::Scalar(x->value.SquaredNorm()), {x}, [x](Node& n) {
    if (x->requires_grad) x->Grad().AsMatrix() += 2.0 * n.grad[0] * x->value.AsMatrix();
  });
}

Var AddScalars(const std::vector<Var>& xs) {
  double total = 0.0;
  for (const auto& x : xs) {
    Require(x->value.size() == 1, "AddScalars");
    total += x->value[0];
  }
  return MakeNode(Tensor::Scalar(total), xs, [xs](Node& n) {
    for (const auto& x : xs) {
      if (x->requires_grad) x->Grad()[0] += n.grad[0];
    }
  });
}

}  // namespace ccil::nn
