#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ccil/learner/tensor.h"

namespace ccil::nn {

struct Node;
using Var = std::shared_ptr<Node>;

// One value in a dynamically recorded computation graph. `backward` reads
// this node's grad and accumulates into the inputs' grads.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward;

  Tensor& Grad();
  bool HasGrad() const { return !grad.empty() || value.empty(); }
};

Var Constant(Tensor value);
Var Leaf(Tensor value, bool requires_grad = true);

// Creates an op node; requires_grad is inherited from the inputs.
Var MakeNode(Tensor value, std::vector<Var> inputs,
             std::function<void(Node&)> backward);

// Reverse sweep from a scalar root (seed gradient 1).
void Backward(const Var& root);

}  // namespace ccil::nn
