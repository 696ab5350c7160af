#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stfnet/tensor.hpp"
#include "stfnet/tensor_io.hpp"

namespace stfnet::ad {

using Value = AnyTensor;

enum class Constraint {
  None,
  /// Imaginary parts of the first and last bin (axis 0) are kept at zero, so
  /// every (d, o) column is the half-spectrum of a real impulse response.
  RealDcNyquist,
};

struct Param {
  Value value;
  Constraint constraint = Constraint::None;
};

/// Named learnable tensors, iterated in name order.
class ParamStore {
 public:
  void add(const std::string& name, Value value, Constraint constraint = Constraint::None);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  /// Total number of real scalars (complex entries count twice).
  std::size_t scalar_count() const;
  void apply_constraints();

 private:
  std::map<std::string, Param> params_;
};

void apply_constraint(Value& value, Constraint constraint);

/// Flat views over the real planes of a value: {data} or {re, im}.
std::vector<std::span<double>> planes(Value& value);
std::vector<std::span<const double>> planes(const Value& value);
Value zeros_like(const Value& value);
const Shape& shape_of(const Value& value);

using Gradients = std::map<std::string, Value>;

/// Adds `src` into `dst` plane by plane; shapes must agree.
void accumulate(Value& dst, const Value& src, double scale = 1.0);

struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
};

/// Records a computation for one reverse-mode pass. Nodes are appended in
/// evaluation order, so reverse insertion order is a topological order.
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var self)>;

  Var constant(Value value);
  Var parameter(const std::string& name, Value value);
  /// `backward` may be empty for ops without an adjoint; reaching such a
  /// node from the loss raises GraphError.
  Var record(Value value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Value value, const std::vector<Var>& inputs, Backward backward);

  const Value& value(Var v) const { return nodes_.at(v.id).value; }
  const RealTensor& real(Var v) const;
  const ComplexTensor& complex(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffers, zero-initialized on first access.
  RealTensor& real_grad(Var v);
  ComplexTensor& complex_grad(Var v);
  bool has_grad(Var v) const { return nodes_.at(v.id).has_grad; }

  /// Seeds d(loss)/d(loss) = 1 and runs every adjoint in reverse order.
  void backward(Var loss);
  /// Gradient of every parameter node (zeros if the loss does not reach it).
  Gradients gradients() const;

  /// Hash of all recorded non-smooth branch decisions (ReLU masks, max
  /// selections). Finite differences are only valid if it does not change.
  std::uint64_t kink_signature() const { return kink_hash_; }
  void note_branch(std::uint64_t decision);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Value value;
    Value grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool opaque = false;
    Backward backward;
    std::string param_name;
  };
  Var push(Node node);
  Value& grad_buffer(Var v);

  std::deque<Node> nodes_;
  std::uint64_t kink_hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace stfnet::ad
