#include "stfnet/autograd.hpp"

#include "stfnet/error.hpp"

namespace stfnet::ad {

void ParamStore::add(const std::string& name, Value value, Constraint constraint) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  apply_constraint(value, constraint);
  params_.emplace(name, Param{std::move(value), constraint});
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [name, p] : params_)
    for (auto plane : planes(p.value)) total += plane.size();
  return total;
}

void ParamStore::apply_constraints() {
  for (auto& [name, p] : params_) apply_constraint(p.value, p.constraint);
}

void apply_constraint(Value& value, Constraint constraint) {
  if (constraint == Constraint::None) return;
  auto* c = std::get_if<ComplexTensor>(&value);
  if (!c) throw ConfigError("RealDcNyquist constraint needs a complex parameter");
  const std::size_t bins = c->dim(0);
  const std::size_t stride = c->size() / bins;
  auto im = c->im();
  for (std::size_t i = 0; i < stride; ++i) {
    im[i] = 0.0;
    im[(bins - 1) * stride + i] = 0.0;
  }
}

std::vector<std::span<double>> planes(Value& value) {
  if (auto* r = std::get_if<RealTensor>(&value)) return {r->data()};
  auto& c = std::get<ComplexTensor>(value);
  return {c.re(), c.im()};
}

std::vector<std::span<const double>> planes(const Value& value) {
  if (const auto* r = std::get_if<RealTensor>(&value)) return {r->data()};
  const auto& c = std::get<ComplexTensor>(value);
  return {c.re(), c.im()};
}

Value zeros_like(const Value& value) {
  if (const auto* r = std::get_if<RealTensor>(&value)) return RealTensor(r->shape());
  return ComplexTensor(std::get<ComplexTensor>(value).shape());
}

const Shape& shape_of(const Value& value) {
  return std::visit([](const auto& t) -> const Shape& { return t.shape(); }, value);
}

void accumulate(Value& dst, const Value& src, double scale) {
  if (dst.index() != src.index() || shape_of(dst) != shape_of(src))
    throw ShapeError("accumulate: mismatched values");
  auto d = planes(dst);
  auto s = planes(src);
  for (std::size_t p = 0; p < d.size(); ++p)
    for (std::size_t i = 0; i < d[p].size(); ++i) d[p][i] += scale * s[p][i];
}

// ---- tape -----------------------------------------------------------------

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Value value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(const std::string& name, Value value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.param_name = name;
  return push(std::move(n));
}

Var Tape::record(Value value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Value value, const std::vector<Var>& inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (auto in : inputs) n.requires_grad = n.requires_grad || nodes_.at(in.id).requires_grad;
  if (n.requires_grad) {
    n.opaque = !backward;
    n.backward = std::move(backward);
  }
  return push(std::move(n));
}

const RealTensor& Tape::real(Var v) const {
  const auto* r = std::get_if<RealTensor>(&nodes_.at(v.id).value);
  if (!r) throw GraphError("node " + std::to_string(v.id) + " is not real-valued");
  return *r;
}

const ComplexTensor& Tape::complex(Var v) const {
  const auto* c = std::get_if<ComplexTensor>(&nodes_.at(v.id).value);
  if (!c) throw GraphError("node " + std::to_string(v.id) + " is not complex-valued");
  return *c;
}

Value& Tape::grad_buffer(Var v) {
  auto& node = nodes_.at(v.id);
  if (!node.has_grad) {
    node.grad = zeros_like(node.value);
    node.has_grad = true;
  }
  return node.grad;
}

RealTensor& Tape::real_grad(Var v) {
  auto* r = std::get_if<RealTensor>(&grad_buffer(v));
  if (!r) throw GraphError("node " + std::to_string(v.id) + " is not real-valued");
  return *r;
}

ComplexTensor& Tape::complex_grad(Var v) {
  auto* c = std::get_if<ComplexTensor>(&grad_buffer(v));
  if (!c) throw GraphError("node " + std::to_string(v.id) + " is not complex-valued");
  return *c;
}

void Tape::backward(Var loss) {
  const auto* scalar = std::get_if<RealTensor>(&nodes_.at(loss.id).value);
  if (!scalar || scalar->size() != 1) throw GraphError("backward needs a real scalar loss");
  real_grad(loss)[0] += 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (!node.has_grad || !node.requires_grad) continue;
    if (node.backward) {
      node.backward(*this, Var{id});
    } else if (node.opaque) {
      throw GraphError("node " + std::to_string(id) + " has no adjoint rule");
    }
  }
}

Gradients Tape::gradients() const {
  Gradients out;
  for (const auto& node : nodes_) {
    if (node.param_name.empty()) continue;
    Value g = node.has_grad ? node.grad : zeros_like(node.value);
    auto it = out.find(node.param_name);
    if (it == out.end()) out.emplace(node.param_name, std::move(g));
    else accumulate(it->second, g);
  }
  return out;
}

void Tape::note_branch(std::uint64_t decision) {
  kink_hash_ ^= decision + 0x9e3779b97f4a7c15ULL + (kink_hash_ << 6) + (kink_hash_ >> 2);
}

}  // namespace stfnet::ad
