#include "autocon/tensor.hpp"

#include "autocon/errors.hpp"

#include <numeric>
#include <sstream>

namespace autocon {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s) : shape(std::move(s)), data(numel(shape), 0.0) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (numel(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                             std::to_string(data.size()) + " values");
    }
}

Tensor::Tensor(Shape s, std::initializer_list<double> values)
    : Tensor(std::move(s), std::vector<double>(values)) {}

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.size(), 0.0) {}

void Parameter::zero_grad() { grad.assign(value.size(), 0.0); }

const Shape& Value::shape() const { return tape_->shape(id_); }
std::span<const double> Value::data() const { return tape_->data(id_); }
std::span<const double> Value::grad() const { return tape_->grad(id_); }
bool Value::requires_grad() const { return tape_->requires_grad(id_); }

double Value::item() const {
    if (data().size() != 1) {
        throw ContractError("item() on non-scalar value of shape " + shape_str(shape()));
    }
    return data()[0];
}

Tensor Value::tensor() const {
    auto d = data();
    return Tensor(shape(), std::vector<double>(d.begin(), d.end()));
}

Value Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

Value Tape::constant(Tensor t) {
    Node n;
    n.kind = Kind::constant;
    n.shape = std::move(t.shape);
    n.data = std::move(t.data);
    return push(std::move(n));
}

Value Tape::variable(Tensor t) {
    Node n;
    n.kind = Kind::variable;
    n.shape = std::move(t.shape);
    n.data = std::move(t.data);
    n.requires_grad = true;
    return push(std::move(n));
}

Value Tape::parameter(Parameter& p) {
    Node n;
    n.kind = Kind::parameter;
    n.shape = p.value.shape;
    n.data = p.value.data;
    n.param = &p;
    n.requires_grad = true;
    if (p.grad.size() != p.value.size()) p.zero_grad();
    return push(std::move(n));
}

Value Tape::record(Shape shape, std::vector<double> data, std::vector<Value> parents, BackwardFn backward) {
    if (numel(shape) != data.size()) {
        throw DimensionError("op output shape " + shape_str(shape) + " does not match data length");
    }
    Node n;
    n.shape = std::move(shape);
    n.data = std::move(data);
    n.parents.reserve(parents.size());
    for (const auto& p : parents) {
        if (p.tape_ != this) throw ContractError("operand recorded on a different tape");
        n.parents.push_back(p.id_);
        n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

std::span<double> Tape::grad_mut(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.size() != n.data.size()) n.grad.assign(n.data.size(), 0.0);
    return n.grad;
}

void Tape::backward(const Value& loss) {
    if (loss.tape_ != this) throw ContractError("loss recorded on a different tape");
    if (nodes_[loss.id_].data.size() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " + shape_str(nodes_[loss.id_].shape));
    }
    for (auto& n : nodes_) {
        if (n.kind != Kind::variable) n.grad.clear();
    }
    grad_mut(loss.id_)[0] += 1.0;

    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.backward && !n.grad.empty()) n.backward(*this, i);
    }
    for (auto& n : nodes_) {
        if (n.kind != Kind::parameter || n.grad.empty()) continue;
        auto& pg = n.param->grad;
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
}

}  // namespace autocon
