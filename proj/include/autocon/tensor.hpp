#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace autocon {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t numel(const Shape& shape);
[[nodiscard]] std::string shape_str(const Shape& shape);

/**
 * Plain row-major array of doubles. Holds data that does not take part
 * in differentiation: inputs, parameter storage, results copied out of a tape.
 */
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s);
    Tensor(Shape s, std::vector<double> values);
    Tensor(Shape s, std::initializer_list<double> values);

    [[nodiscard]] static Tensor scalar(double v) { return Tensor({1}, {v}); }

    [[nodiscard]] std::size_t size() const { return data.size(); }
    [[nodiscard]] std::size_t rank() const { return shape.size(); }
    [[nodiscard]] double& operator[](std::size_t i) { return data[i]; }
    [[nodiscard]] double operator[](std::size_t i) const { return data[i]; }
};

/// A learnable buffer. `grad` accumulates across backward passes until zeroed.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<double> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v);

    void zero_grad();
};

class Tape;

/**
 * Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
 * tape it points to is alive.
 */
class Value {
public:
    Value() = default;

    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::span<const double> data() const;
    /// Empty when the node never received a gradient.
    [[nodiscard]] std::span<const double> grad() const;
    [[nodiscard]] double item() const;
    [[nodiscard]] Tensor tensor() const;
    [[nodiscard]] bool requires_grad() const;

    [[nodiscard]] Tape& tape() const { return *tape_; }
    [[nodiscard]] std::size_t id() const { return id_; }
    [[nodiscard]] bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/**
 * Records operations in execution order; every node's parents precede it.
 *
 * backward() resets intermediate gradients, seeds d(loss)=1 and walks the
 * tape in reverse. Gradients of `variable` leaves and of bound Parameters
 * accumulate across calls; call Parameter::zero_grad() between steps.
 *
 * A tape is single-threaded. Distinct tapes share nothing.
 */
class Tape {
public:
    /// Local gradient rule: reads the node's output grad, adds into parents.
    using BackwardFn = std::function<void(Tape&, std::size_t node)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value constant(Tensor t);
    Value variable(Tensor t);
    Value parameter(Parameter& p);

    /// Appends an op node. The backward rule is dropped when no parent needs a gradient.
    Value record(Shape shape, std::vector<double> data, std::vector<Value> parents, BackwardFn backward);

    void backward(const Value& loss);

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
    [[nodiscard]] std::span<const double> data(std::size_t id) const { return nodes_[id].data; }
    [[nodiscard]] std::span<const double> grad(std::size_t id) const { return nodes_[id].grad; }
    [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    [[nodiscard]] const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }

    /// Gradient buffer of a node, zero-allocated on first use.
    std::span<double> grad_mut(std::size_t id);

private:
    enum class Kind { constant, variable, parameter, op };

    struct Node {
        Kind kind = Kind::op;
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    Value push(Node node);

    std::vector<Node> nodes_;
};

}  // namespace autocon
