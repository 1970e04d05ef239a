#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cnls::expr {

enum class NodeKind : std::uint8_t { Constant, Variable, Unary, Binary };
enum class UnaryOp : std::uint8_t { Neg, Sin, Cos, Exp, Sqrt, Tanh };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression node. Unary ops use `lhs` only. Pow requires a
/// constant exponent so that symbolic differentiation is closed in the grammar.
struct Node {
    NodeKind kind = NodeKind::Constant;
    UnaryOp uop = UnaryOp::Neg;
    BinaryOp bop = BinaryOp::Add;
    double value = 0.0;  // Constant payload
    int var = -1;        // Variable payload, 0-based axis
    NodePtr lhs, rhs;
    int src_offset = -1; // byte offset in the source text, -1 if synthesized
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& msg, int src_offset)
        : std::runtime_error(src_offset >= 0 ? msg + " (node at offset " + std::to_string(src_offset) + ")"
                                             : msg),
          src_offset_(src_offset) {}
    int src_offset() const { return src_offset_; }

private:
    int src_offset_;
};

/// Parsed scalar expression over variables x1..xN. Value semantics, immutable.
class Expression {
public:
    Expression() = default;  // constant 0 over dim 0

    /// Parse `text` with variables restricted to x1..x`dim`.
    /// Throws ParseError with a byte offset on malformed input.
    static Expression parse(std::string_view text, int dim);
    static Expression constant(double c, int dim = 0);

    double eval(std::span<const double> point) const;
    double operator()(std::span<const double> point) const { return eval(point); }

    /// Symbolic partial derivative with respect to axis (0-based).
    Expression derivative(int axis) const;
    /// Evaluate all partials at a point (differentiates on the fly; cache
    /// derivative() trees for hot loops).
    std::vector<double> gradient(std::span<const double> point) const;

    int dim() const { return dim_; }
    bool is_constant() const;
    /// Re-parseable text form; round-trips through parse().
    std::string str() const;

private:
    Expression(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

    NodePtr root_;
    int dim_ = 0;
};

}  // namespace cnls::expr
