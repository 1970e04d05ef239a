#include "cnls/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace cnls::expr {

namespace {

NodePtr make_const(double v, int off = -1) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    n->src_offset = off;
    return n;
}

NodePtr make_var(int axis, int off = -1) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->var = axis;
    n->src_offset = off;
    return n;
}

NodePtr make_unary(UnaryOp op, NodePtr a, int off = -1) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Unary;
    n->uop = op;
    n->lhs = std::move(a);
    n->src_offset = off;
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == NodeKind::Constant && n->value == v;
}

NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b, int off = -1) {
    // light folding so derivative trees stay small; not user-visible simplification
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant) {
        switch (op) {
            case BinaryOp::Add: return make_const(a->value + b->value, off);
            case BinaryOp::Sub: return make_const(a->value - b->value, off);
            case BinaryOp::Mul: return make_const(a->value * b->value, off);
            default: break;  // keep Div/Pow for the evaluator's domain checks
        }
    }
    switch (op) {
        case BinaryOp::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case BinaryOp::Sub:
            if (is_const(b, 0.0)) return a;
            break;
        case BinaryOp::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0, off);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case BinaryOp::Div:
            if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0, off);
            if (is_const(b, 1.0)) return a;
            break;
        case BinaryOp::Pow:
            if (is_const(b, 1.0)) return a;
            if (is_const(b, 0.0)) return make_const(1.0, off);
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Binary;
    n->bop = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    n->src_offset = off;
    return n;
}

bool tree_has_variable(const Node& n) {
    switch (n.kind) {
        case NodeKind::Constant: return false;
        case NodeKind::Variable: return true;
        case NodeKind::Unary: return tree_has_variable(*n.lhs);
        case NodeKind::Binary: return tree_has_variable(*n.lhs) || tree_has_variable(*n.rhs);
    }
    return false;
}

double eval_node(const Node& n, std::span<const double> x);

double eval_const_subtree(const Node& n) {
    return eval_node(n, {});
}

double eval_node(const Node& n, std::span<const double> x) {
    switch (n.kind) {
        case NodeKind::Constant:
            return n.value;
        case NodeKind::Variable:
            return x[static_cast<std::size_t>(n.var)];
        case NodeKind::Unary: {
            double a = eval_node(*n.lhs, x);
            switch (n.uop) {
                case UnaryOp::Neg: return -a;
                case UnaryOp::Sin: return std::sin(a);
                case UnaryOp::Cos: return std::cos(a);
                case UnaryOp::Exp: return std::exp(a);
                case UnaryOp::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of negative value", n.src_offset);
                    return std::sqrt(a);
                case UnaryOp::Tanh: return std::tanh(a);
            }
            break;
        }
        case NodeKind::Binary: {
            double a = eval_node(*n.lhs, x);
            double b = eval_node(*n.rhs, x);
            switch (n.bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b == 0.0) throw EvalError("division by zero", n.src_offset);
                    return a / b;
                case BinaryOp::Pow: {
                    if (a == 0.0 && b < 0.0) throw EvalError("zero raised to negative power", n.src_offset);
                    if (a < 0.0 && b != std::floor(b))
                        throw EvalError("negative base with non-integer exponent", n.src_offset);
                    return std::pow(a, b);
                }
            }
            break;
        }
    }
    throw EvalError("corrupt expression node", n.src_offset);
}

// ---- parser -----------------------------------------------------------
//
// expr    := term (('+'|'-') term)*
// term    := factor (('*'|'/') factor)*
// factor  := '-' factor | power
// power   := primary ('^' factor)?        exponent must fold to a constant
// primary := number | name '(' expr ')' | name | '(' expr ')'

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    NodePtr run() {
        if (text_.find_first_not_of(" \t\r\n") == std::string_view::npos)
            throw ParseError("empty expression", 0);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            std::size_t off = pos_;
            if (accept('+'))
                lhs = make_binary(BinaryOp::Add, lhs, parse_term(), static_cast<int>(off));
            else if (accept('-'))
                lhs = make_binary(BinaryOp::Sub, lhs, parse_term(), static_cast<int>(off));
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            skip_ws();
            std::size_t off = pos_;
            if (accept('*'))
                lhs = make_binary(BinaryOp::Mul, lhs, parse_factor(), static_cast<int>(off));
            else if (accept('/'))
                lhs = make_binary(BinaryOp::Div, lhs, parse_factor(), static_cast<int>(off));
            else
                return lhs;
        }
    }

    NodePtr parse_factor() {
        skip_ws();
        std::size_t off = pos_;
        if (accept('-')) return make_unary(UnaryOp::Neg, parse_factor(), static_cast<int>(off));
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        skip_ws();
        std::size_t off = pos_;
        if (accept('^')) {
            NodePtr exp = parse_factor();  // right-associative via recursion
            if (tree_has_variable(*exp))
                throw ParseError("exponent must be a constant expression", off);
            return make_binary(BinaryOp::Pow, base, make_const(eval_const_subtree(*exp), exp->src_offset),
                               static_cast<int>(off));
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("expected operand", pos_);
        std::size_t off = pos_;
        char c = text_[pos_];

        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        throw ParseError(std::string("unexpected character '") + c + "'", off);
    }

    NodePtr parse_number() {
        std::size_t off = pos_;
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{}) throw ParseError("malformed number", off);
        pos_ += static_cast<std::size_t>(ptr - begin);
        return make_const(v, static_cast<int>(off));
    }

    NodePtr parse_name() {
        std::size_t off = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(off, pos_ - off);

        if (name.size() >= 2 && name[0] == 'x') {
            int idx = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec == std::errc{} && ptr == name.data() + name.size()) {
                if (idx < 1 || idx > dim_)
                    throw ParseError("variable " + std::string(name) + " exceeds dimension " +
                                         std::to_string(dim_),
                                     off);
                return make_var(idx - 1, static_cast<int>(off));
            }
        }

        UnaryOp op;
        if (name == "sin") op = UnaryOp::Sin;
        else if (name == "cos") op = UnaryOp::Cos;
        else if (name == "exp") op = UnaryOp::Exp;
        else if (name == "sqrt") op = UnaryOp::Sqrt;
        else if (name == "tanh") op = UnaryOp::Tanh;
        else if (name == "neg") op = UnaryOp::Neg;
        else throw ParseError("unknown identifier '" + std::string(name) + "'", off);

        if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
        NodePtr arg = parse_expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return make_unary(op, arg, static_cast<int>(off));
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
};

// ---- differentiation --------------------------------------------------

NodePtr diff_node(const Node& n, int axis) {
    switch (n.kind) {
        case NodeKind::Constant:
            return make_const(0.0);
        case NodeKind::Variable:
            return make_const(n.var == axis ? 1.0 : 0.0);
        case NodeKind::Unary: {
            NodePtr da = diff_node(*n.lhs, axis);
            switch (n.uop) {
                case UnaryOp::Neg:
                    return make_unary(UnaryOp::Neg, da);
                case UnaryOp::Sin:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Cos, n.lhs), da);
                case UnaryOp::Cos:
                    return make_unary(UnaryOp::Neg,
                                      make_binary(BinaryOp::Mul, make_unary(UnaryOp::Sin, n.lhs), da));
                case UnaryOp::Exp:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Exp, n.lhs), da);
                case UnaryOp::Sqrt:
                    // da / (2 sqrt(a))
                    return make_binary(BinaryOp::Div, da,
                                       make_binary(BinaryOp::Mul, make_const(2.0),
                                                   make_unary(UnaryOp::Sqrt, n.lhs, n.src_offset)));
                case UnaryOp::Tanh:
                    // (1 - tanh(a)^2) da
                    return make_binary(
                        BinaryOp::Mul,
                        make_binary(BinaryOp::Sub, make_const(1.0),
                                    make_binary(BinaryOp::Pow, make_unary(UnaryOp::Tanh, n.lhs),
                                                make_const(2.0))),
                        da);
            }
            break;
        }
        case NodeKind::Binary: {
            switch (n.bop) {
                case BinaryOp::Add:
                    return make_binary(BinaryOp::Add, diff_node(*n.lhs, axis), diff_node(*n.rhs, axis));
                case BinaryOp::Sub:
                    return make_binary(BinaryOp::Sub, diff_node(*n.lhs, axis), diff_node(*n.rhs, axis));
                case BinaryOp::Mul:
                    return make_binary(
                        BinaryOp::Add, make_binary(BinaryOp::Mul, diff_node(*n.lhs, axis), n.rhs),
                        make_binary(BinaryOp::Mul, n.lhs, diff_node(*n.rhs, axis)));
                case BinaryOp::Div:
                    // (da b - a db) / b^2
                    return make_binary(
                        BinaryOp::Div,
                        make_binary(BinaryOp::Sub,
                                    make_binary(BinaryOp::Mul, diff_node(*n.lhs, axis), n.rhs),
                                    make_binary(BinaryOp::Mul, n.lhs, diff_node(*n.rhs, axis))),
                        make_binary(BinaryOp::Pow, n.rhs, make_const(2.0), n.src_offset));
                case BinaryOp::Pow: {
                    // exponent is constant by construction: c a^(c-1) da
                    double c = n.rhs->value;
                    return make_binary(
                        BinaryOp::Mul,
                        make_binary(BinaryOp::Mul, make_const(c),
                                    make_binary(BinaryOp::Pow, n.lhs, make_const(c - 1.0), n.src_offset)),
                        diff_node(*n.lhs, axis));
                }
            }
            break;
        }
    }
    throw EvalError("corrupt expression node", n.src_offset);
}

// ---- printing ---------------------------------------------------------

int precedence(const Node& n) {
    if (n.kind == NodeKind::Constant || n.kind == NodeKind::Variable) return 4;
    if (n.kind == NodeKind::Unary) return n.uop == UnaryOp::Neg ? 1 : 4;
    switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 3;
    }
    return 4;
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int parent_prec, bool strict, std::string& out) {
    bool need = precedence(child) < parent_prec || (strict && precedence(child) == parent_prec);
    if (need) out += '(';
    print_node(child, out);
    if (need) out += ')';
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            if (n.value < 0.0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case NodeKind::Variable:
            out += 'x';
            out += std::to_string(n.var + 1);
            return;
        case NodeKind::Unary: {
            static const char* names[] = {"neg", "sin", "cos", "exp", "sqrt", "tanh"};
            if (n.uop == UnaryOp::Neg) {
                out += '-';
                print_child(*n.lhs, 3, true, out);  // parenthesize anything looser than ^
            } else {
                out += names[static_cast<int>(n.uop)];
                out += '(';
                print_node(*n.lhs, out);
                out += ')';
            }
            return;
        }
        case NodeKind::Binary: {
            int p = precedence(n);
            static const char* ops = "+-*/^";
            print_child(*n.lhs, p, n.bop == BinaryOp::Pow, out);
            out += ops[static_cast<int>(n.bop)];
            // -,/ are left-associative; ^ handled via constant rhs
            bool strict_rhs = n.bop == BinaryOp::Sub || n.bop == BinaryOp::Div;
            print_child(*n.rhs, p, strict_rhs, out);
            return;
        }
    }
}

}  // namespace

Expression Expression::parse(std::string_view text, int dim) {
    if (dim < 0) throw ParseError("dimension must be nonnegative", 0);
    Parser p(text, dim);
    return Expression(p.run(), dim);
}

Expression Expression::constant(double c, int dim) {
    return Expression(make_const(c), dim);
}

double Expression::eval(std::span<const double> point) const {
    if (!root_) return 0.0;
    if (static_cast<int>(point.size()) < dim_)
        throw EvalError("point has fewer coordinates than expression dimension", -1);
    double v = eval_node(*root_, point);
    if (!std::isfinite(v)) throw EvalError("non-finite result", root_->src_offset);
    return v;
}

Expression Expression::derivative(int axis) const {
    if (!root_) return constant(0.0, dim_);
    if (axis < 0 || axis >= dim_) return constant(0.0, dim_);
    return Expression(diff_node(*root_, axis), dim_);
}

std::vector<double> Expression::gradient(std::span<const double> point) const {
    std::vector<double> g(static_cast<std::size_t>(dim_), 0.0);
    for (int a = 0; a < dim_; ++a) g[static_cast<std::size_t>(a)] = derivative(a).eval(point);
    return g;
}

bool Expression::is_constant() const {
    return !root_ || !tree_has_variable(*root_);
}

std::string Expression::str() const {
    if (!root_) return "0";
    std::string out;
    print_node(*root_, out);
    return out;
}

}  // namespace cnls::expr
