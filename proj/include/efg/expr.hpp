#pragma once

// Expression trees over the fixed primitive set, their jet evaluation, symbolic
// differentiation and the prefix (S-expression) text form used in configs:
//
//   (* (^ x1 2) x2)     (exp (- v))     (+ 1 (sin x1) (cos x2))

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "efg/field.hpp"

namespace efg {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sin, Cos, Sqrt, Abs, Call };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;
    int var = -1;
    std::vector<Expr> args;
    FieldPtr fn;  // Call only
};

namespace ex {
Expr num(double v);
Expr var(int index);
Expr call(FieldPtr fn, std::vector<Expr> args);
// Call fn on the leading coordinates (x_0, ..., x_{arity-1}) of the current field.
Expr call_on(FieldPtr fn, std::vector<int> coords);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr a, double p);
Expr pow(Expr a, Expr p);
Expr exp(Expr a);
Expr log(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
Expr sqrt(Expr a);
Expr abs(Expr a);

bool is_const(const Expr& e, double v);
bool is_const(const Expr& e);
}  // namespace ex

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator+(Expr a, double b);
Expr operator+(double a, Expr b);
Expr operator-(Expr a, double b);
Expr operator-(double a, Expr b);
Expr operator*(Expr a, double b);
Expr operator*(double a, Expr b);
Expr operator/(Expr a, double b);
Expr operator/(double a, Expr b);

// d expr / d x_var, sharing unchanged subtrees.
Expr differentiate(const Expr& e, int var);
// Variables referenced (directly; calls count all their argument variables).
std::vector<bool> used_vars(const Expr& e, int arity);

// Field backed by an expression DAG, compiled to a linear tape.
FieldPtr expr_field(Expr e, int arity, std::string name = "");
Jet evaluate_expr(const Expr& e, std::span<const Jet> args);

// Parses prefix notation. Symbols resolve to coordinates first, then to declared functions
// (inlined, with cycle detection). Unknown symbols raise ConfigError naming them.
class ExpressionParser {
public:
    ExpressionParser(std::vector<std::string> coordinates, std::map<std::string, std::string> functions);
    Expr parse(std::string_view text);
    // Parsed body of a declared function.
    Expr function(const std::string& name);
    bool has_function(const std::string& name) const { return functions_.count(name) != 0; }
    const std::vector<std::string>& coordinates() const { return coords_; }

private:
    Expr parse_text(std::string_view text, const std::string& context);
    std::vector<std::string> coords_;
    std::map<std::string, std::string> functions_;
    std::map<std::string, Expr> parsed_;
    std::vector<std::string> stack_;
};

// Canonical prefix text (numbers with 17 significant digits). Calls are not serializable.
std::string to_sexpr(const Expr& e, const std::vector<std::string>& coordinates);

}  // namespace efg
