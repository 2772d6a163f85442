#include "efg/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <unordered_map>

#include "efg/errors.hpp"

namespace efg {

namespace {

Expr make(Op op, std::vector<Expr> args) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->args = std::move(args);
    return n;
}

double fold_unary(Op op, double a) {
    switch (op) {
        case Op::Neg: return -a;
        case Op::Exp: return std::exp(a);
        case Op::Log: return std::log(a);
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        case Op::Sqrt: return std::sqrt(a);
        case Op::Abs: return std::fabs(a);
        default: return a;
    }
}

}  // namespace

namespace ex {

Expr num(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

Expr var(int index) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = index;
    return n;
}

Expr call(FieldPtr fn, std::vector<Expr> args) {
    if (static_cast<int>(args.size()) != fn->arity()) throw ShapeError("call argument count does not match field arity");
    if (fn->is_zero()) return num(0.0);
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Call;
    n->fn = std::move(fn);
    n->args = std::move(args);
    return n;
}

Expr call_on(FieldPtr fn, std::vector<int> coords) {
    std::vector<Expr> a;
    for (int c : coords) a.push_back(var(c));
    return call(std::move(fn), std::move(a));
}

bool is_const(const Expr& e) { return e->op == Op::Const; }
bool is_const(const Expr& e, double v) { return e->op == Op::Const && e->value == v; }

Expr add(Expr a, Expr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (is_const(a) && is_const(b)) return num(a->value + b->value);
    return make(Op::Add, {std::move(a), std::move(b)});
}

Expr sub(Expr a, Expr b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    if (is_const(a) && is_const(b)) return num(a->value - b->value);
    return make(Op::Sub, {std::move(a), std::move(b)});
}

Expr mul(Expr a, Expr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return num(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a) && is_const(b)) return num(a->value * b->value);
    return make(Op::Mul, {std::move(a), std::move(b)});
}

Expr div(Expr a, Expr b) {
    if (is_const(a, 0.0)) return num(0.0);
    if (is_const(b, 1.0)) return a;
    if (is_const(a) && is_const(b)) return num(a->value / b->value);
    return make(Op::Div, {std::move(a), std::move(b)});
}

Expr neg(Expr a) {
    if (is_const(a)) return num(-a->value);
    if (a->op == Op::Neg) return a->args[0];
    return make(Op::Neg, {std::move(a)});
}

Expr pow(Expr a, double p) { return pow(std::move(a), num(p)); }

Expr pow(Expr a, Expr p) {
    if (is_const(p, 0.0)) return num(1.0);
    if (is_const(p, 1.0)) return a;
    if (is_const(a) && is_const(p)) return num(std::pow(a->value, p->value));
    return make(Op::Pow, {std::move(a), std::move(p)});
}

namespace {
Expr unary(Op op, Expr a) {
    if (is_const(a)) return num(fold_unary(op, a->value));
    return make(op, {std::move(a)});
}
}  // namespace

Expr exp(Expr a) { return unary(Op::Exp, std::move(a)); }
Expr log(Expr a) { return unary(Op::Log, std::move(a)); }
Expr sin(Expr a) { return unary(Op::Sin, std::move(a)); }
Expr cos(Expr a) { return unary(Op::Cos, std::move(a)); }
Expr sqrt(Expr a) { return unary(Op::Sqrt, std::move(a)); }
Expr abs(Expr a) { return unary(Op::Abs, std::move(a)); }

}  // namespace ex

Expr operator+(Expr a, Expr b) { return ex::add(std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) { return ex::sub(std::move(a), std::move(b)); }
Expr operator*(Expr a, Expr b) { return ex::mul(std::move(a), std::move(b)); }
Expr operator/(Expr a, Expr b) { return ex::div(std::move(a), std::move(b)); }
Expr operator-(Expr a) { return ex::neg(std::move(a)); }
Expr operator+(Expr a, double b) { return ex::add(std::move(a), ex::num(b)); }
Expr operator+(double a, Expr b) { return ex::add(ex::num(a), std::move(b)); }
Expr operator-(Expr a, double b) { return ex::sub(std::move(a), ex::num(b)); }
Expr operator-(double a, Expr b) { return ex::sub(ex::num(a), std::move(b)); }
Expr operator*(Expr a, double b) { return ex::mul(std::move(a), ex::num(b)); }
Expr operator*(double a, Expr b) { return ex::mul(ex::num(a), std::move(b)); }
Expr operator/(Expr a, double b) { return ex::div(std::move(a), ex::num(b)); }
Expr operator/(double a, Expr b) { return ex::div(ex::num(a), std::move(b)); }

// ---------------------------------------------------------------------------

namespace {

class Differentiator {
public:
    explicit Differentiator(int var) : var_(var) {}

    Expr d(const Expr& e) {
        auto it = memo_.find(e.get());
        if (it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.get(), r);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        using namespace ex;
        const auto& a = e->args;
        switch (e->op) {
            case Op::Const: return num(0.0);
            case Op::Var: return num(e->var == var_ ? 1.0 : 0.0);
            case Op::Add: return d(a[0]) + d(a[1]);
            case Op::Sub: return d(a[0]) - d(a[1]);
            case Op::Mul: return d(a[0]) * a[1] + a[0] * d(a[1]);
            case Op::Div: {
                Expr da = d(a[0]);
                Expr db = d(a[1]);
                return da / a[1] - (e * db) / a[1];
            }
            case Op::Neg: return neg(d(a[0]));
            case Op::Pow: {
                Expr da = d(a[0]);
                if (is_const(a[1])) {
                    const double p = a[1]->value;
                    return num(p) * pow(a[0], p - 1.0) * da;
                }
                Expr dp = d(a[1]);
                return e * (dp * log(a[0]) + a[1] * da / a[0]);
            }
            case Op::Exp: return e * d(a[0]);
            case Op::Log: return d(a[0]) / a[0];
            case Op::Sin: return cos(a[0]) * d(a[0]);
            case Op::Cos: return neg(sin(a[0])) * d(a[0]);
            case Op::Sqrt: return d(a[0]) / (num(2.0) * e);
            case Op::Abs: return (a[0] / e) * d(a[0]);
            case Op::Call: {
                Expr sum = num(0.0);
                for (std::size_t k = 0; k < a.size(); ++k) {
                    Expr dk = d(a[k]);
                    if (is_const(dk, 0.0)) continue;
                    FieldPtr pk = e->fn->partial(static_cast<int>(k));
                    if (pk->is_zero()) continue;
                    sum = sum + call(pk, a) * dk;
                }
                return sum;
            }
        }
        return num(0.0);
    }

    int var_;
    std::unordered_map<const ExprNode*, Expr> memo_;
};

void collect_vars(const Expr& e, std::vector<bool>& used, std::unordered_map<const ExprNode*, bool>& seen) {
    if (seen.count(e.get())) return;
    seen.emplace(e.get(), true);
    if (e->op == Op::Var) {
        if (e->var >= 0 && e->var < static_cast<int>(used.size())) used[static_cast<std::size_t>(e->var)] = true;
        return;
    }
    for (const auto& a : e->args) collect_vars(a, used, seen);
}

struct Instr {
    Op op;
    double value = 0.0;
    int var = -1;
    std::vector<int> in;
    FieldPtr fn;
    bool const_exponent = false;
};

class Tape {
public:
    explicit Tape(const Expr& root) { root_ = build(root); }

    Jet run(std::span<const Jet> args) const {
        if (args.empty()) throw ShapeError("expression evaluated without arguments");
        const int nvars = args[0].nvars();
        int order = kMaxInternalOrder;
        for (const auto& a : args) {
            if (a.nvars() != nvars) throw ShapeError("expression arguments over different spaces");
            order = std::min(order, a.order());
        }
        const JetSpace& space = JetSpace::get(nvars, order);
        std::vector<Jet> s(code_.size());
        for (std::size_t i = 0; i < code_.size(); ++i) {
            const Instr& c = code_[i];
            auto in = [&](int k) -> const Jet& { return s[static_cast<std::size_t>(c.in[static_cast<std::size_t>(k)])]; };
            switch (c.op) {
                case Op::Const: s[i] = Jet(space, c.value); break;
                case Op::Var:
                    if (c.var < 0 || c.var >= static_cast<int>(args.size()))
                        throw ShapeError("expression variable index exceeds field arity");
                    s[i] = args[static_cast<std::size_t>(c.var)].truncated(order);
                    break;
                case Op::Add: s[i] = in(0) + in(1); break;
                case Op::Sub: s[i] = in(0) - in(1); break;
                case Op::Mul: s[i] = in(0) * in(1); break;
                case Op::Div: s[i] = in(0) / in(1); break;
                case Op::Neg: s[i] = -in(0); break;
                case Op::Pow:
                    s[i] = c.const_exponent ? pow(in(0), c.value) : exp(in(1) * log(in(0)));
                    break;
                case Op::Exp: s[i] = exp(in(0)); break;
                case Op::Log: s[i] = log(in(0)); break;
                case Op::Sin: s[i] = sin(in(0)); break;
                case Op::Cos: s[i] = cos(in(0)); break;
                case Op::Sqrt: s[i] = sqrt(in(0)); break;
                case Op::Abs: s[i] = abs(in(0)); break;
                case Op::Call: {
                    std::vector<Jet> a;
                    a.reserve(c.in.size());
                    for (int k : c.in) a.push_back(s[static_cast<std::size_t>(k)]);
                    s[i] = c.fn->evaluate(a);
                    break;
                }
            }
        }
        return s[static_cast<std::size_t>(root_)];
    }

private:
    int build(const Expr& e) {
        auto it = slot_.find(e.get());
        if (it != slot_.end()) return it->second;
        Instr ins;
        ins.op = e->op;
        ins.value = e->value;
        ins.var = e->var;
        ins.fn = e->fn;
        if (e->op == Op::Pow && ex::is_const(e->args[1])) {
            ins.const_exponent = true;
            ins.value = e->args[1]->value;
            ins.in.push_back(build(e->args[0]));
        } else {
            for (const auto& a : e->args) ins.in.push_back(build(a));
        }
        code_.push_back(std::move(ins));
        const int id = static_cast<int>(code_.size()) - 1;
        slot_.emplace(e.get(), id);
        return id;
    }

    std::vector<Instr> code_;
    std::unordered_map<const ExprNode*, int> slot_;
    int root_ = 0;
};

class ExprField final : public FieldImpl {
public:
    ExprField(Expr e, int arity, std::string name) : expr_(std::move(e)), arity_(arity), name_(std::move(name)), tape_(expr_) {
        auto used = used_vars(expr_, arity_ + 64);
        for (std::size_t k = static_cast<std::size_t>(arity_); k < used.size(); ++k)
            if (used[k]) throw ShapeError("expression references a coordinate beyond the field arity");
    }
    int arity() const override { return arity_; }
    Jet evaluate(std::span<const Jet> args) const override {
        if (static_cast<int>(args.size()) != arity_) throw ShapeError("expression field evaluated with wrong argument count");
        return tape_.run(args);
    }
    Jet local_jet(std::span<const double> point, int order) const override {
        const auto ids = identity_jets(point, order);
        return evaluate(ids);
    }
    FieldPtr partial(int var) const override {
        Expr d = differentiate(expr_, var);
        if (ex::is_const(d)) return constant_field(arity_, d->value);
        return expr_field(d, arity_, name_.empty() ? "" : "d" + std::to_string(var) + "_" + name_);
    }
    bool is_zero() const override { return ex::is_const(expr_, 0.0); }
    std::string describe() const override { return name_.empty() ? "expr" : name_; }

private:
    Expr expr_;
    int arity_;
    std::string name_;
    Tape tape_;
};

}  // namespace

Expr differentiate(const Expr& e, int var) {
    Differentiator d(var);
    return d.d(e);
}

std::vector<bool> used_vars(const Expr& e, int arity) {
    std::vector<bool> used(static_cast<std::size_t>(arity), false);
    std::unordered_map<const ExprNode*, bool> seen;
    collect_vars(e, used, seen);
    return used;
}

FieldPtr expr_field(Expr e, int arity, std::string name) {
    if (ex::is_const(e)) return constant_field(arity, e->value);
    return std::make_shared<ExprField>(std::move(e), arity, std::move(name));
}

Jet evaluate_expr(const Expr& e, std::span<const Jet> args) {
    Tape t(e);
    return t.run(args);
}

// ---------------------------------------------------------------------------

namespace {

struct Token {
    enum Kind { Open, Close, Atom, End } kind;
    std::string text;
    std::size_t pos;
};

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) {}
    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        if (i_ >= s_.size()) return {Token::End, "", i_};
        const std::size_t start = i_;
        if (s_[i_] == '(') return {Token::Open, "(", i_++};
        if (s_[i_] == ')') return {Token::Close, ")", i_++};
        while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')') ++i_;
        return {Token::Atom, std::string(s_.substr(start, i_ - start)), start};
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
};

bool parse_number(const std::string& t, double& out) {
    if (t.empty()) return false;
    const char c = t[0];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
          ((c == '-' || c == '+') && t.size() > 1 && (std::isdigit(static_cast<unsigned char>(t[1])) || t[1] == '.'))))
        return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

}  // namespace

ExpressionParser::ExpressionParser(std::vector<std::string> coordinates, std::map<std::string, std::string> functions)
    : coords_(std::move(coordinates)), functions_(std::move(functions)) {}

Expr ExpressionParser::function(const std::string& name) {
    auto done = parsed_.find(name);
    if (done != parsed_.end()) return done->second;
    auto it = functions_.find(name);
    if (it == functions_.end()) throw ConfigError("undeclared function '" + name + "'");
    if (std::find(stack_.begin(), stack_.end(), name) != stack_.end()) {
        std::string cycle;
        for (const auto& s : stack_) cycle += s + " -> ";
        throw ConfigError("cyclic function definition: " + cycle + name);
    }
    stack_.push_back(name);
    Expr e = parse_text(it->second, "function '" + name + "'");
    stack_.pop_back();
    parsed_.emplace(name, e);
    return e;
}

Expr ExpressionParser::parse(std::string_view text) { return parse_text(text, "expression"); }

Expr ExpressionParser::parse_text(std::string_view text, const std::string& context) {
    Lexer lex(text);
    auto fail = [&](const std::string& msg, std::size_t pos) -> ConfigError {
        return ConfigError(context + ": " + msg + " at offset " + std::to_string(pos));
    };

    std::function<Expr(Token)> node = [&](Token t) -> Expr {
        if (t.kind == Token::End) throw fail("unexpected end of input", t.pos);
        if (t.kind == Token::Close) throw fail("unexpected ')'", t.pos);
        if (t.kind == Token::Atom) {
            double v = 0.0;
            if (parse_number(t.text, v)) return ex::num(v);
            if (t.text == "pi") return ex::num(std::numbers::pi);
            auto c = std::find(coords_.begin(), coords_.end(), t.text);
            if (c != coords_.end()) return ex::var(static_cast<int>(c - coords_.begin()));
            if (functions_.count(t.text)) return function(t.text);
            throw ConfigError("undeclared function or coordinate '" + t.text + "' in " + context);
        }
        Token head = lex.next();
        if (head.kind != Token::Atom) throw fail("expected an operator after '('", head.pos);
        std::vector<Expr> args;
        for (;;) {
            Token a = lex.next();
            if (a.kind == Token::Close) break;
            args.push_back(node(a));
        }
        const std::string& op = head.text;
        auto need = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi)
                throw fail("wrong number of arguments for '" + op + "'", head.pos);
        };
        if (op == "+") {
            need(1, 1000);
            Expr r = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) r = r + args[i];
            return r;
        }
        if (op == "-") {
            need(1, 1000);
            if (args.size() == 1) return -args[0];
            Expr r = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) r = r - args[i];
            return r;
        }
        if (op == "*") {
            need(1, 1000);
            Expr r = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) r = r * args[i];
            return r;
        }
        if (op == "/") {
            need(2, 2);
            return args[0] / args[1];
        }
        if (op == "^" || op == "pow") {
            need(2, 2);
            return ex::pow(args[0], args[1]);
        }
        need(1, 1);
        if (op == "exp") return ex::exp(args[0]);
        if (op == "log") return ex::log(args[0]);
        if (op == "sin") return ex::sin(args[0]);
        if (op == "cos") return ex::cos(args[0]);
        if (op == "sqrt") return ex::sqrt(args[0]);
        if (op == "abs") return ex::abs(args[0]);
        throw fail("unknown operator '" + op + "'", head.pos);
    };

    Expr e = node(lex.next());
    Token rest = lex.next();
    if (rest.kind != Token::End) throw fail("trailing input", rest.pos);
    return e;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write(const Expr& e, const std::vector<std::string>& coords, std::string& out) {
    auto un = [&](const char* name) {
        out += "(";
        out += name;
        out += " ";
        write(e->args[0], coords, out);
        out += ")";
    };
    auto bin = [&](const char* name) {
        out += "(";
        out += name;
        out += " ";
        write(e->args[0], coords, out);
        out += " ";
        write(e->args[1], coords, out);
        out += ")";
    };
    switch (e->op) {
        case Op::Const: out += fmt_num(e->value); break;
        case Op::Var:
            if (e->var < 0 || e->var >= static_cast<int>(coords.size())) throw ShapeError("variable without a coordinate name");
            out += coords[static_cast<std::size_t>(e->var)];
            break;
        case Op::Add: bin("+"); break;
        case Op::Sub: bin("-"); break;
        case Op::Mul: bin("*"); break;
        case Op::Div: bin("/"); break;
        case Op::Pow: bin("^"); break;
        case Op::Neg: un("-"); break;
        case Op::Exp: un("exp"); break;
        case Op::Log: un("log"); break;
        case Op::Sin: un("sin"); break;
        case Op::Cos: un("cos"); break;
        case Op::Sqrt: un("sqrt"); break;
        case Op::Abs: un("abs"); break;
        case Op::Call: throw ShapeError("field calls have no text form");
    }
}

}  // namespace

std::string to_sexpr(const Expr& e, const std::vector<std::string>& coordinates) {
    std::string out;
    write(e, coordinates, out);
    return out;
}

}  // namespace efg
