#pragma once

// Closed-form univariate expression trees. Profile functions are built from
// these so that evaluation at any dual-number depth stays exact.
//
// JSON form: {"op": <name>, "args": [...]}, where "const" carries its number
// in args and "var" has no args. Sub/div are accepted on input and stored as
// add/neg and mul/inv.

#include <cmath>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "magsi/dual.hpp"
#include "magsi/errors.hpp"

namespace magsi {

enum class Op { Const, Var, Add, Mul, Neg, Inv, Pow, Sin, Cos, Sinh, Cosh };

class Expr {
 public:
  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double c) { return Expr(std::make_shared<const Node>(Node{Op::Const, c, {}})); }
  static Expr var() { return Expr(std::make_shared<const Node>(Node{Op::Var, 0.0, {}})); }

  /// c0 + c1 s + c2 s^2 + ...
  static Expr polynomial(std::span<const double> coeffs) {
    Expr s = var();
    Expr acc = constant(0.0);
    bool first = true;
    for (std::size_t i = coeffs.size(); i-- > 0;) {
      if (first) {
        acc = constant(coeffs[i]);
        first = false;
      } else {
        acc = acc * s + constant(coeffs[i]);
      }
    }
    return acc;
  }
  static Expr polynomial(std::initializer_list<double> coeffs) {
    return polynomial(std::span<const double>(coeffs.begin(), coeffs.size()));
  }

  Op op() const { return node_->op; }
  double const_value() const { return node_->value; }
  const std::vector<Expr>& args() const { return node_->args; }
  bool is_const() const { return node_->op == Op::Const; }

  template <class T>
  T operator()(const T& s) const {
    const Node& n = *node_;
    switch (n.op) {
      case Op::Const: return T(n.value);
      case Op::Var: return s;
      case Op::Add: {
        T acc = n.args[0](s);
        for (std::size_t i = 1; i < n.args.size(); ++i) acc = acc + n.args[i](s);
        return acc;
      }
      case Op::Mul: {
        T acc = n.args[0](s);
        for (std::size_t i = 1; i < n.args.size(); ++i) acc = acc * n.args[i](s);
        return acc;
      }
      case Op::Neg: return -n.args[0](s);
      case Op::Inv: return 1.0 / n.args[0](s);
      case Op::Pow: {
        T base = n.args[0](s);
        double e = n.args[1].const_value();
        if (std::nearbyint(e) == e && std::abs(e) < 1e6) return ipow(base, static_cast<int>(e));
        return pow(base, e);
      }
      case Op::Sin: return sin(n.args[0](s));
      case Op::Cos: return cos(n.args[0](s));
      case Op::Sinh: return sinh(n.args[0](s));
      case Op::Cosh: return cosh(n.args[0](s));
    }
    return T(0.0);
  }

  /// d/ds evaluated at s, by one forward-mode pass.
  template <class T>
  T derivative(const T& s) const {
    return (*this)(Dual<T>(s, T(1.0))).d;
  }

  friend Expr operator+(const Expr& a, const Expr& b) { return make(Op::Add, {a, b}); }
  friend Expr operator-(const Expr& a, const Expr& b) { return make(Op::Add, {a, -b}); }
  friend Expr operator*(const Expr& a, const Expr& b) { return make(Op::Mul, {a, b}); }
  friend Expr operator/(const Expr& a, const Expr& b) { return make(Op::Mul, {a, inv(b)}); }
  friend Expr operator-(const Expr& a) { return make(Op::Neg, {a}); }
  friend Expr operator*(double c, const Expr& b) { return constant(c) * b; }
  friend Expr operator+(const Expr& a, double c) { return a + constant(c); }

  friend Expr inv(const Expr& a) { return make(Op::Inv, {a}); }
  friend Expr pow(const Expr& a, double e) { return make(Op::Pow, {a, constant(e)}); }
  friend Expr sin(const Expr& a) { return make(Op::Sin, {a}); }
  friend Expr cos(const Expr& a) { return make(Op::Cos, {a}); }
  friend Expr sinh(const Expr& a) { return make(Op::Sinh, {a}); }
  friend Expr cosh(const Expr& a) { return make(Op::Cosh, {a}); }

  nlohmann::json to_json() const {
    const Node& n = *node_;
    if (n.op == Op::Const) return {{"op", "const"}, {"args", nlohmann::json::array({n.value})}};
    nlohmann::json args = nlohmann::json::array();
    for (const auto& a : n.args) args.push_back(a.to_json());
    return {{"op", std::string(op_name(n.op))}, {"args", args}};
  }

  static Expr from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
      throw ConfigError("expression node must be an object with a string \"op\": " + j.dump());
    std::string op = j["op"].get<std::string>();
    nlohmann::json args = j.value("args", nlohmann::json::array());
    if (!args.is_array()) throw ConfigError("expression \"args\" must be an array: " + j.dump());

    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi)
        throw ConfigError("wrong number of args for op '" + op + "': " + j.dump());
    };
    auto sub = [&](std::size_t i) { return from_json(args[i]); };

    if (op == "const") {
      need(1, 1);
      if (!args[0].is_number()) throw ConfigError("const expects a number: " + j.dump());
      return constant(args[0].get<double>());
    }
    if (op == "var") {
      need(0, 0);
      return var();
    }
    if (op == "add" || op == "mul") {
      need(1, 64);
      std::vector<Expr> xs;
      for (std::size_t i = 0; i < args.size(); ++i) xs.push_back(sub(i));
      return make(op == "add" ? Op::Add : Op::Mul, std::move(xs));
    }
    if (op == "sub") {
      need(2, 2);
      return sub(0) - sub(1);
    }
    if (op == "div") {
      need(2, 2);
      return sub(0) / sub(1);
    }
    if (op == "pow") {
      need(2, 2);
      Expr e = sub(1);
      if (!e.is_const()) throw ConfigError("pow exponent must be a constant: " + j.dump());
      return pow(sub(0), e.const_value());
    }
    static constexpr std::pair<std::string_view, Op> unary[] = {
        {"neg", Op::Neg}, {"inv", Op::Inv}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"sinh", Op::Sinh}, {"cosh", Op::Cosh}};
    for (auto [name, code] : unary) {
      if (op == name) {
        need(1, 1);
        return make(code, {sub(0)});
      }
    }
    throw ConfigError("unknown expression op '" + op + "'");
  }

  static std::string_view op_name(Op op) {
    switch (op) {
      case Op::Const: return "const";
      case Op::Var: return "var";
      case Op::Add: return "add";
      case Op::Mul: return "mul";
      case Op::Neg: return "neg";
      case Op::Inv: return "inv";
      case Op::Pow: return "pow";
      case Op::Sin: return "sin";
      case Op::Cos: return "cos";
      case Op::Sinh: return "sinh";
      case Op::Cosh: return "cosh";
    }
    return "?";
  }

 private:
  struct Node {
    Op op;
    double value;
    std::vector<Expr> args;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expr make(Op op, std::vector<Expr> args) {
    return Expr(std::make_shared<const Node>(Node{op, 0.0, std::move(args)}));
  }

  std::shared_ptr<const Node> node_;
};

}  // namespace magsi
