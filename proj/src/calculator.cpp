#include "claimtree/calculator.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "claimtree/error.hpp"

namespace claimtree {

[[noreturn]] static void fail(const std::string& what) {
  throw Error(ErrorKind::kEvidenceUnavailable, "calculator: " + what);
}

// Recursive descent over:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | primary
//   primary := number | '(' expr ')' | name '(' [expr (',' expr)*] ')'
class ExpressionParser {
 public:
  ExpressionParser(const Calculator& calc, std::string_view src) : calc_(calc), src_(src) {}

  double parse() {
    double value = expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(src_.substr(pos_, 1)) + "'");
    return value;
  }

 private:
  enum class Op { kNone, kPlus, kMinus, kTimes, kDivide };

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(std::string_view token) {
    if (src_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  Op peek_op(bool additive) {
    skip_space();
    size_t saved = pos_;
    Op op = Op::kNone;
    if (additive) {
      if (consume("+")) op = Op::kPlus;
      else if (consume("-") || consume("−")) op = Op::kMinus;
    } else {
      if (consume("*") || consume("×")) op = Op::kTimes;
      else if (consume("/") || consume("÷")) op = Op::kDivide;
    }
    pos_ = saved;
    return op;
  }

  void take_op() {
    // Operators are one ASCII byte or a two/three byte UTF-8 sequence.
    unsigned char c = static_cast<unsigned char>(src_[pos_]);
    pos_ += c < 0x80 ? 1 : (c >= 0xe0 ? 3 : 2);
  }

  double checked(double v) {
    if (!std::isfinite(v)) fail("result is not finite");
    return v;
  }

  double expr() {
    double value = term();
    for (Op op = peek_op(true); op != Op::kNone; op = peek_op(true)) {
      take_op();
      double rhs = term();
      value = checked(op == Op::kPlus ? value + rhs : value - rhs);
    }
    return value;
  }

  double term() {
    double value = unary();
    for (Op op = peek_op(false); op != Op::kNone; op = peek_op(false)) {
      take_op();
      double rhs = unary();
      if (op == Op::kDivide && rhs == 0.0) fail("division by zero");
      value = checked(op == Op::kTimes ? value * rhs : value / rhs);
    }
    return value;
  }

  double unary() {
    skip_space();
    if (consume("-") || consume("−")) return -unary();
    if (consume("+")) return unary();
    return primary();
  }

  double primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      double value = expr();
      skip_space();
      if (!consume(")")) fail("missing ')'");
      return value;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return call();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  double number() {
    size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      ++pos_;
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail("bad number '" + std::string(first, last) + "'");
    return value;
  }

  double call() {
    size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    std::string name(src_.substr(start, pos_ - start));
    auto it = calc_.functions_.find(name);
    if (it == calc_.functions_.end()) fail("unknown function '" + name + "'");
    skip_space();
    if (!consume("(")) fail("expected '(' after " + name);
    std::vector<double> args;
    skip_space();
    if (!consume(")")) {
      do {
        args.push_back(expr());
        skip_space();
      } while (consume(","));
      if (!consume(")")) fail("missing ')' after arguments of " + name);
    }
    if (args.size() != it->second.arity) {
      fail(name + " takes " + std::to_string(it->second.arity) + " argument(s), got " +
           std::to_string(args.size()));
    }
    return checked(it->second.fn(args));
  }

  const Calculator& calc_;
  std::string_view src_;
  size_t pos_ = 0;
};

void Calculator::register_function(std::string name, size_t arity, Function fn) {
  functions_[std::move(name)] = Entry{arity, std::move(fn)};
}

bool Calculator::has_function(std::string_view name) const {
  return functions_.find(name) != functions_.end();
}

double Calculator::evaluate(std::string_view expression) const {
  return ExpressionParser(*this, expression).parse();
}

int cha2ds2_vasc_score(double age, bool female, bool chf, bool hypertension, bool stroke_tia,
                       bool vascular, bool diabetes) {
  int score = 0;
  if (age >= 75) score += 2;
  else if (age >= 65) score += 1;
  score += female ? 1 : 0;
  score += chf ? 1 : 0;
  score += hypertension ? 1 : 0;
  score += stroke_tia ? 2 : 0;
  score += vascular ? 1 : 0;
  score += diabetes ? 1 : 0;
  return score;
}

Calculator Calculator::with_clinical_scores() {
  Calculator calc;
  calc.register_function("cha2ds2_vasc", 7, [](std::span<const double> a) {
    return static_cast<double>(
        cha2ds2_vasc_score(a[0], a[1] != 0, a[2] != 0, a[3] != 0, a[4] != 0, a[5] != 0, a[6] != 0));
  });
  calc.register_function("mean_arterial_pressure", 2, [](std::span<const double> a) {
    return a[1] + (a[0] - a[1]) / 3.0;
  });
  calc.register_function("bmi", 2, [](std::span<const double> a) {
    if (a[1] <= 0) fail("height must be positive");
    return a[0] / (a[1] * a[1]);
  });
  // Cockcroft-Gault, mL/min.
  calc.register_function("creatinine_clearance", 4, [](std::span<const double> a) {
    if (a[2] <= 0) fail("serum creatinine must be positive");
    double clearance = (140.0 - a[0]) * a[1] / (72.0 * a[2]);
    return a[3] != 0 ? clearance * 0.85 : clearance;
  });
  return calc;
}

}  // namespace claimtree
