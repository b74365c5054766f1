#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace claimtree {

// Arithmetic over decimal literals with + - * / (also the Unicode − × ÷),
// parentheses, unary minus and registered named functions such as
// cha2ds2_vasc(...). Any parse or evaluation failure, including division by
// zero and non-finite results, throws kEvidenceUnavailable.
class Calculator {
 public:
  using Function = std::function<double(std::span<const double>)>;

  // Plain arithmetic, no named functions.
  Calculator() = default;

  // Arithmetic plus the bundled clinical score functions:
  //   cha2ds2_vasc(age, female, chf, hypertension, stroke_tia, vascular, diabetes)
  //   mean_arterial_pressure(systolic, diastolic)
  //   bmi(weight_kg, height_m)
  //   creatinine_clearance(age, weight_kg, serum_creatinine_mg_dl, female)
  static Calculator with_clinical_scores();

  void register_function(std::string name, size_t arity, Function fn);
  bool has_function(std::string_view name) const;

  double evaluate(std::string_view expression) const;

 private:
  struct Entry {
    size_t arity;
    Function fn;
  };
  std::map<std::string, Entry, std::less<>> functions_;

  friend class ExpressionParser;
};

// CHA2DS2-VASc stroke-risk score; boolean inputs are true when non-zero.
int cha2ds2_vasc_score(double age, bool female, bool chf, bool hypertension, bool stroke_tia,
                       bool vascular, bool diabetes);

}  // namespace claimtree
