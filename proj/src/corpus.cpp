// SPDX-License-Identifier: Apache-2.0
#include "varcalc/corpus.hpp"

namespace varcalc::corpus {

std::vector<Entry> builtin() {
  const expr::VarSpace x({"x"}), xy({"x", "y"});
  struct Row {
    const char* name;
    const char* text;
    bool two;
    std::initializer_list<double> at;
    bool convex;
  };
  const Row rows[] = {
      {"abs", "(abs x)", false, {0}, true},
      {"neg_abs", "(- (abs x))", false, {0}, false},
      {"min_zero", "(min 0 x)", false, {0}, false},
      {"max_slopes", "(max x (* 2 x))", false, {0}, true},
      {"square", "(* x x)", false, {0}, true},
      {"relu", "(max x 0)", false, {0}, true},
      {"abs_plus_x", "(+ (abs x) x)", false, {0}, true},
      {"wide_kink", "(max (- x) (* 3 x))", false, {0}, true},
      {"capped_abs", "(min (abs x) 1)", false, {0}, false},
      {"signed_square", "(* x (abs x))", false, {0}, false},
      {"shifted_hinge", "(max 0 (- (* x x) 1))", false, {1}, true},
      {"smooth_cubic", "(+ (pow x 3) x)", false, {0.5}, false},
      {"max_xy", "(max x y)", true, {0, 0}, true},
      {"min_xy", "(min x y)", true, {0, 0}, false},
      {"l1", "(+ (abs x) (abs y))", true, {0, 0}, true},
      {"linf", "(max (abs x) (abs y))", true, {0, 0}, true},
      {"abs_diff", "(abs (- x y))", true, {0, 0}, true},
      {"saddle_abs", "(- (abs x) (abs y))", true, {0, 0}, false},
      {"square_plus_abs", "(+ (* x x) (abs y))", true, {0, 0}, true},
      {"bilinear", "(* x y)", true, {1, 2}, false},
  };
  std::vector<Entry> out;
  for (const auto& r : rows) {
    const auto& space = r.two ? xy : x;
    out.push_back({r.name, expr::parse_function(r.text, space), make_vec(r.at), r.convex});
  }
  return out;
}

}  // namespace varcalc::corpus
