#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pwacert/common.hpp"

namespace pwacert::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterLimit };

enum class RowSense { kLe, kGe, kEq };

// minimize objective . z  subject to rows; variables are free unless marked
// nonnegative. Rows are stored sparse.
struct Problem {
  struct Row {
    std::vector<std::pair<int, double>> terms;
    RowSense sense = RowSense::kLe;
    double rhs = 0.0;
  };

  int num_vars = 0;
  std::vector<double> objective;
  std::vector<bool> nonnegative;
  std::vector<Row> rows;
  std::vector<std::string> var_names;  // optional, used by dump()

  int add_var(double cost, bool nonneg, std::string name = {});
  void add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs);
};

struct Solution {
  Status status = Status::kIterLimit;
  Vec x;                 // size num_vars, valid when optimal
  double objective = 0.0;
  int iterations = 0;    // total pivots over both phases
};

// Two-phase revised simplex with a dense basis inverse. Anti-cycling: Bland's
// rule engages after a run of degenerate pivots and stays until the objective
// improves.
Solution solve(const Problem& p);

// Plain-text MPS-like listing for debugging.
void dump(const Problem& p, std::ostream& os);

const char* status_name(Status s);

}  // namespace pwacert::lp
