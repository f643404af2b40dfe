#include "pwacert/simplex.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace pwacert::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kReducedCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kDegenerateStreak = 64;

// Standard-form column: sparse entries plus cost.
struct Column {
  std::vector<std::pair<int, double>> entries;  // (row, coeff)
  double cost = 0.0;
  double phase1_cost = 0.0;
  bool artificial = false;
};

struct Standard {
  int m = 0;  // rows
  std::vector<Column> cols;
  std::vector<double> col_norm;  // infinity norms, for pricing error estimates
  Vec b;
  // mapping back: per original var, (plus_col, minus_col); minus_col = -1 for
  // nonnegative vars.
  std::vector<std::pair<int, int>> var_cols;

  void finalize() {
    col_norm.resize(cols.size());
    for (size_t j = 0; j < cols.size(); ++j) {
      double nrm = 0.0;
      for (const auto& [r, v] : cols[j].entries) nrm = std::max(nrm, std::abs(v));
      col_norm[j] = nrm;
    }
  }
};

Standard to_standard(const Problem& p) {
  Standard s;
  s.m = static_cast<int>(p.rows.size());
  s.b = Vec::Zero(s.m);

  // Row sign normalization so b >= 0; remember per-row flip. A deterministic
  // hash-based rhs perturbation (~1e-10) breaks the massive degeneracy of
  // vertex-constraint LPs; it is far below every downstream tolerance.
  std::vector<double> flip(s.m, 1.0);
  for (int i = 0; i < s.m; ++i) {
    double rhs = p.rows[i].rhs;
    if (rhs < 0.0) flip[i] = -1.0;
    std::uint64_t h = (static_cast<std::uint64_t>(i) + 1) * 0x9E3779B97F4A7C15ull;
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDull;
    h ^= h >> 33;
    double u = static_cast<double>(h >> 11) / 9007199254740992.0;  // [0,1)
    s.b(i) = std::abs(rhs) + 1e-10 * (1.0 + std::abs(rhs)) * (0.5 + u);
  }

  s.var_cols.resize(p.num_vars);
  auto add_structural = [&](int var, double sign) {
    Column c;
    c.cost = sign * p.objective[var];
    s.cols.push_back(std::move(c));
    return static_cast<int>(s.cols.size()) - 1;
  };
  // Build columns var-major from the sparse rows: first collect per-var row
  // entries.
  std::vector<std::vector<std::pair<int, double>>> var_entries(p.num_vars);
  for (int i = 0; i < s.m; ++i) {
    for (const auto& [v, a] : p.rows[i].terms) {
      if (a != 0.0) var_entries[v].push_back({i, flip[i] * a});
    }
  }
  for (int v = 0; v < p.num_vars; ++v) {
    int plus = add_structural(v, 1.0);
    s.cols[plus].entries = var_entries[v];
    int minus = -1;
    if (!p.nonnegative[v]) {
      minus = add_structural(v, -1.0);
      s.cols[minus].entries = var_entries[v];
      for (auto& e : s.cols[minus].entries) e.second = -e.second;
    }
    s.var_cols[v] = {plus, minus};
  }
  // Slack / surplus columns for inequality rows.
  for (int i = 0; i < s.m; ++i) {
    if (p.rows[i].sense == RowSense::kEq) continue;
    double sgn = (p.rows[i].sense == RowSense::kLe) ? 1.0 : -1.0;
    Column c;
    c.entries = {{i, flip[i] * sgn}};
    s.cols.push_back(std::move(c));
  }
  // Artificials, one per row; they form the initial basis.
  for (int i = 0; i < s.m; ++i) {
    Column c;
    c.entries = {{i, 1.0}};
    c.phase1_cost = 1.0;
    c.artificial = true;
    s.cols.push_back(std::move(c));
  }
  s.finalize();
  return s;
}

class RevisedSimplex {
 public:
  explicit RevisedSimplex(const Standard& s) : s_(s), m_(s.m) {
    n_ = static_cast<int>(s_.cols.size());
    basis_.resize(m_);
    in_basis_.assign(n_, false);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ - m_ + i;  // artificials
      in_basis_[basis_[i]] = true;
    }
    binv_ = Mat::Identity(m_, m_);
    xb_ = s_.b;
    banned_.assign(n_, 0);
    iter_limit_ = 50000 + 60 * (m_ + n_);
  }

  Status run() {
    // Basis repair can hand phase 2 a basis with positive artificials, so
    // alternate the phases until the final basis is clean.
    for (int attempt = 0; attempt < 3; ++attempt) {
      Status st = optimize(/*phase1=*/true);
      if (st == Status::kUnbounded) {
        // the phase-1 objective is bounded below; a ray here is numerical noise
        refactorize();
        st = optimize(/*phase1=*/true);
        if (st == Status::kUnbounded) throw std::runtime_error("lp: numerical breakdown (phase1 ray)");
      }
      if (st != Status::kOptimal) return st;
      if (phase1_objective() > kFeasTol * std::max(1.0, s_.b.lpNorm<Eigen::Infinity>()))
        return Status::kInfeasible;
      drive_out_artificials();
      st = optimize(/*phase1=*/false);
      if (st != Status::kOptimal) return st;
      if (phase1_objective() <= kFeasTol * std::max(1.0, s_.b.lpNorm<Eigen::Infinity>()))
        return Status::kOptimal;
    }
    throw std::runtime_error("lp: numerical breakdown (phase alternation)");
  }

  double objective() const {
    double obj = 0.0;
    for (int i = 0; i < m_; ++i) obj += s_.cols[basis_[i]].cost * xb_(i);
    return obj;
  }

  Vec column_values() const {
    Vec w = Vec::Zero(n_);
    for (int i = 0; i < m_; ++i) w(basis_[i]) = xb_(i);
    return w;
  }

  int iterations() const { return iterations_; }

 private:
  double phase1_objective() const {
    double obj = 0.0;
    for (int i = 0; i < m_; ++i) obj += s_.cols[basis_[i]].phase1_cost * xb_(i);
    return obj;
  }

  Vec dense_col(int j) const {
    Vec a = Vec::Zero(m_);
    for (const auto& [r, v] : s_.cols[j].entries) a(r) = v;
    return a;
  }

  void refactorize() {
    Mat B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = dense_col(basis_[i]);
    binv_ = B.partialPivLu().inverse();
    bool bad = !binv_.allFinite();
    if (!bad) {
      double resid = (B * binv_ - Mat::Identity(m_, m_)).cwiseAbs().maxCoeff();
      bad = !(resid <= 1e-5);
    }
    if (bad) {
      repair_basis();
      for (int i = 0; i < m_; ++i) B.col(i) = dense_col(basis_[i]);
      binv_ = B.partialPivLu().inverse();
      if (!binv_.allFinite()) throw std::runtime_error("lp: numerical breakdown (post-repair)");
    }
    xb_ = binv_ * s_.b;
    for (int i = 0; i < m_; ++i)
      if (xb_(i) < 0.0 && xb_(i) > -kFeasTol) xb_(i) = 0.0;
  }

  // Replaces dependent basis columns with artificial (identity) columns via
  // greedy modified Gram-Schmidt re-selection. The repaired basic solution
  // may be infeasible in the dropped coordinates; the ratio test treats
  // negative basics as zero so the iteration recovers.
  void repair_basis() {
    std::vector<int> keep;
    Mat Q(m_, m_);
    int qcols = 0;
    auto try_add = [&](int col_id) {
      Vec col = dense_col(col_id);
      double nrm0 = std::max(1.0, col.norm());
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < qcols; ++k) col -= Q.col(k).dot(col) * Q.col(k);
      if (col.norm() <= 1e-8 * nrm0) return false;
      Q.col(qcols++) = col.normalized();
      keep.push_back(col_id);
      return true;
    };
    for (int i = 0; i < m_; ++i) try_add(basis_[i]);
    for (int r = 0; r < m_ && static_cast<int>(keep.size()) < m_; ++r)
      try_add(n_ - m_ + r);  // artificial column of row r
    if (static_cast<int>(keep.size()) != m_) throw std::runtime_error("lp: numerical breakdown (repair incomplete)");
    std::fill(in_basis_.begin(), in_basis_.end(), false);
    basis_ = keep;
    for (int j : basis_) in_basis_[j] = true;
  }

  // Harris two-pass ratio test with feasibility allowance delta: first the
  // relaxed bound theta_max = min (x_i + delta)/d_i, then the most stable
  // pivot (largest d_i) among rows whose exact ratio stays within theta_max.
  // Every basic value ends >= -delta. Bland mode picks the lowest variable
  // index instead. Returns -1 when nothing blocks (unbounded direction).
  int ratio_test(const Vec& d, bool bland) const {
    constexpr double kDelta = 1e-9;
    double theta_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i)
      if (d(i) > kPivotTol)
        theta_max = std::min(theta_max, (std::max(xb_(i), 0.0) + kDelta) / d(i));
    if (!std::isfinite(theta_max)) return -1;
    int leave = -1;
    for (int i = 0; i < m_; ++i) {
      if (d(i) <= kPivotTol) continue;
      if (std::max(xb_(i), 0.0) / d(i) > theta_max) continue;
      if (leave < 0) {
        leave = i;
      } else if (bland) {
        if (basis_[i] < basis_[leave]) leave = i;
      } else if (d(i) > d(leave)) {
        leave = i;
      }
    }
    return leave;
  }

  // One price-and-pivot loop for either phase.
  Status optimize(bool phase1) {
    int degenerate_streak = 0;
    bool bland = false;
    double last_obj = phase1 ? phase1_objective() : objective();
    unban_obj_ = last_obj;
    while (true) {
      ++iterations_;  // counts pricing rounds, pivoting or not
      if (iterations_ >= iter_limit_) return Status::kIterLimit;
      if (std::getenv("PWACERT_LP_DEBUG") && iterations_ % 5000 == 0)
        std::fprintf(stderr, "[lp] iter=%d phase1=%d obj=%.6e banned=%d bland=%d\n", iterations_,
                     phase1, phase1 ? phase1_objective() : objective(), banned_count_, bland);
      // y = B^-T c_B
      Vec cb(m_);
      for (int i = 0; i < m_; ++i)
        cb(i) = phase1 ? s_.cols[basis_[i]].phase1_cost : s_.cols[basis_[i]].cost;
      Vec y = binv_.transpose() * cb;

      // candidate entering columns, most negative reduced cost first (Bland:
      // lowest index first)
      std::vector<std::pair<double, int>> candidates;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j] || banned_[j]) continue;
        if (!phase1 && s_.cols[j].artificial) continue;  // locked out after phase 1
        double cj = phase1 ? s_.cols[j].phase1_cost : s_.cols[j].cost;
        double rc = cj;
        for (const auto& [r, v] : s_.cols[j].entries) rc -= y(r) * v;
        if (rc < -kReducedCostTol) {
          candidates.push_back({rc, j});
          if (bland) break;
        }
      }
      if (candidates.empty()) return Status::kOptimal;
      if (!bland) {
        std::sort(candidates.begin(), candidates.end());
        if (candidates.size() > 16) candidates.resize(16);
      }

      // fast path: first candidate whose ratio-test pivot is numerically
      // solid; a noise-level pivot on a dependent column would wreck the basis
      int enter = -1, leave = -1;
      Vec d;
      for (const auto& [rc, j] : candidates) {
        Vec dj = binv_ * dense_col(j);
        int li = ratio_test(dj, bland);
        if (li >= 0 && dj(li) >= 1e-7) {
          enter = j;
          leave = li;
          d = std::move(dj);
          break;
        }
      }
      if (enter < 0) {
        // slow path on an exact inverse: weak pivots and unblocked rays are
        // re-judged after refactorization. A ray is believed only when its
        // recomputed objective rate is clearly negative; phase 1 admits no
        // rays at all. Everything else is banned until the next progress.
        refactorize();
        Vec cb2(m_);
        for (int i = 0; i < m_; ++i)
          cb2(i) = phase1 ? s_.cols[basis_[i]].phase1_cost : s_.cols[basis_[i]].cost;
        for (const auto& [rc, j] : candidates) {
          if (banned_[j] || in_basis_[j]) continue;
          Vec dj = binv_ * dense_col(j);
          int li = ratio_test(dj, bland);
          if (li >= 0 && dj(li) >= 1e-7) {
            enter = j;
            leave = li;
            d = std::move(dj);
            break;
          }
          if (li < 0 && !phase1) {
            double cj = s_.cols[j].cost;
            double rate = cj - cb2.dot(dj);
            if (rate < -1e-7 * (1.0 + std::abs(cj))) return Status::kUnbounded;
          }
          banned_[j] = 1;
          ++banned_count_;
        }
        if (enter < 0) continue;  // repriced next round with bans in place
      }
      double theta = std::max(xb_(leave), 0.0) / d(leave);

      xb_ -= theta * d;
      xb_(leave) = theta;
      for (int i = 0; i < m_; ++i)
        if (xb_(i) < 0.0 && xb_(i) > -kFeasTol) xb_(i) = 0.0;
      in_basis_[basis_[leave]] = false;
      in_basis_[enter] = true;
      basis_[leave] = enter;
      double piv = d(leave);
      Eigen::RowVectorXd pivot_row = binv_.row(leave) / piv;
      binv_.noalias() -= d * pivot_row;
      binv_.row(leave) += pivot_row;  // net effect: row(leave) = pivot_row
      if (iterations_ % 64 == 0 || piv < 1e-4 || !xb_.allFinite() ||
          binv_.cwiseAbs().maxCoeff() > 1e12)
        refactorize();
      if (!xb_.allFinite() || !binv_.allFinite())
        throw std::runtime_error("lp: numerical breakdown (finite check)");

      double obj = phase1 ? phase1_objective() : objective();
      if (obj < last_obj - 1e-9 * (1.0 + std::abs(last_obj))) {
        degenerate_streak = 0;
        bland = false;
        last_obj = obj;
        // bans lift only on substantial progress, not micro-steps
        if (banned_count_ > 0 && obj < unban_obj_ - 1e-7 * (1.0 + std::abs(unban_obj_))) {
          std::fill(banned_.begin(), banned_.end(), 0);
          banned_count_ = 0;
          unban_obj_ = obj;
        }
      } else if (++degenerate_streak >= kDegenerateStreak) {
        bland = true;
      }
    }
  }

  // After phase 1, pivot basic artificials onto structural columns where the
  // row allows it; rows that admit none are redundant and keep a zero-valued
  // artificial that phase 2 never re-enters.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!s_.cols[basis_[i]].artificial) continue;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j] || s_.cols[j].artificial) continue;
        Vec d = binv_ * dense_col(j);
        if (std::abs(d(i)) > 1e-7) {
          in_basis_[basis_[i]] = false;
          in_basis_[j] = true;
          basis_[i] = j;
          double piv = d(i);
          Eigen::RowVectorXd pivot_row = binv_.row(i) / piv;
          binv_.noalias() -= d * pivot_row;
          binv_.row(i) += pivot_row;
          xb_ = binv_ * s_.b;
          for (int r = 0; r < m_; ++r)
            if (xb_(r) < 0.0 && xb_(r) > -kFeasTol) xb_(r) = 0.0;
          break;
        }
      }
    }
  }

  const Standard& s_;
  int m_ = 0;
  int n_ = 0;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<char> banned_;
  int banned_count_ = 0;
  double unban_obj_ = 0.0;
  Mat binv_;
  Vec xb_;
  int iterations_ = 0;
  int iter_limit_ = 0;
};

}  // namespace

int Problem::add_var(double cost, bool nonneg, std::string name) {
  objective.push_back(cost);
  nonnegative.push_back(nonneg);
  var_names.push_back(std::move(name));
  return num_vars++;
}

void Problem::add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs) {
  Row r;
  r.terms = std::move(terms);
  r.sense = sense;
  r.rhs = rhs;
  rows.push_back(std::move(r));
}

Solution solve(const Problem& p) {
  for (double c : p.objective)
    if (!std::isfinite(c)) throw std::invalid_argument("lp: non-finite objective");
  for (const auto& row : p.rows) {
    if (!std::isfinite(row.rhs)) throw std::invalid_argument("lp: non-finite rhs");
    for (const auto& [v, a] : row.terms) {
      if (v < 0 || v >= p.num_vars) throw std::invalid_argument("lp: bad var index");
      if (!std::isfinite(a)) throw std::invalid_argument("lp: non-finite coefficient");
    }
  }

  Solution sol;
  if (p.rows.empty()) {
    // Unconstrained: optimal iff objective is zero on all vars.
    bool zero = true;
    for (int v = 0; v < p.num_vars; ++v) {
      double c = p.objective[v];
      if (c != 0.0 && (!p.nonnegative[v] || c < 0.0)) zero = false;
    }
    sol.status = zero ? Status::kOptimal : Status::kUnbounded;
    sol.x = Vec::Zero(p.num_vars);
    return sol;
  }

  Standard s = to_standard(p);
  RevisedSimplex simplex(s);
  sol.status = simplex.run();
  sol.iterations = simplex.iterations();
  if (sol.status == Status::kOptimal) {
    Vec w = simplex.column_values();
    sol.x = Vec::Zero(p.num_vars);
    for (int v = 0; v < p.num_vars; ++v) {
      auto [plus, minus] = s.var_cols[v];
      sol.x(v) = w(plus) - (minus >= 0 ? w(minus) : 0.0);
    }
    sol.objective = 0.0;
    for (int v = 0; v < p.num_vars; ++v) sol.objective += p.objective[v] * sol.x(v);
  }
  return sol;
}

void dump(const Problem& p, std::ostream& os) {
  auto vname = [&](int v) {
    return p.var_names[v].empty() ? "x" + std::to_string(v) : p.var_names[v];
  };
  os << "MINIMIZE\n ";
  for (int v = 0; v < p.num_vars; ++v)
    if (p.objective[v] != 0.0) os << " " << (p.objective[v] >= 0 ? "+" : "") << p.objective[v] << " " << vname(v);
  os << "\nSUBJECT TO\n";
  int idx = 0;
  for (const auto& row : p.rows) {
    os << " r" << idx++ << ":";
    for (const auto& [v, a] : row.terms)
      os << " " << (a >= 0 ? "+" : "") << a << " " << vname(v);
    os << (row.sense == RowSense::kLe ? " <= " : row.sense == RowSense::kGe ? " >= " : " = ");
    os << row.rhs << "\n";
  }
  os << "BOUNDS\n";
  for (int v = 0; v < p.num_vars; ++v)
    os << " " << vname(v) << (p.nonnegative[v] ? " >= 0\n" : " free\n");
  os << "END\n";
}

const char* status_name(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterLimit: return "iteration_limit";
  }
  return "?";
}

}  // namespace pwacert::lp
