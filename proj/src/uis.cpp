#include "pwacert/uis.hpp"

#include <exception>
#include <stdexcept>

#include "pwacert/parallel.hpp"

namespace pwacert::uis {

UisBarrier::Eval UisBarrier::eval(const Vec& x) const {
  if (members.empty()) throw std::logic_error("UisBarrier: no members");
  Eval best;
  bool found = false;
  for (size_t k = 0; k < members.size(); ++k) {
    int cell = members[k].barrier.partition.locate(x, kGeomTol);
    if (cell < 0) continue;
    double v = members[k].barrier.pieces[cell].gradient().dot(x) +
               members[k].barrier.pieces[cell].offset();
    if (!found || v >= best.value) {  // ties go to the larger member index
      best.value = v;
      best.member = static_cast<int>(k);
      best.cell = cell;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("out of domain");
  return best;
}

Vec UisBarrier::active_gradient(const Vec& x) const {
  Eval e = eval(x);
  return members[e.member].barrier.pieces[e.cell].gradient();
}

const geo::Partition& UisBarrier::ensure_product_partition() {
  if (!product) {
    geo::Partition p = members[0].barrier.partition;
    for (size_t k = 1; k < members.size(); ++k)
      p = geo::product_partition(p, members[k].barrier.partition);
    product = std::move(p);
  }
  return *product;
}

UisBarrier uis_sweep(const pwa::PwaFunction& dyn, const std::vector<double>& alpha_grid,
                     const synthesis::SynthesisConfig& cfg, bool parallel) {
  if (alpha_grid.empty()) throw std::invalid_argument("uis_sweep: empty alpha grid");
  for (size_t i = 0; i < alpha_grid.size(); ++i) {
    if (alpha_grid[i] <= 0.0) throw std::invalid_argument("uis_sweep: slopes must be positive");
    if (i > 0 && alpha_grid[i] <= alpha_grid[i - 1])
      throw std::invalid_argument("uis_sweep: grid must be ascending");
  }

  std::vector<synthesis::SynthesisResult> results(alpha_grid.size());
  std::exception_ptr err;
  synthesis::UncertaintyMap unc =
      synthesis::UncertaintyMap::zero(static_cast<int>(dyn.partition.cells.size()));
  parallel_for(
      static_cast<int>(alpha_grid.size()),
      [&](int i) {
        try {
          synthesis::SynthesisConfig c = cfg;
          c.alpha = alpha_grid[i];
          results[i] = synthesis::synthesize(dyn, c, unc);
        } catch (...) {
#pragma omp critical
          if (!err) err = std::current_exception();
        }
      },
      parallel);
  if (err) std::rethrow_exception(err);

  UisBarrier out;
  out.domain = dyn.partition.domain;
  for (auto& r : results) {
    if (!r.certified) continue;
    UisMember m;
    m.barrier = std::move(r.barrier);
    m.alpha = r.alpha;
    m.dynamics = std::move(r.dynamics);
    m.uncertainty = std::move(r.uncertainty);
    out.members.push_back(std::move(m));
  }
  if (out.members.empty())
    throw std::runtime_error("no certified invariant set for any alpha in grid");
  out.alpha_bar.alpha_min = out.members.front().alpha;
  out.alpha_bar.alpha_max = out.members.back().alpha;
  return out;
}

double barrier_condition_residual(const UisBarrier& b, const Vec& flow, const Vec& x) {
  UisBarrier::Eval e = b.eval(x);
  const Vec s = b.members[e.member].barrier.pieces[e.cell].gradient();
  return s.dot(flow) + b.alpha_bar(e.value);
}

std::vector<double> alpha_grid_geometric(double center, int per_side, double factor) {
  if (center <= 0.0 || factor <= 1.0 || per_side < 0)
    throw std::invalid_argument("alpha_grid_geometric: bad parameters");
  std::vector<double> grid;
  for (int i = per_side; i >= 1; --i) grid.push_back(center / std::pow(factor, i));
  grid.push_back(center);
  for (int i = 1; i <= per_side; ++i) grid.push_back(center * std::pow(factor, i));
  return grid;
}

}  // namespace pwacert::uis
