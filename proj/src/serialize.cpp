#include "pwacert/serialize.hpp"

#include <fstream>

namespace pwacert::serialize {

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return rows;
}

Mat mat_from_json(const json& j, int cols_hint = -1) {
  int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j[0].size()) : std::max(0, cols_hint);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

}  // namespace

json to_json(const geo::Polytope& p) {
  json j;
  j["dim"] = p.dim;
  json hs = json::array();
  for (int r = 0; r < p.num_halfspaces(); ++r) {
    json row = json::array();
    for (int d = 0; d < p.dim; ++d) row.push_back(p.E(r, d));
    row.push_back(p.e(r));
    hs.push_back(row);
  }
  j["halfspaces"] = hs;
  json vs = json::array();
  for (const auto& v : p.vertices) vs.push_back(vec_to_json(v));
  j["vertices"] = vs;
  return j;
}

geo::Polytope polytope_from_json(const json& j) {
  int dim = j.at("dim").get<int>();
  const auto& hs = j.at("halfspaces");
  Mat E(static_cast<int>(hs.size()), dim);
  Vec e(static_cast<int>(hs.size()));
  for (size_t r = 0; r < hs.size(); ++r) {
    for (int d = 0; d < dim; ++d) E(static_cast<int>(r), d) = hs[r][d].get<double>();
    e(static_cast<int>(r)) = hs[r][dim].get<double>();
  }
  geo::Polytope p;
  p.dim = dim;
  p.E = std::move(E);  // preserve values bit-exactly: no renormalization
  p.e = std::move(e);
  for (const auto& v : j.at("vertices")) p.vertices.push_back(vec_from_json(v));
  return p;
}

json to_json(const geo::Partition& p) {
  json j;
  j["domain"] = to_json(p.domain);
  json cells = json::array();
  for (const auto& c : p.cells) cells.push_back(to_json(c));
  j["cells"] = cells;
  return j;
}

geo::Partition partition_from_json(const json& j) {
  std::vector<geo::Polytope> cells;
  for (const auto& c : j.at("cells")) cells.push_back(polytope_from_json(c));
  return geo::Partition::build(std::move(cells), polytope_from_json(j.at("domain")));
}

json to_json(const pwa::ReluNetwork& net) {
  json j;
  j["W1"] = mat_to_json(net.W1);
  j["b1"] = vec_to_json(net.b1);
  j["W2"] = mat_to_json(net.W2);
  j["b2"] = vec_to_json(net.b2);
  return j;
}

pwa::ReluNetwork network_from_json(const json& j) {
  pwa::ReluNetwork net;
  net.W1 = mat_from_json(j.at("W1"));
  net.b1 = vec_from_json(j.at("b1"));
  net.W2 = mat_from_json(j.at("W2"));
  net.b2 = vec_from_json(j.at("b2"));
  if (net.W1.rows() != net.b1.size() || net.W2.cols() != net.W1.rows() ||
      net.W2.rows() != net.b2.size())
    throw std::invalid_argument("network_from_json: inconsistent shapes");
  return net;
}

json to_json(const pwa::PwaFunction& f) {
  json j;
  j["partition"] = to_json(f.partition);
  j["out_dim"] = f.out_dim;
  json pieces = json::array();
  for (const auto& p : f.pieces) {
    json piece;
    piece["A"] = mat_to_json(p.A);
    piece["a"] = vec_to_json(p.a);
    pieces.push_back(piece);
  }
  j["pieces"] = pieces;
  return j;
}

pwa::PwaFunction pwa_from_json(const json& j) {
  pwa::PwaFunction f;
  f.partition = partition_from_json(j.at("partition"));
  f.out_dim = j.at("out_dim").get<int>();
  for (const auto& piece : j.at("pieces")) {
    pwa::AffinePiece p;
    p.A = mat_from_json(piece.at("A"));
    p.a = vec_from_json(piece.at("a"));
    f.pieces.push_back(std::move(p));
  }
  if (f.pieces.size() != f.partition.cells.size())
    throw std::invalid_argument("pwa_from_json: piece/cell count mismatch");
  return f;
}

json to_json(const uis::UisBarrier& b) {
  json j;
  j["domain"] = to_json(b.domain);
  j["alpha_min"] = b.alpha_bar.alpha_min;
  j["alpha_max"] = b.alpha_bar.alpha_max;
  json members = json::array();
  for (const auto& m : b.members) {
    json jm;
    jm["alpha"] = m.alpha;
    jm["barrier"] = to_json(m.barrier);
    members.push_back(jm);
  }
  j["members"] = members;
  return j;
}

uis::UisBarrier barrier_from_json(const json& j) {
  uis::UisBarrier b;
  b.domain = polytope_from_json(j.at("domain"));
  b.alpha_bar.alpha_min = j.at("alpha_min").get<double>();
  b.alpha_bar.alpha_max = j.at("alpha_max").get<double>();
  for (const auto& jm : j.at("members")) {
    uis::UisMember m;
    m.alpha = jm.at("alpha").get<double>();
    m.barrier = pwa_from_json(jm.at("barrier"));
    b.members.push_back(std::move(m));
  }
  if (b.members.empty()) throw std::invalid_argument("barrier_from_json: no members");
  return b;
}

json to_json(const synthesis::SynthesisResult& r, const synthesis::SynthesisConfig& cfg) {
  json j;
  j["alpha"] = r.alpha;
  j["certified"] = r.certified;
  j["objective"] = r.objective;
  j["barrier"] = to_json(r.barrier);
  j["slack_boundary"] = vec_to_json(r.slack_boundary);
  j["slack_interior"] = vec_to_json(r.slack_interior);
  j["config"] = {{"eps1", cfg.eps1},
                 {"eps2", cfg.eps2},
                 {"eps3", cfg.eps3},
                 {"max_refinements", cfg.max_refinements},
                 {"slack_tol", cfg.slack_tol}};
  j["stats"] = {{"lp_iterations", r.stats.iterations},
                {"rows", r.stats.rows},
                {"cols", r.stats.cols},
                {"refinements", r.stats.refinements},
                {"infeasible_retries", r.stats.infeasible_retries}};
  return j;
}

json to_json(const std::vector<verify::VerificationOutcome>& outcomes) {
  json arr = json::array();
  for (const auto& oc : outcomes) {
    json j;
    j["cell"] = oc.cell_id;
    j["member"] = oc.member_id;
    j["phi_star"] = oc.phi_star;
    j["witness"] = vec_to_json(oc.witness);
    j["lambda"] = vec_to_json(oc.lambda_star);
    j["status"] = oc.status == verify::VerificationOutcome::Status::kVerified ? "verified"
                  : oc.status == verify::VerificationOutcome::Status::kCounterexample
                      ? "counterexample"
                      : "solver_failure";
    j["restarts"] = oc.restarts_used;
    if (oc.mismatch.size() > 0) j["mismatch"] = vec_to_json(oc.mismatch);
    arr.push_back(j);
  }
  return arr;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  is >> j;
  return j;
}

void write_trajectory_csv(const std::string& path, const dynamics::Trajectory& traj, int n,
                          int m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= m; ++i) os << ",u" << i;
  os << ",h\n";
  os.precision(17);
  for (const auto& pt : traj.points) {
    os << pt.t;
    for (int i = 0; i < n; ++i) os << "," << pt.x(i);
    for (int i = 0; i < m; ++i) os << "," << pt.u(i);
    os << "," << pt.h << "\n";
  }
}

}  // namespace pwacert::serialize
