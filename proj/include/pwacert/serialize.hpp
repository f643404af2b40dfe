#pragma once

#include <string>

#include <json.hpp>

#include "pwacert/dynamics.hpp"
#include "pwacert/synthesis.hpp"
#include "pwacert/uis.hpp"
#include "pwacert/verify.hpp"

namespace pwacert::serialize {

using json = nlohmann::json;

json to_json(const geo::Polytope& p);
geo::Polytope polytope_from_json(const json& j);

json to_json(const geo::Partition& p);
geo::Partition partition_from_json(const json& j);

json to_json(const pwa::ReluNetwork& net);
pwa::ReluNetwork network_from_json(const json& j);

json to_json(const pwa::PwaFunction& f);
pwa::PwaFunction pwa_from_json(const json& j);

json to_json(const uis::UisBarrier& b);
uis::UisBarrier barrier_from_json(const json& j);

json to_json(const synthesis::SynthesisResult& r, const synthesis::SynthesisConfig& cfg);

json to_json(const std::vector<verify::VerificationOutcome>& outcomes);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

// CSV with columns t, x1..xn, u1..um, h.
void write_trajectory_csv(const std::string& path, const dynamics::Trajectory& traj, int n, int m);

}  // namespace pwacert::serialize
