#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilab/analysis.hpp"

namespace ilab {

using json = nlohmann::json;

// ---- JSON ----

json mdp_to_json(const TabularMDP& m);
TabularMDP mdp_from_json(const json& j);

json policy_to_json(const Policy& p);
Policy policy_from_json(const json& j);

json bundle_to_json(const EnvBundle& b);
EnvBundle bundle_from_json(const json& j);

// ---- CSV ----

std::string trajectories_to_csv(const std::vector<Trajectory>& trs);
std::vector<Trajectory> trajectories_from_csv(const std::string& csv);

std::string sweep_to_csv(const SweepResult& sweep);
SweepResult sweep_from_csv(const std::string& csv);

std::string train_report_to_csv(const TrainReport& rep);

std::string exponent_fits_to_csv(const std::vector<std::pair<std::string, std::string>>& keys,
                                 const std::vector<ExponentFit>& fits);

std::string ratio_to_csv(const RatioEstimate& r);
std::string ipm_to_csv(const IpmResult& r);

// demo export: trajectory CSV plus a manifest document
json demo_manifest(const DemoSource& d);
std::string demo_to_csv(const DemoSource& d);
DemoSource demo_from_csv(const std::string& csv, const json& manifest);

// ---- files ----

// write via a temp file in the same directory, then rename
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// stable FNV-1a hash of a canonical JSON dump, hex encoded
std::string config_hash(const json& j);

// deterministic number formatting (round-trip exact)
std::string fmt_double(double v);

}  // namespace ilab
