#pragma once

#include "lstdlab/analyzer.hpp"

#include <nlohmann/json.hpp>
#include <string>

namespace lstdlab {

using Json = nlohmann::ordered_json;

MdpInstance instance_from_json(const Json& j);
Json instance_to_json(const MdpInstance& mdp);

FeatureMap features_from_json(const Json& j);

// Reads {"h", "gamma", "P", "R", "mu", "Phi"} and returns the instance and features.
std::pair<MdpInstance, FeatureMap> load_instance(const std::string& path);
void save_instance(const std::string& path, const MdpInstance& mdp, const FeatureMap& features);

// Records {"s", "a", "r", "sp", "ap"}; optional top-level "num_actions" (default 1)
// flattens pairs as s * num_actions + a.
BatchDataset dataset_from_json(const Json& j);
BatchDataset load_dataset(const std::string& path);

Json verdict_to_json(const ConvergenceVerdict& v);
Json trace_to_json(const IterationTrace& trace);
Json transition_to_json(const TransitionReport& rep);

Json matrix_to_json(const Matrix& m);
Json vector_to_json(const Vector& v);
Matrix matrix_from_json(const Json& j);
Vector vector_from_json(const Json& j);

// Round every float in the tree to 12 significant digits.
double round_sig(double x);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace lstdlab
