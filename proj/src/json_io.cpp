#include "lstdlab/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lstdlab {

double round_sig(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  double mag = std::pow(10.0, 11 - std::floor(std::log10(std::abs(x))));
  return std::round(x * mag) / mag;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(round_sig(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(round_sig(v(i)));
  return arr;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw std::invalid_argument("matrix_from_json: expected an array of rows");
  }
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw std::invalid_argument("matrix_from_json: ragged rows");
    for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("vector_from_json: expected an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

MdpInstance instance_from_json(const Json& j) {
  for (const char* key : {"h", "gamma", "P", "R", "mu"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("instance_from_json: missing field ") + key);
    }
  }
  MdpInstance mdp;
  mdp.h = j.at("h").get<int>();
  mdp.gamma = j.at("gamma").get<double>();
  mdp.P = matrix_from_json(j.at("P"));
  mdp.R = vector_from_json(j.at("R"));
  mdp.mu = vector_from_json(j.at("mu"));
  if (mdp.P.rows() != mdp.h || mdp.P.cols() != mdp.h || mdp.R.size() != mdp.h ||
      mdp.mu.size() != mdp.h) {
    throw std::invalid_argument("instance_from_json: dimensions disagree with h");
  }
  mdp.validate();
  return mdp;
}

Json instance_to_json(const MdpInstance& mdp) {
  Json j;
  j["h"] = mdp.h;
  j["gamma"] = round_sig(mdp.gamma);
  j["P"] = matrix_to_json(mdp.P);
  j["R"] = vector_to_json(mdp.R);
  j["mu"] = vector_to_json(mdp.mu);
  return j;
}

FeatureMap features_from_json(const Json& j) {
  if (!j.contains("Phi")) throw std::invalid_argument("features_from_json: missing field Phi");
  return FeatureMap::from(matrix_from_json(j.at("Phi")));
}

std::pair<MdpInstance, FeatureMap> load_instance(const std::string& path) {
  Json j = read_json(path);
  MdpInstance mdp = instance_from_json(j);
  FeatureMap features = features_from_json(j);
  if (features.Phi.rows() != mdp.h) {
    throw std::invalid_argument("load_instance: Phi row count disagrees with h");
  }
  return {mdp, features};
}

void save_instance(const std::string& path, const MdpInstance& mdp, const FeatureMap& features) {
  Json j = instance_to_json(mdp);
  j["Phi"] = matrix_to_json(features.Phi);
  write_json(path, j);
}

BatchDataset dataset_from_json(const Json& j) {
  if (!j.contains("records") || !j.at("records").is_array()) {
    throw std::invalid_argument("dataset_from_json: missing records array");
  }
  int num_actions = j.value("num_actions", 1);
  if (num_actions < 1) throw std::invalid_argument("dataset_from_json: num_actions must be >= 1");
  BatchDataset ds;
  int max_state = -1;
  for (const Json& rec : j.at("records")) {
    for (const char* key : {"s", "a", "r", "sp", "ap"}) {
      if (!rec.contains(key)) {
        throw std::invalid_argument(std::string("dataset_from_json: record missing field ") + key);
      }
    }
    int s = rec.at("s").get<int>();
    int a = rec.at("a").get<int>();
    int sp = rec.at("sp").get<int>();
    int ap = rec.at("ap").get<int>();
    if (s < 0 || sp < 0 || a < 0 || a >= num_actions || ap < 0 || ap >= num_actions) {
      throw std::invalid_argument("dataset_from_json: record indices out of range");
    }
    Transition tr;
    tr.sa = s * num_actions + a;
    tr.sa_next = sp * num_actions + ap;
    tr.reward = rec.at("r").get<double>();
    ds.samples.push_back(tr);
    max_state = std::max({max_state, s, sp});
  }
  if (ds.samples.empty()) throw std::invalid_argument("dataset_from_json: empty dataset");
  ds.num_pairs = (max_state + 1) * num_actions;
  if (j.contains("num_pairs")) {
    int declared = j.at("num_pairs").get<int>();
    if (declared < ds.num_pairs) {
      throw std::invalid_argument("dataset_from_json: num_pairs smaller than observed indices");
    }
    ds.num_pairs = declared;
  }
  return ds;
}

BatchDataset load_dataset(const std::string& path) { return dataset_from_json(read_json(path)); }

Json verdict_to_json(const ConvergenceVerdict& v) {
  Json j;
  j["algorithm"] = to_string(v.algorithm);
  j["prediction"] = to_string(v.prediction);
  Json conds = Json::array();
  for (const ConditionCheck& c : v.conditions) {
    Json jc;
    jc["name"] = c.name;
    jc["holds"] = c.holds;
    jc["citation"] = c.citation;
    conds.push_back(jc);
  }
  j["conditions"] = conds;
  j["specializations"] = v.specializations;
  if (v.alpha_interval) {
    j["alpha_interval"] = Json::array({round_sig(v.alpha_interval->first),
                                       round_sig(v.alpha_interval->second)});
  }
  if (v.predicted_limit) {
    Json lim;
    lim["particular"] = vector_to_json(v.predicted_limit->particular);
    lim["kernel_projector"] = matrix_to_json(v.predicted_limit->kernel_projector);
    j["predicted_limit"] = lim;
  }
  return j;
}

Json trace_to_json(const IterationTrace& trace) {
  Json j;
  switch (trace.status) {
    case RunStatus::converged: j["status"] = "converged"; break;
    case RunStatus::diverged: j["status"] = "diverged"; break;
    case RunStatus::max_iters: j["status"] = "max_iters"; break;
  }
  j["iterations"] = trace.step_norms.size();
  if (trace.limit) j["limit"] = vector_to_json(*trace.limit);
  Json its = Json::array();
  for (const Vector& v : trace.iterates) its.push_back(vector_to_json(v));
  j["iterates"] = its;
  Json res = Json::array();
  for (double r : trace.residuals) res.push_back(round_sig(r));
  j["residuals"] = res;
  return j;
}

Json transition_to_json(const TransitionReport& rep) {
  Json j;
  j["td_stable"] = rep.td_stable;
  Json eps = Json::array();
  for (const auto& [t, e] : rep.epsilon_t) {
    Json row;
    row["t"] = t;
    row["alpha_upper_bound"] = round_sig(e);
    eps.push_back(row);
  }
  j["epsilon_by_t"] = eps;
  Json th = Json::array();
  for (const auto& [alpha, tmin] : rep.t_threshold) {
    Json row;
    row["alpha"] = round_sig(alpha);
    if (tmin) {
      row["smallest_convergent_t"] = *tmin;
    } else {
      row["smallest_convergent_t"] = nullptr;
    }
    th.push_back(row);
  }
  j["threshold_by_alpha"] = th;
  return j;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_json: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("read_json: " + path + ": " + e.what());
  }
  return j;
}

}  // namespace lstdlab
