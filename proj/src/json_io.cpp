#include "istab/json_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace istab::io {

namespace {

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw IoError(std::string("missing or non-string field '") + key + "'");
  return j.at(key).get<std::string>();
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw IoError(std::string("missing or non-numeric field '") + key + "'");
  return j.at(key).get<double>();
}

std::vector<double> number_array(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw IoError(std::string("missing or non-array field '") + key + "'");
  return j.at(key).get<std::vector<double>>();
}

} // namespace

json to_json(const cmp::KInfFn& f) {
  switch (f.family) {
    case cmp::KInfFn::Family::Linear:
      return {{"family", "linear"}, {"c", f.c}};
    case cmp::KInfFn::Family::Power:
      return {{"family", "power"}, {"c", f.c}, {"p", f.p}};
    case cmp::KInfFn::Family::AffineLog:
      return {{"family", "affine_log"}, {"c", f.c}};
  }
  throw IoError("corrupt K-function family");
}

json to_json(const cmp::KLFn& f) {
  return {{"k", to_json(f.k)}, {"lambda", f.lambda}};
}

cmp::KInfFn k_from_json(const json& j) {
  std::string family = require_string(j, "family");
  double c = require_number(j, "c");
  if (family == "linear") return cmp::linear_k(c);
  if (family == "power") return cmp::power_k(c, require_number(j, "p"));
  if (family == "affine_log") return cmp::affine_log_k(c);
  throw IoError("unknown K-function family '" + family + "'");
}

cmp::KLFn kl_from_json(const json& j) {
  if (!j.contains("k")) throw IoError("KL function needs a 'k' member");
  return cmp::KLFn{k_from_json(j.at("k")), require_number(j, "lambda")};
}

json to_json(const met::Metric& m) {
  switch (m.kind()) {
    case met::Metric::Kind::Euclidean:
      return {{"kind", "euclidean"}};
    case met::Metric::Kind::Weighted:
      return {{"kind", "weighted"}, {"P", m.weights()}};
    case met::Metric::Kind::Pullback: {
      json map = json::array();
      for (const auto& component : m.map())
        map.push_back(expr::print(component));
      return {{"kind", "pullback"}, {"map", map}};
    }
    case met::Metric::Kind::Product:
      return {{"kind", "product"}, {"base", to_json(m.base())}};
  }
  throw IoError("corrupt metric kind");
}

met::Metric metric_from_json(const json& j, int dim) {
  std::string kind = require_string(j, "kind");
  if (kind == "euclidean") return met::Metric::euclidean(dim);
  if (kind == "weighted") {
    if (!j.contains("P") || !j.at("P").is_array())
      throw IoError("weighted metric needs a matrix field 'P'");
    auto P = j.at("P").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(P.size()) != dim)
      throw IoError("weight matrix dimension does not match the state dimension");
    return met::Metric::weighted(std::move(P));
  }
  if (kind == "pullback") {
    if (!j.contains("map") || !j.at("map").is_array())
      throw IoError("pullback metric needs an expression array field 'map'");
    std::vector<expr::NodePtr> map;
    for (const auto& component : j.at("map"))
      map.push_back(expr::parse(component.get<std::string>(), expr::Dims{dim, 0}));
    return met::Metric::pullback(std::move(map), dim);
  }
  throw IoError("unknown metric kind '" + kind + "'");
}

json to_json(const met::SetDescriptor& s) {
  switch (s.kind) {
    case met::SetDescriptor::Kind::Point:
      return {{"kind", "point"}, {"point", s.point}};
    case met::SetDescriptor::Kind::Diagonal:
      return {{"kind", "diagonal"}};
    case met::SetDescriptor::Kind::Box:
      return {{"kind", "box"}, {"lo", s.lo}, {"hi", s.hi}};
  }
  throw IoError("corrupt set descriptor");
}

met::SetDescriptor set_from_json(const json& j) {
  std::string kind = require_string(j, "kind");
  if (kind == "point") return met::SetDescriptor::point_set(number_array(j, "point"));
  if (kind == "diagonal") return met::SetDescriptor::diagonal();
  if (kind == "box")
    return met::SetDescriptor::box(number_array(j, "lo"), number_array(j, "hi"));
  throw IoError("unknown set kind '" + kind + "'");
}

namespace {

json input_set_to_json(const sys::InputSet& set) {
  if (set.type == sys::InputSet::Type::Box)
    return {{"type", "box"}, {"lo", set.lo}, {"hi", set.hi}};
  return {{"type", "ball"}, {"dim", set.ball_dim}, {"radius", set.radius}};
}

sys::InputSet input_set_from_json(const json& j) {
  std::string type = require_string(j, "type");
  if (type == "box")
    return sys::InputSet::box(number_array(j, "lo"), number_array(j, "hi"));
  if (type == "ball")
    return sys::InputSet::ball(static_cast<int>(require_number(j, "dim")),
                               require_number(j, "radius"));
  throw IoError("unknown input set type '" + type + "'");
}

} // namespace

json to_json(const sys::ControlSystem& system) {
  json field = json::array();
  for (const auto& component : system.field)
    field.push_back(expr::print(component));
  json j = {{"name", system.name},
            {"state_dim", system.n},
            {"input_dim", system.m},
            {"field", field}};
  if (system.m > 0) j["input_set"] = input_set_to_json(system.input_set);
  return j;
}

sys::ControlSystem system_from_json(const json& j) {
  int n = static_cast<int>(require_number(j, "state_dim"));
  int m = static_cast<int>(require_number(j, "input_dim"));
  std::string name = j.contains("name") ? j.at("name").get<std::string>() : "";
  sys::InputSet set = m > 0 ? input_set_from_json(j.at("input_set"))
                            : sys::InputSet::empty();
  if (!j.contains("field") || !j.at("field").is_array())
    throw IoError("system needs an expression array field 'field'");
  std::vector<std::string> field;
  for (const auto& component : j.at("field"))
    field.push_back(component.get<std::string>());
  return sys::make_system(std::move(name), n, m, std::move(set), field);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

sys::ControlSystem load_system(const std::string& path) {
  return system_from_json(load_json(path));
}

json to_json(const aug::AugmentedSystem& asys) {
  json j = {{"mode", asys.mode == aug::AugmentMode::Gas ? "gas" : "iss"},
            {"base", to_json(asys.base)},
            {"state_dim", asys.state_dim()},
            {"input_dim", asys.input_dim()}};
  if (asys.mode == aug::AugmentMode::Gas) {
    json field = json::array();
    for (int copy = 0; copy < 2; ++copy)
      for (const auto& component : asys.base.field)
        field.push_back(
            json{{"apply", expr::print(component)},
                 {"state_block", copy == 0 ? "x1" : "x2"},
                 {"input", "shared"}});
    j["field"] = field;
  } else {
    // explicit sat / rho_dist nodes keep the construction inspectable
    json field = json::array();
    for (int copy = 0; copy < 2; ++copy)
      for (const auto& component : asys.base.field)
        field.push_back(json{
            {"apply", expr::print(component)},
            {"state_block", copy == 0 ? "x1" : "x2"},
            {"input",
             json{{"sat",
                   json{{"arg", copy == 0 ? "w1 + rho_dist*w2" : "w1 - rho_dist*w2"},
                        {"set", input_set_to_json(asys.base.input_set)}}}}}});
    j["field"] = field;
    j["rho_dist"] = json{{"rho", to_json(*asys.rho)}, {"metric", to_json(*asys.metric)}};
    j["input_domain"] = "U x B1(0)";
  }
  return j;
}

json to_json(const cert::GasCertificate& c, int) {
  return {{"V", expr::print(c.V)},
          {"metric", to_json(c.d)},
          {"alpha_lo", to_json(c.alpha_lo)},
          {"alpha_hi", to_json(c.alpha_hi)},
          {"kappa", c.kappa}};
}

json to_json(const cert::IssCertificate& c, int n) {
  json j = to_json(c.gas, n);
  j["sigma"] = to_json(c.sigma);
  return j;
}

cert::GasCertificate gas_certificate_from_json(const json& j, int n) {
  cert::GasCertificate c;
  c.V = expr::parse(require_string(j, "V"), expr::Dims{n, 0});
  c.d = metric_from_json(j.at("metric"), n);
  c.alpha_lo = k_from_json(j.at("alpha_lo"));
  c.alpha_hi = k_from_json(j.at("alpha_hi"));
  c.kappa = require_number(j, "kappa");
  if (c.kappa <= 0.0) throw IoError("certificate kappa must be positive");
  return c;
}

cert::IssCertificate iss_certificate_from_json(const json& j, int n) {
  cert::IssCertificate c;
  c.gas = gas_certificate_from_json(j, n);
  if (!j.contains("sigma")) throw IoError("ISS certificate needs a 'sigma' member");
  c.sigma = k_from_json(j.at("sigma"));
  return c;
}

cert::UgasCertificate ugas_certificate_from_json(const json& j, int n) {
  cert::UgasCertificate c;
  c.V = expr::parse(require_string(j, "V"), expr::Dims{n, 0});
  c.d = metric_from_json(j.at("metric"), n);
  if (!j.contains("set")) throw IoError("UGAS certificate needs a 'set' member");
  c.A = set_from_json(j.at("set"));
  c.alpha_lo = k_from_json(j.at("alpha_lo"));
  c.alpha_hi = k_from_json(j.at("alpha_hi"));
  c.kappa = require_number(j, "kappa");
  if (c.kappa <= 0.0) throw IoError("certificate kappa must be positive");
  return c;
}

namespace {

json witness_to_json(const cert::Witness& w) {
  json j = json::object();
  if (!w.x.empty()) j["x"] = w.x;
  if (!w.y.empty()) j["y"] = w.y;
  if (!w.u.empty()) j["u"] = w.u;
  if (!w.v.empty()) j["v"] = w.v;
  return j;
}

} // namespace

json to_json(const cert::CheckReport& r) {
  return {{"condition", r.condition},
          {"verdict", r.pass ? "pass" : "fail"},
          {"worst_violation", r.worst_violation},
          {"witness", witness_to_json(r.witness)},
          {"samples", r.samples},
          {"seed", r.seed},
          {"evidence", "empirical, sampled"}};
}

json to_json(const cert::Counterexample& c) {
  return {{"witness", witness_to_json(c.witness)},
          {"margin", c.margin},
          {"seed", c.seed},
          {"samples_used", c.samples_used}};
}

json to_json(const envl::EnvelopeFit& fit) {
  json j = {{"verdict", fit.verdict},
            {"max_residual", fit.max_residual},
            {"pairs", fit.pairs},
            {"samples", fit.samples},
            {"seed", fit.seed},
            {"evidence", "empirical, sampled"}};
  if (fit.beta_found) j["beta"] = to_json(fit.beta);
  if (fit.gamma_found) j["gamma"] = to_json(fit.gamma);
  if (fit.gamma_max_found) j["gamma_max_form"] = to_json(fit.gamma_max);
  return j;
}

void write_trajectory_csv(std::ostream& os, const sys::Trajectory& traj) {
  os << "t";
  if (!traj.states.empty())
    for (std::size_t i = 0; i < traj.states.front().size(); ++i)
      os << ",x" << (i + 1);
  os << "\n";
  os.precision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (double value : traj.states[k]) os << "," << value;
    os << "\n";
  }
}

void write_trace_csv(std::ostream& os, const std::vector<envl::TraceSample>& traces) {
  os << "pair_id,t,r0,distance\n";
  os.precision(17);
  for (const auto& s : traces)
    os << s.pair_id << "," << s.t << "," << s.r0 << "," << s.dist << "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file '" + path + "'");
  out << content;
}

} // namespace istab::io
