#pragma once

#include "istab/augment.hpp"
#include "istab/certificate.hpp"
#include "istab/comparison.hpp"
#include "istab/envelope.hpp"
#include "istab/metric.hpp"
#include "istab/system.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace istab::io {

using nlohmann::json;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// comparison functions: {"family":"power","c":1.0,"p":2.0},
// KL: {"k":{...},"lambda":1.0}
json to_json(const cmp::KInfFn& f);
json to_json(const cmp::KLFn& f);
cmp::KInfFn k_from_json(const json& j);
cmp::KLFn kl_from_json(const json& j);

// metrics: {"kind":"euclidean"|"weighted"|"pullback", ...}
json to_json(const met::Metric& m);
met::Metric metric_from_json(const json& j, int dim);

json to_json(const met::SetDescriptor& s);
met::SetDescriptor set_from_json(const json& j);

// system files: {"name":...,"state_dim":n,"input_dim":m,
//                "input_set":{...},"field":[...]}
json to_json(const sys::ControlSystem& system);
sys::ControlSystem system_from_json(const json& j);
sys::ControlSystem load_system(const std::string& path);

// augmented systems, with explicit "sat"/"rho_dist" nodes in iss mode
json to_json(const aug::AugmentedSystem& asys);

// certificates: {"V":...,"metric":{...},"alpha_lo":{...},"alpha_hi":{...},
//                "kappa":...,"sigma":{...}?,"set":{...}?}
json to_json(const cert::GasCertificate& c, int n);
json to_json(const cert::IssCertificate& c, int n);
cert::GasCertificate gas_certificate_from_json(const json& j, int n);
cert::IssCertificate iss_certificate_from_json(const json& j, int n);
cert::UgasCertificate ugas_certificate_from_json(const json& j, int n);
json load_json(const std::string& path);

json to_json(const cert::CheckReport& r);
json to_json(const cert::Counterexample& c);
json to_json(const envl::EnvelopeFit& fit);

// trajectory CSV: header t,x1..xn, one row per step
void write_trajectory_csv(std::ostream& os, const sys::Trajectory& traj);
// ensemble trace CSV: pair_id,t,r0,distance
void write_trace_csv(std::ostream& os, const std::vector<envl::TraceSample>& traces);

void write_text_file(const std::string& path, const std::string& content);

} // namespace istab::io
