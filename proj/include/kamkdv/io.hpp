#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kamkdv/nashmoser.hpp"

namespace kamkdv {

using json = nlohmann::json;

struct RunConfig {
  // sites
  int nu = 2;
  int start = 1;
  std::vector<int> s_plus;  // explicit S+, overrides (nu, start)
  // params
  double eps = 1e-3;
  double a = defaults::a_exp;
  double tau = 0.0;  // 0 selects nu + 2
  std::vector<double> xi, omega;
  // truncation
  int L = 7, J = 24, M = 0, Nx = 0;
  // nonlinearity
  NonlinearitySpec nonlinearity = NonlinearitySpec::ux5();
  // solver
  std::string mode = "newton";
  double tol = defaults::newton_tol;
  int max_iter = defaults::newton_max_iter;
  double N0 = 0.0;  // nash-moser first cutoff; 0 derives it from the constants
  int stages = 3;
  double mu = 0.0;  // loss of derivatives; 0 selects tau + 2
  double C1 = 1.0;
  // measure
  int samples = defaults::mc_samples;
  std::uint64_t seed = defaults::mc_seed;
  int Lmax = 0, Jmax = 0;  // 0 selects the truncation bounds
  std::vector<double> gamma_scales = {1.0};
  // output
  std::string output = "run";

  SiteSet sites() const;
  Params params() const;
  Truncation truncation() const;
};

// Schema validation; throws Error("config: ...") on violations.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::filesystem::path& p);
// Normalized form with derived constants recomputed.
json config_to_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

// Atomic writers: content goes to a temporary sibling and is renamed into place.
void write_text_atomic(const std::filesystem::path& p, const std::string& text);
void write_json_atomic(const std::filesystem::path& p, const json& j);
void write_field_atomic(const std::filesystem::path& p, const FourierField& u);

std::string format_double(double v);

// JSON forms: fields as {nu, L, J, zero_mean, re, im} in (l, j) order; polynomials as sorted [tuple, [re, im]] pairs.
json field_to_json(const FourierField& u);
FourierField field_from_json(const json& j);
json poly_to_json(const HomogPoly& P);
HomogPoly poly_from_json(const json& j);
std::string norms_csv(const std::vector<IterationLog>& h);
std::string spectrum_csv(const Spectrum& s);
json melnikov_json(const MelnikovReport& m);
json cantor_json(const std::vector<double>& gammas, const std::vector<CantorResult>& r);
json verify_json(const VerifyReport& v);
json manifest_json(const RunConfig& c, const std::vector<std::string>& artifacts);

// Parses a thread cap from a flag value or KAMKDV_THREADS; returns 0 when unset.
int thread_cap(int flag_value);

}  // namespace kamkdv
