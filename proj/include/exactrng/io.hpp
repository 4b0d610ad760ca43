#pragma once

// JSON process configs and report serialization.
//
// Probabilities are strings "num/den" (integers may omit the denominator);
// bare JSON integers 0 and 1 are accepted too. Diagnostics name the failing
// field as a JSON path, e.g. "components[1].pmf[0]".

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "exactrng/analysis.hpp"
#include "exactrng/bounds.hpp"
#include "exactrng/interval_alg.hpp"
#include "exactrng/markov.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"
#include "exactrng/sim.hpp"

namespace exactrng {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "exactrng-report/1";
inline constexpr const char* kToolVersion = "1.0.0";

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument("config field '" + field + "': " + what), field_(field) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join_path(path, key), "missing");
  return *it;
}

inline Ratio ratio_field(const Json& v, const std::string& path) {
  try {
    if (v.is_string()) return Ratio::parse(v.get<std::string>());
    if (v.is_number_integer()) return Ratio(v.get<long>());
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a rational string such as \"1/3\"");
}

inline std::vector<Ratio> ratio_vector(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<Ratio> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Ratio r = ratio_field(v[i], p);
    if (r.sign() < 0 || r > Ratio(1)) throw ConfigError(p, "probability outside [0, 1]");
    out.push_back(std::move(r));
  }
  return out;
}

inline void require_sum_one(const std::vector<Ratio>& v, const std::string& path) {
  Ratio s;
  for (const auto& r : v) s += r;
  if (s != Ratio(1)) throw ConfigError(path, "entries sum to " + s.str() + ", not 1");
}

}  // namespace detail

inline ProcessSpec process_from_json(const Json& j, const std::string& path = "") {
  using namespace detail;
  const Json& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError(join_path(path, "kind"), "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "iid") {
    const std::string p = join_path(path, "pmf");
    auto pmf = ratio_vector(require(j, "pmf", path), p);
    require_sum_one(pmf, p);
    return ProcessSpec::iid(std::move(pmf));
  }
  if (k == "markov") {
    const std::string tp = join_path(path, "transition");
    const Json& t = require(j, "transition", path);
    if (!t.is_array() || t.empty()) throw ConfigError(tp, "expected a non-empty array of rows");
    std::vector<std::vector<Ratio>> w;
    for (std::size_t r = 0; r < t.size(); ++r) {
      const std::string rp = tp + "[" + std::to_string(r) + "]";
      auto row = ratio_vector(t[r], rp);
      if (row.size() != t.size()) throw ConfigError(rp, "row length differs from the number of rows");
      require_sum_one(row, rp);
      w.push_back(std::move(row));
    }
    const std::string ip = join_path(path, "initial");
    auto init = ratio_vector(require(j, "initial", path), ip);
    if (init.size() != w.size()) throw ConfigError(ip, "length differs from the transition matrix size");
    require_sum_one(init, ip);
    return ProcessSpec::markov(std::move(w), std::move(init));
  }
  if (k == "mixture") {
    const std::string wp = join_path(path, "weights");
    auto weights = ratio_vector(require(j, "weights", path), wp);
    require_sum_one(weights, wp);
    const std::string cp = join_path(path, "components");
    const Json& comps = require(j, "components", path);
    if (!comps.is_array() || comps.size() != weights.size())
      throw ConfigError(cp, "expected an array with one component per weight");
    std::vector<ProcessSpec> parts;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::string p = cp + "[" + std::to_string(c) + "]";
      parts.push_back(process_from_json(comps[c], p));
      if (parts.back().alphabet_size() != parts.front().alphabet_size())
        throw ConfigError(p, "alphabet differs from the first component");
    }
    try {
      return ProcessSpec::mixture(std::move(weights), std::move(parts));
    } catch (const std::exception& e) {
      throw ConfigError(cp, e.what());
    }
  }
  if (k == "named") {
    const std::string fp = join_path(path, "family");
    const Json& f = require(j, "family", path);
    if (f == "harmonic") return ProcessSpec::named(NamedFamily::harmonic);
    if (f == "quadratic") return ProcessSpec::named(NamedFamily::quadratic);
    throw ConfigError(fp, "unknown family (expected \"harmonic\" or \"quadratic\")");
  }
  throw ConfigError(join_path(path, "kind"), "unknown kind '" + k + "' (expected iid, markov, mixture or named)");
}

inline ProcessSpec process_from_text(const std::string& text, const std::string& origin = "<string>") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", origin + ": malformed JSON: " + e.what());
  }
  return process_from_json(j);
}

inline ProcessSpec load_process(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config '" + file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return process_from_text(ss.str(), file);
  } catch (const ConfigError& e) {
    throw std::invalid_argument(file + ": " + e.what());
  }
}

namespace detail {
inline Json ratio_array(const std::vector<Ratio>& v) {
  Json a = Json::array();
  for (const auto& r : v) a.push_back(r.str());
  return a;
}
}  // namespace detail

inline Json process_to_json(const ProcessSpec& p) {
  using detail::ratio_array;
  if (const auto* k = p.as<IidKind>()) return Json{{"kind", "iid"}, {"pmf", ratio_array(k->pmf)}};
  if (const auto* k = p.as<MarkovKind>()) {
    Json rows = Json::array();
    for (const auto& r : k->transition) rows.push_back(ratio_array(r));
    return Json{{"kind", "markov"}, {"transition", rows}, {"initial", ratio_array(k->initial)}};
  }
  if (const auto* k = p.as<MixtureKind>()) {
    Json comps = Json::array();
    for (const auto& c : k->components) comps.push_back(process_to_json(c));
    return Json{{"kind", "mixture"}, {"weights", ratio_array(k->weights)}, {"components", comps}};
  }
  return Json{{"kind", "named"}, {"family", family_name(p.as<NamedKind>()->family)}};
}

// ---------------------------------------------------------------------------
// Reports

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  Json parameters = Json::object();
  std::string output;
  std::optional<std::uint64_t> seed;
};

inline Json to_json(const RunManifest& m) {
  Json j{{"command", m.command}, {"inputs", m.inputs}, {"parameters", m.parameters}, {"output", m.output},
         {"tool_version", kToolVersion}};
  j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
  return j;
}

inline Json report_envelope(const RunManifest& m) {
  return Json{{"schema", kSchemaVersion}, {"manifest", to_json(m)}};
}

inline Json to_json(const RealValue& v) { return Json{{"value", v.value}, {"error", v.error}}; }

inline std::string symbols_csv(const Sequence& s) { return symbols_text(s, ""); }

inline Json to_json(const OutputLaw& law) {
  Json a = Json::array();
  for (const auto& [y, p] : law) a.push_back(Json{{"y", symbols_csv(y)}, {"prob", p.str()}});
  return a;
}

inline Json to_json(const StoppingProfile& p) {
  Json j{{"n", p.n}, {"m_max", p.m_max()}, {"tail_rate", p.tail_rate.str()},
         {"largest_frontier", p.largest_frontier}, {"frontier_bound", p.boundary_count().str()}};
  j["overflow"] = detail::ratio_array(p.overflow);
  return j;
}

inline Json to_json(const MinEntropyEvidence& e) {
  Json j{{"threshold", e.threshold.str()}, {"never_empty", e.never_empty}};
  j["first_empty_m"] = e.first_empty_m ? Json(*e.first_empty_m) : Json(nullptr);
  if (e.never_empty) j["witness_mass_lower"] = e.witness_mass_lower;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

inline Json to_json(const ValidityReport& r) {
  Json j{{"passed", r.passed}, {"m_max", r.m_max}, {"eps", r.eps.str()}, {"reason", r.reason}};
  j["deficit"] = r.deficit ? Json(r.deficit->str()) : Json(nullptr);
  Json ev = Json::array();
  for (const auto& e : r.evidence) ev.push_back(to_json(e));
  j["min_entropy_evidence"] = ev;
  return j;
}

inline Json to_json(const SpectrumMass& s) {
  return Json{{"m", s.m},
              {"threshold", s.threshold.str()},
              {"mass_below", s.mass_below.str()},
              {"mass_strictly_below", s.mass_strictly_below.str()},
              {"lambda_bits", s.lambda_bits.value},
              {"lambda_error_bits", s.lambda_bits.error}};
}

inline Json to_json(const FLReport& r) {
  return Json{{"m", r.m},
              {"fallback", symbols_csv(r.fallback)},
              {"approx_law", to_json(r.approx_law)},
              {"delta", r.delta.str()},
              {"overflow_at_m", r.overflow_at_m.str()},
              {"delta_within_overflow", r.delta <= r.overflow_at_m}};
}

inline Json to_json(const BoundCheckPoint& p) {
  return Json{{"m", p.m},
              {"lambda_threshold", p.lambda_threshold.str()},
              {"tau_threshold", p.tau_threshold.str()},
              {"overflow", p.overflow.str()},
              {"converse_form1", p.converse.first.str()},
              {"converse_form2", p.converse.second.str()},
              {"achievability", p.achievability.str()},
              {"converse_ok", p.converse_ok},
              {"achievability_ok", p.achievability_ok},
              {"forms_agree", p.forms_agree},
              {"pass", p.converse_ok && p.achievability_ok && p.forms_agree}};
}

inline Json to_json(const BoundCheckReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) pts.push_back(to_json(p));
  return Json{{"points", pts}, {"violations", r.violations()}, {"passed", r.passed()}};
}

inline Json to_json(const SpectrumSummary& s) {
  return Json{{"sup_entropy_bits", to_json(s.sup_entropy)},
              {"inf_entropy_bits", to_json(s.inf_entropy)},
              {"avg_entropy_bits", to_json(s.avg_entropy)},
              {"one_point", s.one_point()}};
}

inline Json to_json(const RatesReport& r) {
  Json j{{"R_int_upper", to_json(r.r_int_upper)},
         {"R_lower", to_json(r.r_lower)},
         {"L_int_upper", to_json(r.l_int_upper)},
         {"L_lower", to_json(r.l_lower)},
         {"coin_one_point", r.coin_one_point},
         {"target_one_point", r.target_one_point}};
  j["R_star"] = r.r_star ? to_json(*r.r_star) : Json(nullptr);
  j["L_star"] = r.l_star ? to_json(*r.l_star) : Json(nullptr);
  return j;
}

inline Json to_json(const SimResult& r) {
  Json j{{"seed", r.config.seed},
         {"trials", r.config.trials},
         {"n", r.config.n},
         {"m_cap", r.config.effective_cap()},
         {"completed_trials", r.completed_trials},
         {"truncated_trials", r.truncated_trials},
         {"truncation_flag", r.truncation_flag()},
         {"mean_T", r.mean_T},
         {"var_T", r.var_T},
         {"mean_T_per_symbol", r.config.n ? r.mean_T / static_cast<double>(r.config.n) : 0.0}};
  j["empirical_overflow"] = r.empirical_overflow();
  Json law = Json::array();
  for (const auto& [y, c] : r.empirical_law) law.push_back(Json{{"y", symbols_csv(y)}, {"count", c}});
  j["empirical_law"] = law;
  return j;
}

inline Json to_json(const EmpiricalSpectrum& s, const std::vector<double>& rate_thresholds = {}) {
  Json hist = Json::array();
  for (const auto& [bin, c] : s.histogram())
    hist.push_back(Json{{"rate_lo_bits", static_cast<double>(bin) * s.bin_width}, {"count", c}});
  Json below = Json::array();
  for (double r : rate_thresholds) below.push_back(Json{{"rate_bits", r}, {"fraction_below", s.fraction_below(r)}});
  return Json{{"length", s.length}, {"trials", s.rates.size()}, {"bin_width_bits", s.bin_width},
              {"histogram", hist}, {"fraction_below", below}};
}

// ---------------------------------------------------------------------------
// Output

/// Writes `content` to `path` through a temporary sibling and a rename, so a
/// failure never leaves a partial file behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp-" + std::to_string(static_cast<unsigned long long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at '" + path + "'");
  }
}

}  // namespace exactrng
