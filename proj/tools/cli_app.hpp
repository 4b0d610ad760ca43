#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 2 usage or config error, 3 internal invariant
// failure, 4 validity failure or bound violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exactrng/exactrng.hpp"

namespace exactrng::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kExitValidity = 4;

class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// "1,2,1" (1-based) -> 0-based symbols.
inline Sequence parse_symbols(const std::string& text, std::size_t alphabet, const std::string& what) {
  Sequence out;
  if (text.empty() || text == "-") return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      if (v < 1 || static_cast<std::size_t>(v) > alphabet)
        throw UsageError(what + ": symbol " + tok + " outside 1.." + std::to_string(alphabet));
      out.push_back(static_cast<Symbol>(v - 1));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError(what + ": malformed symbol '" + tok + "'");
    }
  }
  return out;
}

/// Thresholds from integer bit counts (2^-k) plus explicit rationals.
inline std::vector<Ratio> thresholds_from(const std::vector<std::string>& bits, const std::vector<std::string>& rats,
                                          const std::string& what) {
  std::vector<Ratio> out;
  for (const auto& b : bits) {
    Ratio r;
    try {
      r = Ratio::parse(b);
    } catch (const std::exception& e) {
      throw UsageError(what + "-bits: " + e.what());
    }
    if (!r.is_integer() || r.sign() < 0 || !r.num().fits_ulong_p())
      throw UsageError(what + "-bits: '" + b + "' must be a non-negative integer so that 2^-bits is exact; "
                       "use an explicit rational threshold otherwise");
    out.push_back(dyadic(r.num().get_ui()));
  }
  for (const auto& s : rats) {
    Ratio r;
    try {
      r = Ratio::parse(s);
    } catch (const std::exception& e) {
      throw UsageError(what + " threshold: " + e.what());
    }
    if (r.sign() <= 0 || r > Ratio(1)) throw UsageError(what + " threshold '" + s + "' must lie in (0, 1]");
    out.push_back(r);
  }
  return out;
}

struct Options {
  std::string coin, target, out, format = "json";
  std::size_t n = 1;
  std::size_t m_max = 40;
  std::vector<std::size_t> ms;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 10000;
  std::size_t m_cap = 0;
  unsigned workers = 1;
  std::vector<std::string> lambda_bits, tau_bits, lambda_thr, tau_thr, thresholds;
  std::string eps = "1/1048576";
  std::string fallback;
  std::string coin_stream;
  bool transcript = false;
  std::size_t depth = 8;
  double bin_width = 0.01;
  std::vector<double> rate_cuts;
};

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Exact conversion between random processes with the interval algorithm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    auto common = [&](CLI::App* c, bool need_target = true) {
      c->add_option("--coin", o_.coin, "coin process config (JSON)")->required()->check(CLI::ExistingFile);
      auto* t = c->add_option("--target", o_.target, "target process config (JSON)")->check(CLI::ExistingFile);
      if (need_target) t->required();
      c->add_option("--out", o_.out, "write the report to this file instead of stdout");
      c->add_option("--format", o_.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
    };

    auto* gen = app.add_subcommand("generate", "run the interval algorithm on one coin realization");
    common(gen);
    gen->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", o_.seed, "sample the coin from its own law with this seed");
    gen->add_option("--coin-stream", o_.coin_stream, "explicit coin symbols, 1-based, comma separated");
    gen->add_option("--m-cap", o_.m_cap, "coin budget when sampling (default 10^6 n)");
    gen->add_flag("--transcript", o_.transcript, "include the coin/emission transcript");

    auto* ana = app.add_subcommand("analyze", "exact stopping-time profile, E[T] bracket and validity");
    common(ana);
    ana->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    ana->add_option("-m,--m-max", o_.m_max, "largest m of the overflow table");
    ana->add_option("--eps", o_.eps, "validity tolerance on Pr(T > m_max), rational");
    ana->add_option("--lambda-bits", o_.lambda_bits, "min-entropy evidence thresholds, integer bits")->delimiter(',');
    ana->add_option("--threshold", o_.thresholds, "min-entropy evidence thresholds, rationals")->delimiter(',');

    auto* bnd = app.add_subcommand("bounds", "check converse and achievability bounds on a grid");
    common(bnd);
    bnd->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    bnd->add_option("-m,--m-max", o_.ms, "coin lengths m (default 0..30)")->delimiter(',');
    bnd->add_option("--lambda-bits", o_.lambda_bits, "lambda values, integer bits")->delimiter(',');
    bnd->add_option("--tau-bits", o_.tau_bits, "tau values, integer bits")->delimiter(',');
    bnd->add_option("--lambda-threshold", o_.lambda_thr, "explicit thresholds 2^-lambda")->delimiter(',');
    bnd->add_option("--tau-threshold", o_.tau_thr, "explicit thresholds 2^-tau")->delimiter(',');

    auto* rat = app.add_subcommand("rates", "asymptotic rate formulas from spectral entropies");
    common(rat);

    auto* sim = app.add_subcommand("simulate", "seeded Monte Carlo of the stopping time");
    common(sim);
    sim->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", o_.seed, "64-bit seed (default 0)");
    sim->add_option("--trials", o_.trials, "number of trials")->check(CLI::PositiveNumber);
    sim->add_option("--m-cap", o_.m_cap, "per-trial coin budget (default 10^6 n)");
    sim->add_option("--workers", o_.workers, "worker threads; results do not depend on this");

    auto* spe = app.add_subcommand("spectrum", "spectrum-set masses of one process (the --coin config)");
    spe->add_option("--coin", o_.coin, "process config (JSON)")->required()->check(CLI::ExistingFile);
    spe->add_option("--out", o_.out, "output file");
    spe->add_option("--format", o_.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
    spe->add_option("-n", o_.n, "sequence length")->check(CLI::PositiveNumber);
    spe->add_option("--lambda-bits", o_.lambda_bits, "thresholds 2^-k, integer k")->delimiter(',');
    spe->add_option("--threshold", o_.thresholds, "explicit rational thresholds")->delimiter(',');
    spe->add_option("--trials", o_.trials, "empirical mode: number of sampled sequences");
    spe->add_option("--seed", o_.seed, "empirical mode: seed");
    spe->add_option("--bin-width", o_.bin_width, "empirical histogram bin width in bits/symbol");
    spe->add_option("--rate-cut", o_.rate_cuts, "report empirical fractions below these rates")->delimiter(',');

    auto* fl = app.add_subcommand("flrng", "fixed-length truncation and its exact error");
    common(fl);
    fl->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    fl->add_option("-m,--m-max", o_.m_max, "coin length m")->required();
    fl->add_option("--fallback", o_.fallback, "fallback output b^n, 1-based, comma separated")->required();

    auto* tre = app.add_subcommand("tree", "export the algorithm tree to a depth limit");
    common(tre);
    tre->add_option("-n", o_.n, "target length")->check(CLI::NonNegativeNumber);
    tre->add_option("-m,--m-max,--depth", o_.depth, "depth limit");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    manifest_.command = sub->get_name();
    for (int i = 1; i < argc; ++i) manifest_.parameters["argv"].push_back(argv[i]);
    manifest_.output = o_.out;
    if (!o_.coin.empty()) manifest_.inputs.push_back(o_.coin);
    if (!o_.target.empty()) manifest_.inputs.push_back(o_.target);

    try {
      const std::string name = sub->get_name();
      if (name == "generate") return cmd_generate();
      if (name == "analyze") return cmd_analyze();
      if (name == "bounds") return cmd_bounds();
      if (name == "rates") return cmd_rates();
      if (name == "simulate") return cmd_simulate();
      if (name == "spectrum") return cmd_spectrum();
      if (name == "flrng") return cmd_flrng();
      if (name == "tree") return cmd_tree();
    } catch (const std::logic_error& e) {
      // invalid_argument, domain_error and out_of_range are usage-level problems.
      if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e) ||
          dynamic_cast<const std::out_of_range*>(&e)) {
        err_ << "error: " << e.what() << "\n";
        return kExitUsage;
      }
      err_ << "invariant failure: " << e.what() << "\n";
      return kExitInvariant;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    return kExitUsage;
  }

 private:
  ProcessSpec coin() const { return load_process(o_.coin); }
  ProcessSpec target() const { return load_process(o_.target); }

  void emit(const std::string& body) {
    if (o_.out.empty()) {
      out_ << body;
      if (!body.empty() && body.back() != '\n') out_ << "\n";
    } else {
      write_file_atomic(o_.out, body.back() == '\n' ? body : body + "\n");
    }
  }

  void emit_json(Json payload) {
    Json doc = report_envelope(manifest_);
    for (auto& [k, v] : payload.items()) doc[k] = v;
    emit(doc.dump(2));
  }

  template <class Gen>
  GenerationResult drive(Gen& g) {
    if (!o_.coin_stream.empty()) {
      const Sequence coins = parse_symbols(o_.coin_stream, coin_alphabet_, "--coin-stream");
      return run_generator(g, stream_from(coins));
    }
    BitSource bits(o_.seed.value_or(0), 0);
    const std::size_t cap = o_.m_cap ? o_.m_cap : std::max<std::size_t>(1, 1'000'000 * o_.n);
    CoinStream next = [&]() -> std::optional<Symbol> {
      if (g.coin().count() >= cap) return std::nullopt;
      return sample_symbol(g.coin().law(), bits);
    };
    return run_generator(g, next);
  }

  int cmd_generate() {
    const ProcessSpec c = coin(), t = target();
    coin_alphabet_ = c.alphabet_size();
    if (o_.coin_stream.empty() && !o_.seed) throw UsageError("generate needs --coin-stream or --seed");
    manifest_.seed = o_.seed;
    GenerationResult res;
    if (c.has_rational_conditionals()) {
      auto g = make_generator(c, t, o_.n);
      res = drive(g);
    } else {
      EnclosedIntervalGenerator g(EnclosedCoinTracker(c), t, o_.n);
      res = drive(g);
    }
    if (o_.format == "json") {
      Json j{{"complete", res.complete}, {"output", symbols_csv(res.output)}, {"stopping_time", res.stopping_time}};
      if (o_.transcript) {
        Json tr = Json::array();
        for (const auto& e : res.transcript)
          tr.push_back(Json{{"coin", e.coin ? Json(*e.coin + 1) : Json(nullptr)}, {"emitted", symbols_csv(e.emitted)}});
        j["transcript"] = tr;
      }
      emit_json(j);
    } else {
      std::ostringstream s;
      if (o_.format == "csv") {
        s << "complete,output,stopping_time\n" << res.complete << ",\"" << symbols_csv(res.output) << "\","
          << res.stopping_time << "\n";
      } else {
        s << "y = " << symbols_text(res.output) << "\nT = " << res.stopping_time
          << (res.complete ? "" : "\n(incomplete: coin stream exhausted)") << "\n";
        if (o_.transcript)
          for (const auto& e : res.transcript)
            s << "coin " << (e.coin ? std::to_string(*e.coin + 1) : std::string("-")) << " -> emit "
              << symbols_text(e.emitted) << "\n";
      }
      emit(s.str());
    }
    return res.complete ? kExitOk : kExitValidity;
  }

  int cmd_analyze() {
    const ProcessSpec c = coin(), t = target();
    Ratio eps;
    try {
      eps = Ratio::parse(o_.eps);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--eps: ") + e.what());
    }
    auto lambdas = thresholds_from(o_.lambda_bits, o_.thresholds, "lambda");
    if (lambdas.empty() && !c.has_rational_conditionals()) lambdas.push_back(Ratio(1, 4));
    const ValidityReport vr = validity_check(c, t, o_.n, o_.m_max, eps, lambdas);
    Json j;
    std::optional<StoppingProfile> prof;
    std::optional<std::pair<Ratio, Ratio>> et;
    std::string et_note;
    if (c.has_rational_conditionals()) {
      prof = stopping_profile(c, t, o_.n, o_.m_max);
      for (std::size_t m = 1; m < prof->overflow.size(); ++m)
        if (prof->overflow[m] > prof->overflow[m - 1]) throw std::logic_error("overflow increased with m");
      const PartialLaw pl = output_law_at(c, t, o_.n, o_.m_max);
      if (pl.deficit != prof->overflow.back()) throw std::logic_error("deficit differs from overflow");
      const OutputLaw truth = target_law(t, o_.n);
      for (const auto& [y, p] : pl.law)
        if (p > truth.at(y)) throw std::logic_error("partial output law exceeds target law");
      try {
        et = expected_stopping_time(*prof);
      } catch (const std::domain_error& e) {
        et_note = e.what();
      }
    }
    if (o_.format == "json") {
      if (prof) j["profile"] = to_json(*prof);
      if (et) {
        j["expected_T"] = Json{{"lower", et->first.str()},
                               {"upper", et->second.str()},
                               {"lower_approx", et->first.to_double()},
                               {"upper_approx", et->second.to_double()}};
      } else {
        j["expected_T"] = nullptr;
        if (!et_note.empty()) j["expected_T_note"] = et_note;
      }
      j["validity"] = to_json(vr);
      emit_json(j);
    } else {
      std::ostringstream s;
      if (o_.format == "csv") {
        s << "m,overflow,overflow_approx\n";
        if (prof)
          for (std::size_t m = 0; m < prof->overflow.size(); ++m)
            s << m << "," << prof->overflow[m].str() << "," << prof->overflow[m].to_double() << "\n";
      } else {
        if (prof) {
          s << "m\tPr(T>m)\n";
          for (std::size_t m = 0; m < prof->overflow.size(); ++m) s << m << "\t" << prof->overflow[m].str() << "\n";
          s << "largest frontier: " << prof->largest_frontier << " (bound " << prof->boundary_count().str() << ")\n";
        }
        if (et) s << "E[T] in [" << et->first.str() << ", " << et->second.str() << "] ~ " << et->first.to_double() << "\n";
        if (!et_note.empty()) s << "E[T]: " << et_note << "\n";
        s << "validity: " << (vr.passed ? "PASS" : "FAIL") << " (" << vr.reason << ")\n";
        for (const auto& ev : vr.evidence) {
          s << "  threshold " << ev.threshold.str() << ": ";
          if (ev.first_empty_m) s << "S_m^c empty from m = " << *ev.first_empty_m << "\n";
          else if (ev.never_empty) s << "never empty, witness mass >= " << ev.witness_mass_lower << "\n";
          else s << ev.note << "\n";
        }
      }
      emit(s.str());
    }
    return vr.passed ? kExitOk : kExitValidity;
  }

  int cmd_bounds() {
    const ProcessSpec c = coin(), t = target();
    std::vector<std::size_t> ms = o_.ms;
    if (ms.empty())
      for (std::size_t m = 0; m <= 30; ++m) ms.push_back(m);
    auto lam = thresholds_from(o_.lambda_bits, o_.lambda_thr, "lambda");
    auto tau = thresholds_from(o_.tau_bits, o_.tau_thr, "tau");
    if (lam.empty() || tau.empty()) throw UsageError("bounds needs at least one lambda and one tau value");
    const BoundCheckReport rep = check_bounds(c, t, o_.n, ms, lam, tau);
    if (o_.format == "json") {
      emit_json(to_json(rep));
    } else {
      std::ostringstream s;
      const char* sep = o_.format == "csv" ? "," : "\t";
      s << "m" << sep << "lambda_threshold" << sep << "tau_threshold" << sep << "overflow" << sep << "converse1" << sep
        << "converse2" << sep << "achievability" << sep << "pass\n";
      for (const auto& p : rep.points)
        s << p.m << sep << p.lambda_threshold.str() << sep << p.tau_threshold.str() << sep << p.overflow.str() << sep
          << p.converse.first.str() << sep << p.converse.second.str() << sep << p.achievability.str() << sep
          << (p.converse_ok && p.achievability_ok && p.forms_agree ? 1 : 0) << "\n";
      if (o_.format == "text") s << "violations: " << rep.violations() << "\n";
      emit(s.str());
    }
    return rep.passed() ? kExitOk : kExitValidity;
  }

  int cmd_rates() {
    const ProcessSpec c = coin(), t = target();
    const SpectrumSummary cs = spectrum_summary(c), ts = spectrum_summary(t);
    const RatesReport r = asymptotic_rates(cs, ts);
    if (r.r_lower.lower() > r.r_int_upper.upper() + 1e-12 && (r.coin_one_point || r.target_one_point))
      throw std::logic_error("R lower bound exceeds interval-algorithm rate");
    if (o_.format == "json") {
      emit_json(Json{{"coin_spectrum", to_json(cs)}, {"target_spectrum", to_json(ts)}, {"rates", to_json(r)}});
    } else {
      std::ostringstream s;
      s.precision(10);
      auto row = [&](const char* k, const RealValue& v) {
        if (o_.format == "csv") s << k << "," << v.value << "," << v.error << "\n";
        else s << k << " = " << v.value << " +- " << v.error << "\n";
      };
      if (o_.format == "csv") s << "quantity,value_bits,error_bits\n";
      row("R_int_upper", r.r_int_upper);
      row("R_lower", r.r_lower);
      row("L_int_upper", r.l_int_upper);
      row("L_lower", r.l_lower);
      if (r.r_star) row("R_star", *r.r_star);
      if (r.l_star) row("L_star", *r.l_star);
      emit(s.str());
    }
    return kExitOk;
  }

  int cmd_simulate() {
    const ProcessSpec c = coin(), t = target();
    SimConfig cfg;
    cfg.seed = o_.seed.value_or(0);
    cfg.trials = o_.trials;
    cfg.n = o_.n;
    cfg.m_cap = o_.m_cap;
    manifest_.seed = cfg.seed;
    const SimResult r = run_trials(c, t, cfg, o_.workers);
    if (o_.format == "json") {
      emit_json(to_json(r));
    } else if (o_.format == "csv") {
      std::ostringstream s;
      s << "m,overflow_count,overflow_fraction\n";
      const auto ov = r.empirical_overflow();
      for (std::size_t m = 0; m < ov.size(); ++m)
        s << m << "," << ov[m] << "," << static_cast<double>(ov[m]) / static_cast<double>(cfg.trials) << "\n";
      emit(s.str());
    } else {
      std::ostringstream s;
      s << "trials " << cfg.trials << ", completed " << r.completed_trials << ", truncated " << r.truncated_trials
        << (r.truncation_flag() ? " (FLAGGED)" : "") << "\nmean T = " << r.mean_T << "\nmean T / n = "
        << (cfg.n ? r.mean_T / static_cast<double>(cfg.n) : 0.0) << "\n";
      emit(s.str());
    }
    return kExitOk;
  }

  int cmd_spectrum() {
    const ProcessSpec p = coin();
    if (o_.seed || o_.rate_cuts.size()) {
      manifest_.seed = o_.seed.value_or(0);
      const EmpiricalSpectrum es = empirical_spectrum(p, o_.n, o_.trials, o_.seed.value_or(0), o_.bin_width);
      if (o_.format == "json") {
        emit_json(Json{{"empirical", to_json(es, o_.rate_cuts)}});
      } else {
        std::ostringstream s;
        s << (o_.format == "csv" ? "rate_lo_bits,count\n" : "rate_lo\tcount\n");
        for (const auto& [bin, cnt] : es.histogram())
          s << static_cast<double>(bin) * es.bin_width << (o_.format == "csv" ? "," : "\t") << cnt << "\n";
        emit(s.str());
      }
      return kExitOk;
    }
    const auto thr = thresholds_from(o_.lambda_bits, o_.thresholds, "spectrum");
    if (thr.empty()) throw UsageError("spectrum needs --lambda-bits/--threshold, or --seed for empirical mode");
    std::vector<SpectrumMass> rows;
    for (const auto& th : thr) rows.push_back(spectrum_mass(p, o_.n, th));
    if (o_.format == "json") {
      Json a = Json::array();
      for (const auto& r : rows) a.push_back(to_json(r));
      emit_json(Json{{"masses", a}});
    } else {
      std::ostringstream s;
      const char* sep = o_.format == "csv" ? "," : "\t";
      s << "length" << sep << "threshold" << sep << "lambda_bits" << sep << "mass_below" << sep << "mass_strictly_below\n";
      for (const auto& r : rows)
        s << r.m << sep << r.threshold.str() << sep << r.lambda_bits.value << sep << r.mass_below.str() << sep
          << r.mass_strictly_below.str() << "\n";
      emit(s.str());
    }
    return kExitOk;
  }

  int cmd_flrng() {
    const ProcessSpec c = coin(), t = target();
    const Sequence fb = parse_symbols(o_.fallback, t.alphabet_size(), "--fallback");
    const FLReport r = fl_truncate(c, t, o_.n, o_.m_max, fb);
    if (o_.format == "json") {
      emit_json(to_json(r));
    } else {
      std::ostringstream s;
      if (o_.format == "csv") {
        s << "y,prob\n";
        for (const auto& [y, p] : r.approx_law) s << "\"" << symbols_csv(y) << "\"," << p.str() << "\n";
      } else {
        for (const auto& [y, p] : r.approx_law) s << symbols_text(y) << "\t" << p.str() << "\n";
        s << "delta = " << r.delta.str() << "\nPr(T>m) = " << r.overflow_at_m.str() << "\n";
      }
      emit(s.str());
    }
    return kExitOk;
  }

  int cmd_tree() {
    const ProcessSpec c = coin(), t = target();
    const AlgorithmTree tree = build_tree(c, t, o_.n, o_.depth);
    const std::string text = export_tree(tree);
    if (o_.format == "json") {
      Json lines = Json::array();
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);) lines.push_back(line);
      emit_json(Json{{"terminal_mass", tree.terminal_mass().str()},
                     {"unresolved_mass", tree.unresolved_mass().str()},
                     {"lines", lines}});
    } else if (o_.format == "csv") {
      std::ostringstream s;
      s << "depth,path,emitted,flag,prob\n";
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);) {
        if (line.rfind('#', 0) == 0) continue;
        std::string cell;
        std::istringstream ls(line);
        bool first = true;
        while (std::getline(ls, cell, '\t')) {
          s << (first ? "" : ",") << "\"" << cell << "\"";
          first = false;
        }
        s << "\n";
      }
      emit(s.str());
    } else {
      emit(text);
    }
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  Options o_;
  RunManifest manifest_;
  std::size_t coin_alphabet_ = 0;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return App(out, err).run(argc, argv);
}

}  // namespace exactrng::cli
