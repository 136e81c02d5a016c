#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "teid/teid.hpp"

namespace teid::cli {

using nlohmann::json;

inline constexpr int kSelfTestFailure = 1;

// The X2 row's denominator is about 0.0042; below this magnitude a rounding
// of the inputs in the third decimal moves the estimate visibly.
inline constexpr double kSensitiveDenominator = 0.01;

inline double env_double(const char* name, double fallback) {
  const char* raw = std::getenv(name);
  if (!raw || !*raw) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != std::string(raw).size() || !(v > 0.0)) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Input, std::string(name) + " must be a positive number, got '" + raw + "'");
  }
}

// Defaults come from TEID_DENOMINATOR_TOL and TEID_CONSISTENCY_TOL; flags win.
struct ToleranceFlags {
  std::optional<double> denominator, consistency;

  void add_to(CLI::App* app) {
    app->add_option("--denominator-tol", denominator, "relative threshold for a degenerate ratio denominator");
    app->add_option("--consistency-tol", consistency, "relative tolerance on redundant single-factor zeros");
  }

  Tolerances resolve() const {
    Tolerances t;
    t.denominator = denominator ? *denominator : env_double("TEID_DENOMINATOR_TOL", t.denominator);
    t.consistency = consistency ? *consistency : env_double("TEID_CONSISTENCY_TOL", t.consistency);
    if (!(t.denominator > 0.0) || !(t.consistency > 0.0)) fail(ErrorKind::Input, "tolerances must be positive");
    return t;
  }
};

struct WindowFlags {
  std::string selection;
  double lower = -kInf, upper = kInf;

  void add_to(CLI::App* app, const std::string& what) {
    app->add_option("--selection", selection, what);
    app->add_option("--lower", lower, "lower end of the selection window (default -inf)");
    app->add_option("--upper", upper, "upper end of the selection window (default +inf)");
  }
};

inline std::string fmt(double v, int digits = 6) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

inline std::string roles_text(const Roles& r) {
  return "x=" + r.x + " y=" + r.y + " z=" + r.z + " w=" + r.w + " T=" + teid::detail::set_text(r.t) +
         (r.aux.empty() ? "" : " aux=" + r.aux);
}

inline void print_checks(std::ostream& out, const Certificate& cert) {
  for (const auto& c : cert.checks) {
    out << "  [" << (c.passed ? "pass" : "FAIL") << "] " << c.id << ": " << c.statement << "\n";
    if (!c.witness.empty()) {
      out << "         trail:";
      for (const auto& v : c.witness) out << " " << v;
      out << "\n";
    }
    if (!c.note.empty()) out << "         note: " << c.note << "\n";
  }
}

inline std::string sole_vertex(const Dag& g, VertexKind kind, const std::string& flag) {
  const Labels found = g.names(kind);
  if (found.size() != 1)
    fail(ErrorKind::Input, "graph has " + std::to_string(found.size()) + " " + std::string(to_string(kind)) +
                               " vertices; name one with " + flag);
  return found.front();
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string theorem, cov_path, graph_path, output = "human";
  Roles roles;
  bool force = false, from_samples = false;
  double lower = -kInf, upper = kInf;
  ToleranceFlags tol;
};

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const Tolerances tol = a.tol.resolve();
  const bool latent = a.theorem == "t1";
  Roles roles = a.roles;

  std::optional<Certificate> cert;
  if (!a.graph_path.empty()) {
    const Dag g = io::load_graph(a.graph_path);
    if (roles.aux.empty())
      roles.aux = sole_vertex(g, latent ? VertexKind::Latent : VertexKind::Selection, "--aux");
    cert = latent ? check_latent_criterion(g, roles) : check_selection_criterion(g, roles);
  } else if (!latent && roles.aux.empty()) {
    fail(ErrorKind::Input, "t3 needs --aux naming the selection variable");
  } else if (latent && roles.aux.empty()) {
    roles.aux = "U";
  }
  const bool checked = cert && cert->passed();
  if (cert && !checked && !a.force) {
    if (a.output == "json") {
      json j = io::certificate_to_json(*cert, tol);
      j["status"] = "refused";
      out << j.dump(2) << "\n";
    } else {
      out << "criterion: " << to_string(cert->criterion) << "\nroles: " << roles_text(roles)
          << "\nstatus: REFUSED (graphical conditions fail; --force estimates anyway)\n";
      print_checks(out, *cert);
    }
    return exit_code(ErrorKind::NotIdentifiable);
  }

  LabeledCov c = io::load_covariance(a.cov_path, a.from_samples);
  if (!latent) c = LabeledCov(c.labels(), c.matrix(), Selection{roles.aux, Interval(a.lower, a.upper)});
  const RatioTerms terms = latent ? latent_ratio_terms(c, roles, tol) : selection_ratio_terms(c, roles, tol);

  if (!cert) {
    cert.emplace();
    cert->criterion = latent ? Criterion::LatentConfounder : Criterion::SelectionBias;
    cert->roles = roles;
  }
  cert->estimate = terms.value;
  const std::string status = checked ? "CHECKED" : "UNCHECKED";
  const std::string reason = checked ? "graphical conditions hold"
                             : a.graph_path.empty() ? "no graph supplied"
                                                    : "graphical conditions fail; forced";

  if (a.output == "json") {
    json j = io::certificate_to_json(*cert, tol);
    j["status"] = status;
    j["status_reason"] = reason;
    j["numerator"] = terms.numerator;
    j["denominator"] = terms.denominator;
    j["denominator_threshold"] = terms.threshold;
    j["estimate"] = terms.value;
    j["covariance"] = a.cov_path;
    out << j.dump(2) << "\n";
  } else {
    out << "criterion: " << to_string(cert->criterion) << "\n"
        << "roles: " << roles_text(roles) << "\n"
        << "status: " << status << " (" << reason << ")\n";
    print_checks(out, *cert);
    out << "numerator: " << terms.numerator << "\n"
        << "denominator: " << terms.denominator << " (degenerate below " << terms.threshold << ")\n"
        << "estimate: " << fmt(terms.value) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
  std::string graph_path, x, y, output = "human";
  std::size_t max_t = 3;
};

inline int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
  const Dag g = io::load_graph(a.graph_path);
  const auto found = search_certificates(g, a.x, a.y, a.max_t);
  if (a.output == "json") {
    json j = json::array();
    for (const auto& c : found) j.push_back(io::certificate_to_json(c));
    out << json{{"x", a.x}, {"y", a.y}, {"max_t", a.max_t}, {"certificates", j}}.dump(2) << "\n";
  } else {
    out << found.size() << " certificate(s) for the effect of " << a.x << " on " << a.y << "\n";
    for (const auto& c : found) {
      out << "  " << to_string(c.criterion) << ": ";
      if (c.criterion == Criterion::BackDoor)
        out << "adjust for " << teid::detail::set_text(c.adjustment) << "\n";
      else
        out << roles_text(c.roles) << "\n";
    }
    if (found.empty()) out << "  none found (the search is not complete; this is not a proof)\n";
  }
  return found.empty() ? exit_code(ErrorKind::NotIdentifiable) : 0;
}

// ---------------------------------------------------------------- okuno

inline int cmd_okuno(const std::string& output, std::ostream& out) {
  const LabeledCov c = okuno::correlation_matrix();
  const std::string note =
      "graph-side checks skipped: no machine-readable path diagram for this study; estimates are UNCHECKED";
  json rows = json::array();
  for (const auto& row : okuno::published_rows()) {
    const RatioTerms t = latent_ratio_terms(c, row.roles);
    const bool sensitive = std::abs(t.denominator) < kSensitiveDenominator;
    const auto spread = okuno::rounding_spread(row.roles);
    json j = {{"treatment", row.roles.x},
              {"roles", io::roles_to_json(row.roles)},
              {"numerator", t.numerator},
              {"denominator", t.denominator},
              {"computed", t.value},
              {"published", row.published},
              {"gap", std::abs(t.value - row.published)},
              {"denominator_sensitive", sensitive},
              {"rounding_sd", spread.sd},
              {"rounding_p95", spread.p95}};
    if (sensitive)
      j["sensitivity_note"] = "denominator " + fmt(t.denominator, 4) +
                              " is small; moving each printed correlation within its rounding half-width gives "
                              "the estimate a spread of sd " + fmt(spread.sd, 4) + " (95% of |shifts| below " +
                              fmt(spread.p95, 4) + ")";
    rows.push_back(std::move(j));
  }
  if (output == "json") {
    out << json{{"dataset", "car-body painting correlations, 7 variables"}, {"note", note}, {"rows", rows}}.dump(2)
        << "\n";
    return 0;
  }
  out << "Painting-process reproduction (" << note << ")\n";
  out << "treatment  T      computed    published  gap     denominator  rounding sd\n";
  for (const auto& r : rows) {
    const auto t = r["roles"]["t"].get<Labels>();
    out << std::left << std::setw(11) << r["treatment"].get<std::string>() << std::setw(7)
        << teid::detail::set_text(t) << std::setw(12) << fmt(r["computed"].get<double>(), 4) << std::setw(11)
        << fmt(r["published"].get<double>(), 3) << std::setw(8) << fmt(r["gap"].get<double>(), 4)
        << std::setw(13) << fmt(r["denominator"].get<double>(), 6) << fmt(r["rounding_sd"].get<double>(), 4) << "\n";
  }
  for (const auto& r : rows)
    if (r["denominator_sensitive"].get<bool>())
      out << "note (" << r["treatment"].get<std::string>() << "): " << r["sensitivity_note"].get<std::string>()
          << "\n";
  return 0;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  std::string graph_path, cov_path, x, y, output = "human";
  Labels t;
  bool from_samples = false;
  WindowFlags window;
  ToleranceFlags tol;
};

inline int cmd_pipeline(const PipelineArgs& a, std::ostream& out) {
  const Tolerances tol = a.tol.resolve();
  const Dag g = io::load_graph(a.graph_path);
  LabeledCov c = io::load_covariance(a.cov_path, a.from_samples);
  if (!a.window.selection.empty())
    c = LabeledCov(c.labels(), c.matrix(), Selection{a.window.selection, Interval(a.window.lower, a.window.upper)});
  const Certificate cert = run_combined_pipeline(g, c, a.x, a.y, a.t, tol);
  if (a.output == "json") {
    out << io::certificate_to_json(cert, tol).dump(2) << "\n";
  } else {
    out << "criterion: " << to_string(cert.criterion) << "\n"
        << "effect of " << a.x << " on " << a.y << ", T=" << teid::detail::set_text(a.t)
        << (c.is_selected() ? ", selected on " + c.selection()->label : ", full population") << "\n";
    print_checks(out, cert);
    if (cert.estimate)
      out << "adjustment: " << teid::detail::set_text(cert.adjustment) << " plus latents "
          << teid::detail::set_text(cert.stages) << "\nestimate: " << fmt(*cert.estimate) << "\n";
    else
      out << "estimate: none\n";
  }
  return cert.passed() ? 0 : exit_code(ErrorKind::NotIdentifiable);
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string suite = "all", output = "human";
  oracle::SuiteConfig cfg;
};

inline int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  std::vector<std::string> names = a.suite == "all" ? oracle::suite_names() : std::vector<std::string>{a.suite};
  std::vector<oracle::SuiteResult> results;
  for (const auto& n : names) results.push_back(oracle::run_suite(n, a.cfg));
  bool ok = true;
  json j = json::array();
  for (const auto& r : results) {
    ok = ok && r.passed();
    j.push_back({{"suite", r.name},
                 {"passed", r.passed()},
                 {"cases", r.cases},
                 {"failures", r.failures},
                 {"max_error", r.max_error},
                 {"tolerance", r.tolerance},
                 {"detail", r.detail}});
  }
  if (a.output == "json") {
    out << json{{"seed", a.cfg.seed}, {"count", a.cfg.count}, {"max_vertices", a.cfg.max_vertices}, {"suites", j}}
               .dump(2)
        << "\n";
  } else {
    for (const auto& r : results) {
      out << (r.passed() ? "PASS " : "FAIL ") << std::left << std::setw(9) << r.name << " cases=" << r.cases
          << " failures=" << r.failures;
      if (r.name != "dsep") out << " max_error=" << std::scientific << std::setprecision(2) << r.max_error
                                << std::defaultfloat << " (tol " << r.tolerance << ")";
      out << "  " << r.detail << "\n";
    }
  }
  return ok ? 0 : kSelfTestFailure;
}

// ---------------------------------------------------------------- implied

struct ImpliedArgs {
  std::string sem_path;
  Labels drop;
  WindowFlags window;
};

// Exact covariance of a SEM, optionally in a selected population and with
// some vertices dropped, as covariance CSV.
inline int cmd_implied(const ImpliedArgs& a, std::ostream& out) {
  const LinearSem m = io::load_sem(a.sem_path);
  LabeledCov c = implied_cov(m);
  if (!a.window.selection.empty()) c = selected_cov(c, a.window.selection, Interval(a.window.lower, a.window.upper));
  out << io::covariance_to_csv(marginal_cov(c, a.drop));
  return 0;
}

// ---------------------------------------------------------------- dispatch

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identification and estimation of total effects in linear SEMs with latent variables and "
               "selection bias"};
  app.require_subcommand(1);
  const std::vector<std::string> outputs{"human", "json"};

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "closed-form ratio estimate from a covariance matrix");
  e->add_option("--theorem", est.theorem, "t1: latent confounder, t3: selection bias")
      ->required()
      ->check(CLI::IsMember({"t1", "t3"}));
  e->add_option("--cov", est.cov_path, "covariance CSV")->required();
  e->add_flag("--from-samples", est.from_samples, "the CSV holds raw observations, one per row");
  e->add_option("--graph", est.graph_path, "graph JSON; the criterion is checked before estimating");
  e->add_option("--x", est.roles.x, "treatment")->required();
  e->add_option("--y", est.roles.y, "response")->required();
  e->add_option("--z", est.roles.z, "variable z")->required();
  e->add_option("--w", est.roles.w, "variable w")->required();
  e->add_option("--t", est.roles.t, "conditioning set T, comma separated")->delimiter(',');
  e->add_option("--aux", est.roles.aux, "latent confounder (t1) or selection variable (t3)");
  e->add_option("--lower", est.lower, "selection window lower end (t3, informational)");
  e->add_option("--upper", est.upper, "selection window upper end (t3, informational)");
  e->add_flag("--force", est.force, "estimate even when the graphical conditions fail");
  e->add_option("--output", est.output, "human or json")->check(CLI::IsMember(outputs));
  est.tol.add_to(e);

  IdentifyArgs id;
  auto* i = app.add_subcommand("identify", "search role assignments that identify the effect");
  i->add_option("--graph", id.graph_path, "graph JSON")->required();
  i->add_option("--x", id.x, "treatment")->required();
  i->add_option("--y", id.y, "response")->required();
  i->add_option("--max-t", id.max_t, "largest conditioning set T to try");
  i->add_option("--output", id.output, "human or json")->check(CLI::IsMember(outputs));

  std::string okuno_output = "human";
  auto* o = app.add_subcommand("okuno", "reproduce the painting-process estimates from the bundled correlations");
  o->add_option("--output", okuno_output, "human or json")->check(CLI::IsMember(outputs));

  PipelineArgs pipe;
  auto* p = app.add_subcommand("pipeline", "combined de-selection and latent-factor recovery, then adjustment");
  p->add_option("--graph", pipe.graph_path, "graph JSON")->required();
  p->add_option("--cov", pipe.cov_path, "covariance CSV over observed variables")->required();
  p->add_flag("--from-samples", pipe.from_samples, "the CSV holds raw observations, one per row");
  p->add_option("--x", pipe.x, "treatment")->required();
  p->add_option("--y", pipe.y, "response")->required();
  p->add_option("--t", pipe.t, "conditioning set T, comma separated")->delimiter(',');
  p->add_option("--output", pipe.output, "human or json")->check(CLI::IsMember(outputs));
  pipe.window.add_to(p, "the covariance comes from the population selected on this vertex");
  pipe.tol.add_to(p);

  OracleArgs orc;
  auto* r = app.add_subcommand("oracle", "round-trip self tests on exact model covariances");
  std::vector<std::string> suites{"all"};
  suites.insert(suites.end(), oracle::suite_names().begin(), oracle::suite_names().end());
  r->add_option("--suite", orc.suite, "all, t1, t3, pipeline or dsep")->check(CLI::IsMember(suites));
  r->add_option("--seed", orc.cfg.seed, "random seed");
  r->add_option("--count", orc.cfg.count, "models (or graphs) per suite");
  r->add_option("--max-vertices", orc.cfg.max_vertices, "largest random graph for the dsep suite")
      ->check(CLI::Range(2, 12));
  r->add_option("--output", orc.output, "human or json")->check(CLI::IsMember(outputs));

  ImpliedArgs imp;
  auto* m = app.add_subcommand("implied", "print the exact covariance of a SEM as CSV");
  m->add_option("--sem", imp.sem_path, "SEM JSON")->required();
  m->add_option("--drop", imp.drop, "vertices to leave out, comma separated")->delimiter(',');
  imp.window.add_to(m, "select the population on this vertex");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::Input);
  }

  try {
    if (*e) return cmd_estimate(est, out);
    if (*i) return cmd_identify(id, out);
    if (*o) return cmd_okuno(okuno_output, out);
    if (*p) return cmd_pipeline(pipe, out);
    if (*r) return cmd_oracle(orc, out);
    if (*m) return cmd_implied(imp, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code(ex.kind());
  }
  return exit_code(ErrorKind::Input);
}

}  // namespace teid::cli
