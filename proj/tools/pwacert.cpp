#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pwacert/certify.hpp"
#include "pwacert/model.hpp"
#include "pwacert/sim.hpp"
#include "pwacert/storage.hpp"

using namespace pwacert;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;

struct RunConfig {
  std::string command;
  std::string model;
  std::string out = ".";
  bool common = false;
  bool symmetry = false;
  bool combined = false;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double tol_cert = certify::kTolCert;
  int samples = 10000;
  unsigned seed = 7;
  // simulate / quotient / contour
  std::string x0;
  std::string input = "zero";
  double T = 10.0;
  double dt = 1e-3;
  double A = 0.05, b = 1.05, w0 = 0.05;
  std::string cert;
  std::string axes = "x0,xt0";
  double lo = -15.0, hi = 15.0;
  int resolution = 301;
  std::string models_dir = PWACERT_MODELS_DIR;

  json to_json() const {
    json j{{"command", command}, {"model", model}, {"out", out}};
    if (command == "gain" || command == "stability" || command == "combined") {
      j["common_quadratic"] = common;
      j["symmetry_reduction"] = symmetry;
      if (command == "gain") j["combined"] = combined;
      j["feastol"] = feastol;
      j["abstol"] = abstol;
      j["reltol"] = reltol;
      j["tol_cert"] = tol_cert;
      j["samples"] = samples;
      j["seed"] = seed;
    } else if (command == "simulate") {
      j["x0"] = x0;
      j["input"] = input;
      j["T"] = T;
      j["dt"] = dt;
    } else if (command == "quotient") {
      j["x0"] = x0;
      j["A"] = A;
      j["b"] = b;
      j["w0"] = w0;
      j["T"] = T;
      j["dt"] = dt;
    } else if (command == "contour") {
      j["cert"] = cert;
      j["axes"] = axes;
      j["lo"] = lo;
      j["hi"] = hi;
      j["resolution"] = resolution;
    }
    return j;
  }
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    size_t used = 0;
    const double d = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    v.push_back(d);
  }
  return v;
}

Eigen::VectorXd vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

Eigen::VectorXd broadcast(double v, int p) { return Eigen::VectorXd::Constant(p, v); }

// zero | const:v[,v..] | sin:A,w0,b | table:t0=v0;t1=v1;...
sim::InputSignal parse_input(const std::string& s, int p) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "zero") return sim::InputSignal::zero(p);
  if (kind == "const") {
    auto v = parse_list(arg);
    if (v.size() == 1) return sim::InputSignal::constant(broadcast(v[0], p));
    if (static_cast<int>(v.size()) != p) throw std::invalid_argument("const input needs 1 or p values");
    return sim::InputSignal::constant(vec(v));
  }
  if (kind == "sin") {
    auto v = parse_list(arg);
    if (v.size() != 3) throw std::invalid_argument("sin input is sin:A,w0,b");
    return sim::InputSignal::sinusoid(broadcast(v[0], p), v[1], broadcast(v[2], p));
  }
  if (kind == "table") {
    std::vector<double> ts;
    std::vector<Eigen::VectorXd> vs;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("table entries are t=v");
      ts.push_back(std::stod(tok.substr(0, eq)));
      vs.push_back(broadcast(std::stod(tok.substr(eq + 1)), p));
    }
    return sim::InputSignal::table(ts, vs);
  }
  throw std::invalid_argument("unknown input kind '" + kind + "'");
}

void write_file(const RunConfig& cfg, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  std::printf("wrote %s\n", path.string().c_str());
}

certify::Options cert_options(const RunConfig& cfg) {
  certify::Options o;
  o.assembly.common_quadratic = cfg.common;
  o.assembly.symmetry_reduction = cfg.symmetry;
  o.solver.feastol = cfg.feastol;
  o.solver.abstol = cfg.abstol;
  o.solver.reltol = cfg.reltol;
  o.tol_cert = cfg.tol_cert;
  o.verify_samples = cfg.samples;
  o.seed = cfg.seed;
  return o;
}

int outcome_code(certify::Outcome o) {
  if (o == certify::Outcome::feasible) return kOk;
  if (o == certify::Outcome::infeasible) return kInfeasible;
  return kError;
}

void print_solver(const certify::Common& c) {
  std::printf("solver %s: %s, %d iterations, %.2f s%s%s\n", c.solver.backend.c_str(), c.solver.status.c_str(),
              c.solver.iterations, c.solver.solve_time, c.solver.message.empty() ? "" : ", ",
              c.solver.message.c_str());
}

void print_verification(const certify::Common& c) {
  const auto& v = c.verification;
  std::printf("verification: min LMI eig %.3e, equality residual %.3e, continuity %.3e (%d samples), min S %.3e\n",
              v.min_lmi_eig, v.max_equality_residual, v.continuity_mismatch, v.continuity_samples, v.min_S);
}

template <class Cert>
int finish(const RunConfig& cfg, const model::PwaSystem& sys, const Cert& c, const std::string& file) {
  print_solver(c);
  if (!c.reason.empty()) std::printf("%s\n", c.reason.c_str());
  json j = certify::to_json(c);
  j["model_digest"] = model::digest(sys);
  j["run_config"] = cfg.to_json();
  write_file(cfg, file, j.dump(2) + "\n");
  return outcome_code(c.outcome);
}

int cmd_validate(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  const auto rep = model::validate(sys);
  std::printf("model %s  digest %s  n=%d p=%d m=%d N=%d\n", cfg.model.c_str(), model::digest(sys).c_str(), sys.n,
              sys.p, sys.m, sys.N());
  for (const auto& c : rep.checks)
    std::printf("  %-20s %s%s  %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL", c.informational ? " (info)" : "",
                c.detail.c_str());
  for (const auto& r : model::check_continuity(sys))
    std::printf("  continuity %d|%d: %s residual %.3e\n", r.i, r.j, r.pass ? "pass" : "FAIL", r.residual);
  return rep.all_pass() ? kOk : kError;
}

int cmd_gain(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  if (cfg.combined) {
    const auto c = certify::combined_certificate(sys, cert_options(cfg));
    if (c.feasible()) std::printf("eta = %.6f  (gamma = %.6f)\n", c.eta, c.gamma);
    std::printf("outcome: %s\n", certify::to_string(c.outcome));
    return finish(cfg, sys, c, "gain_certificate.json");
  }
  const auto c = certify::incremental_gain_bound(sys, cert_options(cfg));
  if (c.feasible()) {
    std::printf("eta = %.6f  (gamma = %.6f)\n", c.eta, c.gamma);
    print_verification(c);
  }
  std::printf("outcome: %s\n", certify::to_string(c.outcome));
  return finish(cfg, sys, c, "gain_certificate.json");
}

int cmd_stability(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  const auto c = certify::incremental_stability(sys, cert_options(cfg));
  if (c.feasible()) {
    std::printf("sigma1 = %.6g  sigma2 = %.6g  sigma3 = %.6g\n", c.sigma1, c.sigma2, c.sigma3);
    std::printf("decay rate bound = %.6g 1/s  overshoot bound = %.6g\n", c.decay_rate_bound(), c.overshoot_bound());
    print_verification(c);
  }
  std::printf("outcome: %s\n", certify::to_string(c.outcome));
  return finish(cfg, sys, c, "stability_certificate.json");
}

int cmd_combined(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  const auto c = certify::combined_certificate(sys, cert_options(cfg));
  if (c.feasible()) {
    std::printf("eta = %.6f  (gamma = %.6f)\n", c.eta, c.gamma);
    std::printf("sigma1 = %.6g  sigma2 = %.6g  sigma3 = %.6g  decay rate bound = %.6g 1/s\n", c.sigma1, c.sigma2,
                c.sigma3, c.decay_rate_bound());
    print_verification(c);
  }
  std::printf("outcome: %s\n", certify::to_string(c.outcome));
  return finish(cfg, sys, c, "combined_certificate.json");
}

std::vector<std::string> header(const RunConfig& cfg, const model::PwaSystem& sys) {
  return {"model_digest " + model::digest(sys), "run_config " + cfg.to_json().dump()};
}

int cmd_simulate(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  const Eigen::VectorXd x0 = cfg.x0.empty() ? Eigen::VectorXd::Zero(sys.n) : vec(parse_list(cfg.x0));
  if (x0.size() != sys.n) throw std::invalid_argument("--x0 needs " + std::to_string(sys.n) + " values");
  const auto u = parse_input(cfg.input, sys.p);
  const auto tr = sim::simulate(sys, x0, u, cfg.T, cfg.dt);
  for (const auto& w : tr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%zu samples, %zu events, final state", tr.times.size(), tr.events.size());
  for (int i = 0; i < sys.n; ++i) std::printf(" %.9g", tr.states.back()[i]);
  std::printf(" in region %d\n", tr.regions.back());
  write_file(cfg, "trajectory.csv", sim::trajectory_csv(sys, tr, header(cfg, sys)));
  return kOk;
}

int cmd_quotient(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  const auto u = sim::InputSignal::constant(broadcast(cfg.b, sys.p));
  const auto ut = sim::InputSignal::sinusoid(broadcast(cfg.A, sys.p), cfg.w0, broadcast(cfg.b, sys.p));
  Eigen::VectorXd x0;
  if (cfg.x0.empty()) {
    if (!sim::equilibrium(sys, u(0.0), x0)) throw std::runtime_error("no equilibrium for u = b; pass --x0");
  } else {
    x0 = vec(parse_list(cfg.x0));
  }
  if (x0.size() != sys.n) throw std::invalid_argument("--x0 needs " + std::to_string(sys.n) + " values");
  const auto q = sim::gain_quotient(sys, x0, u, ut, cfg.T, cfg.dt);
  std::printf("x0 =");
  for (int i = 0; i < sys.n; ++i) std::printf(" %.9g", x0[i]);
  std::printf("\nenergy ratio int|y-y~|^2 / int|u-u~|^2 = %.6f\n", q.ratio);
  std::printf("square root (gain units)              = %.6f\n", q.sqrt_ratio);
  json j{{"model_digest", model::digest(sys)},
         {"run_config", cfg.to_json()},
         {"energy_ratio", q.ratio},
         {"sqrt_ratio", q.sqrt_ratio},
         {"output_energy", q.output_energy},
         {"input_energy", q.input_energy},
         {"x0", model::vector_json(x0)}};
  write_file(cfg, "quotient.json", j.dump(2) + "\n");
  return kOk;
}

int cmd_contour(const RunConfig& cfg) {
  const auto sys = model::load_model(cfg.model);
  std::ifstream f(cfg.cert);
  if (!f) throw std::runtime_error("cannot read certificate " + cfg.cert);
  const json cj = json::parse(f);
  if (!cj.contains("storage")) throw std::runtime_error("certificate has no storage function");
  if (cj.value("model_digest", "") != model::digest(sys))
    std::fprintf(stderr, "warning: certificate digest does not match the model\n");
  const auto Sf = storage::from_json(cj.at("storage"));
  storage::Slice sl;
  auto axis = [](const std::string& s, int& copy, int& index) {
    if (s.rfind("xt", 0) == 0) {
      copy = 1;
      index = std::stoi(s.substr(2));
    } else if (s.rfind("x", 0) == 0) {
      copy = 0;
      index = std::stoi(s.substr(1));
    } else {
      throw std::invalid_argument("axis must be x<k> or xt<k>");
    }
  };
  const auto comma = cfg.axes.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--axes needs two axes, e.g. x0,xt0");
  axis(cfg.axes.substr(0, comma), sl.copy_a, sl.index_a);
  axis(cfg.axes.substr(comma + 1), sl.copy_b, sl.index_b);
  const auto g = storage::contour_grid(Sf, sys, sl, cfg.lo, cfg.hi, cfg.resolution);
  std::printf("grid %dx%d, S in [%.6g, %.6g]\n", static_cast<int>(g.values.rows()), static_cast<int>(g.values.cols()),
              g.values.minCoeff(), g.values.maxCoeff());
  write_file(cfg, "contour.csv", storage::grid_csv(g, header(cfg, sys)));
  return kOk;
}

int cmd_examples(const RunConfig& cfg) {
  const std::string dir = cfg.models_dir;
  certify::Options o;
  std::printf("%-34s %-14s %-14s %s\n", "run", "published", "here", "status");
  auto row = [](const std::string& run, const std::string& published, const std::string& here, const std::string& st) {
    std::printf("%-34s %-14s %-14s %s\n", run.c_str(), published.c_str(), here.c_str(), st.c_str());
  };
  auto fmt = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", v);
    return std::string(b);
  };

  const auto dz = model::load_model(dir + "/deadzone.json");
  const auto g2 = certify::incremental_gain_bound(dz, o);
  row("deadzone: gain eta", "10", g2.feasible() ? fmt(g2.eta) : "-", certify::to_string(g2.outcome));
  Eigen::VectorXd xe;
  const auto ub = sim::InputSignal::constant(broadcast(1.05, 1));
  if (sim::equilibrium(dz, ub(0.0), xe)) {
    const auto q = sim::gain_quotient(dz, xe, ub, sim::InputSignal::sinusoid(broadcast(0.05, 1), 0.05, broadcast(1.05, 1)),
                                      100.0, 1e-3);
    row("deadzone: quotient (energy ratio)", "8.9", fmt(q.ratio), "sqrt " + fmt(q.sqrt_ratio));
  }

  const auto sat = model::load_model(dir + "/saturation.json");
  const auto g3 = certify::incremental_gain_bound(sat, o);
  row("saturation: gain", "feasible", g3.feasible() ? "eta " + fmt(g3.eta) : "-", certify::to_string(g3.outcome));

  const auto egg = model::load_model(dir + "/egg.json");
  const auto c1 = certify::combined_certificate(egg, o);
  row("egg: combined eta", "5.005", c1.feasible() ? fmt(c1.eta) : "-", certify::to_string(c1.outcome));
  certify::Options oc = o;
  oc.assembly.common_quadratic = true;
  const auto q1 = certify::combined_certificate(egg, oc);
  row("egg: common quadratic", "infeasible", certify::to_string(q1.outcome), "");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental gain and stability certificates for piecewise-affine systems"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_model = [&](CLI::App* s) {
    s->add_option("model", cfg.model, "model JSON file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", cfg.out, "output directory");
  };
  auto add_cert = [&](CLI::App* s) {
    s->add_flag("--common", cfg.common, "common quadratic storage (all P_i tied)");
    s->add_flag("--symmetry", cfg.symmetry, "tie Pbar_ji to the swapped Pbar_ij");
    s->add_option("--feastol", cfg.feastol, "solver feasibility tolerance")->check(CLI::Range(1e-14, 1e-3));
    s->add_option("--abstol", cfg.abstol, "solver absolute gap tolerance")->check(CLI::Range(1e-14, 1e-3));
    s->add_option("--reltol", cfg.reltol, "solver relative gap tolerance")->check(CLI::Range(1e-14, 1e-3));
    s->add_option("--tol-cert", cfg.tol_cert, "certificate acceptance tolerance")->check(CLI::Range(1e-12, 1e-2));
    s->add_option("--samples", cfg.samples, "verification samples")->check(CLI::Range(1, 10000000));
    s->add_option("--seed", cfg.seed, "sampling seed");
  };

  auto* validate = app.add_subcommand("validate", "check partition, boundaries and continuity");
  add_model(validate);
  auto* gain = app.add_subcommand("gain", "incremental L2-gain bound");
  add_model(gain);
  add_cert(gain);
  gain->add_flag("--combined", cfg.combined, "use the combined gain and stability LMIs");
  auto* stability = app.add_subcommand("stability", "incremental exponential stability");
  add_model(stability);
  add_cert(stability);
  auto* combined = app.add_subcommand("combined", "joint gain and stability certificate");
  add_model(combined);
  add_cert(combined);

  auto* simulate = app.add_subcommand("simulate", "simulate one trajectory");
  add_model(simulate);
  simulate->add_option("--x0", cfg.x0, "initial state, comma separated");
  simulate->add_option("--input", cfg.input, "zero | const:v | sin:A,w0,b | table:t=v;t=v");
  simulate->add_option("--T", cfg.T, "horizon [s]")->check(CLI::PositiveNumber);
  simulate->add_option("--dt", cfg.dt, "step [s]")->check(CLI::Range(1e-7, 1.0));

  auto* quotient = app.add_subcommand("quotient", "energy ratio for u = b against A sin(w0 t) + b");
  add_model(quotient);
  quotient->add_option("--A", cfg.A, "sinusoid amplitude");
  quotient->add_option("--b", cfg.b, "input offset");
  quotient->add_option("--w0", cfg.w0, "frequency [rad/s]");
  quotient->add_option("--T", cfg.T, "horizon [s]")->check(CLI::PositiveNumber);
  quotient->add_option("--dt", cfg.dt, "step [s]")->check(CLI::Range(1e-7, 1.0));
  quotient->add_option("--x0", cfg.x0, "initial state (default: equilibrium of u = b)");

  auto* contour = app.add_subcommand("contour", "storage function grid on a 2-D slice");
  add_model(contour);
  contour->add_option("--cert", cfg.cert, "certificate JSON")->required()->check(CLI::ExistingFile);
  contour->add_option("--axes", cfg.axes, "two axes among x<k>, xt<k>");
  contour->add_option("--lo", cfg.lo, "lower bound");
  contour->add_option("--hi", cfg.hi, "upper bound");
  contour->add_option("--res", cfg.resolution, "points per axis")->check(CLI::Range(2, 5001));

  auto* examples = app.add_subcommand("examples", "run the shipped examples and compare with published values");
  examples->add_option("--models", cfg.models_dir, "model directory")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }
  if (cfg.command.empty()) cfg.command = app.get_subcommands().front()->get_name();

  if (cfg.command == "quotient" && quotient->count("--T") == 0) cfg.T = 100.0;

  try {
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "gain") return cmd_gain(cfg);
    if (cfg.command == "stability") return cmd_stability(cfg);
    if (cfg.command == "combined") return cmd_combined(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "quotient") return cmd_quotient(cfg);
    if (cfg.command == "contour") return cmd_contour(cfg);
    if (cfg.command == "examples") return cmd_examples(cfg);
  } catch (const model::ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kError;
  } catch (const sim::SimError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return kError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
