#include "qdisc/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qdisc/solver_inverse.hpp"

namespace qdisc::cli {

using nlohmann::json;

InputError::InputError(const std::string& source, std::size_t line,
                       std::size_t column, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message),
      line_(line) {}

namespace {

std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Position of the first occurrence of "key" in the text, or 1:1.
std::pair<std::size_t, std::size_t> key_position(const std::string& text,
                                                 const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return {1, 1};
  return line_column(text, pos + 1);
}

struct Document {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const auto [line, column] = key_position(text, key);
    throw InputError(source, line, column, message);
  }
};

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InputError(source, line, column, "malformed JSON");
  }
}

double number_at(const Document& doc, const json& j, const std::string& key) {
  if (!j.is_number()) doc.fail(key, "expected a number in \"" + key + "\"");
  return j.get<double>();
}

Eigen::Vector3d vector3_at(const Document& doc, const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) {
    doc.fail(key, "expected a 3-element array in \"" + key + "\"");
  }
  return {number_at(doc, j[0], key), number_at(doc, j[1], key),
          number_at(doc, j[2], key)};
}

Complex complex_at(const Document& doc, const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) {
    doc.fail("kets", "expected a complex number as [re, im]");
  }
  return {number_at(doc, j[0], "kets"), number_at(doc, j[1], "kets")};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateDenominator:
    case ErrorKind::SingularSystem:
    case ErrorKind::NoAdmissibleRoot:
    case ErrorKind::NoConvergence:
    case ErrorKind::SolverFailure:
      return kSolverFailure;
    default:
      return kInvalidInput;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path, 0, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

void print_pretty(std::ostream& out, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  auto scalar = [](const json& v) {
    if (v.is_number_float()) {
      std::ostringstream os;
      os << std::setprecision(std::numeric_limits<double>::max_digits10)
         << v.get<double>();
      return os.str();
    }
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  auto flat = [](const json& v) {
    return std::all_of(v.begin(), v.end(),
                       [](const json& e) { return e.is_primitive(); });
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    const std::string label = j.is_object() ? it.key() : "-";
    if (v.is_primitive()) {
      out << pad << label << ": " << scalar(v) << '\n';
    } else if (v.is_array() && flat(v)) {
      out << pad << label << ": [";
      for (std::size_t k = 0; k < v.size(); ++k) out << (k ? ", " : "") << scalar(v[k]);
      out << "]\n";
    } else {
      out << pad << label << ":\n";
      print_pretty(out, v, indent + 2);
    }
  }
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
  auto logger = std::make_shared<spdlog::logger>("qdisc", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("QD_LOG")) {
    const std::string level(env);
    if (level == "error") logger->set_level(spdlog::level::err);
    if (level == "warn") logger->set_level(spdlog::level::warn);
    if (level == "info") logger->set_level(spdlog::level::info);
    if (level == "debug") logger->set_level(spdlog::level::debug);
  }
  return logger;
}

}  // namespace

Problem parse_problem(const std::string& text, const std::string& source,
                      const LoadOptions& options) {
  const Document doc{text, source};
  json root = parse_json(text, source);
  if (root.is_object() && root.contains("problem") && !root.contains("states") &&
      !root.contains("kets")) {
    root = root["problem"];
  }
  if (!root.is_object()) throw InputError(source, 1, 1, "expected a JSON object");
  const bool has_states = root.contains("states");
  const bool has_kets = root.contains("kets");
  if (has_states == has_kets) {
    doc.fail(has_states ? "kets" : "states",
             "exactly one of \"states\" and \"kets\" must be present");
  }
  if (!root.contains("priors") || !root["priors"].is_array()) {
    doc.fail("priors", "\"priors\" must be an array");
  }

  std::vector<BlochVector> states;
  if (has_states) {
    if (!root["states"].is_array()) doc.fail("states", "\"states\" must be an array");
    for (const auto& s : root["states"]) states.push_back(vector3_at(doc, s, "states"));
  } else {
    if (!root["kets"].is_array()) doc.fail("kets", "\"kets\" must be an array");
    for (const auto& k : root["kets"]) {
      if (!k.is_array() || k.size() != 2) doc.fail("kets", "each ket needs two amplitudes");
      try {
        states.push_back(bloch_from_ket(complex_at(doc, k[0]), complex_at(doc, k[1])));
      } catch (const Error& e) {
        doc.fail("kets", e.what());
      }
    }
  }
  std::vector<double> priors;
  for (const auto& p : root["priors"]) priors.push_back(number_at(doc, p, "priors"));

  double tol = kDefaultTolerance;
  if (root.contains("tolerance")) tol = number_at(doc, root["tolerance"], "tolerance");
  if (options.tolerance) tol = *options.tolerance;

  try {
    return options.subproblem
               ? Problem::subproblem(std::move(states), std::move(priors), tol)
               : Problem::top_level(std::move(states), std::move(priors), tol);
  } catch (const Error& e) {
    std::string key = "priors";
    if (e.kind() == ErrorKind::InvalidState) key = has_states ? "states" : "kets";
    if (e.kind() == ErrorKind::ShapeError) key = has_states ? "states" : "kets";
    doc.fail(key, std::string(to_string(e.kind())) + ": " + e.what());
  }
}

Povm parse_povm(const std::string& text, const std::string& source, double tol) {
  const Document doc{text, source};
  json root = parse_json(text, source);
  if (root.is_object() && root.contains("povm") && !root.contains("elements")) {
    root = root["povm"];
  }
  if (!root.is_object() || !root.contains("elements") || !root["elements"].is_array()) {
    doc.fail("elements", "expected an object with an \"elements\" array");
  }
  Povm povm;
  for (const auto& e : root["elements"]) {
    if (!e.is_object() || !e.contains("omega") || !e.contains("gamma")) {
      doc.fail("elements", "each element needs \"omega\" and \"gamma\"");
    }
    povm.elements.push_back(
        {number_at(doc, e["omega"], "omega"), vector3_at(doc, e["gamma"], "gamma")});
  }
  try {
    validate_povm(povm, tol);
  } catch (const Error& e) {
    doc.fail("elements", std::string(to_string(e.kind())) + ": " + e.what());
  }
  return povm;
}

json to_json(const Problem& problem) {
  json states = json::array();
  for (const auto& s : problem.states()) states.push_back(vec_json(s));
  return {{"states", states}, {"priors", problem.priors()},
          {"tolerance", problem.tolerance()}};
}

json to_json(const Povm& povm) {
  json elements = json::array();
  for (const auto& e : povm.elements) {
    elements.push_back({{"omega", e.omega}, {"gamma", vec_json(e.gamma)}});
  }
  return {{"elements", elements}};
}

json to_json(const Certificate& c) {
  return {{"passed", c.passed},
          {"hermiticity_residual", c.hermiticity_residual},
          {"min_eig_g", c.min_eig_g},
          {"complementarity", c.complementarity},
          {"tolerance", c.tolerance}};
}

json to_json(const Solution& s) {
  return {{"p_corr", s.p_corr},
          {"classification", to_string(s.classification.kind)},
          {"active", s.classification.active},
          {"degenerate", s.degenerate},
          {"povm", to_json(s.povm)},
          {"certificate", to_json(s.certificate)},
          {"diagnostics", s.diagnostics}};
}

json to_json(const SimReport& r) {
  return {{"trials", r.trials},
          {"successes", r.successes},
          {"empirical_rate", r.empirical_rate},
          {"std_error", r.std_error}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"Minimum-error measurements for pure qubit states"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<double> tolerance;
  std::string output = "json";
  bool subproblem = false;
  app.add_option("--tolerance", tolerance, "Tolerance for constraints and certificates")
      ->check(CLI::PositiveNumber);
  app.add_option("--output", output, "Output format")
      ->check(CLI::IsMember({"json", "pretty"}));
  app.add_flag("--subproblem", subproblem, "Allow priors summing to less than one");

  std::string problem_path;
  std::string povm_path;
  bool oracle_check = false;
  std::vector<double> r_values;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  int restarts = OracleConfig{}.restarts;
  std::uint64_t oracle_seed = OracleConfig{}.seed;

  auto* solve_cmd = app.add_subcommand("solve", "Optimal measurement for a problem");
  solve_cmd->add_option("problem", problem_path)->required();
  solve_cmd->add_flag("--oracle-check", oracle_check,
                      "Compare against the random-search oracle");

  auto* inverse_cmd = app.add_subcommand("inverse", "States for which a POVM is optimal");
  inverse_cmd->add_option("povm", povm_path)->required();
  inverse_cmd->add_option("--r", r_values, "Free vector as x,y,z")
      ->delimiter(',')
      ->expected(3)
      ->required();

  auto* verify_cmd = app.add_subcommand("verify", "Certify a POVM on a problem");
  verify_cmd->add_option("problem", problem_path)->required();
  verify_cmd->add_option("povm", povm_path)->required();

  auto* classify_cmd = app.add_subcommand("classify", "Classify the optimal measurement");
  classify_cmd->add_option("problem", problem_path)->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo run of a measurement");
  simulate_cmd->add_option("problem", problem_path)->required();
  simulate_cmd->add_option("povm", povm_path)->required();
  simulate_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", seed);

  auto* oracle_cmd = app.add_subcommand("oracle", "Random-search lower bound");
  oracle_cmd->add_option("problem", problem_path)->required();
  oracle_cmd->add_option("--restarts", restarts)->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInvalidInput;
  }

  auto emit = [&](const json& j) {
    if (output == "pretty") {
      print_pretty(out, j, 0);
    } else {
      out << j.dump(2) << '\n';
    }
  };
  const LoadOptions load{tolerance, subproblem};
  auto load_problem = [&] {
    return parse_problem(read_file(problem_path), problem_path, load);
  };
  auto load_povm = [&](double tol) {
    return parse_povm(read_file(povm_path), povm_path, tol);
  };

  try {
    if (*solve_cmd) {
      const Problem problem = load_problem();
      log->info("solving {} states", problem.size());
      const Solution sol = solve(problem);
      for (const auto& d : sol.diagnostics) log->info("{}", d);
      json j = to_json(sol);
      int code = kSuccess;
      if (oracle_check) {
        const OracleResult o = oracle_optimize(problem);
        j["oracle"] = {{"p_corr", o.p_corr}, {"gap", sol.p_corr - o.p_corr}};
        if (o.p_corr > sol.p_corr + 1e-9) {
          log->error("oracle exceeds the certified value by {}", o.p_corr - sol.p_corr);
          code = kVerificationFailed;
        }
      }
      emit(j);
      return code;
    }
    if (*inverse_cmd) {
      const double tol = tolerance.value_or(kDefaultTolerance);
      const Povm povm = load_povm(tol);
      const InverseResult inv =
          inverse(povm, Eigen::Vector3d(r_values[0], r_values[1], r_values[2]), tol);
      emit({{"problem", to_json(inv.problem)},
            {"a_value", inv.a_value},
            {"q", inv.q},
            {"r", vec_json(inv.r_vector)}});
      return kSuccess;
    }
    if (*verify_cmd) {
      const Problem problem = load_problem();
      const Povm povm = load_povm(problem.tolerance());
      if (povm.size() != problem.size()) {
        throw InputError(povm_path, 1, 1, "POVM and problem sizes differ");
      }
      const Certificate cert = certify(problem, povm);
      json j = to_json(cert);
      j["p_corr"] = success_probability(problem, povm);
      emit(j);
      if (!cert.passed) log->warn("certificate failed");
      return cert.passed ? kSuccess : kVerificationFailed;
    }
    if (*classify_cmd) {
      const Solution sol = solve(load_problem());
      emit({{"classification", to_string(sol.classification.kind)},
            {"active", sol.classification.active}});
      return kSuccess;
    }
    if (*simulate_cmd) {
      const Problem problem = load_problem();
      const Povm povm = load_povm(problem.tolerance());
      if (povm.size() != problem.size()) {
        throw InputError(povm_path, 1, 1, "POVM and problem sizes differ");
      }
      json j = to_json(simulate(problem, povm, trials, seed));
      j["p_corr"] = success_probability(problem, povm);
      emit(j);
      return kSuccess;
    }
    if (*oracle_cmd) {
      const Problem problem = load_problem();
      OracleConfig config;
      config.restarts = restarts;
      config.seed = oracle_seed;
      const OracleResult o = oracle_optimize(problem, config);
      emit({{"p_corr", o.p_corr},
            {"best_restart", o.best_restart},
            {"povm", to_json(o.povm)}});
      return kSuccess;
    }
  } catch (const InputError& e) {
    log->error("{}", e.what());
    return kInvalidInput;
  } catch (const Error& e) {
    log->error("{}: {}", to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kSolverFailure;
  }
  return kInvalidInput;
}

}  // namespace qdisc::cli
