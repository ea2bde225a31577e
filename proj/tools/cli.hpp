#pragma once

// `lmms` command-line front end. cli_main takes the arguments without the
// program name so tests can drive it in-process.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmms/lmms.hpp"

namespace lmms::cli {

using io::json;

enum ExitCode : int { kOk = 0, kInvalid = 1, kUsage = 2 };

struct Input {
  std::string path;
  FiniteLMMS space;
};

inline Input load(const std::string& path) { return {path, io::read_space(path)}; }

inline unsigned threads_from_env() {
  if (const char* v = std::getenv("LMMS_THREADS")) {
    try {
      return static_cast<unsigned>(std::max(1L, std::stol(v)));
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  json to_json() const {
    json in = json::array();
    for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"hash", hash}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {{"command", command}, {"inputs", in}, {"seed", seed}, {"version", LMMS_VERSION}, {"wall_time_s", wall}};
  }
};

inline std::string sidecar_path(const std::string& out) {
  const auto dot = out.rfind(".json");
  return (dot != std::string::npos && dot + 5 == out.size() ? out.substr(0, dot) : out) + ".sidecar.json";
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite Lorentzian metric measure spaces: validation, distances, matrix laws, sprinkling", "lmms"};
  app.require_subcommand(1);
  unsigned threads = threads_from_env();
  app.add_option("--threads", threads, "worker threads (default: LMMS_THREADS or 1)")->check(CLI::PositiveNumber);

  Manifest manifest;
  std::string cmdline = "lmms";
  for (const auto& a : args) cmdline += " " + a;
  manifest.command = cmdline;

  double tol = kDefaultTolerance;
  std::uint64_t seed = 0;
  std::string file_a, file_b, out_path;
  std::vector<std::string> files_b;

  auto* validate_cmd = app.add_subcommand("validate", "check the axioms of an instance");
  validate_cmd->add_option("file", file_a)->required();
  validate_cmd->add_option("--tol", tol, "tolerance")->check(CLI::NonNegativeNumber);

  auto* quotient_cmd = app.add_subcommand("quotient", "distance quotient of an instance");
  quotient_cmd->add_option("file", file_a)->required();
  quotient_cmd->add_option("--tol", tol, "tolerance")->check(CLI::NonNegativeNumber);
  quotient_cmd->add_option("--out", out_path, "write the quotient instance here");

  std::string metric = "l0", solver = "auto";
  double p = 1.0, q = 1.0, lambda = 1.0;
  std::size_t budget_iterations = Budget{}.iterations, restarts = Budget{}.restarts;
  std::size_t node_limit = Budget{}.node_limit, k_max = 3;
  bool csv = false;
  auto* distance_cmd = app.add_subcommand("distance", "distance between A and each B");
  distance_cmd->add_option("a", file_a)->required();
  distance_cmd->add_option("b", files_b)->required();
  distance_cmd->add_option("--metric", metric)->check(CLI::IsMember({"l0", "lp", "linf", "box", "lgh", "intrinsic"}));
  distance_cmd->add_option("--p", p, "exponent for lp")->check(CLI::Range(1.0, 1e300));
  distance_cmd->add_option("--q", q, "tau exponent")->check(CLI::Range(1.0, 1e300));
  distance_cmd->add_option("--lambda", lambda, "box scale")->check(CLI::PositiveNumber);
  distance_cmd->add_option("--solver", solver)->check(CLI::IsMember({"auto", "exact", "frank_wolfe", "fw", "anneal", "grid"}));
  distance_cmd->add_option("--budget", budget_iterations, "iterations per restart");
  distance_cmd->add_option("--restarts", restarts, "independent restarts");
  distance_cmd->add_option("--node-limit", node_limit, "search nodes for exhaustive methods");
  distance_cmd->add_option("--kmax", k_max, "largest k for --metric intrinsic")->check(CLI::PositiveNumber);
  distance_cmd->add_option("--seed", seed);
  distance_cmd->add_flag("--csv", csv, "tabular output");

  auto* iso_cmd = app.add_subcommand("isomorphic", "decide isomorphy");
  iso_cmd->add_option("a", file_a)->required();
  iso_cmd->add_option("b", file_b)->required();

  std::size_t k = 2, samples = 0;
  auto* law_cmd = app.add_subcommand("matrix-law", "k-point matrix law (exact, or sampled with --samples)");
  law_cmd->add_option("file", file_a)->required();
  law_cmd->add_option("--k", k)->check(CLI::PositiveNumber);
  law_cmd->add_option("--samples", samples, "0 for the exact law");
  law_cmd->add_option("--seed", seed);

  SprinkleConfig sc;
  std::optional<std::size_t> n_points;
  std::optional<double> intensity;
  auto* sprinkle_cmd = app.add_subcommand("sprinkle", "sprinkle a causal diamond");
  sprinkle_cmd->add_option("--dim", sc.dim, "spatial dimension")->check(CLI::PositiveNumber);
  sprinkle_cmd->add_option("--T", sc.half_height, "half height")->check(CLI::PositiveNumber);
  auto* n_opt = sprinkle_cmd->add_option("--n", n_points, "number of points")->check(CLI::PositiveNumber);
  auto* i_opt = sprinkle_cmd->add_option("--intensity", intensity, "Poisson intensity")->check(CLI::PositiveNumber);
  n_opt->excludes(i_opt);
  sprinkle_cmd->add_option("--seed", seed);
  sprinkle_cmd->add_option("--out", out_path, "write the instance here (sidecar next to it)");

  std::size_t rec_samples = 10000;
  auto* rec_cmd = app.add_subcommand("reconstruct", "compare matrix laws with the isomorphy verdict");
  rec_cmd->add_option("a", file_a)->required();
  rec_cmd->add_option("b", file_b)->required();
  rec_cmd->add_option("--kmax", k_max)->check(CLI::PositiveNumber);
  rec_cmd->add_option("--samples", rec_samples)->check(CLI::PositiveNumber);
  rec_cmd->add_option("--seed", seed);

  double alpha = 0.5;
  auto* union_cmd = app.add_subcommand("union", "disjoint union along the spacelike boundary");
  union_cmd->add_option("a", file_a)->required();
  union_cmd->add_option("b", file_b)->required();
  union_cmd->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  union_cmd->add_option("--out", out_path, "write the instance here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "lmms: " << e.what() << "\n";
    return kUsage;
  }

  auto emit = [&](json result) {
    manifest.seed = seed;
    out << io::dump({{"result", std::move(result)}, {"manifest", manifest.to_json()}});
  };
  auto note_input = [&](const Input& in) { manifest.inputs.emplace_back(in.path, io::instance_hash(in.space)); };

  try {
    if (*validate_cmd) {
      const FiniteLMMS s = io::read_space(file_a);
      const auto rep = validate(s, tol);
      manifest.inputs.emplace_back(file_a, io::instance_hash(s));
      emit(io::to_json(rep));
      return rep.ok() ? kOk : kInvalid;
    }

    if (*quotient_cmd) {
      const Input in = load(file_a);
      note_input(in);
      const auto qm = distance_quotient_map(in.space, tol);
      if (!out_path.empty()) io::write_space(out_path, qm.space);
      emit({{"instance", io::to_json(qm.space)}, {"classes", qm.classes}});
      return kOk;
    }

    if (*distance_cmd) {
      const Input a = load(file_a);
      note_input(a);
      Budget budget;
      budget.iterations = budget_iterations;
      budget.restarts = restarts;
      budget.node_limit = node_limit;
      budget.threads = threads;
      const Method method = parse_method(solver);
      json results = json::array();
      std::ostringstream table;
      table << "a,b,metric,value,method,certified\n";
      for (const auto& path : files_b) {
        const Input b = load(path);
        note_input(b);
        json r;
        if (metric == "intrinsic") {
          bool exact = true;
          for (std::size_t kk = 1; kk <= k_max; ++kk)
            exact = exact && exact_law_feasible(a.space, kk) && exact_law_feasible(b.space, kk);
          r = {{"value", intrinsic_D(a.space, b.space, k_max, kMaxCenters, seed)},
               {"method", exact ? "exact_law" : "sampled_law"},
               {"certified", exact},
               {"kmax", k_max},
               {"seed", seed}};
        } else {
          DistanceResult d;
          if (metric == "l0") d = solve_l0(a.space, b.space, q, method, budget, seed);
          if (metric == "lp") d = solve_lp(a.space, b.space, p, q, method, budget, seed);
          if (metric == "linf") d = solve_linf(a.space, b.space, q, method, budget, seed);
          if (metric == "box") d = solve_box(a.space, b.space, lambda, budget, seed);
          if (metric == "lgh") d = solve_lgh(a.space, b.space, budget);
          r = io::to_json(d, a.space, b.space);
        }
        r["b"] = path;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", r["value"].get<double>());
        table << csv_escape(file_a) << "," << csv_escape(path) << "," << metric << "," << buf << ","
              << r["method"].get<std::string>() << "," << (r["certified"].get<bool>() ? "true" : "false") << "\n";
        results.push_back(std::move(r));
      }
      if (csv) {
        out << table.str();
      } else {
        emit({{"metric", metric}, {"a", file_a}, {"distances", results}});
      }
      return kOk;
    }

    if (*iso_cmd) {
      const Input a = load(file_a), b = load(file_b);
      note_input(a);
      note_input(b);
      emit(io::to_json(isomorphy_test(a.space, b.space)));
      return kOk;
    }

    if (*law_cmd) {
      const Input in = load(file_a);
      note_input(in);
      const MatrixLaw law = samples ? sample_matrix_law(in.space, k, samples, seed) : exact_matrix_law(in.space, k);
      json r = io::to_json(law);
      r["exact"] = samples == 0;
      r["samples"] = samples;
      emit(std::move(r));
      return kOk;
    }

    if (*sprinkle_cmd) {
      if (intensity) {
        sc.mode = SprinkleMode::poisson;
        sc.intensity = *intensity;
      } else {
        sc.mode = SprinkleMode::iid;
        sc.n = n_points.value_or(50);
      }
      sc.seed = seed;
      const Sprinkling s = sprinkle(sc);
      json r{{"n", s.space.size()}};
      if (!out_path.empty()) {
        io::write_space(out_path, s.space);
        io::write_file(sidecar_path(out_path), io::dump(io::sidecar_json(s)));
        r["instance_path"] = out_path;
        r["sidecar_path"] = sidecar_path(out_path);
      } else {
        r["instance"] = io::to_json(s.space);
        r["sidecar"] = io::sidecar_json(s);
      }
      emit(std::move(r));
      return kOk;
    }

    if (*rec_cmd) {
      const Input a = load(file_a), b = load(file_b);
      note_input(a);
      note_input(b);
      emit(io::to_json(reconstruction_experiment(a.space, b.space, k_max, rec_samples, seed)));
      return kOk;
    }

    if (*union_cmd) {
      const Input a = load(file_a), b = load(file_b);
      note_input(a);
      note_input(b);
      const FiniteLMMS u = disjoint_union(a.space, b.space, alpha);
      if (!out_path.empty()) io::write_space(out_path, u);
      emit({{"instance", io::to_json(u)}});
      return kOk;
    }
  } catch (const io::FormatError& e) {
    err << "lmms: " << e.what() << "\n";
    return kInvalid;
  } catch (const StructuralError& e) {
    err << "lmms: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    err << "lmms: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "lmms: " << e.what() << "\n";
    return kInvalid;
  }
  return kUsage;
}

}  // namespace lmms::cli
