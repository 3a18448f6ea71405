#pragma once

// Command-line front end. run() is separate from main() so tests can drive
// every subcommand in-process.
//
// Exit codes: 0 success, 1 verification failure, 2 input error.

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "framekit/framekit.hpp"

namespace framekit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitInputError = 2;

namespace detail {

struct ProfileFlags {
  std::optional<int> d;
  std::vector<int> dims;
  std::vector<double> weights;
  std::vector<double> weights2;

  void attach(CLI::App& app) {
    app.add_option("--d", d, "ambient dimension");
    app.add_option("--dims", dims, "subspace dimensions, comma separated")->delimiter(',');
    auto* w = app.add_option("--weights", weights, "weights w_k, comma separated")->delimiter(',');
    auto* w2 = app.add_option("--weights2", weights2, "squared weights w_k^2, comma separated")->delimiter(',');
    w->excludes(w2);
  }

  bool given() const { return d.has_value() || !dims.empty() || !weights.empty() || !weights2.empty(); }

  DimProfile profile() const {
    if (!d) throw Error(ErrorCode::InvalidArgument, "--d is required");
    if (dims.empty()) throw Error(ErrorCode::InvalidArgument, "--dims is required");
    if (weights.empty() && weights2.empty()) {
      throw Error(ErrorCode::InvalidArgument, "one of --weights or --weights2 is required");
    }
    if (!weights2.empty()) {
      if (weights2.size() != dims.size()) throw Error(ErrorCode::ShapeMismatch, "--weights2 and --dims differ in length");
      return DimProfile::from_weights_squared(*d, dims, weights2);
    }
    DimProfile p{*d, dims, weights};
    p.validate();
    return p;
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LoadedFrame load(const std::string& path, std::ostream& err) {
  LoadedFrame f = parse_frame(read_file(path));
  for (const auto& w : f.warnings) err << "warning: " << w << "\n";
  return f;
}

inline Field parse_field(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw Error(ErrorCode::InvalidArgument, "--field must be real or complex");
}

class Output {
 public:
  Output(std::string path, std::ostream& fallback) : path_(std::move(path)), fallback_(fallback) {}

  void write(const std::string& text) {
    if (path_.empty()) {
      fallback_ << text;
      return;
    }
    std::ofstream os(path_, std::ios::binary);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path_);
    os << text;
  }

  void write(const json& j) { write(j.dump(2) + "\n"); }

 private:
  std::string path_;
  std::ostream& fallback_;
};

template <FieldScalar S>
json potential_report(const FusionFrame<S>& f) {
  const auto p = f.profile();
  json out = profile_json(p);
  out["field"] = std::string(to_string(field_of<S>));
  out["ffp"] = ffp(f);
  out["lower_bound"] = ffp_lower_bound(p);
  out["gap"] = out["ffp"].get<double>() - out["lower_bound"].get<double>();
  return out;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"framekit: fusion frame potential, minimization and structure checks"};
  app.require_subcommand(1);

  std::string input;
  std::string output;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string field = "real";
  int restarts = 0;
  int max_iters = 0;
  double grad_tol = 0.0;
  std::string config_path;
  std::string frame_out;
  detail::ProfileFlags pf;

  auto input_opt = [&](CLI::App* sc, bool required) {
    auto* o = sc->add_option("input", input, "frame file (JSON)");
    if (required) o->required();
    sc->add_option("-o,--output", output, "write the report here instead of stdout");
  };

  auto* potential = app.add_subcommand("potential", "fusion frame potential of a frame file");
  input_opt(potential, true);

  auto* bound = app.add_subcommand("bound", "lower bound (1/d)(sum w^2 L)^2 for a frame file or profile");
  input_opt(bound, false);
  pf.attach(*bound);

  auto* tight = app.add_subcommand("tight-check", "test whether S = alpha I");
  input_opt(tight, true);
  tight->add_option("--tol", tol, "relative tolerance")->default_val(1e-8);

  auto* irr = app.add_subcommand("irregularity", "irregularity N0 - 1 and the fundamental inequality");
  input_opt(irr, false);
  pf.attach(*irr);

  auto* minval = app.add_subcommand("min-value", "closed-form minimum of the potential over frames in class E");
  input_opt(minval, false);
  pf.attach(*minval);

  auto* minimize_cmd = app.add_subcommand("minimize", "minimize the potential (multistart, or from --start)");
  std::string start_path;
  minimize_cmd->add_option("-o,--output", output, "write the report here instead of stdout");
  minimize_cmd->add_option("--start", start_path, "single run from this frame file");
  minimize_cmd->add_option("--seed", seed, "base seed")->default_val(0);
  minimize_cmd->add_option("--restarts", restarts, "number of random starts");
  minimize_cmd->add_option("--max-iters", max_iters, "iteration limit per start");
  minimize_cmd->add_option("--grad-tol", grad_tol, "gradient norm stopping tolerance");
  minimize_cmd->add_option("--field", field, "real or complex")->default_val("real");
  minimize_cmd->add_option("--config", config_path, "optimizer config (JSON)");
  minimize_cmd->add_option("--frame-out", frame_out, "write the final frame here");
  pf.attach(*minimize_cmd);

  auto* verify = app.add_subcommand("verify", "run every structure check and name the first failing clause");
  input_opt(verify, true);
  verify->add_option("--tol", tol, "membership and residual tolerance")->default_val(1e-8);

  auto* random = app.add_subcommand("random", "random frame with a given profile");
  random->add_option("-o,--output", output, "write the frame here instead of stdout");
  random->add_option("--seed", seed, "seed")->default_val(0);
  random->add_option("--field", field, "real or complex")->default_val("real");
  pf.attach(*random);

  auto* demo = app.add_subcommand("reconstruct-demo", "reconstruct a random vector with a tight frame");
  input_opt(demo, true);
  demo->add_option("--seed", seed, "seed for the test vector")->default_val(0);
  demo->add_option("--tol", tol, "tightness tolerance")->default_val(1e-8);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  detail::Output sink(output, out);
  auto profile_from = [&]() -> DimProfile {
    if (!input.empty()) {
      if (pf.given()) throw Error(ErrorCode::InvalidArgument, "give either a frame file or profile flags, not both");
      const auto f = detail::load(input, err);
      return std::visit([](const auto& fr) { return fr.profile(); }, f.frame);
    }
    return pf.profile();
  };

  try {
    if (potential->parsed()) {
      const auto f = detail::load(input, err);
      sink.write(std::visit([](const auto& fr) { return detail::potential_report(fr); }, f.frame));
      return kExitOk;
    }

    if (bound->parsed()) {
      const auto p = profile_from();
      json rep = profile_json(p);
      rep["lower_bound"] = ffp_lower_bound(p);
      rep["fundamental_inequality"] = fundamental_inequality(p);
      sink.write(rep);
      return kExitOk;
    }

    if (tight->parsed()) {
      const auto f = detail::load(input, err);
      const bool ok = std::visit(
          [&](const auto& fr) {
            const auto alpha = is_tight(fr, tol);
            json rep = {{"tight", alpha.has_value()},
                        {"alpha", alpha ? json(*alpha) : json(nullptr)},
                        {"residual", tightness_residual(fr)},
                        {"tol", tol}};
            sink.write(rep);
            return alpha.has_value();
          },
          f.frame);
      return ok ? kExitOk : kExitVerificationFailed;
    }

    if (irr->parsed()) {
      sink.write(irregularity_report(profile_from()));
      return kExitOk;
    }

    if (minval->parsed()) {
      const auto p = profile_from();
      const auto mv = minimum_value_detail(p);
      json rep = profile_json(p);
      rep["min_value"] = mv.value;
      rep["N0"] = mv.n0;
      rep["lower_bound"] = ffp_lower_bound(p);
      sink.write(rep);
      return kExitOk;
    }

    if (minimize_cmd->parsed()) {
      OptimizerConfig cfg;
      if (!config_path.empty()) {
        try {
          cfg = config_from_json(json::parse(detail::read_file(config_path)));
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::ParseError, e.what());
        }
      }
      if (minimize_cmd->count("--seed")) cfg.seed = seed;
      if (minimize_cmd->count("--restarts")) cfg.restarts = restarts;
      if (minimize_cmd->count("--max-iters")) cfg.max_iters = max_iters;
      if (minimize_cmd->count("--grad-tol")) cfg.grad_tol = grad_tol;
      if (minimize_cmd->count("--field")) cfg.field = detail::parse_field(field);
      cfg.validate();

      auto emit = [&](const auto& report) {
        json rep = to_json(report);
        rep["config"] = to_json(cfg);
        if (!frame_out.empty()) detail::Output(frame_out, out).write(format_frame(report.frame));
        sink.write(rep);
      };
      if (!start_path.empty()) {
        if (pf.given()) throw Error(ErrorCode::InvalidArgument, "give either --start or profile flags, not both");
        const auto f = detail::load(start_path, err);
        std::visit([&](const auto& fr) { emit(minimize(fr, cfg)); }, f.frame);
        return kExitOk;
      }
      const auto p = pf.profile();
      if (cfg.field == Field::Real) {
        emit(multistart<double>(p, cfg));
      } else {
        emit(multistart<std::complex<double>>(p, cfg));
      }
      return kExitOk;
    }

    if (verify->parsed()) {
      const auto f = detail::load(input, err);
      const auto outcome = std::visit([&](const auto& fr) { return verify_all(fr, tol); }, f.frame);
      sink.write(to_json(outcome));
      return outcome.passed() ? kExitOk : kExitVerificationFailed;
    }

    if (random->parsed()) {
      const auto p = pf.profile();
      if (detail::parse_field(field) == Field::Real) {
        sink.write(format_frame(random_frame<double>(p, seed)));
      } else {
        sink.write(format_frame(random_frame<std::complex<double>>(p, seed)));
      }
      return kExitOk;
    }

    if (demo->parsed()) {
      const auto f = detail::load(input, err);
      return std::visit(
          [&](const auto& fr) {
            using S = typename std::decay_t<decltype(fr)>::Scalar;
            const auto alpha = is_tight(fr, tol);
            if (!alpha) {
              sink.write(json{{"tight", false}, {"residual", tightness_residual(fr)}});
              return kExitVerificationFailed;
            }
            std::mt19937_64 rng(seed);
            const Vec<S> x = gaussian_matrix<S>(fr.d(), 1, rng).col(0);
            const Vec<S> y = reconstruct(fr, *alpha, x, tol);
            sink.write(json{{"tight", true},
                            {"alpha", *alpha},
                            {"input_norm", x.norm()},
                            {"reconstruction_error", (y - x).norm()}});
            return kExitOk;
          },
          f.frame);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace framekit::cli
