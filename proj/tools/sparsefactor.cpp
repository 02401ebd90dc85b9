#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsefactor/io.hpp"
#include "sparsefactor/rotation.hpp"
#include "sparsefactor/simulation.hpp"

namespace sf = sparsefactor;
using nlohmann::ordered_json;

namespace {

struct InputOptions {
  std::string data_path;
  std::string cov_path;
  int n = 0;
  bool standardize = false;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* data = cmd->add_option("--input", in.data_path,
                               "CSV data matrix, rows = observations");
  auto* cov = cmd->add_option(
      "--cov", in.cov_path,
      "p x p covariance CSV (ML convention, denominator N); requires --n");
  auto* n = cmd->add_option("--n", in.n, "sample size when using --cov");
  cmd->add_flag("--standardize", in.standardize,
                "rescale variables to unit variance before fitting");
  data->excludes(cov);
  cov->needs(n);
}

sf::SampleMoments load_moments(const InputOptions& in) {
  if (!in.data_path.empty()) {
    Eigen::MatrixXd X = sf::read_csv_matrix(in.data_path);
    sf::SampleMoments moments = sf::sample_covariance(X);
    if (in.standardize) {
      Eigen::VectorXd d = moments.S.diagonal().cwiseSqrt();
      if ((d.array() <= 0.0).any())
        throw sf::invalid_data_error("standardize: a variable has zero variance");
      moments.S = d.cwiseInverse().asDiagonal() * moments.S *
                  d.cwiseInverse().asDiagonal();
      moments.S = (0.5 * (moments.S + moments.S.transpose())).eval();
    }
    return moments;
  }
  if (in.cov_path.empty())
    throw CLI::ValidationError("either --input or --cov is required");
  if (in.n < 2) throw CLI::ValidationError("--cov requires --n >= 2");
  Eigen::MatrixXd S = sf::read_csv_matrix(in.cov_path);
  if (in.standardize) {
    Eigen::VectorXd d = S.diagonal().cwiseSqrt();
    if ((d.array() <= 0.0).any())
      throw sf::invalid_data_error("standardize: a variable has zero variance");
    S = d.cwiseInverse().asDiagonal() * S * d.cwiseInverse().asDiagonal();
    S = (0.5 * (S + S.transpose())).eval();
  }
  return sf::SampleMoments::make(std::move(S), in.n);
}

sf::PenaltySpec make_spec(const std::string& penalty, double gamma,
                          bool gamma_given) {
  if (penalty == "lasso") return sf::PenaltySpec::lasso();
  if (penalty == "hard") return sf::PenaltySpec::mcp(1.01);
  if (penalty == "scad")
    return sf::PenaltySpec::scad(gamma_given ? gamma : 3.7);
  if (penalty == "mcp") {
    if (!gamma_given)
      throw CLI::ValidationError("--penalty mcp requires --gamma");
    return sf::PenaltySpec::mcp(gamma);
  }
  throw CLI::ValidationError("unknown penalty: " + penalty);
}

sf::Criterion parse_criterion(const std::string& name) {
  if (name == "aic") return sf::Criterion::aic;
  if (name == "bic") return sf::Criterion::bic;
  if (name == "caic") return sf::Criterion::caic;
  throw CLI::ValidationError("unknown criterion: " + name);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    sf::write_file(out_path, text);
}

int env_threads() {
  const char* v = std::getenv("SPARSEFACTOR_THREADS");
  if (v == nullptr) return 1;
  int t = std::atoi(v);
  return t >= 1 ? t : 1;
}

ordered_json model_json(const sf::FactorModel& model) {
  return ordered_json::parse(sf::model_to_json(model));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Gaussian factor analysis via penalized maximum "
               "likelihood (EM + coordinate descent)"};
  app.require_subcommand(1);

  InputOptions in;
  int factors = 1;
  std::string penalty = "lasso";
  double gamma = 0.0;
  bool gamma_given = false;
  double rho = 0.0;
  double eta = 0.001;
  std::string criterion_name;
  std::string out_path, csv_path;
  std::uint64_t seed = 1;
  int rho_count = 30, gamma_count = 10, restarts = 5;
  double delta = 0.001;
  int threads = 0;

  auto add_penalty_options = [&](CLI::App* cmd) {
    cmd->add_option("--penalty", penalty, "lasso | scad | mcp | hard")
        ->default_str("lasso");
    cmd->add_option("--gamma", gamma, "concavity parameter")
        ->each([&](const std::string&) { gamma_given = true; });
  };

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "single penalized fit at fixed (rho, gamma)");
  add_input_options(fit_cmd, in);
  fit_cmd->add_option("--factors", factors, "number of factors m")->required();
  add_penalty_options(fit_cmd);
  fit_cmd->add_option("--rho", rho, "penalty strength")->required();
  fit_cmd->add_option("--eta", eta, "likelihood ridge weight");
  fit_cmd->add_option("--seed", seed, "random seed for factor-expansion restarts");
  fit_cmd->add_option("--restarts", restarts, "factor-expansion refits");
  fit_cmd->add_option("--out", out_path, "output model JSON (stdout if omitted)");

  // path
  auto* path_cmd = app.add_subcommand("path", "solution path over (gamma, rho)");
  add_input_options(path_cmd, in);
  path_cmd->add_option("--factors", factors, "number of factors m")->required();
  add_penalty_options(path_cmd);
  path_cmd->add_option("--rho-count", rho_count, "rho grid size K");
  path_cmd->add_option("--delta", delta, "rho grid shrink ratio");
  path_cmd->add_option("--gamma-count", gamma_count,
                       "gamma grid size T when --gamma is not fixed");
  path_cmd->add_option("--restarts", restarts, "factor-expansion refits per cell");
  path_cmd->add_option("--eta", eta, "likelihood ridge weight");
  path_cmd->add_option("--criterion", criterion_name,
                       "aic | bic | caic; adds a best-cell field");
  path_cmd->add_option("--seed", seed, "random seed");
  path_cmd->add_option("--out", out_path, "output path JSON (stdout if omitted)");
  path_cmd->add_option("--plot", csv_path, "long-format CSV of the path");

  // select
  std::string path_json_file;
  auto* select_cmd = app.add_subcommand("select", "pick the best cell of a saved path");
  select_cmd->add_option("--path", path_json_file, "path JSON file")->required();
  select_cmd->add_option("--criterion", criterion_name, "aic | bic | caic")
      ->required();
  select_cmd->add_option("--out", out_path, "output JSON (stdout if omitted)");

  // rotate
  std::string loadings_path, rot_criterion = "varimax";
  int rot_starts = 30;
  auto* rotate_cmd = app.add_subcommand(
      "rotate", "maximum-likelihood fit plus rotation, or rotate given loadings");
  add_input_options(rotate_cmd, in);
  auto* load_opt = rotate_cmd->add_option("--loadings", loadings_path,
                                          "rotate this CSV loading matrix directly");
  rotate_cmd->add_option("--factors", factors, "number of factors m");
  rotate_cmd->add_option("--criterion", rot_criterion, "varimax | l1");
  rotate_cmd->add_option("--starts", rot_starts, "random orthogonal starts");
  rotate_cmd->add_option("--seed", seed, "random seed");
  rotate_cmd->add_option("--out", out_path, "rotated loadings CSV (stdout JSON if omitted)");
  (void)load_opt;

  // simulate
  std::string model_name = "A";
  int sim_n = 200, reps = 100;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo recovery study");
  sim_cmd->add_option("--model", model_name, "A | B | pss");
  sim_cmd->add_option("--n", sim_n, "sample size per replication");
  sim_cmd->add_option("--reps", reps, "number of replications");
  add_penalty_options(sim_cmd);
  sim_cmd->add_option("--criterion", criterion_name,
                      "restrict the report to one criterion");
  sim_cmd->add_option("--rho-count", rho_count, "rho grid size K");
  sim_cmd->add_option("--delta", delta, "rho grid shrink ratio");
  sim_cmd->add_option("--restarts", restarts, "factor-expansion refits per cell");
  sim_cmd->add_option("--seed", seed, "random seed");
  sim_cmd->add_option("--threads", threads,
                      "worker threads (SPARSEFACTOR_THREADS as fallback)");
  sim_cmd->add_option("--out", out_path, "report JSON (stdout if omitted)");
  sim_cmd->add_option("--csv", csv_path, "report CSV table");

  // scores
  std::string model_json_file;
  auto* scores_cmd = app.add_subcommand("scores", "posterior factor scores");
  scores_cmd->add_option("--model", model_json_file, "fitted model JSON")
      ->required();
  scores_cmd->add_option("--input", in.data_path, "CSV data matrix")->required();
  scores_cmd->add_option("--out", out_path, "scores CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit_cmd->parsed()) {
      sf::PenaltySpec spec = make_spec(penalty, gamma, gamma_given);
      sf::SampleMoments moments = load_moments(in);
      sf::SolverOptions options;
      options.eta = eta;
      sf::FactorModel init = sf::init_loadings(moments, factors, options);
      sf::FitResult result = sf::fit(moments, factors, rho, spec, init, options);
      sf::PathOptions path_options;
      path_options.solver = options;
      path_options.random_restarts = restarts;
      std::mt19937_64 rng(seed);
      result = sf::maybe_expand_factors(result, moments, factors, rho, spec,
                                        path_options, rng);
      ordered_json doc = model_json(result.model);
      doc["loglik"] = result.objective.loglik;
      doc["penalized"] = result.objective.total;
      doc["df"] = sf::degrees_of_freedom(result.model);
      doc["iterations"] = result.iterations;
      doc["converged"] = result.converged;
      emit(out_path, doc.dump(2) + "\n");
    } else if (path_cmd->parsed()) {
      sf::PenaltySpec spec = make_spec(penalty, gamma, gamma_given);
      sf::SampleMoments moments = load_moments(in);
      sf::PathOptions options;
      options.solver.eta = eta;
      options.random_restarts = restarts;
      const auto start = std::chrono::steady_clock::now();
      sf::FactorModel init = sf::init_loadings(moments, factors, options.solver);
      double rho_K = sf::select_rho_max(moments, init, options.solver);
      sf::PathGrid grid;
      if (spec.family == sf::PenaltyFamily::lasso) {
        grid = sf::build_grid_explicit(
            rho_K, rho_count, delta,
            {std::numeric_limits<double>::infinity()});
      } else if (gamma_given || penalty == "hard") {
        grid = sf::build_grid_explicit(
            rho_K, rho_count, delta,
            {std::numeric_limits<double>::infinity(), spec.gamma});
      } else {
        grid = sf::build_grid(rho_K, rho_count, delta, spec.family, gamma_count);
      }
      sf::PathResult result =
          sf::fit_path(moments, factors, grid, spec.family, options, seed);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      std::string json_text;
      if (!criterion_name.empty()) {
        std::pair<int, int> best =
            sf::select(result, parse_criterion(criterion_name));
        json_text =
            sf::path_to_json(result, &best, criterion_name.c_str(), elapsed);
      } else {
        json_text = sf::path_to_json(result, nullptr, nullptr, elapsed);
      }
      emit(out_path, json_text);
      if (!csv_path.empty()) sf::write_path_csv(csv_path, result);
    } else if (select_cmd->parsed()) {
      sf::PathResult path = sf::path_from_json(sf::read_file(path_json_file));
      sf::Criterion criterion = parse_criterion(criterion_name);
      auto [t, k] = sf::select(path, criterion);
      const sf::PathCell& cell = path.cells[t][k];
      ordered_json doc;
      doc["criterion"] = criterion_name;
      doc["t"] = t;
      doc["k"] = k;
      doc["gamma"] = std::isinf(cell.gamma) ? ordered_json("inf")
                                            : ordered_json(cell.gamma);
      doc["rho"] = cell.rho;
      doc["df"] = cell.df;
      doc["aic"] = cell.criteria.aic;
      doc["bic"] = cell.criteria.bic;
      doc["caic"] = cell.criteria.caic;
      ordered_json model = model_json(cell.fit.model);
      doc["lambda"] = model["lambda"];
      doc["psi"] = model["psi"];
      emit(out_path, doc.dump(2) + "\n");
    } else if (rotate_cmd->parsed()) {
      sf::RotationCriterion criterion;
      if (rot_criterion == "varimax")
        criterion = sf::RotationCriterion::varimax;
      else if (rot_criterion == "l1")
        criterion = sf::RotationCriterion::l1;
      else
        throw CLI::ValidationError("unknown rotation criterion: " + rot_criterion);
      sf::RotationOptions options;
      options.random_starts = rot_starts;
      options.seed = seed;
      sf::RotationResult result;
      if (!loadings_path.empty()) {
        result = sf::rotate(sf::read_csv_matrix(loadings_path), criterion, options);
      } else {
        if (factors < 1)
          throw CLI::ValidationError("rotate needs --loadings or --factors");
        sf::SampleMoments moments = load_moments(in);
        result = sf::two_step(moments, factors, criterion, {}, options);
      }
      if (!out_path.empty()) {
        sf::write_csv_matrix(out_path, result.Lambda_rotated);
      } else {
        ordered_json doc;
        ordered_json rows = ordered_json::array();
        for (int i = 0; i < result.Lambda_rotated.rows(); ++i) {
          ordered_json row = ordered_json::array();
          for (int j = 0; j < result.Lambda_rotated.cols(); ++j)
            row.push_back(result.Lambda_rotated(i, j));
          rows.push_back(std::move(row));
        }
        doc["lambda"] = std::move(rows);
        doc["criterion_value"] = result.criterion_value;
        doc["iterations"] = result.iterations;
        std::cout << doc.dump(2) << "\n";
      }
    } else if (sim_cmd->parsed()) {
      sf::StudyConfig config;
      if (model_name == "A" || model_name == "a") {
        config.truth = sf::model_a();
        config.model_name = "A";
      } else if (model_name == "B" || model_name == "b") {
        config.truth = sf::model_b();
        config.model_name = "B";
      } else if (model_name == "pss") {
        config.truth = sf::pss_model();
        config.model_name = "pss";
      } else {
        throw CLI::ValidationError("unknown model: " + model_name);
      }
      config.N = sim_n;
      config.replications = reps;
      sf::PenaltySpec spec = make_spec(penalty, gamma, gamma_given);
      std::string method_name = penalty;
      if (spec.family != sf::PenaltyFamily::lasso)
        method_name += "(" + std::to_string(spec.gamma) + ")";
      config.methods.push_back({spec, method_name});
      if (!criterion_name.empty())
        config.criteria = {parse_criterion(criterion_name)};
      config.seed = seed;
      config.threads = threads >= 1 ? threads : env_threads();
      config.grid_K = rho_count;
      config.grid_delta = delta;
      config.path_options.random_restarts = restarts;
      sf::StudyReport report = sf::run_study(config);
      emit(out_path, sf::report_to_json(report));
      if (!csv_path.empty()) sf::write_report_csv(csv_path, report);
    } else if (scores_cmd->parsed()) {
      sf::FactorModel model = sf::model_from_json(sf::read_file(model_json_file));
      Eigen::MatrixXd X = sf::read_csv_matrix(in.data_path);
      if (X.cols() != model.p())
        throw sf::invalid_data_error("scores: data dimension does not match model");
      Eigen::RowVectorXd mean = X.colwise().mean();
      Eigen::MatrixXd scores(X.rows(), model.m());
      for (int n = 0; n < X.rows(); ++n)
        scores.row(n) = sf::posterior_scores(model, (X.row(n) - mean).transpose());
      if (!out_path.empty()) {
        sf::write_csv_matrix(out_path, scores);
      } else {
        ordered_json rows = ordered_json::array();
        for (int i = 0; i < scores.rows(); ++i) {
          ordered_json row = ordered_json::array();
          for (int j = 0; j < scores.cols(); ++j) row.push_back(scores(i, j));
          rows.push_back(std::move(row));
        }
        std::cout << rows.dump(2) << "\n";
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sf::parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sf::invalid_data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sf::insufficient_data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sf::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
