// Command-line front end: experiment runner plus direct access to the
// penalty evaluators, the partition certificate machinery, the exhaustive
// partition oracle, APS dataset generation, and covariance debugging dumps.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lopblock/aps.hpp"
#include "lopblock/baselines.hpp"
#include "lopblock/bench.hpp"
#include "lopblock/certificate.hpp"
#include "lopblock/gme.hpp"
#include "lopblock/io.hpp"
#include "lopblock/penalty.hpp"

namespace {

using nlohmann::json;

double to_double(const std::string& s, const std::string& key) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("config: bad number for '" + key + "': " + s);
  return v;
}

long long to_int(const std::string& s, const std::string& key) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("config: bad integer for '" + key + "': " + s);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string t = trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

// Key = value text config; '#' starts a comment; lists are comma-separated.
lop::ExperimentConfig parse_config(const std::string& path) {
  lop::ExperimentConfig cfg;
  bool saw_version = false;
  const std::string text = lop::read_file(path);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto int_list = [&]() {
      std::vector<int> v;
      for (const std::string& t : split_list(val))
        v.push_back(static_cast<int>(to_int(t, key)));
      return v;
    };
    auto dbl_list = [&]() {
      std::vector<double> v;
      for (const std::string& t : split_list(val))
        v.push_back(to_double(t, key));
      return v;
    };
    if (key == "schema_version") {
      cfg.schema_version = static_cast<int>(to_int(val, key));
      saw_version = true;
    } else if (key == "grid_size") {
      cfg.grid_size = static_cast<int>(to_int(val, key));
    } else if (key == "m_list") {
      cfg.m_list = int_list();
    } else if (key == "snapshots") {
      cfg.snapshots = static_cast<int>(to_int(val, key));
    } else if (key == "snr_db") {
      cfg.snr_db = to_double(val, key);
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(to_int(val, key));
    } else if (key == "dataset_size") {
      cfg.dataset_size = static_cast<int>(to_int(val, key));
    } else if (key == "halpern_iters") {
      cfg.halpern_iters = static_cast<int>(to_int(val, key));
    } else if (key == "master_seed") {
      cfg.master_seed = static_cast<std::uint64_t>(to_int(val, key));
    } else if (key == "snr_normalizer") {
      cfg.snr_normalizer = val;
    } else if (key == "oracle_tuning") {
      cfg.oracle_tuning = val;
    } else if (key == "methods") {
      cfg.methods = split_list(val);
    } else if (key == "mu_grid") {
      cfg.mu_grid = dbl_list();
    } else if (key == "lambda_grid") {
      cfg.lambda_grid = dbl_list();
    } else if (key == "beta_grid") {
      cfg.beta_grid = dbl_list();
    } else if (key == "omega_grid") {
      cfg.omega_grid = dbl_list();
    } else if (key == "solver_tol") {
      cfg.solver_tol = to_double(val, key);
    } else if (key == "solver_max_iter") {
      cfg.solver_max_iter = static_cast<int>(to_int(val, key));
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  if (!saw_version)
    throw std::runtime_error("config: missing schema_version");
  return cfg;
}

json blocks_json(const lop::BlockPartition& part) {
  json arr = json::array();
  for (const lop::Block& b : part.blocks) arr.push_back({b.start, b.end});
  return arr;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<int> trials, std::optional<std::uint64_t> seed,
            int threads) {
  lop::ExperimentConfig cfg = parse_config(config_path);
  if (trials) cfg.trials = *trials;
  if (seed) cfg.master_seed = *seed;
  if (const char* env = std::getenv("LOPBLOCK_THREADS")) {
    const std::string s(env);
    if (!s.empty()) threads = static_cast<int>(to_int(s, "LOPBLOCK_THREADS"));
  }
  cfg.validate();
  const lop::ResultsTable table = lop::run_experiment(cfg, threads);
  lop::emit_results(table, out_dir, "csv");
  lop::emit_results(table, out_dir, "json");
  std::cout << "wrote " << table.rows.size() << " rows, "
            << table.aggregates.size() << " aggregates to " << out_dir
            << "\n";
  for (const lop::AggregateRow& a : table.aggregates)
    std::cout << a.method << " M=" << a.m
              << " mean_nmse=" << lop::format_double(a.mean_nmse)
              << " (n=" << a.n_trials << ", failed=" << a.n_failed << ")\n";
  return 0;
}

int cmd_certify(const std::string& input_path) {
  const json j = json::parse(lop::read_file(input_path));
  const Eigen::VectorXd x = lop::real_vector_from_json(j.at("signal"));
  lop::BlockPartition part;
  for (const json& b : j.at("blocks"))
    part.blocks.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
  const double beta = j.at("beta").get<double>();

  const lop::Certificate cert = lop::construct_certificate(x, part, beta);
  const lop::VerificationReport rep = lop::verify_conditions(cert, x);
  const bool passed = rep.beta_bound_ok && rep.distinct_levels_ok &&
                      rep.infnorm_condition_ok;
  json out;
  out["passed"] = passed;
  out["beta_bound_ok"] = rep.beta_bound_ok;
  out["distinct_levels_ok"] = rep.distinct_levels_ok;
  out["infnorm_condition_ok"] = rep.infnorm_condition_ok;
  out["lhs"] = rep.lhs_value;
  out["rhs"] = rep.rhs_value;
  out["certified_value"] = rep.certified_value;
  out["numeric_value"] = rep.numeric_value;
  out["gap"] = rep.gap;
  out["sigma_hat"] = lop::real_vector_to_json(cert.sigma_hat);
  out["eta_hat"] = lop::real_vector_to_json(cert.eta_hat);
  out["active_rows"] = cert.I_hat;
  out["level_per_block"] = lop::real_vector_to_json(cert.varsigma);
  out["weight_per_block"] = lop::real_vector_to_json(cert.weights);
  out["blocks"] = blocks_json(cert.partition);
  std::cout << out.dump(2) << "\n";
  return passed ? 0 : 2;
}

int cmd_penalty(const std::string& input_path, std::optional<double> beta,
                std::optional<double> alpha, bool gme, double omega) {
  const Eigen::VectorXd x = lop::read_vector_csv(input_path);
  if (beta.has_value() == alpha.has_value())
    throw std::runtime_error("give exactly one of --beta or --alpha");
  json out;
  if (beta) {
    const lop::PenaltyEvaluation pe = lop::eval_lop_penalized(x, *beta);
    out["form"] = "penalized";
    out["beta"] = *beta;
    out["value"] = pe.value;
    out["tv_of_sigma"] = pe.alpha;
    out["sigma_hat"] = lop::real_vector_to_json(pe.sigma_hat);
    if (gme) {
      if (!(omega > 0))
        throw std::runtime_error("--gme needs --omega in (0, 1]");
      const Eigen::MatrixXd b =
          std::sqrt(omega) *
          Eigen::MatrixXd::Identity(x.size(), x.size());
      const lop::GmeValueResult gv = lop::gme_value(x, b, *beta);
      out["gme_omega"] = omega;
      out["gme_value"] = gv.value;
      out["gme_envelope"] = gv.envelope;
      out["gme_converged"] = gv.converged;
    }
  } else {
    if (gme)
      throw std::runtime_error("--gme requires the penalized form (--beta)");
    const lop::PenaltyEvaluation ce = lop::eval_lop_constrained(x, *alpha);
    out["form"] = "constrained";
    out["alpha"] = *alpha;
    out["value"] = ce.value;
    out["beta_hat"] = ce.beta;
    out["residual"] = ce.residual;
    out["converged"] = ce.converged;
    out["sigma_hat"] = lop::real_vector_to_json(ce.sigma_hat);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_oracle(const std::string& input_path, int max_blocks) {
  const Eigen::VectorXd x = lop::read_vector_csv(input_path);
  const auto [value, partition] = lop::nonconvex_oracle(x, max_blocks);
  json out;
  out["value"] = value;
  out["max_blocks"] = max_blocks;
  out["blocks"] = blocks_json(partition);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gen(const std::string& policy, int count, const std::string& out_path,
            std::uint64_t seed, int grid_n) {
  if (policy != "true" && policy != "dataset")
    throw std::runtime_error("--policy must be 'true' or 'dataset'");
  if (count < 1) throw std::runtime_error("--count must be >= 1");
  lop::ArrayConfig arr;
  arr.grid_size = grid_n;
  std::mt19937_64 rng(seed);
  const lop::ApsPolicy pol =
      policy == "true" ? lop::ApsPolicy::kTrue : lop::ApsPolicy::kDataset;
  std::string text;
  for (int i = 0; i < count; ++i) {
    const lop::SignalVector x = lop::sample_aps(pol, arr, rng).first;
    std::vector<std::string> fields;
    fields.reserve(x.size());
    for (int n = 0; n < x.size(); ++n)
      fields.push_back(lop::format_double(x[n]));
    text += lop::csv_record(fields);
  }
  lop::write_file(out_path, text);
  std::cout << "wrote " << count << " samples (" << grid_n << " columns) to "
            << out_path << "\n";
  return 0;
}

int cmd_dump_cov(int antennas, int grid_n, int snapshots, double snr_db,
                 int halpern_iters, std::uint64_t seed,
                 const std::string& out_path) {
  lop::ArrayConfig arr;
  arr.num_antennas = antennas;
  arr.grid_size = grid_n;
  std::mt19937_64 rng(seed);
  const auto [x_star, spec] = lop::sample_aps(lop::ApsPolicy::kTrue, arr, rng);
  const lop::ComplexMatrix r_true = lop::true_covariance(x_star, arr);
  lop::ComplexMatrix h = lop::sample_channels(r_true, snapshots, 0.0, rng);
  const double s2 = lop::snr_noise_variance(h, snr_db, antennas);
  lop::add_channel_noise(h, s2, rng);
  const lop::CovarianceEstimate est =
      lop::estimate_covariance(h, s2, halpern_iters);
  const lop::ObservationSystem obs = lop::extract_observation(est.r_hat, arr);

  json out;
  out["x_star"] = lop::real_vector_to_json(x_star);
  out["r_true"] = lop::complex_matrix_to_json(r_true);
  out["r_hat"] = lop::complex_matrix_to_json(est.r_hat);
  out["s2"] = s2;
  out["snapshots"] = snapshots;
  out["observation"] = lop::real_vector_to_json(obs.r_hat);
  lop::write_file(out_path, out.dump(2) + "\n");
  std::cout << "wrote covariance dump to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-sparse signal recovery toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the NMSE benchmark");
  std::string run_config, run_out;
  int run_trials = -1;
  long long run_seed = -1;
  int run_threads = 1;
  run->add_option("--config", run_config, "Experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--trials", run_trials, "Override trial count");
  run->add_option("--seed", run_seed, "Override master seed");
  run->add_option("--threads", run_threads,
                  "Worker threads (0 = hardware); env LOPBLOCK_THREADS wins");

  // certify
  auto* certify = app.add_subcommand(
      "certify", "Check a candidate block partition of a signal");
  std::string certify_input;
  certify->add_option("--input", certify_input,
                      "JSON file with signal/blocks/beta")
      ->required()
      ->check(CLI::ExistingFile);

  // penalty
  auto* penalty = app.add_subcommand(
      "penalty", "Evaluate the chain penalty on a vector file");
  std::string penalty_input;
  double penalty_beta = 0, penalty_alpha = 0, penalty_omega = 0;
  bool penalty_gme = false;
  auto* beta_opt =
      penalty->add_option("--beta", penalty_beta, "TV weight (penalized)");
  auto* alpha_opt =
      penalty->add_option("--alpha", penalty_alpha, "TV budget (constrained)");
  penalty->add_option("--input", penalty_input, "CSV vector file")
      ->required()
      ->check(CLI::ExistingFile);
  penalty->add_flag("--gme", penalty_gme,
                    "Also report the Moreau-enhanced value (B = sqrt(omega) I)");
  penalty->add_option("--omega", penalty_omega, "GME strength in (0, 1]");

  // oracle
  auto* oracle = app.add_subcommand(
      "oracle", "Best K-block mixed-norm value by dynamic programming");
  std::string oracle_input;
  int oracle_k = 0;
  oracle->add_option("--input", oracle_input, "CSV vector file")
      ->required()
      ->check(CLI::ExistingFile);
  oracle->add_option("--max-blocks", oracle_k, "Maximum number of blocks")
      ->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate APS samples as CSV");
  std::string gen_policy = "dataset", gen_out;
  int gen_count = 0, gen_grid = 100;
  long long gen_seed = 1;
  gen->add_option("--policy", gen_policy, "'true' or 'dataset'")->required();
  gen->add_option("--count", gen_count, "Number of samples")->required();
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--grid-n", gen_grid, "Angular grid size");

  // dump-cov
  auto* dump = app.add_subcommand(
      "dump-cov", "Dump a covariance pipeline snapshot as JSON");
  int dump_m = 8, dump_grid = 100, dump_t = 1000, dump_halpern = 1000;
  double dump_snr = 30.0;
  long long dump_seed = 1;
  std::string dump_out;
  dump->add_option("--antennas", dump_m, "Array size M");
  dump->add_option("--grid-n", dump_grid, "Angular grid size");
  dump->add_option("--snapshots", dump_t, "Channel snapshots T");
  dump->add_option("--snr", dump_snr, "SNR in dB");
  dump->add_option("--halpern-iters", dump_halpern, "Shaping iterations");
  dump->add_option("--seed", dump_seed, "RNG seed");
  dump->add_option("--out", dump_out, "Output JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_config, run_out,
                     run_trials >= 0 ? std::optional<int>(run_trials)
                                     : std::nullopt,
                     run_seed >= 0 ? std::optional<std::uint64_t>(
                                         static_cast<std::uint64_t>(run_seed))
                                   : std::nullopt,
                     run_threads);
    if (certify->parsed()) return cmd_certify(certify_input);
    if (penalty->parsed())
      return cmd_penalty(penalty_input,
                         beta_opt->count() ? std::optional<double>(penalty_beta)
                                           : std::nullopt,
                         alpha_opt->count()
                             ? std::optional<double>(penalty_alpha)
                             : std::nullopt,
                         penalty_gme, penalty_omega);
    if (oracle->parsed()) return cmd_oracle(oracle_input, oracle_k);
    if (gen->parsed())
      return cmd_gen(gen_policy, gen_count, gen_out,
                     static_cast<std::uint64_t>(gen_seed), gen_grid);
    if (dump->parsed())
      return cmd_dump_cov(dump_m, dump_grid, dump_t, dump_snr, dump_halpern,
                          static_cast<std::uint64_t>(dump_seed), dump_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
