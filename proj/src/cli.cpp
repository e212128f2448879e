#include "mixdendro/cli.hpp"

#include "mixdendro/errors.hpp"
#include "mixdendro/io.hpp"
#include "mixdendro/parallel.hpp"
#include "mixdendro/simharness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace mixdendro::cli {

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string log_level = "warn";
  int threads = 0;
  std::string out;
};

class Logger {
 public:
  Logger(std::ostream& err, Level level) : err_(err), level_(level) {}
  void warn(const std::string& m) const { log(Level::Warn, "warning", m); }
  void info(const std::string& m) const { log(Level::Info, "info", m); }

 private:
  void log(Level at, const char* tag, const std::string& m) const {
    if (at <= level_) err_ << tag << ": " << m << '\n';
  }
  std::ostream& err_;
  Level level_;
};

Level parse_level(const std::string& s) {
  static const std::map<std::string, Level> levels{
      {"error", Level::Error}, {"warn", Level::Warn}, {"info", Level::Info}, {"debug", Level::Debug}};
  return levels.at(s);
}

// Primary output goes to --out when given, else to standard output.
void emit(const Globals& g, std::ostream& out, const std::string& content) {
  if (g.out.empty()) {
    out << content;
  } else {
    write_text_file(g.out, content);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(what + ": expected a real number, got '" + s + "'");
}

struct EmFlags {
  int restarts = 8;
  int max_iters = 500;
  double tol = 1e-7;
  double c0 = 0.0;
  double cov_floor = 1e-6;
  double cov_cap = 1e6;
  std::string init = "kmeans++";
  std::string kernel = "location-scale";

  void add_to(CLI::App* app, bool with_c0 = true) {
    app->add_option("--kernel", kernel, "Kernel family")
        ->check(CLI::IsMember({"location", "location-scale"}))
        ->capture_default_str();
    app->add_option("--restarts", restarts, "EM restarts")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-iters", max_iters, "EM iteration cap per restart")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--tol", tol, "Stop when the average log-likelihood gains less than this")
        ->capture_default_str();
    if (with_c0) {
      app->add_option("--c0", c0, "Lower bound on mixing proportions")->capture_default_str();
    }
    app->add_option("--cov-floor", cov_floor, "Smallest covariance eigenvalue")->capture_default_str();
    app->add_option("--cov-cap", cov_cap, "Largest covariance eigenvalue")->capture_default_str();
    app->add_option("--init", init, "Initialization")
        ->check(CLI::IsMember({"kmeans++", "random"}))
        ->capture_default_str();
  }

  EmConfig config(int k, std::uint64_t seed) const {
    EmConfig cfg;
    cfg.k = k;
    cfg.restarts = restarts;
    cfg.max_iters = max_iters;
    cfg.tol_loglik = tol;
    cfg.prop_floor = c0;
    cfg.cov_floor = cov_floor;
    cfg.cov_cap = cov_cap;
    cfg.init = init == "random" ? InitMethod::RandomResponsibility : InitMethod::KMeansPlusPlus;
    cfg.seed = seed;
    cfg.covariance_mode = kernel == "location" ? CovarianceMode::FixedIdentity : CovarianceMode::Full;
    return cfg;
  }
};

// ---------------------------------------------------------------------------

struct FitCmd {
  std::string data;
  int k = 0;
  EmFlags em;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("fit", "Fit a Gaussian mixture by EM and write a model JSON");
    sub->add_option("--data", data, "CSV of observations")->required();
    sub->add_option("--k", k, "Number of components")->required()->check(CLI::PositiveNumber);
    em.add_to(sub);
  }

  int run(const Globals& g, std::ostream& out, const Logger& log) const {
    const Dataset ds = read_csv(data);
    const EmConfig cfg = em.config(k, g.seed);
    const FitResult fit = fit_em(ds, cfg);
    log.info("fit k=" + std::to_string(k) + " avg_loglik=" + format_number(fit.avg_loglik) +
             " iters=" + std::to_string(fit.iters));
    emit(g, out, dump(model_to_json(fit, cfg, ds)));
    if (!fit.converged) {
      throw NumericalFailure("EM did not converge within " + std::to_string(cfg.max_iters) +
                             " iterations for any restart; model written");
    }
    return kOk;
  }
};

struct DendroCmd {
  std::string model;
  std::string newick;
  std::string data;
  std::string linkage = "centroid";

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("dendro", "Build the dendrogram of a fitted mixing measure");
    sub->add_option("--model", model, "Model or measure JSON")->required();
    sub->add_option("--newick", newick, "Also write a Newick file here");
    sub->add_option("--data", data, "CSV for the per-level log-likelihood column");
    sub->add_option("--linkage", linkage, "Merge rule")
        ->check(CLI::IsMember({"centroid", "single"}))
        ->capture_default_str();
  }

  int run(const Globals& g, std::ostream& out, const Logger& log) const {
    const MixingMeasure base = model_from_json(read_json_file(model));
    const Dendrogram tree =
        linkage == "single" ? single_linkage_dendrogram(base) : build_dendrogram(base);
    Json j = dendrogram_to_json(tree);

    std::optional<Dataset> ds;
    if (!data.empty()) ds = read_csv(data);
    const std::vector<MixingMeasure> levels = all_levels(tree);
    std::ostringstream table;
    table << "kappa  height" << (ds ? "  avg_loglik" : "") << '\n';
    j["levels"] = Json::array();
    for (int kappa = tree.order(); kappa >= 1; --kappa) {
      Json row{{"kappa", kappa}};
      table << kappa;
      const double h = kappa >= 2 ? tree.height(kappa) : 0.0;
      row["height"] = h;
      table << "  " << format_number(h);
      if (ds) {
        const double ll = avg_loglik(levels[static_cast<std::size_t>(kappa - 1)], *ds);
        row["avg_loglik"] = ll;
        table << "  " << format_number(ll);
      }
      table << '\n';
      j["levels"].push_back(std::move(row));
    }
    emit(g, out, dump(j));
    if (!newick.empty()) write_text_file(newick, to_newick(tree) + "\n");
    if (!g.out.empty()) {
      out << table.str();
    } else {
      log.info("per-level table:\n" + table.str());
    }
    return kOk;
  }
};

struct SelectCmd {
  std::string data;
  int kmax = 10;
  int kmin = 1;
  std::string methods = "dic";
  std::string omega = "log_n";
  std::string epsilon = "auto";
  bool allow_k1 = false;
  EmFlags em;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("select", "Choose the mixture order");
    sub->add_option("--data", data, "CSV of observations")->required();
    sub->add_option("--kmax", kmax, "Largest candidate order")->capture_default_str();
    sub->add_option("--kmin", kmin, "Smallest candidate order")->capture_default_str();
    sub->add_option("--methods", methods, "Comma list of dic, aic, bic, cut")->capture_default_str();
    sub->add_option("--omega", omega, "log_n, half_log_n or a real")->capture_default_str();
    sub->add_option("--epsilon", epsilon, "Cut threshold: auto or a real")->capture_default_str();
    sub->add_flag("--allow-k1", allow_k1, "Score kappa = 1 by its likelihood alone under DIC");
    em.add_to(sub);
  }

  int run(const Globals& g, std::ostream& out, const Logger& log) const {
    const Dataset ds = read_csv(data);
    SelectOptions opt;
    opt.kmin = kmin;
    opt.kmax = kmax;
    opt.use_dic = false;
    for (const std::string& m : split_list(methods)) {
      if (m == "dic") {
        opt.use_dic = true;
      } else if (m == "aic") {
        opt.use_aic = true;
      } else if (m == "bic") {
        opt.use_bic = true;
      } else if (m == "cut") {
        opt.use_cut = true;
      } else {
        throw InvalidInput("--methods: unknown method '" + m + "'");
      }
    }
    if (!(opt.use_dic || opt.use_aic || opt.use_bic || opt.use_cut)) {
      throw InvalidInput("--methods: nothing selected");
    }
    if (omega == "log_n") {
      opt.omega = omega_log_n(ds.n());
    } else if (omega == "half_log_n") {
      opt.omega = omega_half_log_n(ds.n());
    } else {
      opt.omega = parse_real(omega, "--omega");
    }
    if (epsilon != "auto") opt.epsilon = parse_real(epsilon, "--epsilon");
    opt.allow_k1 = allow_k1;
    opt.em = em.config(1, g.seed);
    const SelectionReport report = run_selection(ds, opt);
    emit(g, out, dump(selection_to_json(report)));
    if (!g.out.empty()) {
      out << selection_table(report);
    } else {
      log.info("selection table:\n" + selection_table(report));
    }
    return kOk;
  }
};

struct DistanceCmd {
  std::string a, b;
  std::string metric = "w2";
  double r = 2.0;
  std::string ground = "concatenated";

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("distance", "Distance between two mixing measures");
    sub->add_option("--a", a, "First measure JSON")->required();
    sub->add_option("--b", b, "Second measure JSON (the truth for D and DG)")->required();
    sub->add_option("--metric", metric, "w1, w2, wr, D or DG")
        ->check(CLI::IsMember({"w1", "w2", "wr", "D", "DG"}))
        ->capture_default_str();
    sub->add_option("--r", r, "Order for --metric wr")->capture_default_str();
    sub->add_option("--ground", ground, "Ground metric between Gaussian atoms")
        ->check(CLI::IsMember({"concatenated", "voronoi-root"}))
        ->capture_default_str();
  }

  int run(const Globals& g, std::ostream& out, const Logger&) const {
    const MixingMeasure ga = model_from_json(read_json_file(a));
    const MixingMeasure gb = model_from_json(read_json_file(b));
    const GaussianGroundMetric gm =
        ground == "voronoi-root" ? GaussianGroundMetric::VoronoiRoot : GaussianGroundMetric::Concatenated;
    double value = 0.0;
    if (metric == "w1") {
      value = wasserstein(ga, gb, 1.0, gm);
    } else if (metric == "w2") {
      value = wasserstein(ga, gb, 2.0, gm);
    } else if (metric == "wr") {
      value = wasserstein(ga, gb, r, gm);
    } else if (metric == "D") {
      value = divergence_D(ga, gb);
    } else {
      value = divergence_DG(ga, gb);
    }
    emit(g, out, format_number(value) + "\n");
    return kOk;
  }
};

struct SimulateCmd {
  std::string scenario;
  std::string experiment = "rate";
  std::string n_grid = "100,316,1000,3162,10000";
  int reps = 16;
  int kover = 5;
  int kmax = 10;
  std::string methods = "aic,bic,dic";
  double eps = 0.01;
  std::string out_dir;
  EmFlags em;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("simulate", "Run a simulation study");
    sub->add_option("--scenario", scenario, "Generating model")
        ->required()
        ->check(CLI::IsMember({"strong", "weak", "contaminated", "skew"}));
    sub->add_option("--experiment", experiment, "rate or selection")
        ->check(CLI::IsMember({"rate", "selection"}))
        ->capture_default_str();
    sub->add_option("--n-grid", n_grid, "Comma list of sample sizes")->capture_default_str();
    sub->add_option("--reps", reps, "Replications per sample size")->capture_default_str();
    sub->add_option("--kover", kover, "Overfitted order for rate studies")->capture_default_str();
    sub->add_option("--kmax", kmax, "Largest candidate order for selection studies")
        ->capture_default_str();
    sub->add_option("--methods", methods, "Selection methods")->capture_default_str();
    sub->add_option("--eps", eps, "Contamination level")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "Output directory")->required();
    sub->add_option("--restarts", em.restarts, "EM restarts")->capture_default_str();
    sub->add_option("--max-iters", em.max_iters, "EM iteration cap")->capture_default_str();
    sub->add_option("--tol", em.tol, "EM tolerance")->capture_default_str();
  }

  int run(const Globals& g, std::ostream&, const Logger& log) const {
    Scenario s = scenario == "strong"         ? strong_scenario()
                 : scenario == "weak"         ? weak_scenario()
                 : scenario == "contaminated" ? contaminated_scenario(eps)
                                              : skew_scenario();
    validate(s);
    ExperimentConfig cfg;
    cfg.n_grid.clear();
    for (const std::string& v : split_list(n_grid)) {
      const double n = parse_real(v, "--n-grid");
      if (n != std::floor(n) || n < 1) throw InvalidInput("--n-grid: '" + v + "' is not a positive integer");
      cfg.n_grid.push_back(static_cast<int>(n));
    }
    cfg.reps = reps;
    cfg.seed = g.seed;
    cfg.threads = resolve_threads(g.threads);
    cfg.em = em.config(1, g.seed);

    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
    write_text_file(path("scenario.json"), dump(scenario_json(s)));

    std::vector<ReplicationFailure> failures;
    if (experiment == "rate") {
      const RateTable t = rate_experiment(s, cfg, kover);
      std::vector<std::vector<std::string>> rows;
      for (const RateRecord& r : t.records) {
        rows.push_back({r.scenario, std::to_string(r.n), std::to_string(r.replication),
                        estimator_name(r.estimator), metric_name(r.metric), format_number(r.error)});
      }
      write_csv(path("records.csv"), {"scenario", "n", "replication", "estimator", "metric", "error"}, rows);
      rows.clear();
      for (const RateSummary& r : t.summary) {
        rows.push_back({estimator_name(r.estimator), metric_name(r.metric), format_number(r.slope),
                        format_number(r.intercept), format_number(r.stderr_slope),
                        r.degenerate ? "1" : "0"});
      }
      write_csv(path("summary.csv"), {"estimator", "metric", "slope", "intercept", "stderr", "degenerate"},
                rows);
      rows.clear();
      for (const RateSummary& r : t.summary) {
        for (std::size_t i = 0; i < r.n_values.size(); ++i) {
          rows.push_back({estimator_name(r.estimator), metric_name(r.metric),
                          std::to_string(r.n_values[i]), format_number(r.medians[i])});
        }
      }
      write_csv(path("medians.csv"), {"estimator", "metric", "n", "median_error"}, rows);
      failures = t.failures;
    } else {
      SelectionExperimentOptions opt;
      opt.kmax = kmax;
      opt.methods.clear();
      for (const std::string& m : split_list(methods)) {
        if (m == "aic") {
          opt.methods.push_back(Method::AIC);
        } else if (m == "bic") {
          opt.methods.push_back(Method::BIC);
        } else if (m == "dic") {
          opt.methods.push_back(Method::DIC);
        } else if (m == "cut") {
          opt.methods.push_back(Method::Cut);
        } else {
          throw InvalidInput("--methods: unknown method '" + m + "'");
        }
      }
      const SelectionTable t = selection_experiment(s, cfg, opt);
      std::vector<std::vector<std::string>> rows;
      for (const SelectionRecord& r : t.records) {
        rows.push_back({std::to_string(r.n), std::to_string(r.replication), method_name(r.method),
                        std::to_string(r.chosen)});
      }
      write_csv(path("records.csv"), {"n", "replication", "method", "chosen"}, rows);
      rows.clear();
      for (const SelectionSummaryRow& r : t.summary) {
        rows.push_back({std::to_string(r.n), method_name(r.method), format_number(r.fraction_correct),
                        format_number(r.mean_chosen), std::to_string(r.replications)});
      }
      write_csv(path("summary.csv"), {"n", "method", "fraction_correct", "mean_chosen", "replications"},
                rows);
      failures = t.failures;
    }
    if (!failures.empty()) {
      std::vector<std::vector<std::string>> rows;
      for (const ReplicationFailure& f : failures) {
        rows.push_back({std::to_string(f.n), std::to_string(f.replication), "\"" + f.message + "\""});
      }
      write_csv(path("failures.csv"), {"n", "replication", "message"}, rows);
      log.warn(std::to_string(failures.size()) + " replications failed; see failures.csv");
    }
    log.info("wrote " + out_dir);
    return kOk;
  }
};

struct PcaCmd {
  std::string data;
  int q = 0;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("pca", "Project data onto its top principal axes");
    sub->add_option("--data", data, "CSV of observations")->required();
    sub->add_option("--q", q, "Number of components")->required();
  }

  int run(const Globals& g, std::ostream& out, const Logger&) const {
    const Dataset proj = pca_project(read_csv(data), q);
    std::ostringstream csv;
    for (int c = 0; c < q; ++c) csv << (c ? "," : "") << "pc" << (c + 1);
    csv << '\n';
    for (Eigen::Index r = 0; r < proj.n(); ++r) {
      for (Eigen::Index c = 0; c < proj.d(); ++c) csv << (c ? "," : "") << format_number(proj.rows()(r, c));
      csv << '\n';
    }
    emit(g, out, csv.str());
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dendrograms of mixing measures", "mixdendro"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--log-level", g.log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads; MIXDENDRO_THREADS wins")->capture_default_str();
  app.add_option("--out", g.out, "Primary output file (default: standard output)");

  FitCmd fit;
  DendroCmd dendro;
  SelectCmd select;
  DistanceCmd distance;
  SimulateCmd simulate;
  PcaCmd pca;
  fit.add(app);
  dendro.add(app);
  select.add(app);
  distance.add(app);
  simulate.add(app);
  pca.add(app);

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
    err << "error: usage: " << e.what() << '\n';
    return kInvalidInput;
  }

  const Logger log(err, parse_level(g.log_level));
  try {
    if (app.got_subcommand("fit")) return fit.run(g, out, log);
    if (app.got_subcommand("dendro")) return dendro.run(g, out, log);
    if (app.got_subcommand("select")) return select.run(g, out, log);
    if (app.got_subcommand("distance")) return distance.run(g, out, log);
    if (app.got_subcommand("simulate")) return simulate.run(g, out, log);
    if (app.got_subcommand("pca")) return pca.run(g, out, log);
  } catch (const ParseError& e) {
    err << "error: parse error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const DimensionMismatch& e) {
    err << "error: dimension mismatch: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const UnsupportedOrder& e) {
    err << "error: unsupported order: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const InvalidInput& e) {
    err << "error: invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const NumericalFailure& e) {
    err << "error: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Json::exception& e) {
    err << "error: parse error: json: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: invalid input: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace mixdendro::cli
