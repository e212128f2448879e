#include "mixdendro/io.hpp"

#include "mixdendro/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mixdendro {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

namespace {

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError("json: " + where + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError("json: " + where + ": expected a number");
  return j.get<double>();
}

VectorXd vector_from(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError("json: " + where + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

MatrixXd matrix_from(const Json& j, Eigen::Index d, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d) {
    throw DimensionMismatch(where + ": expected " + std::to_string(d) + " rows");
  }
  MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const VectorXd row = vector_from(j[static_cast<std::size_t>(r)], where);
    if (row.size() != d) {
      throw DimensionMismatch(where + ": row " + std::to_string(r) + " has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(d));
    }
    m.row(r) = row.transpose();
  }
  return m;
}

Json atom_json(const Atom& atom) {
  Json a;
  a["weight"] = atom.weight;
  if (const auto* e = std::get_if<EuclideanPoint>(&atom.point)) {
    a["theta"] = vector_json(e->theta());
  } else {
    const auto& g = std::get<GaussianPoint>(atom.point);
    a["mu"] = vector_json(g.mu());
    a["sigma"] = matrix_json(g.sigma());
  }
  return a;
}

Atom atom_from(const Json& j, Kernel kernel, Eigen::Index d, const EigenBounds& bounds,
               const std::string& where) {
  const double w = number(field(j, "weight", where), where + ".weight");
  if (kernel == Kernel::EuclideanLocation) {
    VectorXd theta = vector_from(field(j, "theta", where), where + ".theta");
    if (theta.size() != d) {
      throw DimensionMismatch(where + ".theta has dimension " + std::to_string(theta.size()) +
                              ", expected " + std::to_string(d));
    }
    return Atom(w, EuclideanPoint(std::move(theta)));
  }
  VectorXd mu = vector_from(field(j, "mu", where), where + ".mu");
  if (mu.size() != d) {
    throw DimensionMismatch(where + ".mu has dimension " + std::to_string(mu.size()) +
                            ", expected " + std::to_string(d));
  }
  MatrixXd sigma = matrix_from(field(j, "sigma", where), d, where + ".sigma");
  return Atom(w, GaussianPoint(std::move(mu), std::move(sigma), bounds));
}

Kernel kernel_from(const Json& j, const std::string& where) {
  const Json& k = field(j, "kernel", where);
  if (k == "euclidean") return Kernel::EuclideanLocation;
  if (k == "gaussian") return Kernel::GaussianLocationScale;
  throw ParseError("json: " + where + ": unknown kernel " + k.dump());
}

// Merged atoms of a dendrogram may leave the fitting bounds; only positive
// definiteness is required of them.
constexpr EigenBounds kAnyPositiveDefinite{std::numeric_limits<double>::min(),
                                           std::numeric_limits<double>::infinity()};

}  // namespace

Json measure_to_json(const MixingMeasure& measure) {
  Json j;
  j["kernel"] = kernel_name(measure.kernel());
  j["dim"] = measure.dim();
  j["atoms"] = Json::array();
  for (const Atom& a : measure.atoms()) j["atoms"].push_back(atom_json(a));
  return j;
}

MixingMeasure measure_from_json(const Json& j, const EigenBounds& bounds) {
  const std::string where = "measure";
  const Kernel kernel = kernel_from(j, where);
  const Json& dim = field(j, "dim", where);
  if (!dim.is_number_integer() || dim.get<long long>() < 1) {
    throw ParseError("json: measure: \"dim\" must be a positive integer");
  }
  const auto d = static_cast<Eigen::Index>(dim.get<long long>());
  const Json& atoms = field(j, "atoms", where);
  if (!atoms.is_array()) throw ParseError("json: measure: \"atoms\" must be an array");
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    out.push_back(atom_from(atoms[i], kernel, d, bounds, "atoms[" + std::to_string(i) + "]"));
  }
  return MixingMeasure(kernel, std::move(out));
}

Json model_to_json(const FitResult& fit, const EmConfig& cfg, const Dataset& data) {
  Json j = measure_to_json(fit.measure);
  Json f;
  f["k"] = cfg.k;
  f["covariance_mode"] = cfg.covariance_mode == CovarianceMode::Full ? "full" : "identity";
  f["init"] = cfg.init == InitMethod::KMeansPlusPlus ? "kmeans++" : "random";
  f["restarts"] = cfg.restarts;
  f["max_iters"] = cfg.max_iters;
  f["tol_loglik"] = cfg.tol_loglik;
  f["cov_floor"] = cfg.cov_floor;
  f["cov_cap"] = cfg.cov_cap;
  f["c0"] = cfg.prop_floor;
  f["seed"] = cfg.seed;
  f["n"] = data.n();
  f["avg_loglik"] = fit.avg_loglik;
  f["iters"] = fit.iters;
  f["converged"] = fit.converged;
  f["best_restart"] = fit.best_restart;
  f["restart_logliks"] = fit.restart_logliks;
  j["fit"] = std::move(f);
  return j;
}

MixingMeasure model_from_json(const Json& j) {
  EigenBounds bounds;
  if (j.is_object() && j.contains("fit")) {
    const Json& f = j.at("fit");
    bounds.lambda_min = number(field(f, "cov_floor", "fit"), "fit.cov_floor");
    bounds.lambda_max = number(field(f, "cov_cap", "fit"), "fit.cov_cap");
  }
  return measure_from_json(j, bounds);
}

Json dendrogram_to_json(const Dendrogram& tree) {
  Json j;
  j["linkage"] = linkage_name(tree.linkage());
  j["base"] = measure_to_json(tree.base());
  j["records"] = Json::array();
  for (const MergeRecord& r : tree.records()) {
    j["records"].push_back({{"level", r.level},
                            {"i", r.left},
                            {"j", r.right},
                            {"height", r.height},
                            {"merged_atom", atom_json(r.merged_atom)}});
  }
  return j;
}

Dendrogram dendrogram_from_json(const Json& j) {
  const Json& tag = field(j, "linkage", "dendrogram");
  Linkage linkage;
  if (tag == "centroid") {
    linkage = Linkage::Centroid;
  } else if (tag == "single") {
    linkage = Linkage::SingleLinkage;
  } else {
    throw ParseError("json: dendrogram: unknown linkage " + tag.dump());
  }
  MixingMeasure base = measure_from_json(field(j, "base", "dendrogram"), kAnyPositiveDefinite);
  const Json& recs = field(j, "records", "dendrogram");
  if (!recs.is_array()) throw ParseError("json: dendrogram: \"records\" must be an array");
  std::vector<MergeRecord> records;
  for (std::size_t t = 0; t < recs.size(); ++t) {
    const std::string where = "records[" + std::to_string(t) + "]";
    const Json& r = recs[t];
    const auto index = [&](const char* key) {
      const Json& v = field(r, key, where);
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ParseError("json: " + where + ": \"" + key + "\" must be a nonnegative integer");
      }
      return v.get<long long>();
    };
    records.push_back({static_cast<int>(index("level")), static_cast<std::size_t>(index("i")),
                       static_cast<std::size_t>(index("j")),
                       atom_from(field(r, "merged_atom", where), base.kernel(), base.dim(),
                                 kAnyPositiveDefinite, where + ".merged_atom"),
                       number(field(r, "height", where), where + ".height")});
  }
  return Dendrogram(std::move(base), std::move(records), linkage);
}

Json selection_to_json(const SelectionReport& report) {
  Json j;
  j["n"] = report.n;
  j["omega"] = report.omega;
  j["dic"] = Json::array();
  for (const DicRow& r : report.dic_rows) {
    j["dic"].push_back(
        {{"kappa", r.kappa}, {"height", r.height}, {"avg_loglik", r.avg_loglik}, {"dic", r.dic}});
  }
  j["refits"] = Json::array();
  for (const RefitRow& r : report.refit_rows) {
    j["refits"].push_back({{"kappa", r.kappa},
                           {"avg_loglik", r.avg_loglik},
                           {"free_parameters", r.free_parameters},
                           {"aic", r.aic},
                           {"bic", r.bic},
                           {"converged", r.converged}});
  }
  j["chosen"] = report.chosen;
  if (report.epsilon) j["epsilon"] = *report.epsilon;
  if (report.cut) j["cut"] = *report.cut;
  return j;
}

namespace {

std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (row.size() > width.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << std::setw(static_cast<int>(width[c])) << row[c];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string selection_table(const SelectionReport& report) {
  std::ostringstream out;
  out << "n = " << report.n << ", omega = " << format_number(report.omega) << '\n';
  if (!report.dic_rows.empty()) {
    std::vector<std::vector<std::string>> rows{{"kappa", "height", "avg_loglik", "dic"}};
    for (const DicRow& r : report.dic_rows) {
      rows.push_back({std::to_string(r.kappa), format_number(r.height),
                      format_number(r.avg_loglik), format_number(r.dic)});
    }
    out << '\n' << aligned(rows);
  }
  if (!report.refit_rows.empty()) {
    std::vector<std::vector<std::string>> rows{
        {"kappa", "avg_loglik", "params", "aic", "bic", "converged"}};
    for (const RefitRow& r : report.refit_rows) {
      rows.push_back({std::to_string(r.kappa), format_number(r.avg_loglik),
                      std::to_string(r.free_parameters), format_number(r.aic),
                      format_number(r.bic), r.converged ? "yes" : "no"});
    }
    out << '\n' << aligned(rows);
  }
  if (report.epsilon) out << "\nepsilon = " << format_number(*report.epsilon) << '\n';
  out << '\n';
  for (const auto& [method, k] : report.chosen) out << method << ": " << k << '\n';
  return out.str();
}

Json scenario_json(const Scenario& s) {
  Json j;
  j["name"] = scenario_name(s);
  j["true_order"] = true_order(s);
  if (const auto* c = std::get_if<EpsContaminated>(&s)) {
    j["eps"] = c->eps;
    j["laplace"] = {{"location", c->laplace_location}, {"scale", c->laplace_scale}};
  }
  if (const auto* m = std::get_if<SkewMixture>(&s)) {
    j["components"] = Json::array();
    for (const SkewComponent& c : m->components) {
      j["components"].push_back({{"weight", c.weight},
                                 {"location", c.location},
                                 {"variance", c.variance},
                                 {"skewness", c.skewness}});
    }
  }
  if (const auto truth = scenario_truth(s)) j["truth"] = measure_to_json(*truth);
  if (std::holds_alternative<WellSpecifiedWeak>(s)) {
    j["substitutions"] = Json::array(
        {{{"component", 0},
          {"printed", {{0.5, 0.5}, {0.5, 0.1}}},
          {"used", {{0.5, 0.1}, {0.1, 0.5}}},
          {"reason", "printed matrix is not positive definite (determinant -0.2)"}}});
  }
  j["fit_covariance"] = fit_mode(s) == CovarianceMode::Full ? "full" : "identity";
  return j;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  bool first_content = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_content) {
        first_content = false;
        width = fields.size();
        continue;
      }
      throw ParseError("csv: " + origin + ":" + std::to_string(lineno) +
                       ": non-numeric field");
    }
    if (width == 0) width = row.size();
    first_content = false;
    if (row.size() != width) {
      throw ParseError("csv: " + origin + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(width) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("csv: " + origin + ": no data rows");
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (!m.allFinite()) throw ParseError("csv: " + origin + ": non-finite value");
  return Dataset(std::move(m));
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  const auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t c = 0; c < fields.size(); ++c) out << (c ? "," : "") << fields[c];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text_file(path, out.str());
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError("json: " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out << content;
  if (!out) throw InvalidInput("failed writing " + path);
}

}  // namespace mixdendro
