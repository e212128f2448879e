#include "mixdendro/selection.hpp"

#include "mixdendro/errors.hpp"

#include <cmath>
#include <limits>

namespace mixdendro {

SelectionReport dic_scores(const Dendrogram& tree, const Dataset& data, double omega,
                           const DicOptions& options) {
  if (tree.linkage() != Linkage::Centroid) {
    throw InvalidInput("DIC is defined on centroid-linkage dendrograms");
  }
  const int k = tree.order();
  if (k < 2) throw InvalidInput("DIC needs a dendrogram over at least two atoms");
  if (!std::isfinite(omega)) throw InvalidInput("omega must be finite");
  const int lowest = options.allow_k1 ? std::max(1, options.kmin) : std::max(2, options.kmin);
  if (lowest > k) {
    throw InvalidInput("no candidate order: kmin " + std::to_string(options.kmin) +
                       " exceeds dendrogram order " + std::to_string(k));
  }

  SelectionReport report;
  report.n = data.n();
  report.omega = omega;
  const std::vector<MixingMeasure> levels = all_levels(tree);
  int best = -1;
  double best_dic = std::numeric_limits<double>::infinity();
  for (int kappa = lowest; kappa <= k; ++kappa) {
    const double height = kappa >= 2 ? tree.height(kappa) : 0.0;
    const double ll = avg_loglik(levels[static_cast<std::size_t>(kappa - 1)], data);
    const double dic = -(height + omega * ll);
    report.dic_rows.push_back({kappa, height, ll, dic});
    if (dic < best_dic) {
      best_dic = dic;
      best = kappa;
    }
  }
  if (best < 0) throw NumericalFailure("DIC is not finite at any level");
  report.chosen["dic"] = best;
  return report;
}

int free_parameters(int kappa, Eigen::Index d, CovarianceMode mode) {
  const auto dd = static_cast<int>(d);
  int m = (kappa - 1) + kappa * dd;
  if (mode == CovarianceMode::Full) m += kappa * dd * (dd + 1) / 2;
  return m;
}

std::vector<RefitRow> aic_bic(const Dataset& data, int kmin, int kmax, const EmConfig& base,
                              std::vector<FitResult>* fits) {
  if (kmin < 1 || kmax < kmin || kmax > data.n()) {
    throw InvalidInput("refit range [" + std::to_string(kmin) + ", " + std::to_string(kmax) +
                       "] must lie in [1, n]");
  }
  const auto n = static_cast<double>(data.n());
  std::vector<RefitRow> rows;
  for (int kappa = kmin; kappa <= kmax; ++kappa) {
    EmConfig cfg = base;
    cfg.k = kappa;
    FitResult fit = fit_em(data, cfg);
    const double total = n * fit.avg_loglik;
    const int m = free_parameters(kappa, data.d(), cfg.covariance_mode);
    rows.push_back({kappa, fit.avg_loglik, m, 2.0 * m - 2.0 * total,
                    m * std::log(n) - 2.0 * total, fit.converged});
    if (fits != nullptr) fits->push_back(std::move(fit));
  }
  return rows;
}

namespace {

template <typename Score>
int argmin_rows(const std::vector<RefitRow>& rows, Score score) {
  if (rows.empty()) throw InvalidInput("no refit rows to select from");
  int best = rows.front().kappa;
  double best_value = score(rows.front());
  for (const RefitRow& r : rows) {
    if (score(r) < best_value) {
      best_value = score(r);
      best = r.kappa;
    }
  }
  return best;
}

}  // namespace

int argmin_aic(const std::vector<RefitRow>& rows) {
  return argmin_rows(rows, [](const RefitRow& r) { return r.aic; });
}

int argmin_bic(const std::vector<RefitRow>& rows) {
  return argmin_rows(rows, [](const RefitRow& r) { return r.bic; });
}

double omega_log_n(Eigen::Index n) { return std::log(static_cast<double>(n)); }

double omega_half_log_n(Eigen::Index n) { return 0.5 * std::log(static_cast<double>(n)); }

double default_epsilon(Eigen::Index n) {
  const auto nn = static_cast<double>(n);
  return std::pow(std::log(nn) / nn, 0.25);
}

SelectionReport run_selection(const Dataset& data, const SelectOptions& options) {
  if (options.kmax < 2) throw InvalidInput("selection needs kmax >= 2");
  if (options.kmin < 1 || options.kmin > options.kmax) {
    throw InvalidInput("selection needs 1 <= kmin <= kmax");
  }
  const double omega = options.omega.value_or(omega_log_n(data.n()));

  std::vector<RefitRow> refits;
  std::vector<FitResult> fits;
  if (options.use_aic || options.use_bic) {
    refits = aic_bic(data, options.kmin, options.kmax, options.em, &fits);
  }
  SelectionReport report;
  if (options.use_dic || options.use_cut) {
    FitResult over = [&] {
      if (!fits.empty()) return fits.back();
      EmConfig cfg = options.em;
      cfg.k = options.kmax;
      return fit_em(data, cfg);
    }();
    const Dendrogram tree = build_dendrogram(over.measure);
    report = dic_scores(tree, data, omega, {options.kmin, options.allow_k1});
    if (!options.use_dic) report.chosen.erase("dic");
    if (options.use_cut) {
      report.epsilon = options.epsilon.value_or(default_epsilon(data.n()));
      report.cut = cut_at(tree, *report.epsilon);
      report.chosen["cut"] = *report.cut;
    }
  } else {
    report.n = data.n();
    report.omega = omega;
  }
  report.refit_rows = std::move(refits);
  if (options.use_aic) report.chosen["aic"] = argmin_aic(report.refit_rows);
  if (options.use_bic) report.chosen["bic"] = argmin_bic(report.refit_rows);
  return report;
}

}  // namespace mixdendro
