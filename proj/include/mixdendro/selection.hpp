#pragma once

#include "mixdendro/dendrogram.hpp"
#include "mixdendro/mixture_em.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixdendro {

struct DicRow {
  int kappa;
  double height;      // d^(kappa); 0 for the likelihood-only kappa = 1 row
  double avg_loglik;  // average log-likelihood of the kappa-atom level
  double dic;         // -(height + omega * avg_loglik)
};

struct RefitRow {
  int kappa;
  double avg_loglik;
  int free_parameters;
  double aic;
  double bic;
  bool converged;
};

struct SelectionReport {
  Eigen::Index n = 0;
  double omega = 0.0;
  std::vector<DicRow> dic_rows;
  std::vector<RefitRow> refit_rows;
  std::map<std::string, int> chosen;  // "dic", "aic", "bic", "cut"
  std::optional<double> epsilon;
  std::optional<int> cut;
};

struct DicOptions {
  /// Smallest candidate order; levels below it are not scored.
  int kmin = 2;
  /// Also score kappa = 1 by its likelihood term alone.
  bool allow_k1 = false;
};

/// DIC over the levels of one dendrogram. Only the measures embedded in the
/// tree are evaluated; nothing is refitted. The chosen order (smallest
/// kappa on ties) is stored under "dic".
SelectionReport dic_scores(const Dendrogram& tree, const Dataset& data, double omega,
                           const DicOptions& options = {});

/// Number of free parameters of a kappa-component mixture in dimension d.
int free_parameters(int kappa, Eigen::Index d, CovarianceMode mode);

/// One EM refit per kappa in [kmin, kmax], all with the seed of `base`.
/// When `fits` is given, the fitted results are appended to it.
std::vector<RefitRow> aic_bic(const Dataset& data, int kmin, int kmax, const EmConfig& base,
                              std::vector<FitResult>* fits = nullptr);

/// argmin of AIC and BIC over the rows (smallest kappa on ties).
int argmin_aic(const std::vector<RefitRow>& rows);
int argmin_bic(const std::vector<RefitRow>& rows);

double omega_log_n(Eigen::Index n);
double omega_half_log_n(Eigen::Index n);
/// (log n / n)^{1/4}.
double default_epsilon(Eigen::Index n);

struct SelectOptions {
  int kmin = 1;
  int kmax = 10;
  bool use_dic = true;
  bool use_aic = false;
  bool use_bic = false;
  bool use_cut = false;
  bool allow_k1 = false;
  std::optional<double> omega;    // default log n
  std::optional<double> epsilon;  // default (log n / n)^{1/4}
  EmConfig em;                    // k is overridden per fit
};

/// Full pipeline: one overfitted fit with kmax components for DIC and the
/// cut rule, plus refits for AIC/BIC when requested. The kmax refit is
/// shared with the DIC fit.
SelectionReport run_selection(const Dataset& data, const SelectOptions& options);

}  // namespace mixdendro
