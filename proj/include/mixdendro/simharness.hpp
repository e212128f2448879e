#pragma once

#include "mixdendro/dendrogram.hpp"
#include "mixdendro/mixture_em.hpp"
#include "mixdendro/selection.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mixdendro {

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Uniform three-component bivariate mixture with known identity
/// covariances; the truth is a Euclidean mixing measure over the means.
struct WellSpecifiedStrong {
  MixingMeasure truth;
};

/// Same means as the strong scenario with unknown full covariances; the
/// truth is a Gaussian mixing measure.
struct WellSpecifiedWeak {
  MixingMeasure truth;
};

/// (1 - eps) * p_G0 + eps * Laplace(loc, scale), G0 a 1-d Gaussian measure.
struct EpsContaminated {
  double eps;
  double laplace_location;
  double laplace_scale;
  MixingMeasure truth;
};

struct SkewComponent {
  double weight;
  double location;
  double variance;  // squared scale
  double skewness;
};

/// Finite mixture of location-scale skew-normals with density
/// (2/s) phi((x-m)/s) Phi(a (x-m)/s).
struct SkewMixture {
  std::vector<SkewComponent> components;
};

using Scenario = std::variant<WellSpecifiedStrong, WellSpecifiedWeak, EpsContaminated, SkewMixture>;

Scenario strong_scenario();
/// Carries the positive-definite covariance substitution for the first
/// component; see scenario_json() for the matrices actually used.
Scenario weak_scenario();
Scenario contaminated_scenario(double eps = 0.01);
Scenario skew_scenario();

std::string scenario_name(const Scenario& s);
/// Number of components of the generating model (the order to recover).
int true_order(const Scenario& s);
/// Mixing measure of the Gaussian part, when the scenario has one.
std::optional<MixingMeasure> scenario_truth(const Scenario& s);
/// Kernel family used to fit the scenario: identity-covariance location
/// mixtures for the strong scenario, full covariances otherwise.
CovarianceMode fit_mode(const Scenario& s);
/// Default DIC penalization scale for the scenario at sample size n.
double scenario_omega(const Scenario& s, Eigen::Index n);
void validate(const Scenario& s);

/// n i.i.d. draws: categorical component choice, then kernel sampling.
Dataset sample_scenario(const Scenario& s, Eigen::Index n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rate experiments
// ---------------------------------------------------------------------------

enum class Estimator { Overfitted, Exact, Merged };
enum class Metric { W1, W2, W6, D, DG };

const char* estimator_name(Estimator e);
const char* metric_name(Metric m);

struct RateRecord {
  std::string scenario;
  int n;
  int replication;
  Estimator estimator;
  Metric metric;
  double error;
};

struct RateSummary {
  Estimator estimator;
  Metric metric;
  double slope;
  double intercept;
  double stderr_slope;
  bool degenerate;  // some median error is zero, so the log-log fit is undefined
  std::vector<int> n_values;
  std::vector<double> medians;
};

struct ReplicationFailure {
  int n;
  int replication;
  std::string message;
};

struct RateTable {
  std::vector<RateRecord> records;
  std::vector<RateSummary> summary;
  std::vector<ReplicationFailure> failures;

  const RateSummary& find(Estimator e, Metric m) const;
};

/// Fits a k-component estimate; the default runs fit_em.
using Fitter = std::function<MixingMeasure(const Dataset& data, int k, std::uint64_t seed)>;

struct ExperimentConfig {
  std::vector<int> n_grid{100, 316, 1000, 3162, 10000};
  int reps = 16;
  std::uint64_t seed = 0;
  /// Template for every fit; k, seed and covariance mode are set per call.
  EmConfig em{};
  int threads = 0;
};

/// EM settings for the scenario: the template with the scenario's
/// covariance mode and, for full covariances, the proportion floor 0.05 / k.
EmConfig scenario_em(const Scenario& s, const EmConfig& base, int k);

/// Per (n, replication): exact-fitted and overfitted estimates, the
/// dendrogram of the overfitted one cut at the true order, and their
/// errors to the truth. Summary slopes regress log10 median error on
/// log10 n.
RateTable rate_experiment(const Scenario& s, const ExperimentConfig& cfg, int k_over,
                          const Fitter& fitter = {});

enum class Method { AIC, BIC, DIC, Cut };
const char* method_name(Method m);

struct SelectionRecord {
  int n;
  int replication;
  Method method;
  int chosen;
};

struct SelectionSummaryRow {
  int n;
  Method method;
  double fraction_correct;
  double mean_chosen;
  int replications;  // successful ones
};

struct SelectionTable {
  std::vector<SelectionRecord> records;
  std::vector<SelectionSummaryRow> summary;
  std::vector<ReplicationFailure> failures;

  const SelectionSummaryRow& find(int n, Method m) const;
};

struct SelectionExperimentOptions {
  int kmax = 10;
  std::vector<Method> methods{Method::AIC, Method::BIC, Method::DIC};
  /// Penalization scale; defaults to scenario_omega().
  std::function<double(Eigen::Index)> omega;
};

SelectionTable selection_experiment(const Scenario& s, const ExperimentConfig& cfg,
                                    const SelectionExperimentOptions& options);

/// Dendrograms of overfitted fits, one per replication at a single n.
struct DendrogramReplicate {
  int replication;
  Dendrogram tree;
};

std::vector<DendrogramReplicate> replicate_dendrograms(const Scenario& s, Eigen::Index n,
                                                       const ExperimentConfig& cfg, int k_over);

// ---------------------------------------------------------------------------
// Utilities
// ---------------------------------------------------------------------------

struct LineFit {
  double slope;
  double intercept;
  double stderr_slope;
};

/// Ordinary least squares; needs at least two distinct x values.
LineFit slope(const std::vector<std::pair<double, double>>& points);

struct PcaModel {
  VectorXd mean;
  MatrixXd components;  // d x q, columns by decreasing eigenvalue
  VectorXd eigenvalues;  // sample variances (denominator n - 1)
};

PcaModel pca_fit(const Dataset& data, int q);
/// Centers the data and projects it onto the top-q principal axes. Each
/// axis is signed so that its largest-magnitude entry is positive.
Dataset pca_project(const Dataset& data, int q);

}  // namespace mixdendro
