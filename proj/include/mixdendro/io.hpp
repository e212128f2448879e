#pragma once

#include "mixdendro/dendrogram.hpp"
#include "mixdendro/mixture_em.hpp"
#include "mixdendro/selection.hpp"
#include "mixdendro/simharness.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mixdendro {

using Json = nlohmann::json;

/// "%.12g"; the text format for every floating-point value on the CLI.
std::string format_number(double value);

Json measure_to_json(const MixingMeasure& measure);
/// Gaussian covariances are checked against `bounds`.
MixingMeasure measure_from_json(const Json& j, const EigenBounds& bounds = {});

/// Measure plus a "fit" object with the EM settings and diagnostics.
Json model_to_json(const FitResult& fit, const EmConfig& cfg, const Dataset& data);
/// Accepts both model files and bare measure files; a model's covariance
/// bounds are taken from its fit settings.
MixingMeasure model_from_json(const Json& j);

Json dendrogram_to_json(const Dendrogram& tree);
Dendrogram dendrogram_from_json(const Json& j);

Json selection_to_json(const SelectionReport& report);
/// Aligned text rendering of the DIC and refit rows and the chosen orders.
std::string selection_table(const SelectionReport& report);

/// Exact generator parameters, including the covariances actually used.
Json scenario_json(const Scenario& s);

/// Comma-separated numeric rows. A first row that does not parse as numbers
/// is taken as a header and skipped.
Dataset read_csv(const std::string& path);
Dataset parse_csv(const std::string& text, const std::string& origin = "<csv>");
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mixdendro
