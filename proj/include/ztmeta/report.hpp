#pragma once

#include "json.hpp"

#include <optional>
#include <string>

#include "ztmeta/bootstrap.hpp"
#include "ztmeta/dataset.hpp"
#include "ztmeta/error.hpp"
#include "ztmeta/gof.hpp"
#include "ztmeta/population.hpp"
#include "ztmeta/ztreg.hpp"

namespace ztmeta {

using Json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

/// Error raised inside one stage of the analysis pipeline.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct AnalysisOptions {
    int tail_threshold = 4;
    double confidence_level = 0.95;
    std::vector<StratumDef> strata = default_strata();
    BootstrapConfig bootstrap;
    bool run_bootstrap = true;
};

/// Imputes missing covariates when needed; the imputation summary is
/// returned alongside (empty when the data were already complete).
std::pair<Dataset, std::optional<ImputationResult>> prepare_dataset(const Dataset& raw);

/// The model used for goodness of fit and population estimates: the
/// lowest-BIC converged count model.
const FitResult& preferred_model(const std::vector<FitResult>& count_fits);

Json to_json(const FitResult& fit);
Json to_json(const ImputationResult& imp);
Json to_json(const FrequencyTable& table, const ChiSquareResult& chi);
Json to_json(const Interval& iv);
Json to_json(const BootstrapSummary& summary, const BootstrapConfig& cfg);

Json impute_report(const Dataset& raw);
Json fit_report(const Dataset& raw, const ModelSpec& spec);
Json grid_report(const Dataset& raw);
Json gof_report(const Dataset& raw, int tail_threshold, const std::optional<ModelSpec>& spec);
Json population_report(const Dataset& raw, const std::vector<StratumDef>& strata,
                       const std::optional<ModelSpec>& spec);
Json bootstrap_report(const Dataset& raw, const BootstrapConfig& cfg);

/// Full pipeline: imputation, pooled rates, untruncated grids, truncated
/// grid, goodness of fit, Horvitz-Thompson, Wald interval and bootstrap.
/// Each stage's failures surface as StageError.
Json full_report(const Dataset& raw, const AnalysisOptions& opts);

/// Plain-text view of any report above; rates are shown per 100,000
/// person-years.
std::string render_text(const Json& report);

/// Per-table CSV views of a full report, keyed by file stem
/// (table3, table4, table5, table6).
std::vector<std::pair<std::string, std::string>> render_csv_tables(const Json& report);

}  // namespace ztmeta
