#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ztmeta {

/// One study of the meta-analysis: exposure in person-years, covariates and
/// the observed event count.
struct StudyRecord {
    std::string id;
    double exposure = 0.0;
    std::optional<double> prop_women;
    std::string country;
    std::int64_t events = 0;

    /// Country indicator used by the regression models: 1 for "USA", else 0.
    double usa() const { return country == "USA" ? 1.0 : 0.0; }
};

class Dataset {
public:
    Dataset() = default;
    /// Validates record invariants and id uniqueness; throws ValidationError.
    explicit Dataset(std::vector<StudyRecord> records);

    const std::vector<StudyRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const StudyRecord& operator[](std::size_t i) const { return records_[i]; }

    bool complete() const;
    std::int64_t total_events() const;
    double total_exposure() const;

private:
    std::vector<StudyRecord> records_;
};

inline constexpr const char* kCsvHeader = "id,person_years,prop_women,country,suicides";

Dataset parse_csv(std::istream& in);
Dataset load_csv(const std::filesystem::path& path);

/// Writes the same layout `parse_csv` reads; reals use the shortest
/// representation that round-trips exactly.
void write_csv(std::ostream& out, const Dataset& ds);

struct ImputationCandidate {
    std::vector<std::string> terms;
    double bic = 0.0;
};

struct ImputationResult {
    double imputed_value = 0.0;
    std::vector<std::string> imputed_ids;
    std::vector<double> imputed_values;
    std::vector<std::string> selected_terms;
    std::vector<double> coefficients;  ///< intercept first, then selected_terms order
    double bic = 0.0;
    std::vector<ImputationCandidate> candidates;
};

/// Fills missing proportions of women from the BIC-best linear regression
/// on person-years, country, events and their two-way interactions.
///
/// Term subsets respect marginality: an interaction is only considered
/// when both of its main effects are in the model. Candidates whose design
/// matrix is rank deficient are skipped. Predictions are clamped to [0, 1].
/// Throws PreconditionError when nothing is missing.
std::pair<Dataset, ImputationResult> impute_prop_women(const Dataset& ds);

}  // namespace ztmeta
