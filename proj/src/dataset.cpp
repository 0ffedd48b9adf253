#include "ztmeta/dataset.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "ztmeta/error.hpp"

namespace ztmeta {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line_no, const char* what) {
    T value{};
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + text + "'");
    return value;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void validate_record(const StudyRecord& r, const std::string& where) {
    if (!(r.exposure > 0.0) || !std::isfinite(r.exposure))
        throw ValidationError(where + "person-years must be positive (study '" + r.id + "')");
    if (r.events < 0) throw ValidationError(where + "event count must be non-negative (study '" + r.id + "')");
    if (r.prop_women && !(*r.prop_women >= 0.0 && *r.prop_women <= 1.0))
        throw ValidationError(where + "proportion of women must lie in [0, 1] (study '" + r.id + "')");
}

}  // namespace

Dataset::Dataset(std::vector<StudyRecord> records) : records_(std::move(records)) {
    if (records_.empty()) throw ValidationError("dataset has no studies");
    std::set<std::string> ids;
    for (const auto& r : records_) {
        validate_record(r, "");
        if (!ids.insert(r.id).second) throw ValidationError("duplicate study id '" + r.id + "'");
    }
}

bool Dataset::complete() const {
    return std::all_of(records_.begin(), records_.end(), [](const StudyRecord& r) { return r.prop_women.has_value(); });
}

std::int64_t Dataset::total_events() const {
    std::int64_t s = 0;
    for (const auto& r : records_) s += r.events;
    return s;
}

double Dataset::total_exposure() const {
    double s = 0.0;
    for (const auto& r : records_) s += r.exposure;
    return s;
}

Dataset parse_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line) != kCsvHeader)
        throw ParseError("line 1: expected header '" + std::string(kCsvHeader) + "'");

    std::vector<StudyRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        StudyRecord r;
        r.id = trim(fields[0]);
        if (r.id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty study id");
        r.exposure = parse_number<double>(trim(fields[1]), line_no, "person_years");
        const std::string pw = trim(fields[2]);
        if (!pw.empty()) r.prop_women = parse_number<double>(pw, line_no, "prop_women");
        r.country = trim(fields[3]);
        r.events = parse_number<std::int64_t>(trim(fields[4]), line_no, "suicides");
        validate_record(r, "line " + std::to_string(line_no) + ": ");
        records.push_back(std::move(r));
    }
    return Dataset(std::move(records));
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open input file '" + path.string() + "'");
    return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
    out << kCsvHeader << '\n';
    for (const auto& r : ds.records()) {
        out << quote_if_needed(r.id) << ',' << format_real(r.exposure) << ',';
        if (r.prop_women) out << format_real(*r.prop_women);
        out << ',' << quote_if_needed(r.country) << ',' << r.events << '\n';
    }
}

namespace {

struct Term {
    std::string label;
    std::vector<int> factors;  // indices into the main-effect columns
};

}  // namespace

std::pair<Dataset, ImputationResult> impute_prop_women(const Dataset& ds) {
    std::vector<std::size_t> observed;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds[i].prop_women ? observed : missing).push_back(i);
    if (missing.empty()) throw PreconditionError("no missing proportion-of-women values to impute");

    const std::vector<std::string> main_labels{"person_years", "country", "events"};
    auto main_value = [&](std::size_t i, int m) -> double {
        const auto& r = ds[i];
        switch (m) {
            case 0: return r.exposure;
            case 1: return r.usa();
            default: return static_cast<double>(r.events);
        }
    };
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {0, 2}, {1, 2}};

    std::vector<std::vector<Term>> candidate_terms;
    for (unsigned main_mask = 0; main_mask < 8u; ++main_mask) {
        std::vector<Term> mains;
        for (int m = 0; m < 3; ++m)
            if (main_mask & (1u << m)) mains.push_back({main_labels[m], {m}});
        std::vector<Term> allowed;
        for (auto [a, b] : pairs)
            if ((main_mask & (1u << a)) && (main_mask & (1u << b)))
                allowed.push_back({main_labels[a] + ":" + main_labels[b], {a, b}});
        for (unsigned int_mask = 0; int_mask < (1u << allowed.size()); ++int_mask) {
            auto terms = mains;
            for (std::size_t k = 0; k < allowed.size(); ++k)
                if (int_mask & (1u << k)) terms.push_back(allowed[k]);
            candidate_terms.push_back(std::move(terms));
        }
    }

    const auto n_obs = static_cast<Eigen::Index>(observed.size());
    Eigen::VectorXd response(n_obs);
    for (Eigen::Index r = 0; r < n_obs; ++r) response(r) = *ds[observed[r]].prop_women;

    auto design = [&](const std::vector<Term>& terms, const std::vector<std::size_t>& rows) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(terms.size()) + 1);
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            X(r, 0) = 1.0;
            for (std::size_t t = 0; t < terms.size(); ++t) {
                double v = 1.0;
                for (int m : terms[t].factors) v *= main_value(rows[r], m);
                X(r, static_cast<Eigen::Index>(t) + 1) = v;
            }
        }
        return X;
    };

    ImputationResult result;
    const double n = static_cast<double>(n_obs);
    bool have_best = false;
    std::vector<Term> best_terms;
    Eigen::VectorXd best_coef;
    for (const auto& terms : candidate_terms) {
        const Eigen::MatrixXd X = design(terms, observed);
        if (X.cols() >= X.rows()) continue;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        if (qr.rank() < X.cols()) continue;
        const Eigen::VectorXd coef = qr.solve(response);
        const double rss = (response - X * coef).squaredNorm();
        if (!(rss > 0.0)) continue;
        const double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * rss / n) + 1.0);
        const double k = static_cast<double>(X.cols()) + 1.0;
        const double bic = -2.0 * loglik + k * std::log(n);

        ImputationCandidate cand;
        for (const auto& t : terms) cand.terms.push_back(t.label);
        cand.bic = bic;
        result.candidates.push_back(cand);
        if (!have_best || bic < result.bic) {
            have_best = true;
            result.bic = bic;
            result.selected_terms = cand.terms;
            best_terms = terms;
            best_coef = coef;
        }
    }
    if (!have_best) throw PreconditionError("no imputation candidate model could be fitted");

    result.coefficients.assign(best_coef.data(), best_coef.data() + best_coef.size());
    const Eigen::VectorXd pred = design(best_terms, missing) * best_coef;
    std::vector<StudyRecord> records = ds.records();
    for (std::size_t k = 0; k < missing.size(); ++k) {
        const double v = std::clamp(pred(static_cast<Eigen::Index>(k)), 0.0, 1.0);
        records[missing[k]].prop_women = v;
        result.imputed_ids.push_back(records[missing[k]].id);
        result.imputed_values.push_back(v);
    }
    result.imputed_value = result.imputed_values.front();
    return {Dataset(std::move(records)), std::move(result)};
}

}  // namespace ztmeta
